//! Scalar helper functions shared by links and flip functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numerically stable logistic function `1 / (1 + e^{-z})`.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// A continuous piecewise-linear function given by its knots, constant
/// outside the knot range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinear {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl PiecewiseLinear {
    /// Knots must be finite and strictly increasing.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::Empty);
        }
        if xs.len() != ys.len() {
            return Err(Error::InvalidInput(format!(
                "{} knots but {} values",
                xs.len(),
                ys.len()
            )));
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite knot or value".into()));
        }
        if let Some(i) = xs.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::UnsortedScores(i + 1));
        }
        Ok(Self { xs, ys })
    }

    pub fn knots(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.ys
    }

    pub fn eval(&self, z: f64) -> f64 {
        let n = self.xs.len();
        if z <= self.xs[0] {
            return self.ys[0];
        }
        if z >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        // First knot strictly greater than z; 1 <= hi <= n-1 here.
        let hi = self.xs.partition_point(|&x| x <= z);
        let (x0, x1) = (self.xs[hi - 1], self.xs[hi]);
        let (y0, y1) = (self.ys[hi - 1], self.ys[hi]);
        y0 + (y1 - y0) * (z - x0) / (x1 - x0)
    }

    /// Exact Lipschitz constant: the steepest segment slope.
    pub fn lipschitz(&self) -> f64 {
        self.xs
            .windows(2)
            .zip(self.ys.windows(2))
            .map(|(x, y)| ((y[1] - y[0]) / (x[1] - x[0])).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_non_decreasing(&self) -> bool {
        self.ys.windows(2).all(|w| w[1] >= w[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_is_symmetric_and_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(3.0) + sigmoid(-3.0) - 1.0).abs() < 1e-15);
        assert_eq!(sigmoid(-800.0), 0.0);
        assert_eq!(sigmoid(800.0), 1.0);
    }

    #[test]
    fn piecewise_interpolates_and_clamps() {
        let f = PiecewiseLinear::new(vec![0.0, 1.0, 3.0], vec![0.0, 0.5, 0.9]).unwrap();
        assert_eq!(f.eval(-1.0), 0.0);
        assert_eq!(f.eval(0.5), 0.25);
        assert_eq!(f.eval(1.0), 0.5);
        assert!((f.eval(2.0) - 0.7).abs() < 1e-15);
        assert_eq!(f.eval(10.0), 0.9);
        assert_eq!(f.lipschitz(), 0.5);
        assert!(f.is_non_decreasing());
    }

    #[test]
    fn piecewise_rejects_unsorted_knots() {
        assert!(matches!(
            PiecewiseLinear::new(vec![0.0, 0.0], vec![0.0, 1.0]),
            Err(Error::UnsortedScores(1))
        ));
        assert!(PiecewiseLinear::new(vec![], vec![]).is_err());
    }
}
