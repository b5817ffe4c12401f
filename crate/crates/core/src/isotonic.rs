//! Isotonic regression: pool-adjacent-violators (PAV), its Lipschitz
//! constrained variant (LPAV), and interpolation of the fitted link.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A monotone fit of targets against sorted scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsotonicFit {
    scores: Vec<f64>,
    values: Vec<f64>,
    lipschitz_bound: Option<f64>,
    knot_scores: Vec<f64>,
    knot_values: Vec<f64>,
}

impl IsotonicFit {
    fn from_groups(scores: Vec<f64>, groups: &Groups, group_values: &[f64], lipschitz_bound: Option<f64>) -> Self {
        let group_values: Vec<f64> = group_values.iter().map(|v| v.clamp(0.0, 1.0)).collect();
        let values = groups
            .sizes
            .iter()
            .zip(&group_values)
            .flat_map(|(&n, &v)| std::iter::repeat_n(v, n))
            .collect();
        Self {
            scores,
            values,
            lipschitz_bound,
            knot_scores: groups.scores.clone(),
            knot_values: group_values,
        }
    }

    /// A constant link, used before any data has been seen.
    pub fn constant(value: f64) -> Self {
        let v = value.clamp(0.0, 1.0);
        Self {
            scores: vec![0.0],
            values: vec![v],
            lipschitz_bound: None,
            knot_scores: vec![0.0],
            knot_values: vec![v],
        }
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn lipschitz_bound(&self) -> Option<f64> {
        self.lipschitz_bound
    }

    /// Distinct scores and their fitted values.
    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.knot_scores, &self.knot_values)
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Piecewise-linear interpolation between knots, clamped outside.
    pub fn eval(&self, z: f64) -> f64 {
        let xs = &self.knot_scores;
        let ys = &self.knot_values;
        let n = xs.len();
        if z <= xs[0] {
            return ys[0];
        }
        if z >= xs[n - 1] {
            return ys[n - 1];
        }
        let hi = xs.partition_point(|&x| x <= z);
        let (x0, x1) = (xs[hi - 1], xs[hi]);
        let t = (z - x0) / (x1 - x0);
        (ys[hi - 1] + t * (ys[hi] - ys[hi - 1])).clamp(ys[hi - 1], ys[hi])
    }

    /// Sum of squared residuals against `targets`.
    pub fn sse(&self, targets: &[f64]) -> f64 {
        self.values.iter().zip(targets).map(|(u, y)| (u - y) * (u - y)).sum()
    }
}

pub fn interpolate_link(fit: &IsotonicFit, z: f64) -> f64 {
    fit.eval(z)
}

/// Runs of equal scores pooled into weighted points.
struct Groups {
    scores: Vec<f64>,
    means: Vec<f64>,
    weights: Vec<f64>,
    sizes: Vec<usize>,
}

fn validate(scores: &[f64], targets: &[f64]) -> Result<()> {
    if scores.is_empty() {
        return Err(Error::Empty);
    }
    if scores.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            got: targets.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidInput("scores must be finite".into()));
    }
    if let Some(t) = targets.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::InvalidInput(format!("target {t} is not in [0, 1]")));
    }
    if let Some(i) = scores.windows(2).position(|w| w[1] < w[0]) {
        return Err(Error::UnsortedScores(i + 1));
    }
    Ok(())
}

fn pool_ties(scores: &[f64], targets: &[f64]) -> Groups {
    let mut groups = Groups {
        scores: Vec::new(),
        means: Vec::new(),
        weights: Vec::new(),
        sizes: Vec::new(),
    };
    let mut start = 0;
    while start < scores.len() {
        let mut end = start + 1;
        while end < scores.len() && scores[end] == scores[start] {
            end += 1;
        }
        let n = end - start;
        groups.scores.push(scores[start]);
        groups.means.push(targets[start..end].iter().sum::<f64>() / n as f64);
        groups.weights.push(n as f64);
        groups.sizes.push(n);
        start = end;
    }
    groups
}

/// Weighted PAV: the non-decreasing sequence minimising
/// `sum w_i (u_i - y_i)^2`.
pub fn weighted_pav(targets: &[f64], weights: &[f64]) -> Vec<f64> {
    // Each block: (weighted mean, total weight, number of points).
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(targets.len());
    for (&y, &w) in targets.iter().zip(weights) {
        let mut block = (y, w, 1);
        while let Some(&(mean, weight, count)) = blocks.last() {
            if mean < block.0 {
                break;
            }
            blocks.pop();
            let total = weight + block.1;
            block = ((mean * weight + block.0 * block.1) / total, total, count + block.2);
        }
        blocks.push(block);
    }
    blocks
        .into_iter()
        .flat_map(|(mean, _, count)| std::iter::repeat_n(mean, count))
        .collect()
}

/// Least-squares non-decreasing fit of `targets` against sorted `scores`.
/// Equal scores always receive equal values.
pub fn pav(scores: &[f64], targets: &[f64]) -> Result<IsotonicFit> {
    validate(scores, targets)?;
    let groups = pool_ties(scores, targets);
    let fitted = weighted_pav(&groups.means, &groups.weights);
    Ok(IsotonicFit::from_groups(scores.to_vec(), &groups, &fitted, None))
}

/// Least-squares fit subject to `0 <= u_{i+1} - u_i <= L (s_{i+1} - s_i)`.
///
/// `lipschitz = f64::INFINITY` gives the PAV solution. The problem is solved
/// exactly by dynamic programming over the chain: the derivative of the
/// partial cost is a non-decreasing piecewise-linear function of the last
/// value, and each constraint acts on it by splitting at its zero.
pub fn lpav(scores: &[f64], targets: &[f64], lipschitz: f64) -> Result<IsotonicFit> {
    validate(scores, targets)?;
    if lipschitz.is_nan() || lipschitz < 0.0 {
        return Err(Error::InvalidInput(format!(
            "Lipschitz constant must be non-negative, got {lipschitz}"
        )));
    }
    let groups = pool_ties(scores, targets);
    let fitted = if lipschitz.is_infinite() {
        weighted_pav(&groups.means, &groups.weights)
    } else {
        let gaps: Vec<f64> = groups.scores.windows(2).map(|w| lipschitz * (w[1] - w[0])).collect();
        chain_fit(&groups.means, &groups.weights, &gaps)
    };
    Ok(IsotonicFit::from_groups(
        scores.to_vec(),
        &groups,
        &fitted,
        Some(lipschitz),
    ))
}

/// Derivative of a convex partial cost: continuous, piecewise linear and
/// strictly increasing once a data term has been added.
struct Derivative {
    knots: Vec<(f64, f64)>,
    left_slope: f64,
    right_slope: f64,
}

impl Derivative {
    fn add_point(&mut self, y: f64, w: f64) {
        for (x, v) in &mut self.knots {
            *v += w * (*x - y);
        }
        self.left_slope += w;
        self.right_slope += w;
    }

    fn zero(&self) -> f64 {
        let (x0, v0) = self.knots[0];
        if v0 >= 0.0 {
            return x0 - v0 / self.left_slope;
        }
        for pair in self.knots.windows(2) {
            let ((xa, va), (xb, vb)) = (pair[0], pair[1]);
            if vb >= 0.0 {
                if vb == va {
                    return xa;
                }
                return xa + (xb - xa) * (-va) / (vb - va);
            }
        }
        let (xn, vn) = self.knots[self.knots.len() - 1];
        xn - vn / self.right_slope
    }

    /// Replaces the derivative `F'` by that of
    /// `v -> min { F(u) : v - gap <= u <= v }`.
    fn relax(&mut self, minimizer: f64, gap: f64) {
        let mut knots = Vec::with_capacity(self.knots.len() + 2);
        knots.extend(self.knots.iter().copied().filter(|&(x, _)| x < minimizer));
        knots.push((minimizer, 0.0));
        if gap.is_infinite() {
            self.right_slope = 0.0;
        } else {
            if gap > 0.0 {
                knots.push((minimizer + gap, 0.0));
            }
            knots.extend(
                self.knots
                    .iter()
                    .filter(|&&(x, _)| x > minimizer)
                    .map(|&(x, v)| (x + gap, v)),
            );
        }
        self.knots = knots;
    }
}

fn chain_fit(targets: &[f64], weights: &[f64], gaps: &[f64]) -> Vec<f64> {
    let m = targets.len();
    let mut derivative = Derivative {
        knots: vec![(targets[0], 0.0)],
        left_slope: 0.0,
        right_slope: 0.0,
    };
    let mut minimizers = Vec::with_capacity(m);
    for i in 0..m {
        if i > 0 {
            derivative.relax(minimizers[i - 1], gaps[i - 1]);
        }
        derivative.add_point(targets[i], weights[i]);
        minimizers.push(derivative.zero());
    }
    let mut values = vec![0.0; m];
    values[m - 1] = minimizers[m - 1];
    for i in (0..m - 1).rev() {
        let next = values[i + 1];
        values[i] = minimizers[i].clamp(next - gaps[i], next);
    }
    values
}
