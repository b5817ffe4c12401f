//! Closed-form linear baselines: ridge regression and the least-squares
//! margin filter.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::dist::{check_dim, dot, norm};
use crate::error::{Error, Result};
use crate::metrics::Predictor;

/// Relative size below which a Cholesky pivot counts as zero.
const PIVOT_TOLERANCE: f64 = 1e-13;

fn design(features: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = features.len();
    if n == 0 {
        return Err(Error::Empty);
    }
    let d = features[0].len();
    if let Some(row) = features.iter().find(|r| r.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: row.len(),
        });
    }
    Ok(DMatrix::from_fn(n, d, |i, j| features[i][j]))
}

fn label_vector(labels: &[i8], n: usize) -> Result<DVector<f64>> {
    check_dim(n, labels.len())?;
    if let Some(&bad) = labels.iter().find(|&&y| y != 1 && y != -1) {
        return Err(Error::InvalidLabel(bad as i64));
    }
    Ok(DVector::from_iterator(n, labels.iter().map(|&y| y as f64)))
}

/// Minimiser of `|Xw - y|^2 + lambda |w|^2`, from the normal equations.
pub fn ridge_fit(features: &[Vec<f64>], labels: &[i8], lambda: f64) -> Result<Vec<f64>> {
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::InvalidInput(format!(
            "regularisation strength must be non-negative, got {lambda}"
        )));
    }
    let x = design(features)?;
    let y = label_vector(labels, x.nrows())?;
    let mut gram = x.tr_mul(&x);
    for j in 0..gram.ncols() {
        gram[(j, j)] += lambda;
    }
    let rhs = x.tr_mul(&y);
    let max_diag = (0..gram.ncols()).map(|j| gram[(j, j)]).fold(0.0, f64::max);
    match gram.clone().cholesky() {
        Some(chol) => {
            let min_pivot = chol.l().diagonal().iter().map(|v| v * v).fold(f64::INFINITY, f64::min);
            if lambda == 0.0 && min_pivot <= PIVOT_TOLERANCE * max_diag {
                return Err(Error::Singular);
            }
            Ok(chol.solve(&rhs).iter().copied().collect())
        }
        None if lambda == 0.0 => Err(Error::Singular),
        // Positive but tiny lambda on a rank-deficient design: fall back to
        // the eigendecomposition, which tolerates the poor conditioning.
        None => Ok(eigen_solve(gram, &rhs, 0.0)),
    }
}

/// Solves `A w = b` for symmetric positive semi-definite `A`, discarding
/// eigenvalues at or below `relative_cutoff` times the largest.
fn eigen_solve(a: DMatrix<f64>, b: &DVector<f64>, relative_cutoff: f64) -> Vec<f64> {
    let eig = SymmetricEigen::new(a);
    let largest = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let cutoff = largest * relative_cutoff;
    let mut w = DVector::zeros(b.len());
    for (k, &value) in eig.eigenvalues.iter().enumerate() {
        if value > cutoff && value > 0.0 {
            let v = eig.eigenvectors.column(k);
            w += v * (v.dot(b) / value);
        }
    }
    w.iter().copied().collect()
}

/// Minimum-norm ordinary least squares fit of the labels.
pub fn ols_fit(features: &[Vec<f64>], labels: &[i8]) -> Result<Vec<f64>> {
    let x = design(features)?;
    let y = label_vector(labels, x.nrows())?;
    let d = x.ncols() as f64;
    Ok(eigen_solve(x.tr_mul(&x), &x.tr_mul(&y), 1e-12 * d))
}

/// A linear classifier `x -> sign(<w, x>)` with `sign(0) = +1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
}

impl Predictor for LinearModel {
    fn score(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.weights.len(), x.len())?;
        Ok(dot(&self.weights, x))
    }

    fn classify(&self, x: &[f64]) -> Result<i8> {
        Ok(if self.score(x)? >= 0.0 { 1 } else { -1 })
    }

    fn squared_error(&self, x: &[f64], y: i8) -> Result<f64> {
        let r = self.score(x)? - y as f64;
        Ok(r * r)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilteredData {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<i8>,
    /// Unit-norm least-squares hyperplane used for filtering.
    pub hyperplane: Vec<f64>,
    /// Indices of the kept rows in the input.
    pub kept: Vec<usize>,
}

/// Keeps the examples with margin `y <w*, x> >= gamma`, where `w*` is the
/// unit-normalised least-squares fit.
pub fn margin_filter(features: &[Vec<f64>], labels: &[i8], gamma: f64) -> Result<FilteredData> {
    let positives = labels.iter().filter(|&&y| y == 1).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::SingleClass);
    }
    let w = ols_fit(features, labels)?;
    let length = norm(&w);
    if length == 0.0 {
        return Err(Error::FilterEmpty("least-squares hyperplane is zero".into()));
    }
    let hyperplane: Vec<f64> = w.iter().map(|v| v / length).collect();
    let kept: Vec<usize> = (0..features.len())
        .filter(|&i| labels[i] as f64 * dot(&hyperplane, &features[i]) >= gamma)
        .collect();
    if kept.is_empty() {
        return Err(Error::FilterEmpty(format!("no example has margin >= {gamma}")));
    }
    Ok(FilteredData {
        features: kept.iter().map(|&i| features[i].clone()).collect(),
        labels: kept.iter().map(|&i| labels[i]).collect(),
        hyperplane,
        kept,
    })
}
