//! Clean distributions over instances and binary labels.
//!
//! Two representations are provided: [`DiscreteDistribution`], a finite
//! support on which every risk and regret is an exact sum, and
//! [`GenerativeDistribution`], a sampler for single-index models
//! `eta(x) = u(<w*, x>)` used by the learning experiments.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedIndex;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::func::{sigmoid, PiecewiseLinear};

/// Tolerance on the total mass of a discrete marginal.
pub const MARGINAL_SUM_TOLERANCE: f64 = 1e-12;

/// Deterministic random stream for `(seed, stream)`.
///
/// ChaCha is counter based, so distinct streams under one seed are
/// independent and do not depend on the order in which they are consumed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream used by [`sample_clean`].
pub const SAMPLING_STREAM: u64 = 0;

/// Where a sample came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Clean { seed: u64 },
    Corrupted { seed: u64 },
    External,
}

/// A sequence of `(x, y)` pairs with `y` in `{-1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<i8>,
    pub provenance: Provenance,
}

impl LabeledSample {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<i8>, provenance: Provenance) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::InvalidInput(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y != 1 && y != -1) {
            return Err(Error::InvalidLabel(bad as i64));
        }
        if let Some(first) = features.first() {
            let d = first.len();
            if let Some(row) = features.iter().find(|r| r.len() != d) {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: row.len(),
                });
            }
        }
        Ok(Self {
            features,
            labels,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Feature dimension, or 0 for an empty sample.
    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    /// Labels mapped to `{0, 1}`.
    pub fn targets(&self) -> Vec<f64> {
        self.labels.iter().map(|&y| label_to_target(y)).collect()
    }

    /// Fraction of positive labels.
    pub fn positive_fraction(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.labels.iter().filter(|&&y| y == 1).count() as f64 / self.len() as f64
    }

    pub fn subset(&self, indices: &[usize]) -> LabeledSample {
        LabeledSample {
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            provenance: self.provenance,
        }
    }
}

pub(crate) fn label_to_target(y: i8) -> f64 {
    if y > 0 {
        1.0
    } else {
        0.0
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// A non-decreasing link `u: R -> [0, 1]`.
#[derive(Clone)]
pub enum Link {
    /// `1 / (1 + e^{-z})`.
    Logistic,
    /// `1{z > 0}`.
    Step,
    /// 1 above `+gamma`, 0 below `-gamma`, linear in between.
    Margin {
        gamma: f64,
    },
    Piecewise(PiecewiseLinear),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Link::Logistic => write!(f, "Logistic"),
            Link::Step => write!(f, "Step"),
            Link::Margin { gamma } => write!(f, "Margin {{ gamma: {gamma} }}"),
            Link::Piecewise(p) => write!(f, "Piecewise({p:?})"),
            Link::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl Link {
    pub fn eval(&self, z: f64) -> f64 {
        match self {
            Link::Logistic => sigmoid(z),
            Link::Step => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Link::Margin { gamma } => {
                if z > *gamma {
                    1.0
                } else if z < -*gamma {
                    0.0
                } else {
                    (z + gamma) / (2.0 * gamma)
                }
            }
            Link::Piecewise(p) => p.eval(z),
            Link::Custom(f) => f(z),
        }
    }

    /// Lipschitz constant when one is known in closed form.
    pub fn lipschitz(&self) -> Option<f64> {
        match self {
            Link::Logistic => Some(0.25),
            Link::Step | Link::Custom(_) => None,
            Link::Margin { gamma } => Some(1.0 / (2.0 * gamma)),
            Link::Piecewise(p) => Some(p.lipschitz()),
        }
    }

    /// Checks monotonicity and range on a grid over `[-50, 50]`.
    fn validate(&self) -> Result<()> {
        if let Link::Margin { gamma } = self {
            if !(*gamma > 0.0 && gamma.is_finite()) {
                return Err(Error::InvalidDistribution(format!(
                    "margin gamma must be positive, got {gamma}"
                )));
            }
        }
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=4000 {
            let z = -50.0 + 0.025 * i as f64;
            let v = self.eval(z);
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidDistribution(format!(
                    "link value {v} at z = {z} is outside [0, 1]"
                )));
            }
            if v < prev {
                return Err(Error::InvalidDistribution(format!("link decreases near z = {z}")));
            }
            prev = v;
        }
        Ok(())
    }
}

/// A linear scorer `x -> <w, x>`, optionally composed with a link.
#[derive(Debug, Clone)]
pub struct LinearScorer {
    pub weights: Vec<f64>,
    pub link: Option<Link>,
}

impl LinearScorer {
    pub fn new(weights: Vec<f64>) -> Self {
        Self { weights, link: None }
    }

    pub fn with_link(weights: Vec<f64>, link: Link) -> Self {
        Self {
            weights,
            link: Some(link),
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn score(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.weights.len(), x.len())?;
        Ok(dot(&self.weights, x))
    }

    /// Score passed through the link, or the raw score without one.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        let z = self.score(x)?;
        Ok(self.link.as_ref().map_or(z, |u| u.eval(z)))
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// Anything labelled examples can be drawn from.
pub trait CleanDistribution {
    fn dim(&self) -> usize;

    /// Draws an instance together with its class probability.
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<f64>, f64);
}

/// Draws `n` i.i.d. labelled examples; the label is `+1` with probability
/// `eta(x)`. Deterministic given `seed`.
pub fn sample_clean<D: CleanDistribution + ?Sized>(dist: &D, n: usize, seed: u64) -> Result<LabeledSample> {
    if n == 0 {
        return Err(Error::InvalidInput("sample size must be at least 1".into()));
    }
    let mut rng = stream_rng(seed, SAMPLING_STREAM);
    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let (x, eta) = dist.draw(&mut rng);
        let u: f64 = rng.random();
        labels.push(if u < eta { 1 } else { -1 });
        features.push(x);
    }
    LabeledSample::new(features, labels, Provenance::Clean { seed })
}

/// A clean distribution with finite support.
///
/// Holds the marginal `M`, class-probability `eta` and base rate `pi`; the
/// class conditionals `P` and `Q` are derived on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    instances: Vec<Vec<f64>>,
    marginal: Vec<f64>,
    eta: Vec<f64>,
    base_rate: f64,
    sampler: WeightedIndex<f64>,
}

impl DiscreteDistribution {
    pub fn new(instances: Vec<Vec<f64>>, marginal: Vec<f64>, eta: Vec<f64>) -> Result<Self> {
        let k = instances.len();
        if k == 0 {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        if marginal.len() != k || eta.len() != k {
            return Err(Error::InvalidDistribution(format!(
                "{k} instances, {} marginal weights, {} eta values",
                marginal.len(),
                eta.len()
            )));
        }
        let d = instances[0].len();
        if let Some(row) = instances.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: row.len(),
            });
        }
        if let Some((i, m)) = marginal
            .iter()
            .enumerate()
            .find(|(_, m)| !(**m >= 0.0 && m.is_finite()))
        {
            return Err(Error::InvalidDistribution(format!(
                "marginal weight {m} at atom {i} is negative or not finite"
            )));
        }
        let total: f64 = marginal.iter().sum();
        if (total - 1.0).abs() > MARGINAL_SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("marginal sums to {total}, not 1")));
        }
        if let Some((i, e)) = eta.iter().enumerate().find(|(_, e)| !(0.0..=1.0).contains(*e)) {
            return Err(Error::InvalidDistribution(format!(
                "eta {e} at atom {i} is outside [0, 1]"
            )));
        }
        let base_rate: f64 = marginal.iter().zip(&eta).map(|(m, e)| m * e).sum();
        if !(base_rate > 0.0 && base_rate < 1.0) {
            return Err(Error::InvalidDistribution(format!(
                "base rate {base_rate} is not in (0, 1)"
            )));
        }
        let sampler = WeightedIndex::new(&marginal).map_err(|e| Error::InvalidDistribution(e.to_string()))?;
        Ok(Self {
            instances,
            marginal,
            eta,
            base_rate,
            sampler,
        })
    }

    /// One-dimensional support whose instances are the given scores.
    pub fn on_line(points: &[f64], marginal: Vec<f64>, eta: Vec<f64>) -> Result<Self> {
        Self::new(points.iter().map(|&p| vec![p]).collect(), marginal, eta)
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn instances(&self) -> &[Vec<f64>] {
        &self.instances
    }

    pub fn marginal(&self) -> &[f64] {
        &self.marginal
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn eta_at(&self, atom: usize) -> f64 {
        self.eta[atom]
    }

    pub fn base_rate(&self) -> f64 {
        self.base_rate
    }

    /// `P(x) = eta(x) m(x) / pi`.
    pub fn positive_conditional(&self) -> Vec<f64> {
        let pi = self.base_rate;
        self.marginal.iter().zip(&self.eta).map(|(m, e)| e * m / pi).collect()
    }

    /// `Q(x) = (1 - eta(x)) m(x) / (1 - pi)`.
    pub fn negative_conditional(&self) -> Vec<f64> {
        let pi = self.base_rate;
        self.marginal
            .iter()
            .zip(&self.eta)
            .map(|(m, e)| (1.0 - e) * m / (1.0 - pi))
            .collect()
    }

    /// Same support and marginal with a replacement class-probability.
    pub fn with_eta(&self, eta: Vec<f64>) -> Result<Self> {
        Self::new(self.instances.clone(), self.marginal.clone(), eta)
    }

    /// Index of the atom whose instance equals `x`.
    pub fn atom_of(&self, x: &[f64]) -> Option<usize> {
        self.instances.iter().position(|row| row.as_slice() == x)
    }

    pub fn eta_of(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        self.atom_of(x)
            .map(|i| self.eta[i])
            .ok_or_else(|| Error::InvalidInput("instance is not in the support".into()))
    }

    /// Draws atom indices i.i.d. from the marginal.
    pub fn sample_atoms(&self, n: usize, seed: u64) -> Vec<usize> {
        let mut rng = stream_rng(seed, SAMPLING_STREAM);
        (0..n).map(|_| self.sampler.sample(&mut rng)).collect()
    }
}

impl CleanDistribution for DiscreteDistribution {
    fn dim(&self) -> usize {
        self.instances[0].len()
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<f64>, f64) {
        let i = self.sampler.sample(rng);
        (self.instances[i].clone(), self.eta[i])
    }
}

/// Marginal distribution over instances for generative models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Marginal {
    /// Isotropic Gaussian.
    Gaussian { mean: Vec<f64>, std: f64 },
    /// Mixture of isotropic Gaussians with a shared standard deviation.
    GaussianMixture {
        means: Vec<Vec<f64>>,
        weights: Vec<f64>,
        std: f64,
    },
    /// Uniform on the unit ball.
    UnitBall { dim: usize },
}

impl Marginal {
    pub fn dim(&self) -> usize {
        match self {
            Marginal::Gaussian { mean, .. } => mean.len(),
            Marginal::GaussianMixture { means, .. } => means.first().map_or(0, Vec::len),
            Marginal::UnitBall { dim } => *dim,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidDistribution(msg));
        match self {
            Marginal::Gaussian { mean, std } => {
                if mean.is_empty() || !(*std > 0.0) {
                    return bad(format!("gaussian needs a mean and std > 0, got std {std}"));
                }
            }
            Marginal::GaussianMixture { means, weights, std } => {
                if means.is_empty() || means.len() != weights.len() || !(*std > 0.0) {
                    return bad("mixture needs matching means/weights and std > 0".into());
                }
                let d = means[0].len();
                if d == 0 || means.iter().any(|m| m.len() != d) {
                    return bad("mixture component means differ in dimension".into());
                }
                if weights.iter().any(|w| !(*w >= 0.0)) || weights.iter().sum::<f64>() <= 0.0 {
                    return bad("mixture weights must be non-negative with positive sum".into());
                }
            }
            Marginal::UnitBall { dim } => {
                if *dim == 0 {
                    return bad("unit ball needs dim >= 1".into());
                }
            }
        }
        Ok(())
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            Marginal::Gaussian { mean, std } => mean
                .iter()
                .map(|m| m + std * rng.sample::<f64, _>(StandardNormal))
                .collect(),
            Marginal::GaussianMixture { means, weights, std } => {
                let total: f64 = weights.iter().sum();
                let mut u = rng.random::<f64>() * total;
                let mut component = means.len() - 1;
                for (j, w) in weights.iter().enumerate() {
                    if u < *w {
                        component = j;
                        break;
                    }
                    u -= w;
                }
                means[component]
                    .iter()
                    .map(|m| m + std * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            }
            Marginal::UnitBall { dim } => {
                let dir: Vec<f64> = (0..*dim).map(|_| rng.sample(StandardNormal)).collect();
                let len = norm(&dir).max(f64::MIN_POSITIVE);
                let radius = rng.random::<f64>().powf(1.0 / *dim as f64);
                dir.iter().map(|v| v * radius / len).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GenerativeKind {
    /// The two-Gaussian synthetic benchmark with a linear separator.
    GaussianMixtureSeparable,
    Glm,
    MarginSeparable,
}

/// A single-index model `eta(x) = u(<w*, x>)` over a sampled marginal.
#[derive(Debug, Clone)]
pub struct GenerativeDistribution {
    kind: GenerativeKind,
    marginal: Marginal,
    link: Link,
    weights: Vec<f64>,
    norm_bound: f64,
}

impl GenerativeDistribution {
    /// Mixture of `N((1,1), I)` and `N((-1,-1), I)` with equal weight,
    /// labelled by the sign of `x1 + x2`.
    pub fn synthetic_preset() -> Self {
        Self {
            kind: GenerativeKind::GaussianMixtureSeparable,
            marginal: Marginal::GaussianMixture {
                means: vec![vec![1.0, 1.0], vec![-1.0, -1.0]],
                weights: vec![0.5, 0.5],
                std: 1.0,
            },
            link: Link::Step,
            weights: vec![1.0, 1.0],
            norm_bound: 2f64.sqrt(),
        }
    }

    pub fn glm(link: Link, weights: Vec<f64>, marginal: Marginal, norm_bound: f64) -> Result<Self> {
        Self::build(GenerativeKind::Glm, link, weights, marginal, norm_bound)
    }

    pub fn margin_separable(gamma: f64, weights: Vec<f64>, marginal: Marginal, norm_bound: f64) -> Result<Self> {
        Self::build(
            GenerativeKind::MarginSeparable,
            Link::Margin { gamma },
            weights,
            marginal,
            norm_bound,
        )
    }

    fn build(kind: GenerativeKind, link: Link, weights: Vec<f64>, marginal: Marginal, norm_bound: f64) -> Result<Self> {
        marginal.validate()?;
        check_dim(marginal.dim(), weights.len())?;
        link.validate()?;
        let w_norm = norm(&weights);
        if !(w_norm <= norm_bound) {
            return Err(Error::InvalidDistribution(format!(
                "weight norm {w_norm} exceeds the declared bound {norm_bound}"
            )));
        }
        Ok(Self {
            kind,
            marginal,
            link,
            weights,
            norm_bound,
        })
    }

    pub fn kind(&self) -> GenerativeKind {
        self.kind
    }

    pub fn link(&self) -> &Link {
        &self.link
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    pub fn marginal(&self) -> &Marginal {
        &self.marginal
    }

    /// The index `<w*, x>`.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.weights.len(), x.len())?;
        Ok(dot(&self.weights, x))
    }

    pub fn eta_of(&self, x: &[f64]) -> Result<f64> {
        Ok(self.link.eval(self.score(x)?))
    }

    pub fn scorer(&self) -> LinearScorer {
        LinearScorer::new(self.weights.clone())
    }
}

impl CleanDistribution for GenerativeDistribution {
    fn dim(&self) -> usize {
        self.weights.len()
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<f64>, f64) {
        let x = self.marginal.draw(rng);
        let eta = self.link.eval(dot(&self.weights, &x));
        (x, eta)
    }
}
