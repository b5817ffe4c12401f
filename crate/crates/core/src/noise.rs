//! Instance- and label-dependent noise models.
//!
//! Every model reduces to a pair of flip functions `(rho_pos, rho_neg)`: a
//! clean label `y` is flipped with probability `rho_y(x)`. Instance-level
//! models evaluate the flip functions on `x` directly; score-mediated models
//! evaluate them on a score `s(x)`.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dist::{check_dim, stream_rng, DiscreteDistribution, LabeledSample, LinearScorer, Link, Provenance};
use crate::error::{Error, Result};
use crate::func::{sigmoid, PiecewiseLinear};

/// Flip rates must satisfy `rho_pos + rho_neg <= 1 - ADMISSIBILITY_MARGIN`.
pub const ADMISSIBILITY_MARGIN: f64 = 1e-9;

/// Stream used by [`corrupt_sample`], distinct from the clean sampling
/// stream so one seed can drive both.
pub const CORRUPTION_STREAM: u64 = 1;

/// Number of probe scores used when no grid is supplied.
pub const DEFAULT_PROBE_COUNT: usize = 512;

const FINITE_DIFFERENCE_TOLERANCE: f64 = 1e-12;

pub fn is_admissible(rho_pos: f64, rho_neg: f64) -> bool {
    (0.0..=1.0).contains(&rho_pos) && (0.0..=1.0).contains(&rho_neg) && rho_pos + rho_neg <= 1.0 - ADMISSIBILITY_MARGIN
}

fn check_admissible(rho_pos: f64, rho_neg: f64, instance: Option<usize>) -> Result<()> {
    if is_admissible(rho_pos, rho_neg) {
        Ok(())
    } else {
        Err(Error::Inadmissible {
            instance,
            rho_pos,
            rho_neg,
        })
    }
}

/// `(1 - rho_pos) eta + rho_neg (1 - eta)`.
pub fn corrupted_eta(eta: f64, rho_pos: f64, rho_neg: f64) -> Result<f64> {
    check_probability(eta, "eta")?;
    check_admissible(rho_pos, rho_neg, None)?;
    Ok(raw_corrupted_eta(eta, rho_pos, rho_neg))
}

pub(crate) fn raw_corrupted_eta(eta: f64, rho_pos: f64, rho_neg: f64) -> f64 {
    ((1.0 - rho_pos) * eta + rho_neg * (1.0 - eta)).clamp(0.0, 1.0)
}

/// Recovers the clean class-probability from the corrupted one.
pub fn invert_corrupted_eta(eta_bar: f64, rho_pos: f64, rho_neg: f64) -> Result<f64> {
    check_probability(eta_bar, "eta_bar")?;
    check_admissible(rho_pos, rho_neg, None)?;
    Ok((eta_bar - rho_neg) / (1.0 - rho_pos - rho_neg))
}

/// The corrupted threshold `t_bar` with `eta > t <=> eta_bar > t_bar`.
pub fn corrupted_threshold(t: f64, rho_pos: f64, rho_neg: f64) -> Result<f64> {
    check_probability(t, "threshold")?;
    check_admissible(rho_pos, rho_neg, None)?;
    Ok((1.0 - rho_pos - rho_neg) * t + rho_neg)
}

/// Probability that the label at an instance is flipped.
pub fn flip_probability(eta: f64, rho_pos: f64, rho_neg: f64) -> Result<f64> {
    check_probability(eta, "eta")?;
    check_admissible(rho_pos, rho_neg, None)?;
    Ok(rho_pos * eta + rho_neg * (1.0 - eta))
}

fn check_probability(v: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what} = {v} is not in [0, 1]")))
    }
}

/// Corrupted link `(1 - f_pos(z)) u(z) + f_neg(z) (1 - u(z))`.
pub fn corrupted_link(u: &Link, f_neg: &FlipFn, f_pos: &FlipFn, z: f64) -> f64 {
    raw_corrupted_eta(u.eval(z), f_pos.eval(z), f_neg.eval(z))
}

/// A flip function over scores.
#[derive(Clone)]
pub enum FlipFn {
    Constant(f64),
    /// `z -> 1 / (1 + e^{alpha |z|})`.
    SigmoidAbs {
        alpha: f64,
    },
    /// `z -> 1 / (1 + e^{|z| / temperature})`; flips grow with the temperature.
    SigmoidAbsTempered {
        temperature: f64,
    },
    /// `z -> a 1{z <= 0}`.
    Step {
        a: f64,
    },
    Piecewise(PiecewiseLinear),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for FlipFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlipFn::Constant(c) => write!(f, "constant({c})"),
            FlipFn::SigmoidAbs { alpha } => write!(f, "sigmoid-abs({alpha})"),
            FlipFn::SigmoidAbsTempered { temperature } => {
                write!(f, "sigmoid-abs-tempered({temperature})")
            }
            FlipFn::Step { a } => write!(f, "step({a})"),
            FlipFn::Piecewise(p) => write!(f, "piecewise({p:?})"),
            FlipFn::Custom(_) => write!(f, "custom"),
        }
    }
}

impl FlipFn {
    pub fn eval(&self, z: f64) -> f64 {
        match self {
            FlipFn::Constant(c) => *c,
            FlipFn::SigmoidAbs { alpha } => sigmoid(-alpha * z.abs()),
            FlipFn::SigmoidAbsTempered { temperature } => sigmoid(-z.abs() / temperature),
            FlipFn::Step { a } => {
                if z <= 0.0 {
                    *a
                } else {
                    0.0
                }
            }
            FlipFn::Piecewise(p) => p.eval(z),
            FlipFn::Custom(f) => f(z),
        }
    }

    /// Lipschitz constant when known in closed form.
    pub fn lipschitz(&self) -> Option<f64> {
        match self {
            FlipFn::Constant(_) => Some(0.0),
            FlipFn::SigmoidAbs { alpha } => Some(alpha.abs() / 4.0),
            FlipFn::SigmoidAbsTempered { temperature } => Some(0.25 / temperature),
            FlipFn::Step { a } if *a == 0.0 => Some(0.0),
            FlipFn::Step { .. } | FlipFn::Custom(_) => None,
            FlipFn::Piecewise(p) => Some(p.lipschitz()),
        }
    }

    /// Parses a named preset such as `sigmoid-abs(8)`, `constant(0.2)` or
    /// `step(0.5)`. Numeric arguments may be written as fractions (`1/8`).
    pub fn parse(preset: &str) -> Result<FlipFn> {
        let preset = preset.trim();
        let (name, arg) = preset
            .strip_suffix(')')
            .and_then(|s| s.split_once('('))
            .ok_or_else(|| Error::Parse(format!("flip function `{preset}` is not name(value)")))?;
        let value = parse_number(arg)?;
        let f = match name.trim() {
            "constant" => FlipFn::Constant(value),
            "sigmoid-abs" => FlipFn::SigmoidAbs { alpha: value },
            "sigmoid-abs-tempered" => {
                if !(value > 0.0) {
                    return Err(Error::Parse(format!("temperature must be positive, got {value}")));
                }
                FlipFn::SigmoidAbsTempered { temperature: value }
            }
            "step" => FlipFn::Step { a: value },
            other => return Err(Error::Parse(format!("unknown flip function `{other}`"))),
        };
        if let FlipFn::Constant(c) | FlipFn::Step { a: c } = f {
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::Parse(format!("flip rate {c} is not in [0, 1]")));
            }
        }
        Ok(f)
    }
}

/// Parses a decimal or a fraction `p/q`.
pub fn parse_number(text: &str) -> Result<f64> {
    let text = text.trim();
    let bad = || Error::Parse(format!("`{text}` is not a number"));
    let value = match text.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| bad())?;
            let q: f64 = q.trim().parse().map_err(|_| bad())?;
            p / q
        }
        None => text.parse().map_err(|_| bad())?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(bad())
    }
}

/// Values attached to specific instances, keyed by exact coordinates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InstanceTable {
    values: HashMap<Vec<u64>, f64>,
}

fn instance_key(x: &[f64]) -> Vec<u64> {
    // +0.0 and -0.0 compare equal, so they must share a key.
    x.iter().map(|v| (v + 0.0).to_bits()).collect()
}

impl InstanceTable {
    pub fn new(instances: &[Vec<f64>], values: &[f64]) -> Result<Self> {
        if instances.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "{} instances but {} values",
                instances.len(),
                values.len()
            )));
        }
        Ok(Self {
            values: instances
                .iter()
                .zip(values)
                .map(|(x, &v)| (instance_key(x), v))
                .collect(),
        })
    }

    pub fn get(&self, x: &[f64]) -> Option<f64> {
        self.values.get(&instance_key(x)).copied()
    }

    fn lookup(&self, x: &[f64]) -> Result<f64> {
        self.get(x)
            .ok_or_else(|| Error::InvalidInput(format!("no table entry for instance {x:?}")))
    }
}

/// A flip function over instances.
#[derive(Clone)]
pub enum InstanceFn {
    Constant(f64),
    Table(InstanceTable),
    Custom(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

impl fmt::Debug for InstanceFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InstanceFn::Constant(c) => write!(f, "Constant({c})"),
            InstanceFn::Table(t) => write!(f, "Table({} entries)", t.values.len()),
            InstanceFn::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl InstanceFn {
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        match self {
            InstanceFn::Constant(c) => Ok(*c),
            InstanceFn::Table(t) => t.lookup(x),
            InstanceFn::Custom(f) => Ok(f(x)),
        }
    }
}

/// A scoring function `s: X -> R`.
#[derive(Clone)]
pub enum Scorer {
    Linear(LinearScorer),
    Table(InstanceTable),
    Custom(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

impl fmt::Debug for Scorer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scorer::Linear(l) => write!(f, "Linear({:?})", l.weights),
            Scorer::Table(t) => write!(f, "Table({} entries)", t.values.len()),
            Scorer::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl Scorer {
    /// Scores one-dimensional instances by their only coordinate.
    pub fn identity() -> Self {
        Scorer::Linear(LinearScorer::new(vec![1.0]))
    }

    pub fn score(&self, x: &[f64]) -> Result<f64> {
        match self {
            Scorer::Linear(l) => l.score(x),
            Scorer::Table(t) => t.lookup(x),
            Scorer::Custom(f) => Ok(f(x)),
        }
    }
}

/// The pair of flip functions and how they are evaluated.
#[derive(Debug, Clone)]
pub enum FlipFunctions {
    InstanceLevel {
        rho_pos: InstanceFn,
        rho_neg: InstanceFn,
    },
    ScoreMediated {
        rho_pos: FlipFn,
        rho_neg: FlipFn,
        scorer: Scorer,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseKind {
    /// Instance- and label-dependent.
    Iln,
    /// Instance-dependent, label-independent.
    Idn,
    /// Class-conditional constants.
    Ccn,
    /// Symmetric constant.
    Sln,
    /// Boundary-consistent.
    Bcn,
    /// Boundary-consistent with order-preserving conditions.
    BcnPlus,
    /// Probabilistically transformed: flips depend on `eta` itself.
    Ptn,
    /// Symmetric score-mediated flips.
    Byln,
    /// Single-index: score-mediated by a linear index.
    Sin,
}

/// A noise model: a kind tag plus the flip functions realising it.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    kind: NoiseKind,
    flips: FlipFunctions,
    constants: Option<(f64, f64)>,
}

fn check_rate(v: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidNoiseModel(format!("{what} = {v} is not in [0, 1]")))
    }
}

impl NoiseModel {
    pub fn noise_free() -> Self {
        Self::ccn(0.0, 0.0).expect("zero rates are valid")
    }

    /// Symmetric label noise with constant rate `alpha < 1/2`.
    pub fn sln(alpha: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&alpha) {
            return Err(Error::InvalidNoiseModel(format!(
                "symmetric rate {alpha} must lie in [0, 1/2)"
            )));
        }
        Ok(Self::constant(NoiseKind::Sln, alpha, alpha))
    }

    /// Class-conditional noise: positives flip with `rho_pos`, negatives
    /// with `rho_neg`. Admissibility is checked separately.
    pub fn ccn(rho_pos: f64, rho_neg: f64) -> Result<Self> {
        check_rate(rho_pos, "rho_pos")?;
        check_rate(rho_neg, "rho_neg")?;
        Ok(Self::constant(NoiseKind::Ccn, rho_pos, rho_neg))
    }

    fn constant(kind: NoiseKind, rho_pos: f64, rho_neg: f64) -> Self {
        Self {
            kind,
            flips: FlipFunctions::InstanceLevel {
                rho_pos: InstanceFn::Constant(rho_pos),
                rho_neg: InstanceFn::Constant(rho_neg),
            },
            constants: Some((rho_pos, rho_neg)),
        }
    }

    pub fn iln(rho_pos: InstanceFn, rho_neg: InstanceFn) -> Self {
        Self {
            kind: NoiseKind::Iln,
            flips: FlipFunctions::InstanceLevel { rho_pos, rho_neg },
            constants: None,
        }
    }

    /// Label-independent flips `rho_pos = rho_neg = flip`.
    pub fn idn(flip: InstanceFn) -> Self {
        Self {
            kind: NoiseKind::Idn,
            flips: FlipFunctions::InstanceLevel {
                rho_pos: flip.clone(),
                rho_neg: flip,
            },
            constants: None,
        }
    }

    fn score_mediated(kind: NoiseKind, f_neg: FlipFn, f_pos: FlipFn, scorer: Scorer) -> Self {
        Self {
            kind,
            flips: FlipFunctions::ScoreMediated {
                rho_pos: f_pos,
                rho_neg: f_neg,
                scorer,
            },
            constants: None,
        }
    }

    pub fn bcn(f_neg: FlipFn, f_pos: FlipFn, scorer: Scorer) -> Self {
        Self::score_mediated(NoiseKind::Bcn, f_neg, f_pos, scorer)
    }

    /// Boundary-consistent noise whose extra conditions are checked with
    /// [`validate_bcn_plus`].
    pub fn bcn_plus(f_neg: FlipFn, f_pos: FlipFn, scorer: Scorer) -> Self {
        Self::score_mediated(NoiseKind::BcnPlus, f_neg, f_pos, scorer)
    }

    /// Flip functions composed with the clean class-probability, passed as
    /// the scorer.
    pub fn ptn(f_neg: FlipFn, f_pos: FlipFn, eta: Scorer) -> Self {
        Self::score_mediated(NoiseKind::Ptn, f_neg, f_pos, eta)
    }

    pub fn byln(flip: FlipFn, scorer: Scorer) -> Self {
        Self::score_mediated(NoiseKind::Byln, flip.clone(), flip, scorer)
    }

    /// Flips mediated by the linear index `<w*, x>`.
    pub fn sin(f_neg: FlipFn, f_pos: FlipFn, index_weights: Vec<f64>) -> Self {
        Self::score_mediated(
            NoiseKind::Sin,
            f_neg,
            f_pos,
            Scorer::Linear(LinearScorer::new(index_weights)),
        )
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn flips(&self) -> &FlipFunctions {
        &self.flips
    }

    /// The `(rho_pos, rho_neg)` constants of CCN and SLN models.
    pub fn constant_rates(&self) -> Option<(f64, f64)> {
        self.constants
    }

    /// Flip rates `(rho_pos, rho_neg)` at `x`, without admissibility checks.
    pub fn rates(&self, x: &[f64]) -> Result<(f64, f64)> {
        match &self.flips {
            FlipFunctions::InstanceLevel { rho_pos, rho_neg } => Ok((rho_pos.eval(x)?, rho_neg.eval(x)?)),
            FlipFunctions::ScoreMediated {
                rho_pos,
                rho_neg,
                scorer,
            } => {
                let z = scorer.score(x)?;
                Ok((rho_pos.eval(z), rho_neg.eval(z)))
            }
        }
    }

    /// Flip rates at `x`, rejecting inadmissible values.
    pub fn checked_rates(&self, x: &[f64], instance: Option<usize>) -> Result<(f64, f64)> {
        let (p, n) = self.rates(x)?;
        check_admissible(p, n, instance)?;
        Ok((p, n))
    }

    /// Evaluates and validates the flip rates on every atom of `dist`.
    pub fn on_support(&self, dist: &DiscreteDistribution) -> Result<AtomFlips> {
        let mut rho_pos = Vec::with_capacity(dist.len());
        let mut rho_neg = Vec::with_capacity(dist.len());
        for (i, x) in dist.instances().iter().enumerate() {
            let (p, n) = self.checked_rates(x, Some(i))?;
            rho_pos.push(p);
            rho_neg.push(n);
        }
        Ok(AtomFlips { rho_pos, rho_neg })
    }
}

/// Flip rates evaluated on each atom of a discrete support.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomFlips {
    pub rho_pos: Vec<f64>,
    pub rho_neg: Vec<f64>,
}

impl AtomFlips {
    pub fn new(rho_pos: Vec<f64>, rho_neg: Vec<f64>) -> Result<Self> {
        if rho_pos.len() != rho_neg.len() {
            return Err(Error::DimensionMismatch {
                expected: rho_pos.len(),
                got: rho_neg.len(),
            });
        }
        for (i, (&p, &n)) in rho_pos.iter().zip(&rho_neg).enumerate() {
            check_admissible(p, n, Some(i))?;
        }
        Ok(Self { rho_pos, rho_neg })
    }

    pub fn len(&self) -> usize {
        self.rho_pos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho_pos.is_empty()
    }

    /// Corrupted class-probability at each atom.
    pub fn corrupted_eta(&self, eta: &[f64]) -> Vec<f64> {
        eta.iter()
            .zip(self.rho_pos.iter().zip(&self.rho_neg))
            .map(|(&e, (&p, &n))| raw_corrupted_eta(e, p, n))
            .collect()
    }

    /// Largest `rho_pos + rho_neg` over the support.
    pub fn max_total(&self) -> f64 {
        self.rho_pos
            .iter()
            .zip(&self.rho_neg)
            .map(|(p, n)| p + n)
            .fold(0.0, f64::max)
    }

    /// Largest single flip rate over the support.
    pub fn max_rate(&self) -> f64 {
        self.rho_pos.iter().chain(&self.rho_neg).copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityViolation {
    pub instance: usize,
    /// NaN when the flip rates could not be evaluated at the instance.
    pub rho_pos: f64,
    pub rho_neg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub checked: usize,
    pub violations: Vec<AdmissibilityViolation>,
}

impl AdmissibilityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Lists every instance at which the flip rates are not admissible.
pub fn validate_admissible(model: &NoiseModel, instances: &[Vec<f64>]) -> AdmissibilityReport {
    let violations = instances
        .iter()
        .enumerate()
        .filter_map(|(i, x)| match model.rates(x) {
            Ok((p, n)) if is_admissible(p, n) => None,
            Ok((p, n)) => Some(AdmissibilityViolation {
                instance: i,
                rho_pos: p,
                rho_neg: n,
            }),
            Err(_) => Some(AdmissibilityViolation {
                instance: i,
                rho_pos: f64::NAN,
                rho_neg: f64::NAN,
            }),
        })
        .collect();
    AdmissibilityReport {
        checked: instances.len(),
        violations,
    }
}

/// A score together with the clean class-probability at that score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BcnProbe {
    pub score: f64,
    pub eta: f64,
}

/// Probes `n` evenly spaced scores in `[lo, hi]` through a link.
pub fn probe_grid(link: &Link, lo: f64, hi: f64, n: usize) -> Vec<BcnProbe> {
    let n = n.max(2);
    (0..n)
        .map(|i| {
            let score = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            BcnProbe {
                score,
                eta: link.eval(score),
            }
        })
        .collect()
}

/// Default probe grid spanning the observed score range.
pub fn default_probe_grid(link: &Link, observed_scores: &[f64]) -> Vec<BcnProbe> {
    let lo = observed_scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = observed_scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        return Vec::new();
    }
    probe_grid(link, lo, hi, DEFAULT_PROBE_COUNT)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FlipSide {
    Positive,
    Negative,
}

/// A pair of adjacent probe scores at which a condition fails.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeViolation {
    pub score: f64,
    pub next_score: f64,
    /// Which flip function failed; `None` for conditions not tied to one.
    pub side: Option<FlipSide>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BcnPlusReport {
    pub probes: usize,
    /// Largest probed score with `eta <= 1/2`, if any.
    pub crossing: Option<f64>,
    /// First pair where the scorer fails to preserve the order of `eta`.
    pub order: Option<ProbeViolation>,
    /// First pair where a flip function is not unimodal around the crossing.
    pub unimodality: Option<ProbeViolation>,
    /// First pair where `f_pos - f_neg` increases.
    pub difference: Option<ProbeViolation>,
}

impl BcnPlusReport {
    pub fn passed(&self) -> bool {
        self.order.is_none() && self.unimodality.is_none() && self.difference.is_none()
    }
}

/// Checks the three extra boundary-consistency conditions on a probe grid.
///
/// Probes are sorted by score. Unimodality is checked only between adjacent
/// probes on the same side of `eta = 1/2`: flips must not decrease while
/// `eta <= 1/2` and must not increase while `eta > 1/2`.
pub fn validate_bcn_plus(f_neg: &FlipFn, f_pos: &FlipFn, probes: &[BcnProbe]) -> BcnPlusReport {
    let tol = FINITE_DIFFERENCE_TOLERANCE;
    let mut sorted = probes.to_vec();
    sorted.sort_by(|a, b| a.score.total_cmp(&b.score));

    let crossing = sorted
        .iter()
        .filter(|p| p.eta <= 0.5)
        .map(|p| p.score)
        .fold(None, |acc: Option<f64>, s| Some(acc.map_or(s, |a| a.max(s))));

    let mut report = BcnPlusReport {
        probes: probes.len(),
        crossing,
        order: None,
        unimodality: None,
        difference: None,
    };
    for pair in sorted.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let at = |side| ProbeViolation {
            score: a.score,
            next_score: b.score,
            side,
        };
        let order_ok = if a.score < b.score {
            a.eta <= b.eta
        } else {
            a.eta == b.eta
        };
        if report.order.is_none() && !order_ok {
            report.order = Some(at(None));
        }
        if report.unimodality.is_none() {
            for (side, f) in [(FlipSide::Negative, f_neg), (FlipSide::Positive, f_pos)] {
                let (fa, fb) = (f.eval(a.score), f.eval(b.score));
                let bad = if a.eta <= 0.5 && b.eta <= 0.5 {
                    fb < fa - tol
                } else if a.eta > 0.5 && b.eta > 0.5 {
                    fb > fa + tol
                } else {
                    false
                };
                if bad {
                    report.unimodality = Some(at(Some(side)));
                    break;
                }
            }
        }
        if report.difference.is_none() {
            let da = f_pos.eval(a.score) - f_neg.eval(a.score);
            let db = f_pos.eval(b.score) - f_neg.eval(b.score);
            if db > da + tol {
                report.difference = Some(at(None));
            }
        }
    }
    report
}

/// Flips each label independently with probability `rho_y(x)`.
pub fn corrupt_sample(sample: &LabeledSample, model: &NoiseModel, seed: u64) -> Result<LabeledSample> {
    let mut rng = stream_rng(seed, CORRUPTION_STREAM);
    let mut labels = Vec::with_capacity(sample.len());
    for (i, (x, &y)) in sample.features.iter().zip(&sample.labels).enumerate() {
        let (p, n) = model.checked_rates(x, Some(i))?;
        let rho = if y > 0 { p } else { n };
        let u: f64 = rng.random();
        labels.push(if u < rho { -y } else { y });
    }
    Ok(LabeledSample {
        features: sample.features.clone(),
        labels,
        provenance: Provenance::Corrupted { seed },
    })
}

/// The corrupted distribution: same support and marginal, `eta` replaced by
/// the corrupted class-probability.
pub fn corrupt_distribution(dist: &DiscreteDistribution, model: &NoiseModel) -> Result<DiscreteDistribution> {
    let flips = model.on_support(dist)?;
    corrupt_with_flips(dist, &flips)
}

pub fn corrupt_with_flips(dist: &DiscreteDistribution, flips: &AtomFlips) -> Result<DiscreteDistribution> {
    check_dim(dist.len(), flips.len())?;
    dist.with_eta(flips.corrupted_eta(dist.eta()))
}

/// Corrupted base rate `pi - E[(rho_pos + rho_neg) eta] + E[rho_neg]`.
pub fn corrupted_base_rate(dist: &DiscreteDistribution, flips: &AtomFlips) -> f64 {
    let mut pi_bar = dist.base_rate();
    for i in 0..dist.len() {
        let m = dist.marginal()[i];
        let eta = dist.eta()[i];
        pi_bar += m * (flips.rho_neg[i] - (flips.rho_pos[i] + flips.rho_neg[i]) * eta);
    }
    pi_bar
}

/// Corrupted class conditionals computed from the clean ones:
/// `P_bar = ((1 - rho_pos) pi P + rho_neg (1 - pi) Q) / pi_bar` and
/// `Q_bar = (rho_pos pi P + (1 - rho_neg) (1 - pi) Q) / (1 - pi_bar)`.
pub fn corrupted_class_conditionals(dist: &DiscreteDistribution, flips: &AtomFlips) -> (Vec<f64>, Vec<f64>) {
    let pi = dist.base_rate();
    let pi_bar = corrupted_base_rate(dist, flips);
    let p = dist.positive_conditional();
    let q = dist.negative_conditional();
    let mut p_bar = Vec::with_capacity(dist.len());
    let mut q_bar = Vec::with_capacity(dist.len());
    for i in 0..dist.len() {
        let (rp, rn) = (flips.rho_pos[i], flips.rho_neg[i]);
        p_bar.push(((1.0 - rp) * pi * p[i] + rn * (1.0 - pi) * q[i]) / pi_bar);
        q_bar.push((rp * pi * p[i] + (1.0 - rn) * (1.0 - pi) * q[i]) / (1.0 - pi_bar));
    }
    (p_bar, q_bar)
}
