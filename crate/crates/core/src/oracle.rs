//! Randomised checks of the relations between clean and corrupted problems.
//!
//! Every check draws small discrete distributions (2 to 16 atoms) and
//! compares exact sums over the atoms, so the only error is floating point.
//! A trial yields one or more named slacks; it passes when every slack is at
//! least `-SLACK_TOLERANCE`. Identities report the negated absolute residual
//! as their slack.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dist::{stream_rng, DiscreteDistribution, Link};
use crate::func::{sigmoid, PiecewiseLinear};
use crate::metrics::{corrected_risk, ranking_regret, regret, risk, weighted_risk, Loss};
use crate::noise::{
    corrupt_with_flips, corrupted_base_rate, corrupted_link, corrupted_threshold, validate_bcn_plus, AtomFlips,
    BcnProbe, FlipFn, NoiseModel, Scorer,
};

pub const SLACK_TOLERANCE: f64 = 1e-10;
pub const MAX_ATOMS: usize = 16;
/// Extra allowance on the grid-estimated Lipschitz constant.
pub const LIPSCHITZ_ALLOWANCE: f64 = 1e-6;
const CHECK_STREAM_OFFSET: u64 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    RiskIdentity,
    BayesCoincide,
    RegretBound,
    ThresholdShift,
    OrderPreservation,
    EtaDiffBound,
    AucBound,
    SimClosure,
    UnbiasedLoss,
}

impl Check {
    pub const ALL: [Check; 9] = [
        Check::RiskIdentity,
        Check::BayesCoincide,
        Check::RegretBound,
        Check::ThresholdShift,
        Check::OrderPreservation,
        Check::EtaDiffBound,
        Check::AucBound,
        Check::SimClosure,
        Check::UnbiasedLoss,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::RiskIdentity => "risk_identity",
            Check::BayesCoincide => "bayes_coincide",
            Check::RegretBound => "regret_bound",
            Check::ThresholdShift => "threshold_shift",
            Check::OrderPreservation => "order_preservation",
            Check::EtaDiffBound => "eta_diff_bound",
            Check::AucBound => "auc_bound",
            Check::SimClosure => "sim_closure",
            Check::UnbiasedLoss => "unbiased_loss",
        }
    }

    pub fn from_name(name: &str) -> Option<Check> {
        Check::ALL.into_iter().find(|c| c.name() == name)
    }

    fn stream(self) -> u64 {
        CHECK_STREAM_OFFSET + self as u64
    }

    fn run_trial(self, rng: &mut ChaCha8Rng) -> Trial {
        match self {
            Check::RiskIdentity => risk_identity_trial(rng),
            Check::BayesCoincide => bayes_coincide_trial(rng),
            Check::RegretBound => regret_bound_trial(rng),
            Check::ThresholdShift => threshold_shift_trial(rng),
            Check::OrderPreservation => order_preservation_trial(rng),
            Check::EtaDiffBound => eta_diff_bound_trial(rng),
            Check::AucBound => auc_bound_trial(rng),
            Check::SimClosure => sim_closure_trial(rng),
            Check::UnbiasedLoss => unbiased_loss_trial(rng),
        }
    }
}

struct Trial {
    atoms: usize,
    noise: String,
    scorer: String,
    slacks: Vec<(&'static str, f64)>,
}

impl Trial {
    fn new(atoms: usize, noise: String, scorer: String) -> Self {
        Self {
            atoms,
            noise,
            scorer,
            slacks: Vec::new(),
        }
    }

    /// Records the smallest slack seen for `property`.
    fn record(&mut self, property: &'static str, slack: f64) {
        match self.slacks.iter_mut().find(|(p, _)| *p == property) {
            Some((_, s)) => *s = s.min(slack),
            None => self.slacks.push((property, slack)),
        }
    }

    fn tightest(&self) -> (&'static str, f64) {
        self.slacks
            .iter()
            .copied()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap_or(("none", f64::INFINITY))
    }
}

/// Everything needed to replay one trial: `replay(check, seed)` regenerates
/// it exactly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyCase {
    pub check: Check,
    pub seed: u64,
    pub atoms: usize,
    pub noise: String,
    pub scorer: String,
    pub property: String,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubcaseSummary {
    pub property: String,
    pub trials: usize,
    pub tightest_slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub check: Check,
    pub name: String,
    pub trials: usize,
    pub passed: usize,
    /// Largest amount by which any slack went negative, zero if none did.
    pub max_violation: f64,
    pub tightest_slack: f64,
    pub tightest_case: Option<PropertyCase>,
    pub subcases: Vec<SubcaseSummary>,
    /// The first failing trial, if any.
    pub failure: Option<PropertyCase>,
}

impl CheckReport {
    pub fn all_passed(&self) -> bool {
        self.trials > 0 && self.passed == self.trials
    }
}

/// Seed of trial `index` in a run seeded with `seed`.
pub fn trial_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add(index as u64)
}

fn case_of(check: Check, seed: u64, trial: &Trial) -> PropertyCase {
    let (property, slack) = trial.tightest();
    PropertyCase {
        check,
        seed,
        atoms: trial.atoms,
        noise: trial.noise.clone(),
        scorer: trial.scorer.clone(),
        property: property.into(),
        slack,
    }
}

/// Regenerates a single trial from its seed.
pub fn replay(check: Check, seed: u64) -> PropertyCase {
    let trial = check.run_trial(&mut stream_rng(seed, check.stream()));
    case_of(check, seed, &trial)
}

/// Runs `trials` independent trials of `check` in parallel. Results are
/// merged in trial order, so the report depends only on `(trials, seed)`.
pub fn run_check(check: Check, trials: usize, seed: u64) -> CheckReport {
    let outcomes: Vec<(u64, Trial)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let s = trial_seed(seed, i);
            (s, check.run_trial(&mut stream_rng(s, check.stream())))
        })
        .collect();

    let mut report = CheckReport {
        check,
        name: check.name().into(),
        trials,
        passed: 0,
        max_violation: 0.0,
        tightest_slack: f64::INFINITY,
        tightest_case: None,
        subcases: Vec::new(),
        failure: None,
    };
    for (s, trial) in &outcomes {
        let (_, slack) = trial.tightest();
        if slack >= -SLACK_TOLERANCE {
            report.passed += 1;
        } else if report.failure.is_none() {
            report.failure = Some(case_of(check, *s, trial));
        }
        report.max_violation = report.max_violation.max(-slack);
        if slack < report.tightest_slack {
            report.tightest_slack = slack;
            report.tightest_case = Some(case_of(check, *s, trial));
        }
        for &(property, value) in &trial.slacks {
            match report.subcases.iter_mut().find(|c| c.property == property) {
                Some(c) => {
                    c.trials += 1;
                    c.tightest_slack = c.tightest_slack.min(value);
                }
                None => report.subcases.push(SubcaseSummary {
                    property: property.into(),
                    trials: 1,
                    tightest_slack: value,
                }),
            }
        }
    }
    report
}

pub fn check_risk_identity(trials: usize, seed: u64) -> CheckReport {
    run_check(Check::RiskIdentity, trials, seed)
}

pub fn check_bayes_coincide(trials: usize, seed: u64) -> CheckReport {
    run_check(Check::BayesCoincide, trials, seed)
}

pub fn check_regret_bound(trials: usize, seed: u64) -> CheckReport {
    run_check(Check::RegretBound, trials, seed)
}

pub fn check_threshold_shift(trials: usize, seed: u64) -> CheckReport {
    run_check(Check::ThresholdShift, trials, seed)
}

pub fn check_order_preservation(trials: usize, seed: u64) -> CheckReport {
    run_check(Check::OrderPreservation, trials, seed)
}

pub fn check_eta_diff_bound(trials: usize, seed: u64) -> CheckReport {
    run_check(Check::EtaDiffBound, trials, seed)
}

pub fn check_auc_bound(trials: usize, seed: u64) -> CheckReport {
    run_check(Check::AucBound, trials, seed)
}

pub fn check_sim_closure(trials: usize, seed: u64) -> CheckReport {
    run_check(Check::SimClosure, trials, seed)
}

pub fn check_unbiased_loss(trials: usize, seed: u64) -> CheckReport {
    run_check(Check::UnbiasedLoss, trials, seed)
}

// ---------------------------------------------------------------------------
// Random configurations

fn random_eta(rng: &mut ChaCha8Rng) -> f64 {
    match rng.random_range(0..12) {
        0 => 0.5,
        1 => 0.0,
        2 => 1.0,
        _ => rng.random(),
    }
}

fn random_marginal(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|v| v / total).collect()
}

/// A distribution on the points `0, 1, ..., k-1` with both classes present.
fn random_distribution(rng: &mut ChaCha8Rng) -> DiscreteDistribution {
    loop {
        let k = rng.random_range(2..=MAX_ATOMS);
        let points: Vec<f64> = (0..k).map(|i| i as f64).collect();
        let marginal = random_marginal(rng, k);
        let eta: Vec<f64> = (0..k).map(|_| random_eta(rng)).collect();
        if let Ok(dist) = DiscreteDistribution::on_line(&points, marginal, eta) {
            return dist;
        }
    }
}

/// Per-atom scores, with deliberate ties and exact zeros.
fn random_scores(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    (0..k)
        .map(|_| match rng.random_range(0..10) {
            0 => 0.0,
            1 => 1.0,
            2 => -1.0,
            _ => rng.random_range(-2.0..2.0),
        })
        .collect()
}

/// Symmetric flip rates in `[0, 0.49)`, all zero one time in ten.
fn random_symmetric_flips(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    if rng.random_range(0..10) == 0 {
        return vec![0.0; k];
    }
    (0..k).map(|_| rng.random_range(0.0..0.49)).collect()
}

/// Class-dependent rates with `rho_pos + rho_neg < 0.95`.
fn random_rate_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let total = rng.random_range(0.0..0.95);
    let share: f64 = rng.random();
    (total * share, total * (1.0 - share))
}

fn describe(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:.6}")).collect();
    format!("[{}]", parts.join(", "))
}

fn describe_flips(kind: &str, flips: &AtomFlips) -> String {
    format!(
        "{kind} rho_pos={} rho_neg={}",
        describe(&flips.rho_pos),
        describe(&flips.rho_neg)
    )
}

/// A random configuration satisfying the boundary-consistency conditions,
/// with flips mediated by the identity score on the line.
struct BcnPlusConfig {
    dist: DiscreteDistribution,
    corrupted: DiscreteDistribution,
    f_neg: FlipFn,
    f_pos: FlipFn,
    flips: AtomFlips,
    class_conditional: bool,
}

impl BcnPlusConfig {
    fn describe(&self) -> String {
        let kind = if self.class_conditional { "ccn" } else { "bcn+" };
        describe_flips(kind, &self.flips)
    }
}

/// Builds flip tables whose increments satisfy the conditions by
/// construction: the difference `f_pos - f_neg` only steps down, `f_neg`
/// steps up while `eta <= 1/2` by at least the drop in the difference (so
/// `f_pos` steps up too), and both step down once `eta > 1/2`.
fn random_bcn_plus(rng: &mut ChaCha8Rng) -> BcnPlusConfig {
    loop {
        let k = rng.random_range(2..=MAX_ATOMS);
        let mut scores = Vec::with_capacity(k);
        let mut s = rng.random_range(-3.0..0.0);
        for _ in 0..k {
            scores.push(s);
            s += rng.random_range(0.1..1.0);
        }
        let mut eta: Vec<f64> = (0..k).map(|_| rng.random()).collect();
        eta.sort_by(f64::total_cmp);
        for i in 1..k {
            if rng.random_range(0..5) == 0 {
                eta[i] = eta[i - 1];
            }
        }
        if rng.random_range(0..8) == 0 {
            let i = rng.random_range(0..k);
            eta[i] = 0.5;
            eta.sort_by(f64::total_cmp);
        }

        let class_conditional = rng.random_range(0..10) == 0;
        let (f_neg_values, f_pos_values) = if class_conditional {
            let (p, n) = random_rate_pair(rng);
            (vec![n; k], vec![p; k])
        } else {
            let mut f_neg = vec![0.0; k];
            let mut diff = vec![0.0; k];
            for i in 1..k {
                let drop = if rng.random_range(0..3) == 0 {
                    0.0
                } else {
                    rng.random_range(0.0..1.0)
                };
                let (left, prev_left) = (eta[i] <= 0.5, eta[i - 1] <= 0.5);
                let step = if left && prev_left {
                    drop + rng.random_range(0.0..0.5)
                } else if !left && !prev_left {
                    -rng.random_range(0.0..0.5)
                } else {
                    rng.random_range(-1.0..1.0)
                };
                f_neg[i] = f_neg[i - 1] + step;
                diff[i] = diff[i - 1] - drop;
            }
            let lowest_neg = f_neg.iter().copied().fold(f64::INFINITY, f64::min);
            f_neg.iter_mut().for_each(|v| *v -= lowest_neg);
            let lowest_pos = (0..k).map(|i| f_neg[i] + diff[i]).fold(f64::INFINITY, f64::min);
            let mut f_pos: Vec<f64> = (0..k).map(|i| f_neg[i] + diff[i] - lowest_pos).collect();
            let largest_total = (0..k).map(|i| f_neg[i] + f_pos[i]).fold(0.0, f64::max);
            if largest_total > 0.0 {
                let scale = rng.random_range(0.05..0.95) / largest_total;
                f_neg.iter_mut().for_each(|v| *v *= scale);
                f_pos.iter_mut().for_each(|v| *v *= scale);
            }
            (f_neg, f_pos)
        };

        let Ok(dist) = DiscreteDistribution::on_line(&scores, random_marginal(rng, k), eta) else {
            continue;
        };
        let table = |values: Vec<f64>| -> FlipFn {
            FlipFn::Piecewise(PiecewiseLinear::new(scores.clone(), values).expect("scores increase"))
        };
        let f_neg = table(f_neg_values);
        let f_pos = table(f_pos_values);
        let model = NoiseModel::bcn_plus(f_neg.clone(), f_pos.clone(), Scorer::identity());
        let Ok(flips) = model.on_support(&dist) else {
            continue;
        };
        let Ok(corrupted) = corrupt_with_flips(&dist, &flips) else {
            continue;
        };
        return BcnPlusConfig {
            dist,
            corrupted,
            f_neg,
            f_pos,
            flips,
            class_conditional,
        };
    }
}

fn bcn_plus_holds(config: &BcnPlusConfig) -> bool {
    let probes: Vec<BcnProbe> = config
        .dist
        .instances()
        .iter()
        .zip(config.dist.eta())
        .map(|(x, &eta)| BcnProbe { score: x[0], eta })
        .collect();
    validate_bcn_plus(&config.f_neg, &config.f_pos, &probes).passed()
}

fn identity_slack(lhs: f64, rhs: f64) -> f64 {
    -(lhs - rhs).abs()
}

// ---------------------------------------------------------------------------
// Trials

/// Under symmetric instance-dependent flips, reweighting the corrupted loss by
/// `1 / (1 - 2f)` recovers the clean risk up to the scorer-free term
/// `C E[f / (1 - 2f)]`, where `C` is the loss's symmetric sum.
fn risk_identity_trial(rng: &mut ChaCha8Rng) -> Trial {
    let dist = random_distribution(rng);
    let k = dist.len();
    let f = random_symmetric_flips(rng, k);
    let flips = AtomFlips::new(f.clone(), f.clone()).expect("rates below one half");
    let corrupted = corrupt_with_flips(&dist, &flips).expect("valid corruption");
    let weights: Vec<f64> = f.iter().map(|v| 1.0 / (1.0 - 2.0 * v)).collect();
    let offset: f64 = dist
        .marginal()
        .iter()
        .zip(&f)
        .map(|(m, v)| m * v / (1.0 - 2.0 * v))
        .sum();

    let mut trial = Trial::new(k, describe_flips("idn", &flips), "10 random scorers".into());
    for loss in [Loss::zero_one(), Loss::ramp(), Loss::unhinged()] {
        let c = loss.symmetric_sum().expect("symmetric loss");
        let mut gaps = Vec::new();
        for _ in 0..10 {
            let scores = random_scores(rng, k);
            let clean = risk(&scores, &dist, &loss).unwrap();
            let reweighted = weighted_risk(&scores, &corrupted, &loss, &weights).unwrap();
            gaps.push(reweighted - clean);
            trial.record("offset_matches", identity_slack(reweighted - clean, c * offset));
        }
        let lo = gaps.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        trial.record("scorer_independent", -(hi - lo));
    }
    trial
}

/// Symmetric flips below one half keep the sign of `2 eta - 1`, so every
/// classification-calibrated minimiser is shared.
fn bayes_coincide_trial(rng: &mut ChaCha8Rng) -> Trial {
    let dist = random_distribution(rng);
    let k = dist.len();
    let f = random_symmetric_flips(rng, k);
    let flips = AtomFlips::new(f.clone(), f).expect("rates below one half");
    let corrupted = corrupt_with_flips(&dist, &flips).expect("valid corruption");
    let grid: Vec<f64> = (0..=40).map(|i| -1.0 + i as f64 / 20.0).collect();
    let losses = [Loss::zero_one(), Loss::ramp(), Loss::unhinged()];

    let mut trial = Trial::new(k, describe_flips("idn", &flips), "grid on [-1, 1]".into());
    for i in 0..k {
        let (eta, eta_bar) = (dist.eta()[i], corrupted.eta()[i]);
        if eta == 0.5 {
            continue;
        }
        trial.record("sign_agrees", (2.0 * eta_bar - 1.0) * (2.0 * eta - 1.0).signum());
        for loss in &losses {
            let minimisers = |p: f64| -> Vec<usize> {
                let values: Vec<f64> = grid.iter().map(|&v| loss.conditional(p, v)).collect();
                let best = values.iter().copied().fold(f64::INFINITY, f64::min);
                (0..grid.len()).filter(|&j| values[j] <= best + 1e-12).collect()
            };
            let same = minimisers(eta) == minimisers(eta_bar);
            trial.record("minimisers_agree", if same { 0.0 } else { -1.0 });
        }
    }
    trial
}

/// Zero-one regret under symmetric flips is at most the corrupted regret
/// inflated by `1 / (1 - 2 rho_max)`, and the interpolating forms with
/// exponent `alpha` hold for every `alpha` in `[0, 1]`.
fn regret_bound_trial(rng: &mut ChaCha8Rng) -> Trial {
    let dist = random_distribution(rng);
    let k = dist.len();
    let f = random_symmetric_flips(rng, k);
    let flips = AtomFlips::new(f.clone(), f.clone()).expect("rates below one half");
    let corrupted = corrupt_with_flips(&dist, &flips).expect("valid corruption");
    let scores = random_scores(rng, k);
    let loss = Loss::zero_one();
    let clean = regret(&scores, &dist, &loss, None).unwrap();
    let noisy = regret(&scores, &corrupted, &loss, None).unwrap();

    let rho_max = f.iter().copied().fold(0.0, f64::max);
    let inflation = 1.0 / (1.0 - 2.0 * rho_max);
    let weights: Vec<f64> = f.iter().map(|v| 1.0 / (1.0 - 2.0 * v)).collect();
    let largest_weight = weights.iter().copied().fold(0.0, f64::max);
    let mean_weight: f64 = dist.marginal().iter().zip(&weights).map(|(m, w)| m * w).sum();
    // The conditional zero-one regret never exceeds one.
    let conditional_cap = 1.0;

    let mut trial = Trial::new(k, describe_flips("idn", &flips), describe(&scores));
    trial.record("basic", noisy * inflation - clean);
    for alpha in [0.0, 0.25, 0.5, 1.0] {
        let shared = (conditional_cap * mean_weight).powf(alpha) * noisy.powf(1.0 - alpha);
        trial.record("statement_form", inflation.powf(1.0 - alpha) * shared - clean);
        trial.record("proof_form", largest_weight.powf(1.0 - alpha) * shared - clean);
    }
    trial
}

/// With instance-dependent rates, `eta_bar - t_bar = (1 - rho_pos - rho_neg)
/// (eta - t)` atom by atom, so thresholding at `t` and at the shifted `t_bar`
/// agree. Symmetric flips leave `t = 1/2` fixed.
fn threshold_shift_trial(rng: &mut ChaCha8Rng) -> Trial {
    let dist = random_distribution(rng);
    let k = dist.len();
    let (rho_pos, rho_neg): (Vec<f64>, Vec<f64>) = (0..k).map(|_| random_rate_pair(rng)).unzip();
    let flips = AtomFlips::new(rho_pos, rho_neg).expect("admissible rates");
    let corrupted = corrupt_with_flips(&dist, &flips).expect("valid corruption");
    let t = if rng.random_range(0..8) == 0 {
        0.5
    } else {
        rng.random_range(0.02..0.98)
    };

    let mut trial = Trial::new(k, describe_flips("iln", &flips), format!("threshold {t}"));
    for i in 0..k {
        let (p, n) = (flips.rho_pos[i], flips.rho_neg[i]);
        let (eta, eta_bar) = (dist.eta()[i], corrupted.eta()[i]);
        let t_bar = corrupted_threshold(t, p, n).unwrap();
        trial.record(
            "shift_identity",
            identity_slack(eta_bar - t_bar, (1.0 - p - n) * (eta - t)),
        );
        if eta != t {
            trial.record("same_side", (eta_bar - t_bar) * (eta - t).signum());
        }
    }
    for f in random_symmetric_flips(rng, k) {
        trial.record(
            "half_fixed",
            identity_slack(corrupted_threshold(0.5, f, f).unwrap(), 0.5),
        );
    }
    trial
}

/// Boundary-consistent flips keep the order of `eta` across atoms; constant
/// class-conditional flips scale every gap by exactly `1 - rho_pos - rho_neg`.
fn order_preservation_trial(rng: &mut ChaCha8Rng) -> Trial {
    let config = random_bcn_plus(rng);
    let (eta, eta_bar) = (config.dist.eta(), config.corrupted.eta());
    let k = eta.len();
    let mut trial = Trial::new(k, config.describe(), "identity".into());
    trial.record("conditions_hold", if bcn_plus_holds(&config) { 0.0 } else { -1.0 });
    for i in 0..k {
        for j in 0..k {
            if eta[i] < eta[j] {
                trial.record("order_kept", eta_bar[j] - eta_bar[i]);
            }
        }
    }

    let (p, n) = random_rate_pair(rng);
    let constant = AtomFlips::new(vec![p; k], vec![n; k]).expect("admissible rates");
    let shifted = constant.corrupted_eta(eta);
    for i in 0..k {
        for j in 0..k {
            let linear = (1.0 - p - n) * (eta[i] - eta[j]);
            trial.record("ccn_linear", identity_slack(shifted[i] - shifted[j], linear));
        }
    }
    trial
}

/// For atoms with `s(x) <= s(x')`, the corrupted gap dominates the clean gap
/// scaled by the smaller of the two noise coefficients `1 - rho_pos - rho_neg`.
/// The version with the larger coefficient does not hold in general; see
/// [`find_eta_diff_max_counterexample`].
fn eta_diff_bound_trial(rng: &mut ChaCha8Rng) -> Trial {
    let config = random_bcn_plus(rng);
    let (eta, eta_bar) = (config.dist.eta(), config.corrupted.eta());
    let k = eta.len();
    let coefficient: Vec<f64> = (0..k)
        .map(|i| 1.0 - config.flips.rho_pos[i] - config.flips.rho_neg[i])
        .collect();
    let mut trial = Trial::new(k, config.describe(), "identity".into());
    trial.record("conditions_hold", if bcn_plus_holds(&config) { 0.0 } else { -1.0 });
    // Atoms are sorted by score, so i < j means s(x_i) < s(x_j).
    for i in 0..k {
        for j in i + 1..k {
            let c = coefficient[i].min(coefficient[j]);
            trial.record("gap_bound", c * (eta[i] - eta[j]) - (eta_bar[i] - eta_bar[j]));
        }
    }
    trial
}

/// Ranking regret on the clean distribution is at most the corrupted ranking
/// regret times `pi_bar (1 - pi_bar) / (pi (1 - pi)) / (1 - max(rho_pos +
/// rho_neg))`, with equality under constant class-conditional flips.
fn auc_bound_trial(rng: &mut ChaCha8Rng) -> Trial {
    let config = random_bcn_plus(rng);
    let k = config.dist.len();
    let scores = random_scores(rng, k);
    let factor = |dist: &DiscreteDistribution, flips: &AtomFlips| -> f64 {
        let pi = dist.base_rate();
        let pi_bar = corrupted_base_rate(dist, flips);
        pi_bar * (1.0 - pi_bar) / (pi * (1.0 - pi)) / (1.0 - flips.max_total())
    };

    let mut trial = Trial::new(k, config.describe(), describe(&scores));
    trial.record("conditions_hold", if bcn_plus_holds(&config) { 0.0 } else { -1.0 });
    let clean = ranking_regret(&scores, &config.dist).unwrap();
    let noisy = ranking_regret(&scores, &config.corrupted).unwrap();
    trial.record("bound", factor(&config.dist, &config.flips) * noisy - clean);

    let (p, n) = random_rate_pair(rng);
    let constant = AtomFlips::new(vec![p; k], vec![n; k]).expect("admissible rates");
    if let Ok(shifted) = corrupt_with_flips(&config.dist, &constant) {
        let noisy = ranking_regret(&scores, &shifted).unwrap();
        trial.record(
            "ccn_tight",
            identity_slack(factor(&config.dist, &constant) * noisy, clean),
        );
    }
    trial
}

fn random_piecewise(rng: &mut ChaCha8Rng, lo: f64, hi: f64, sorted_values: bool) -> PiecewiseLinear {
    let n = rng.random_range(2..=6);
    let mut xs: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut ys: Vec<f64> = (0..xs.len()).map(|_| rng.random_range(lo..hi)).collect();
    if sorted_values {
        ys.sort_by(f64::total_cmp);
    }
    PiecewiseLinear::new(xs, ys).expect("strictly increasing knots")
}

/// Composing a Lipschitz link with Lipschitz flips gives a corrupted link
/// whose Lipschitz constant is at most the sum of the three.
fn sim_closure_trial(rng: &mut ChaCha8Rng) -> Trial {
    let link = random_piecewise(rng, 0.0, 1.0, true);
    let f_neg = random_piecewise(rng, 0.0, 0.49, false);
    let f_pos = random_piecewise(rng, 0.0, 0.49, false);
    let bound = link.lipschitz() + f_neg.lipschitz() + f_pos.lipschitz() + LIPSCHITZ_ALLOWANCE;
    let atoms = link.knots().len();
    let u = Link::Piecewise(link);
    let (f_neg, f_pos) = (FlipFn::Piecewise(f_neg), FlipFn::Piecewise(f_pos));

    let mut grid: Vec<f64> = (0..=4000).map(|i| -4.0 + i as f64 / 500.0).collect();
    for f in [&f_neg, &f_pos] {
        if let FlipFn::Piecewise(p) = f {
            grid.extend_from_slice(p.knots());
        }
    }
    if let Link::Piecewise(p) = &u {
        grid.extend_from_slice(p.knots());
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let values: Vec<f64> = grid.iter().map(|&z| corrupted_link(&u, &f_neg, &f_pos, z)).collect();
    let estimate = (1..grid.len())
        .map(|i| (values[i] - values[i - 1]).abs() / (grid[i] - grid[i - 1]))
        .fold(0.0, f64::max);
    let mut trial = Trial::new(atoms, format!("sin f_neg={f_neg:?} f_pos={f_pos:?}"), format!("{u:?}"));
    trial.record("lipschitz", bound - estimate);
    trial
}

/// The noise-corrected loss has the same expectation under corrupted labels
/// as the clean loss under clean labels, atom by atom.
fn unbiased_loss_trial(rng: &mut ChaCha8Rng) -> Trial {
    let dist = random_distribution(rng);
    let k = dist.len();
    let (rho_pos, rho_neg): (Vec<f64>, Vec<f64>) = (0..k).map(|_| random_rate_pair(rng)).unzip();
    let flips = AtomFlips::new(rho_pos, rho_neg).expect("admissible rates");
    let corrupted = corrupt_with_flips(&dist, &flips).expect("valid corruption");
    let scores = random_scores(rng, k);
    let mut trial = Trial::new(k, describe_flips("iln", &flips), describe(&scores));
    for loss in [
        Loss::zero_one(),
        Loss::square(),
        Loss::logistic(),
        Loss::ramp(),
        Loss::unhinged(),
    ] {
        let clean = risk(&scores, &dist, &loss).unwrap();
        let corrected = corrected_risk(&scores, &corrupted, &loss, &flips).unwrap();
        trial.record("expectation_matches", identity_slack(corrected, clean));
    }
    trial
}

// ---------------------------------------------------------------------------
// Counterexamples

/// Two points at which a clean quantity increases while its corrupted
/// counterpart decreases.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub name: String,
    pub description: String,
    /// The two points, in increasing order.
    pub points: [f64; 2],
    pub clean: [f64; 2],
    pub corrupted: [f64; 2],
}

fn first_reversal(
    name: &str,
    description: String,
    points: &[f64],
    clean: impl Fn(f64) -> f64,
    corrupted: impl Fn(f64) -> f64,
) -> Option<Witness> {
    points.windows(2).find_map(|pair| {
        let (a, b) = (pair[0], pair[1]);
        (clean(a) < clean(b) && corrupted(a) > corrupted(b)).then(|| Witness {
            name: name.into(),
            description: description.clone(),
            points: [a, b],
            clean: [clean(a), clean(b)],
            corrupted: [corrupted(a), corrupted(b)],
        })
    })
}

/// Logistic link, no flips of positives and negatives flipped with
/// probability `a` on non-positive scores. The corrupted class-probability
/// jumps down as the score crosses zero. Scans the grid `0.01 (2j + 1)`.
pub fn find_order_violation_with(a: f64) -> Option<Witness> {
    let f_neg = FlipFn::Step { a };
    let f_pos = FlipFn::Constant(0.0);
    let grid: Vec<f64> = (-100..100).map(|j| 0.01 * (2 * j + 1) as f64).collect();
    first_reversal(
        "order_violation",
        format!("logistic link, f_pos = 0, f_neg = {a} on scores <= 0"),
        &grid,
        sigmoid,
        |z| corrupted_link(&Link::Logistic, &f_neg, &f_pos, z),
    )
}

pub fn find_order_violation() -> Option<Witness> {
    find_order_violation_with(0.5)
}

/// Symmetric flips `f = eta / 2` give `eta_bar = eta (3/2 - eta)`, which
/// decreases once `eta > 3/4`. Scans `eta` on a grid of step 0.01.
pub fn check_idn_order_failure() -> Option<Witness> {
    let grid: Vec<f64> = (50..100).map(|i| i as f64 / 100.0).collect();
    first_reversal(
        "idn_order_failure",
        "symmetric flips f = eta / 2".into(),
        &grid,
        |eta| eta,
        |eta| {
            let f = eta / 2.0;
            (1.0 - 2.0 * f) * eta + f
        },
    )
}

/// Two atoms satisfying the boundary-consistency conditions where the
/// corrupted gap is smaller than the clean gap times the larger noise
/// coefficient. Points are the clean class-probabilities.
pub fn find_eta_diff_max_counterexample() -> Option<Witness> {
    let eta = [0.45, 0.55];
    let flips = AtomFlips::new(vec![0.4, 0.0], vec![0.4, 0.0]).ok()?;
    let eta_bar = flips.corrupted_eta(&eta);
    let probes: Vec<BcnProbe> = [0.0, 1.0]
        .iter()
        .zip(eta)
        .map(|(&score, eta)| BcnProbe { score, eta })
        .collect();
    let table = |v: Vec<f64>| FlipFn::Piecewise(PiecewiseLinear::new(vec![0.0, 1.0], v).unwrap());
    let conditions = validate_bcn_plus(&table(vec![0.4, 0.0]), &table(vec![0.4, 0.0]), &probes);
    let largest = (0..2)
        .map(|i| 1.0 - flips.rho_pos[i] - flips.rho_neg[i])
        .fold(0.0, f64::max);
    let violated = eta_bar[0] - eta_bar[1] > largest * (eta[0] - eta[1]) + SLACK_TOLERANCE;
    (conditions.passed() && violated).then(|| Witness {
        name: "eta_diff_max_form".into(),
        description: "rho_pos = rho_neg = (0.4, 0) at scores (0, 1)".into(),
        points: eta,
        clean: eta,
        corrupted: [eta_bar[0], eta_bar[1]],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub seed: u64,
    pub trials: usize,
    pub checks: Vec<CheckReport>,
    /// Witness per counterexample finder; `None` if the finder came up empty.
    pub witnesses: Vec<(String, Option<Witness>)>,
}

impl VerificationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(CheckReport::all_passed) && self.witnesses.iter().all(|(_, w)| w.is_some())
    }
}

/// Runs every check and every counterexample finder.
pub fn run_all(trials: usize, seed: u64) -> VerificationReport {
    VerificationReport {
        seed,
        trials,
        checks: Check::ALL.iter().map(|&c| run_check(c, trials, seed)).collect(),
        witnesses: vec![
            ("find_order_violation".into(), find_order_violation()),
            ("check_idn_order_failure".into(), check_idn_order_failure()),
            (
                "find_eta_diff_max_counterexample".into(),
                find_eta_diff_max_counterexample(),
            ),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_check_passes() {
        for check in Check::ALL {
            let report = run_check(check, 200, 7);
            assert!(report.all_passed(), "{:#?}", report.failure);
            assert!(report.tightest_slack.is_finite());
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let a = run_check(Check::AucBound, 50, 3);
        let b = run_check(Check::AucBound, 50, 3);
        assert_eq!(a, b);
    }

    #[test]
    fn replay_reproduces_tightest_case() {
        let report = run_check(Check::RegretBound, 40, 11);
        let case = report.tightest_case.unwrap();
        assert_eq!(replay(Check::RegretBound, case.seed), case);
    }

    #[test]
    fn generated_configs_satisfy_conditions() {
        let mut rng = stream_rng(5, 99);
        for _ in 0..300 {
            assert!(bcn_plus_holds(&random_bcn_plus(&mut rng)));
        }
    }

    #[test]
    fn noise_free_regret_bound_is_tight() {
        let dist = DiscreteDistribution::on_line(&[0.0, 1.0, 2.0], vec![0.2, 0.3, 0.5], vec![0.9, 0.3, 0.6]).unwrap();
        let scores = [-1.0, 1.0, 0.5];
        let clean = regret(&scores, &dist, &Loss::zero_one(), None).unwrap();
        let flips = AtomFlips::new(vec![0.0; 3], vec![0.0; 3]).unwrap();
        let same = corrupt_with_flips(&dist, &flips).unwrap();
        let noisy = regret(&scores, &same, &Loss::zero_one(), None).unwrap();
        assert_eq!(clean, noisy);
        assert!(clean > 0.0);
    }

    #[test]
    fn step_flip_witness() {
        let w = find_order_violation().unwrap();
        assert_eq!(w.points, [-0.01, 0.01]);
        // (1 - a) sigma(z) + a at z = -0.01, and sigma(z) at z = 0.01.
        let sigma = |z: f64| 1.0 / (1.0 + (-z).exp());
        assert!((w.corrupted[0] - (0.5 * sigma(-0.01) + 0.5)).abs() < 1e-15);
        assert!((w.corrupted[0] - 0.74875).abs() < 1e-5);
        assert!((w.corrupted[1] - 0.5025).abs() < 1e-4);
        assert!(find_order_violation_with(0.0).is_none());
    }

    #[test]
    fn idn_witness() {
        let w = check_idn_order_failure().unwrap();
        assert!(w.points[0] >= 0.75);
        for (eta, eta_bar) in w.points.iter().zip(w.corrupted) {
            assert!((eta * (1.5 - eta) - eta_bar).abs() < 1e-15);
        }
        assert!(w.corrupted[0] > w.corrupted[1]);
    }

    #[test]
    fn max_coefficient_gap_bound_fails() {
        let w = find_eta_diff_max_counterexample().unwrap();
        assert!((w.corrupted[0] - 0.49).abs() < 1e-15);
        assert!((w.corrupted[1] - 0.55).abs() < 1e-15);
    }

    #[test]
    fn full_run_passes() {
        let report = run_all(20, 1);
        assert!(report.all_passed());
        assert_eq!(report.checks.len(), 9);
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains("\"risk_identity\""));
    }
}
