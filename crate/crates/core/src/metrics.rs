//! Losses, exact risks and regrets on discrete distributions, ranking
//! regret, sample metrics and noise-corrected losses.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::dist::{DiscreteDistribution, LabeledSample};
use crate::error::{Error, Result};
use crate::noise::{is_admissible, AtomFlips};

const SYMMETRY_TOLERANCE: f64 = 1e-10;

type Partial = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum LossKind {
    ZeroOne,
    ZeroOneHalfTies,
    Square,
    Ramp,
    Unhinged,
    Logistic,
    Custom { pos: Partial, neg: Partial },
}

/// A binary loss given by its partial losses `l_pos(v)` and `l_neg(v)`.
#[derive(Clone)]
pub struct Loss {
    name: String,
    kind: LossKind,
    symmetric_sum: Option<f64>,
}

impl fmt::Debug for Loss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Loss")
            .field("name", &self.name)
            .field("symmetric_sum", &self.symmetric_sum)
            .finish()
    }
}

impl Loss {
    fn builtin(name: &str, kind: LossKind, symmetric_sum: Option<f64>) -> Self {
        Self {
            name: name.into(),
            kind,
            symmetric_sum,
        }
    }

    /// Misclassification loss with `sign(0) = +1`.
    pub fn zero_one() -> Self {
        Self::builtin("zero-one", LossKind::ZeroOne, Some(1.0))
    }

    /// Misclassification loss charging 1/2 on either label when `v = 0`.
    pub fn zero_one_half_ties() -> Self {
        Self::builtin("zero-one-half-ties", LossKind::ZeroOneHalfTies, Some(1.0))
    }

    /// Square loss on the probability scale: `(1 - v)^2` and `v^2`.
    pub fn square() -> Self {
        Self::builtin("square", LossKind::Square, None)
    }

    /// `clamp((1 -+ v) / 2, 0, 1)`.
    pub fn ramp() -> Self {
        Self::builtin("ramp", LossKind::Ramp, Some(1.0))
    }

    /// `1 -+ v`.
    pub fn unhinged() -> Self {
        Self::builtin("unhinged", LossKind::Unhinged, Some(2.0))
    }

    /// `ln(1 + e^{-+v})`.
    pub fn logistic() -> Self {
        Self::builtin("logistic", LossKind::Logistic, None)
    }

    /// A user-defined loss. A declared `symmetric_sum` is verified on a
    /// grid of 1000 points in `[-10, 10]`.
    pub fn custom(
        name: &str,
        pos: impl Fn(f64) -> f64 + Send + Sync + 'static,
        neg: impl Fn(f64) -> f64 + Send + Sync + 'static,
        symmetric_sum: Option<f64>,
    ) -> Result<Self> {
        let loss = Self {
            name: name.into(),
            kind: LossKind::Custom {
                pos: Arc::new(pos),
                neg: Arc::new(neg),
            },
            symmetric_sum,
        };
        if let Some(c) = symmetric_sum {
            for i in 0..1000 {
                let v = -10.0 + 20.0 * i as f64 / 999.0;
                let sum = loss.pos(v) + loss.neg(v);
                if (sum - c).abs() > SYMMETRY_TOLERANCE {
                    return Err(Error::InvalidInput(format!(
                        "loss `{name}`: partial losses sum to {sum} at v = {v}, not {c}"
                    )));
                }
            }
        }
        Ok(loss)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn symmetric_sum(&self) -> Option<f64> {
        self.symmetric_sum
    }

    /// Loss on a positive label.
    pub fn pos(&self, v: f64) -> f64 {
        match &self.kind {
            LossKind::ZeroOne => indicator(v < 0.0),
            LossKind::ZeroOneHalfTies => tie_aware(v, v < 0.0),
            LossKind::Square => (1.0 - v) * (1.0 - v),
            LossKind::Ramp => ((1.0 - v) / 2.0).clamp(0.0, 1.0),
            LossKind::Unhinged => 1.0 - v,
            LossKind::Logistic => softplus(-v),
            LossKind::Custom { pos, .. } => pos(v),
        }
    }

    /// Loss on a negative label.
    pub fn neg(&self, v: f64) -> f64 {
        match &self.kind {
            LossKind::ZeroOne => indicator(v >= 0.0),
            LossKind::ZeroOneHalfTies => tie_aware(v, v > 0.0),
            LossKind::Square => v * v,
            LossKind::Ramp => ((1.0 + v) / 2.0).clamp(0.0, 1.0),
            LossKind::Unhinged => 1.0 + v,
            LossKind::Logistic => softplus(v),
            LossKind::Custom { neg, .. } => neg(v),
        }
    }

    pub fn partial(&self, label: i8, v: f64) -> f64 {
        if label > 0 {
            self.pos(v)
        } else {
            self.neg(v)
        }
    }

    /// Conditional risk `eta l_pos(v) + (1 - eta) l_neg(v)`.
    pub fn conditional(&self, eta: f64, v: f64) -> f64 {
        eta * self.pos(v) + (1.0 - eta) * self.neg(v)
    }

    /// Whether this is one of the misclassification losses.
    pub fn is_misclassification(&self) -> bool {
        matches!(self.kind, LossKind::ZeroOne | LossKind::ZeroOneHalfTies)
    }
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn tie_aware(v: f64, wrong: bool) -> f64 {
    if v == 0.0 {
        0.5
    } else {
        indicator(wrong)
    }
}

fn softplus(v: f64) -> f64 {
    if v > 0.0 {
        v + (-v).exp().ln_1p()
    } else {
        v.exp().ln_1p()
    }
}

fn check_scores(scores: &[f64], dist: &DiscreteDistribution) -> Result<()> {
    if scores.len() == dist.len() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: dist.len(),
            got: scores.len(),
        })
    }
}

/// Evaluates a scorer on every atom of `dist`.
pub fn scores_on(dist: &DiscreteDistribution, scorer: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    dist.instances().iter().map(|x| scorer(x)).collect()
}

/// Exact risk of the per-atom `scores` under `dist`.
pub fn risk(scores: &[f64], dist: &DiscreteDistribution, loss: &Loss) -> Result<f64> {
    check_scores(scores, dist)?;
    Ok(dist
        .marginal()
        .iter()
        .zip(dist.eta())
        .zip(scores)
        .map(|((m, &eta), &v)| m * loss.conditional(eta, v))
        .sum())
}

/// Risk with the integrand multiplied by per-atom `weights`.
pub fn weighted_risk(scores: &[f64], dist: &DiscreteDistribution, loss: &Loss, weights: &[f64]) -> Result<f64> {
    check_scores(scores, dist)?;
    check_scores(weights, dist)?;
    Ok(dist
        .marginal()
        .iter()
        .zip(dist.eta())
        .zip(scores.iter().zip(weights))
        .map(|((m, &eta), (&v, &w))| m * w * loss.conditional(eta, v))
        .sum())
}

/// Bayes risk for losses with a closed form: zero-one and square.
pub fn bayes_risk(dist: &DiscreteDistribution, loss: &Loss) -> Result<f64> {
    let per_atom: fn(f64) -> f64 = match loss.kind {
        LossKind::ZeroOne | LossKind::ZeroOneHalfTies => |eta: f64| eta.min(1.0 - eta),
        LossKind::Square => |eta: f64| eta * (1.0 - eta),
        _ => return Err(Error::UnsupportedLoss(loss.name.clone())),
    };
    Ok(dist
        .marginal()
        .iter()
        .zip(dist.eta())
        .map(|(m, &eta)| m * per_atom(eta))
        .sum())
}

/// Excess risk over the Bayes risk.
///
/// Zero-one regret is computed as `E[|2 eta - 1| 1{s disagrees with the
/// Bayes sign}]` and square regret as `E[(s - eta)^2]`; any other loss needs
/// a caller-supplied Bayes risk.
pub fn regret(scores: &[f64], dist: &DiscreteDistribution, loss: &Loss, bayes: Option<f64>) -> Result<f64> {
    check_scores(scores, dist)?;
    if let Some(b) = bayes {
        return Ok(risk(scores, dist, loss)? - b);
    }
    let terms = dist.marginal().iter().zip(dist.eta()).zip(scores);
    match loss.kind {
        LossKind::ZeroOne => Ok(terms
            .map(|((m, &eta), &v)| {
                let predicts_positive = v >= 0.0;
                let wrong = (eta > 0.5 && !predicts_positive) || (eta < 0.5 && predicts_positive);
                m * (2.0 * eta - 1.0).abs() * indicator(wrong)
            })
            .sum()),
        LossKind::ZeroOneHalfTies => Ok(terms
            .map(|((m, &eta), &v)| {
                let gap = (2.0 * eta - 1.0).abs();
                let charge = if v == 0.0 {
                    gap / 2.0
                } else if (eta - 0.5) * v < 0.0 {
                    gap
                } else {
                    0.0
                };
                m * charge
            })
            .sum()),
        LossKind::Square => Ok(terms.map(|((m, &eta), &v)| m * (v - eta) * (v - eta)).sum()),
        _ => Err(Error::UnsupportedLoss(loss.name.clone())),
    }
}

/// Ranking regret: one minus the AUC of `scores`, minus the same for an
/// optimal ranking.
pub fn ranking_regret(scores: &[f64], dist: &DiscreteDistribution) -> Result<f64> {
    check_scores(scores, dist)?;
    let pi = dist.base_rate();
    let m = dist.marginal();
    let eta = dist.eta();
    let mut total = 0.0;
    for i in 0..dist.len() {
        for j in 0..dist.len() {
            let d_eta = eta[i] - eta[j];
            let d_score = scores[i] - scores[j];
            let credit = if d_score == 0.0 {
                0.5
            } else if d_eta * d_score < 0.0 {
                1.0
            } else {
                0.0
            };
            total += m[i] * m[j] * d_eta.abs() * credit;
        }
    }
    Ok(total / (2.0 * pi * (1.0 - pi)))
}

/// Area under the ROC curve, with tied scores receiving half credit.
pub fn auc(scores: &[f64], labels: &[i8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            got: scores.len(),
        });
    }
    if scores.is_empty() {
        return Err(Error::Empty);
    }
    let positives = labels.iter().filter(|&&y| y > 0).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Sum of average ranks (1-based) of the positives.
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let average_rank = (start + end + 1) as f64 / 2.0;
        let tied_positives = order[start..end].iter().filter(|&&i| labels[i] > 0).count();
        rank_sum += average_rank * tied_positives as f64;
        start = end;
    }
    let p = positives as f64;
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * negatives as f64))
}

/// Anything evaluated on labelled samples.
pub trait Predictor {
    /// Real-valued score used for ranking.
    fn score(&self, x: &[f64]) -> Result<f64>;

    fn classify(&self, x: &[f64]) -> Result<i8>;

    /// Squared error of the model's regression output against label `y`.
    fn squared_error(&self, x: &[f64], y: i8) -> Result<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmpiricalMetrics {
    pub accuracy: f64,
    pub auc: f64,
    pub mse: f64,
}

pub fn empirical_metrics<P: Predictor + ?Sized>(model: &P, sample: &LabeledSample) -> Result<EmpiricalMetrics> {
    if sample.is_empty() {
        return Err(Error::Empty);
    }
    let mut correct = 0usize;
    let mut squared = 0.0;
    let mut scores = Vec::with_capacity(sample.len());
    for (x, &y) in sample.features.iter().zip(&sample.labels) {
        if model.classify(x)? == y {
            correct += 1;
        }
        squared += model.squared_error(x, y)?;
        scores.push(model.score(x)?);
    }
    let n = sample.len() as f64;
    Ok(EmpiricalMetrics {
        accuracy: correct as f64 / n,
        auc: auc(&scores, &sample.labels)?,
        mse: squared / n,
    })
}

/// Fraction of `predictions` equal to `labels`.
pub fn accuracy(predictions: &[i8], labels: &[i8]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    predictions.iter().zip(labels).filter(|(p, y)| p == y).count() as f64 / labels.len() as f64
}

/// Loss whose expectation under corrupted labels equals the clean loss:
/// `l~_pos = w [(1 - rho_neg) l_pos - rho_pos l_neg]` and
/// `l~_neg = w [(1 - rho_pos) l_neg - rho_neg l_pos]` with
/// `w = 1 / (1 - rho_pos - rho_neg)`.
#[derive(Debug, Clone)]
pub struct NoiseCorrectedLoss {
    pub loss: Loss,
    pub rho_pos: f64,
    pub rho_neg: f64,
}

impl NoiseCorrectedLoss {
    pub fn pos(&self, v: f64) -> f64 {
        let w = 1.0 / (1.0 - self.rho_pos - self.rho_neg);
        w * ((1.0 - self.rho_neg) * self.loss.pos(v) - self.rho_pos * self.loss.neg(v))
    }

    pub fn neg(&self, v: f64) -> f64 {
        let w = 1.0 / (1.0 - self.rho_pos - self.rho_neg);
        w * ((1.0 - self.rho_pos) * self.loss.neg(v) - self.rho_neg * self.loss.pos(v))
    }

    pub fn partial(&self, label: i8, v: f64) -> f64 {
        if label > 0 {
            self.pos(v)
        } else {
            self.neg(v)
        }
    }
}

pub fn noise_corrected_loss(loss: &Loss, rho_pos: f64, rho_neg: f64) -> Result<NoiseCorrectedLoss> {
    if !is_admissible(rho_pos, rho_neg) {
        return Err(Error::Inadmissible {
            instance: None,
            rho_pos,
            rho_neg,
        });
    }
    Ok(NoiseCorrectedLoss {
        loss: loss.clone(),
        rho_pos,
        rho_neg,
    })
}

/// Expected noise-corrected loss under a corrupted distribution, with
/// per-atom flip rates.
pub fn corrected_risk(scores: &[f64], corrupted: &DiscreteDistribution, loss: &Loss, flips: &AtomFlips) -> Result<f64> {
    check_scores(scores, corrupted)?;
    check_scores(&flips.rho_pos, corrupted)?;
    let mut total = 0.0;
    for i in 0..corrupted.len() {
        let corrected =
            noise_corrected_loss(loss, flips.rho_pos[i], flips.rho_neg[i]).map_err(|_| Error::Inadmissible {
                instance: Some(i),
                rho_pos: flips.rho_pos[i],
                rho_neg: flips.rho_neg[i],
            })?;
        let eta_bar = corrupted.eta()[i];
        let v = scores[i];
        total += corrupted.marginal()[i] * (eta_bar * corrected.pos(v) + (1.0 - eta_bar) * corrected.neg(v));
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{sample_clean, Provenance};
    use crate::noise::{corrupt_distribution, NoiseModel};
    use proptest::prelude::*;

    fn two_atoms() -> DiscreteDistribution {
        DiscreteDistribution::on_line(&[-1.0, 1.0], vec![0.5, 0.5], vec![0.2, 0.8]).unwrap()
    }

    #[test]
    fn builtin_symmetric_sums_hold() {
        for loss in [
            Loss::zero_one(),
            Loss::zero_one_half_ties(),
            Loss::ramp(),
            Loss::unhinged(),
        ] {
            let c = loss.symmetric_sum().unwrap();
            for i in 0..1000 {
                let v = -10.0 + 0.02 * i as f64;
                assert!((loss.pos(v) + loss.neg(v) - c).abs() < 1e-10, "{}", loss.name());
            }
        }
        assert!(Loss::custom("bad", |v| v * v, |v| v, Some(1.0)).is_err());
        assert!(Loss::custom("flipped", |v| 1.0 - v, |v| 1.0 + v, Some(2.0)).is_ok());
    }

    #[test]
    fn zero_one_sign_convention() {
        let l = Loss::zero_one();
        assert_eq!(l.pos(0.0), 0.0);
        assert_eq!(l.neg(0.0), 1.0);
        let h = Loss::zero_one_half_ties();
        assert_eq!(h.pos(0.0), 0.5);
        assert_eq!(h.neg(0.0), 0.5);
    }

    #[test]
    fn risk_examples() {
        let det = DiscreteDistribution::on_line(&[-1.0, 1.0], vec![0.5, 0.5], vec![0.0, 1.0]).unwrap();
        assert_eq!(risk(&[-1.0, 1.0], &det, &Loss::zero_one()).unwrap(), 0.0);

        let d = DiscreteDistribution::on_line(&[0.0, 1.0], vec![0.5, 0.5], vec![0.2, 0.4]).unwrap();
        assert!((d.base_rate() - 0.3).abs() < 1e-15);
        assert!((risk(&[1.0, 1.0], &d, &Loss::zero_one()).unwrap() - 0.7).abs() < 1e-15);
        assert!(risk(&[1.0], &d, &Loss::zero_one()).is_err());
    }

    #[test]
    fn risk_agrees_with_monte_carlo() {
        let dist = DiscreteDistribution::on_line(
            &[0.0, 1.0, 2.0, 3.0],
            vec![0.1, 0.4, 0.3, 0.2],
            vec![0.9, 0.3, 0.6, 0.1],
        )
        .unwrap();
        let scores = [0.4, -0.2, 0.7, 0.1];
        let loss = Loss::logistic();
        let exact = risk(&scores, &dist, &loss).unwrap();
        let n = 1_000_000;
        let sample = sample_clean(&dist, n, 17).unwrap();
        let values: Vec<f64> = sample
            .features
            .iter()
            .zip(&sample.labels)
            .map(|(x, &y)| loss.partial(y, scores[x[0] as usize]))
            .collect();
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(
            (mean - exact).abs() < 3.0 * (var / n as f64).sqrt(),
            "{mean} vs {exact}"
        );
    }

    #[test]
    fn weighted_risk_reduces_to_risk() {
        let d = two_atoms();
        let s = [0.3, -0.4];
        let loss = Loss::square();
        let plain = risk(&s, &d, &loss).unwrap();
        assert_eq!(weighted_risk(&s, &d, &loss, &[1.0, 1.0]).unwrap(), plain);
        let w: Vec<f64> = [0.0, 0.0].iter().map(|f: &f64| 1.0 / (1.0 - 2.0 * f)).collect();
        assert_eq!(weighted_risk(&s, &d, &loss, &w).unwrap(), plain);
    }

    #[test]
    fn regret_examples() {
        let d = two_atoms();
        let bayes: Vec<f64> = d.eta().iter().map(|e| 2.0 * e - 1.0).collect();
        assert_eq!(regret(&bayes, &d, &Loss::zero_one(), None).unwrap(), 0.0);
        let flipped: Vec<f64> = bayes.iter().map(|v| -v).collect();
        // Each atom pays |2 eta - 1| = 0.6 for the wrong sign.
        assert!((regret(&flipped, &d, &Loss::zero_one(), None).unwrap() - 0.6).abs() < 1e-12);
        assert!(matches!(
            regret(&flipped, &d, &Loss::logistic(), None),
            Err(Error::UnsupportedLoss(_))
        ));
        assert!(matches!(bayes_risk(&d, &Loss::ramp()), Err(Error::UnsupportedLoss(_))));
    }

    #[test]
    fn ranking_regret_examples() {
        let d = two_atoms();
        assert_eq!(ranking_regret(d.eta(), &d).unwrap(), 0.0);
        assert!((ranking_regret(&[0.0, 0.0], &d).unwrap() - 0.3).abs() < 1e-12);
        assert!((ranking_regret(&[1.0, 0.0], &d).unwrap() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn auc_examples() {
        assert_eq!(auc(&[0.1, 0.2, 0.8, 0.9], &[-1, -1, 1, 1]).unwrap(), 1.0);
        assert_eq!(auc(&[0.5; 4], &[-1, 1, -1, 1]).unwrap(), 0.5);
        assert_eq!(auc(&[0.9, 0.1], &[-1, 1]).unwrap(), 0.0);
        assert!(matches!(auc(&[0.1, 0.2], &[1, 1]), Err(Error::SingleClass)));
    }

    /// Pairwise AUC with half credit for ties.
    fn pairwise_auc(scores: &[f64], labels: &[i8]) -> f64 {
        let mut credit = 0.0;
        let mut pairs = 0.0;
        for i in 0..scores.len() {
            for j in 0..scores.len() {
                if labels[i] > 0 && labels[j] < 0 {
                    pairs += 1.0;
                    credit += if scores[i] > scores[j] {
                        1.0
                    } else if scores[i] == scores[j] {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        credit / pairs
    }

    #[test]
    fn auc_matches_ranking_regret_on_lifted_atoms() {
        // Atoms with rational masses lifted to a sample with exact counts.
        let eta = [0.25, 0.5, 0.75, 1.0];
        let counts = [4usize, 2, 4, 2];
        let mut scores_by_atom = [0.3, 0.1, 0.1, 0.9];
        for round in 0..2 {
            if round == 1 {
                scores_by_atom = [0.0, 1.0, 2.0, 3.0];
            }
            let mut scores = Vec::new();
            let mut optimal_scores = Vec::new();
            let mut labels = Vec::new();
            for a in 0..4 {
                let n = counts[a] * 4;
                let pos = (eta[a] * n as f64) as usize;
                for k in 0..n {
                    scores.push(scores_by_atom[a]);
                    optimal_scores.push(eta[a]);
                    labels.push(if k < pos { 1 } else { -1 });
                }
            }
            let total: usize = counts.iter().sum();
            let marginal: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
            let dist = DiscreteDistribution::on_line(&[0.0, 1.0, 2.0, 3.0], marginal, eta.to_vec()).unwrap();
            let sample_auc = auc(&scores, &labels).unwrap();
            assert!((sample_auc - pairwise_auc(&scores, &labels)).abs() < 1e-15);
            let optimal_auc = auc(&optimal_scores, &labels).unwrap();
            let regret = ranking_regret(&scores_by_atom, &dist).unwrap();
            assert!((optimal_auc - sample_auc - regret).abs() < 1e-12, "round {round}");
        }
    }

    struct Threshold;

    impl Predictor for Threshold {
        fn score(&self, x: &[f64]) -> Result<f64> {
            Ok(x[0])
        }
        fn classify(&self, x: &[f64]) -> Result<i8> {
            Ok(if x[0] >= 0.0 { 1 } else { -1 })
        }
        fn squared_error(&self, x: &[f64], y: i8) -> Result<f64> {
            Ok((x[0] - y as f64).powi(2))
        }
    }

    #[test]
    fn empirical_metrics_on_separated_sample() {
        let s = LabeledSample::new(
            vec![vec![-1.0], vec![-0.5], vec![0.5], vec![1.0]],
            vec![-1, -1, 1, 1],
            Provenance::External,
        )
        .unwrap();
        let m = empirical_metrics(&Threshold, &s).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.auc, 1.0);
        assert!((m.mse - 0.125).abs() < 1e-15);
    }

    #[test]
    fn corrected_loss_without_noise_is_the_loss() {
        let loss = Loss::logistic();
        let c = noise_corrected_loss(&loss, 0.0, 0.0).unwrap();
        for v in [-2.0, 0.0, 1.5] {
            assert_eq!(c.pos(v), loss.pos(v));
            assert_eq!(c.neg(v), loss.neg(v));
        }
        assert!(noise_corrected_loss(&loss, 0.6, 0.5).is_err());
    }

    #[test]
    fn corrected_loss_matches_class_conditional_form() {
        // With constant rates the corrected loss is
        // ((1 - rho_{-y}) l(y, v) - rho_y l(-y, v)) / (1 - rho_pos - rho_neg).
        let (a, b) = (0.3, 0.1);
        let loss = Loss::square();
        let c = noise_corrected_loss(&loss, a, b).unwrap();
        for v in [0.1, 0.5, 0.9] {
            let pos = ((1.0 - b) * loss.pos(v) - a * loss.neg(v)) / (1.0 - a - b);
            let neg = ((1.0 - a) * loss.neg(v) - b * loss.pos(v)) / (1.0 - a - b);
            assert!((c.pos(v) - pos).abs() < 1e-15);
            assert!((c.neg(v) - neg).abs() < 1e-15);
        }
    }

    fn random_dist(eta: &[f64], weights: &[f64]) -> DiscreteDistribution {
        let k = eta.len();
        let total: f64 = weights[..k].iter().sum();
        let m: Vec<f64> = weights[..k].iter().map(|w| w / total).collect();
        let points: Vec<f64> = (0..k).map(|i| i as f64).collect();
        DiscreteDistribution::on_line(&points, m, eta.to_vec()).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn regret_equals_risk_minus_bayes(
            eta in proptest::collection::vec(0.01..0.99f64, 2..10),
            weights in proptest::collection::vec(0.05..1.0f64, 10),
            scores in proptest::collection::vec(-1.0..1.0f64, 10),
        ) {
            let d = random_dist(&eta, &weights);
            let s = &scores[..eta.len()];
            for loss in [Loss::zero_one(), Loss::zero_one_half_ties()] {
                let closed = regret(s, &d, &loss, None).unwrap();
                let direct = risk(s, &d, &loss).unwrap() - bayes_risk(&d, &loss).unwrap();
                prop_assert!((closed - direct).abs() < 1e-12);
                prop_assert!(closed >= 0.0);
            }
            let probs: Vec<f64> = s.iter().map(|v| (v + 1.0) / 2.0).collect();
            let sq = Loss::square();
            let closed = regret(&probs, &d, &sq, None).unwrap();
            let direct = risk(&probs, &d, &sq).unwrap() - bayes_risk(&d, &sq).unwrap();
            prop_assert!((closed - direct).abs() < 1e-12);
        }

        #[test]
        fn rank_sum_auc_matches_pairwise(
            scores in proptest::collection::vec(0u8..5, 2..40),
            labels in proptest::collection::vec(proptest::bool::ANY, 40),
        ) {
            let n = scores.len();
            let mut labels: Vec<i8> = labels[..n].iter().map(|&b| if b { 1 } else { -1 }).collect();
            labels[0] = 1;
            labels[1] = -1;
            let scores: Vec<f64> = scores.iter().map(|&s| s as f64).collect();
            prop_assert!((auc(&scores, &labels).unwrap() - pairwise_auc(&scores, &labels)).abs() < 1e-12);
        }

        #[test]
        fn corrected_risk_is_unbiased(
            eta in proptest::collection::vec(0.0..=1.0f64, 2..10),
            weights in proptest::collection::vec(0.05..1.0f64, 10),
            flips in proptest::collection::vec((0.0..0.49f64, 0.0..0.49f64), 10),
            scores in proptest::collection::vec(-2.0..2.0f64, 10),
        ) {
            let k = eta.len();
            let mut eta = eta;
            eta[0] = 0.5;
            let d = random_dist(&eta, &weights);
            let model = NoiseModel::iln(
                crate::noise::InstanceFn::Table(crate::noise::InstanceTable::new(
                    d.instances(), &flips[..k].iter().map(|f| f.0).collect::<Vec<_>>()).unwrap()),
                crate::noise::InstanceFn::Table(crate::noise::InstanceTable::new(
                    d.instances(), &flips[..k].iter().map(|f| f.1).collect::<Vec<_>>()).unwrap()),
            );
            let atom = model.on_support(&d).unwrap();
            let corrupted = corrupt_distribution(&d, &model).unwrap();
            for loss in [Loss::logistic(), Loss::square(), Loss::zero_one()] {
                let clean = risk(&scores[..k], &d, &loss).unwrap();
                let corrected = corrected_risk(&scores[..k], &corrupted, &loss, &atom).unwrap();
                prop_assert!((clean - corrected).abs() < 1e-10);
            }
        }
    }
}
