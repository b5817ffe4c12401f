//! The Isotron and SLIsotron learners for single-index models.
//!
//! Both alternate between fitting a monotone link to the current scores and
//! a perceptron-like step on the weights. SLIsotron constrains the link to
//! be Lipschitz.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dist::{check_dim, dot, label_to_target, norm, stream_rng, LabeledSample};
use crate::error::{Error, Result};
use crate::isotonic::{lpav, pav, IsotonicFit};
use crate::metrics::Predictor;

/// Stream used for the holdout split.
pub const HOLDOUT_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Links fitted by plain PAV.
    Isotron,
    /// Links fitted by Lipschitz-constrained PAV.
    Slisotron,
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "isotron" => Ok(Variant::Isotron),
            "slisotron" => Ok(Variant::Slisotron),
            other => Err(Error::Parse(format!("unknown Isotron variant `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub iterations: usize,
    pub variant: Variant,
    /// Lipschitz bound for SLIsotron; by default `4 / (score range)`.
    pub lipschitz: Option<f64>,
    /// Fraction of the sample held out to pick the best iterate. Zero keeps
    /// the final iterate.
    pub holdout_fraction: f64,
    pub seed: u64,
    pub normalize_to_unit_ball: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: 100,
            variant: Variant::Isotron,
            lipschitz: None,
            holdout_fraction: 0.3,
            seed: 0,
            normalize_to_unit_ball: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidInput("at least one iteration is required".into()));
        }
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return Err(Error::InvalidInput(format!(
                "holdout fraction {} is not in [0, 1)",
                self.holdout_fraction
            )));
        }
        if let Some(l) = self.lipschitz {
            if l.is_nan() || l < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "Lipschitz bound must be non-negative, got {l}"
                )));
            }
        }
        Ok(())
    }
}

/// Squared errors of the iterate after a given number of updates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub train_mse: f64,
    pub holdout_mse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsotronModel {
    /// Weights in the units of the original features.
    pub weights: Vec<f64>,
    /// Link over scores `<weights, x>`.
    pub link: IsotonicFit,
    pub diagnostics: Vec<IterationRecord>,
    /// The iteration the returned weights and link come from.
    pub selected_iteration: usize,
}

impl IsotronModel {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn score(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.weights.len(), x.len())?;
        Ok(dot(&self.weights, x))
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        Ok(self.link.eval(self.score(x)?))
    }

    /// `+1` iff the predicted probability is at least one half.
    pub fn classify(&self, x: &[f64]) -> Result<i8> {
        Ok(classify_probability(self.predict_proba(x)?))
    }
}

impl Predictor for IsotronModel {
    /// Ranks by the index `<w, x>`, which the monotone link preserves.
    fn score(&self, x: &[f64]) -> Result<f64> {
        IsotronModel::score(self, x)
    }

    fn classify(&self, x: &[f64]) -> Result<i8> {
        IsotronModel::classify(self, x)
    }

    fn squared_error(&self, x: &[f64], y: i8) -> Result<f64> {
        let r = self.predict_proba(x)? - label_to_target(y);
        Ok(r * r)
    }
}

/// Thresholds a probability at one half, breaking ties towards `+1`.
pub fn classify_probability(p: f64) -> i8 {
    if p >= 0.5 {
        1
    } else {
        -1
    }
}

pub fn predict_proba(model: &IsotronModel, x: &[f64]) -> Result<f64> {
    model.predict_proba(x)
}

pub fn classify(model: &IsotronModel, x: &[f64]) -> Result<i8> {
    model.classify(x)
}

struct LinkFitter {
    variant: Variant,
    lipschitz: Option<f64>,
}

impl LinkFitter {
    /// Fits a link to `targets` at `scores`; returns it with the fitted
    /// value at every input position.
    fn fit(&self, scores: &[f64], targets: &[f64]) -> Result<(IsotonicFit, Vec<f64>)> {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
        let sorted_scores: Vec<f64> = order.iter().map(|&i| scores[i]).collect();
        let sorted_targets: Vec<f64> = order.iter().map(|&i| targets[i]).collect();
        let fit = match self.variant {
            Variant::Isotron => pav(&sorted_scores, &sorted_targets)?,
            Variant::Slisotron => {
                let range = sorted_scores[sorted_scores.len() - 1] - sorted_scores[0];
                let l = self
                    .lipschitz
                    .unwrap_or(if range > 0.0 { 4.0 / range } else { f64::INFINITY });
                lpav(&sorted_scores, &sorted_targets, l)?
            }
        };
        let mut fitted = vec![0.0; scores.len()];
        for (pos, &i) in order.iter().enumerate() {
            fitted[i] = fit.values()[pos];
        }
        Ok((fit, fitted))
    }
}

fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>() / a.len() as f64
}

/// Trains a single-index model on `sample`.
///
/// Starts from `w = 0`. Each iteration takes the step
/// `w += (1/m) sum (y_i - u(<w, x_i>)) x_i` with labels mapped to `{0, 1}` and
/// then refits the link, so the iterate after `t` steps is a weight vector
/// together with the link fitted to it.
pub fn train(sample: &LabeledSample, config: &TrainConfig) -> Result<IsotronModel> {
    config.validate()?;
    if sample.is_empty() {
        return Err(Error::Empty);
    }
    let d = sample.dim();
    if let Some(&bad) = sample.labels.iter().find(|&&y| y != 1 && y != -1) {
        return Err(Error::InvalidLabel(bad as i64));
    }
    if let Some(row) = sample.features.iter().find(|r| r.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: row.len(),
        });
    }

    let m_total = sample.len();
    let mut order: Vec<usize> = (0..m_total).collect();
    let holdout_len = (config.holdout_fraction * m_total as f64).round() as usize;
    let holdout_len = holdout_len.min(m_total - 1);
    if holdout_len > 0 {
        order.shuffle(&mut stream_rng(config.seed, HOLDOUT_STREAM));
    }
    let (holdout_idx, train_idx) = order.split_at(holdout_len);

    let scale = if config.normalize_to_unit_ball {
        let max_norm = train_idx.iter().map(|&i| norm(&sample.features[i])).fold(0.0, f64::max);
        if max_norm > 0.0 {
            max_norm
        } else {
            1.0
        }
    } else {
        1.0
    };
    let scaled = |i: usize| -> Vec<f64> { sample.features[i].iter().map(|v| v / scale).collect() };
    let train_x: Vec<Vec<f64>> = train_idx.iter().map(|&i| scaled(i)).collect();
    let train_y: Vec<f64> = train_idx.iter().map(|&i| label_to_target(sample.labels[i])).collect();
    let holdout_x: Vec<Vec<f64>> = holdout_idx.iter().map(|&i| scaled(i)).collect();
    let holdout_y: Vec<f64> = holdout_idx.iter().map(|&i| label_to_target(sample.labels[i])).collect();

    let fitter = LinkFitter {
        variant: config.variant,
        lipschitz: config.lipschitz,
    };
    let m = train_x.len() as f64;
    let mut w = vec![0.0; d];
    let scores = |w: &[f64]| -> Vec<f64> { train_x.iter().map(|x| dot(w, x)).collect() };
    let (_, mut fitted) = fitter.fit(&scores(&w), &train_y)?;

    let mut diagnostics = Vec::with_capacity(config.iterations);
    let mut best: Option<(f64, Vec<f64>, IsotonicFit, usize)> = None;
    for t in 1..=config.iterations {
        for ((x, y), u) in train_x.iter().zip(&train_y).zip(&fitted) {
            let step = (y - u) / m;
            for (wj, xj) in w.iter_mut().zip(x) {
                *wj += step * xj;
            }
        }
        let (link, new_fitted) = fitter.fit(&scores(&w), &train_y)?;
        fitted = new_fitted;
        let train_mse = mse(&fitted, &train_y);
        let holdout_mse = if holdout_x.is_empty() {
            None
        } else {
            let predicted: Vec<f64> = holdout_x.iter().map(|x| link.eval(dot(&w, x))).collect();
            Some(mse(&predicted, &holdout_y))
        };
        diagnostics.push(IterationRecord {
            iteration: t,
            train_mse,
            holdout_mse,
        });
        let criterion = holdout_mse.unwrap_or(0.0);
        let better = match &best {
            None => true,
            Some((value, ..)) => holdout_mse.is_none() || criterion < *value,
        };
        if better {
            best = Some((criterion, w.clone(), link, t));
        }
    }

    let (_, weights, link, selected_iteration) = best.expect("at least one iteration ran");
    Ok(IsotronModel {
        weights: weights.iter().map(|v| v / scale).collect(),
        link,
        diagnostics,
        selected_iteration,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::Provenance;

    fn sample(features: Vec<Vec<f64>>, labels: Vec<i8>) -> LabeledSample {
        LabeledSample::new(features, labels, Provenance::External).unwrap()
    }

    fn single_step(holdout: f64) -> TrainConfig {
        TrainConfig {
            iterations: 1,
            holdout_fraction: holdout,
            normalize_to_unit_ball: false,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn first_step_moves_towards_label_mean_residuals() {
        let xs = vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![-1.0, 1.0], vec![2.0, 2.0]];
        let ys = vec![1, -1, -1, 1];
        let model = train(&sample(xs.clone(), ys.clone()), &single_step(0.0)).unwrap();
        let mean = 0.5;
        let mut expected = [0.0; 2];
        for (x, &y) in xs.iter().zip(&ys) {
            let r = label_to_target(y) - mean;
            expected[0] += r * x[0] / 4.0;
            expected[1] += r * x[1] / 4.0;
        }
        assert!((model.weights[0] - expected[0]).abs() < 1e-15);
        assert!((model.weights[1] - expected[1]).abs() < 1e-15);
        assert_eq!(model.selected_iteration, 1);
    }

    #[test]
    fn normalization_keeps_weights_in_original_units() {
        let xs = vec![vec![10.0, 0.0], vec![0.0, 20.0], vec![-10.0, 10.0], vec![20.0, 20.0]];
        let ys = vec![1, -1, -1, 1];
        let mut config = single_step(0.0);
        let raw = train(&sample(xs.clone(), ys.clone()), &config).unwrap();
        config.normalize_to_unit_ball = true;
        let normalized = train(&sample(xs, ys), &config).unwrap();
        // One step is linear in x, so the normalised weights shrink by the
        // squared feature scale.
        let scale: f64 = 800f64.sqrt();
        for (a, b) in raw.weights.iter().zip(&normalized.weights) {
            assert!((a / (scale * scale) - b).abs() < 1e-12);
        }
    }

    #[test]
    fn classify_thresholds_at_half() {
        assert_eq!(classify_probability(0.76), 1);
        assert_eq!(classify_probability(0.4), -1);
        assert_eq!(classify_probability(0.5), 1);
    }

    #[test]
    fn rejects_bad_input() {
        let s = sample(vec![vec![1.0]], vec![1]);
        let mut config = TrainConfig::default();
        config.iterations = 0;
        assert!(train(&s, &config).is_err());
        config.iterations = 1;
        config.holdout_fraction = 1.0;
        assert!(train(&s, &config).is_err());
        let model = train(&s, &single_step(0.0)).unwrap();
        assert!(matches!(
            model.predict_proba(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn holdout_selection_records_diagnostics() {
        let xs: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64 / 40.0 - 0.5, 1.0]).collect();
        let ys: Vec<i8> = (0..40).map(|i| if i >= 20 { 1 } else { -1 }).collect();
        let config = TrainConfig {
            iterations: 20,
            ..TrainConfig::default()
        };
        let model = train(&sample(xs, ys), &config).unwrap();
        assert_eq!(model.diagnostics.len(), 20);
        let best = model
            .diagnostics
            .iter()
            .map(|r| r.holdout_mse.unwrap())
            .fold(f64::INFINITY, f64::min);
        let chosen = model.diagnostics[model.selected_iteration - 1].holdout_mse.unwrap();
        assert_eq!(chosen, best);
    }

    #[test]
    fn slisotron_link_respects_default_bound() {
        let xs: Vec<Vec<f64>> = (0..30).map(|i| vec![(i as f64 * 0.37).sin()]).collect();
        let ys: Vec<i8> = xs.iter().map(|x| if x[0] > 0.1 { 1 } else { -1 }).collect();
        let config = TrainConfig {
            iterations: 5,
            variant: Variant::Slisotron,
            holdout_fraction: 0.0,
            ..TrainConfig::default()
        };
        let model = train(&sample(xs, ys), &config).unwrap();
        let l = model.link.lipschitz_bound().unwrap();
        let (s, v) = model.link.knots();
        for i in 1..s.len() {
            assert!(v[i] - v[i - 1] <= l * (s[i] - s[i - 1]) + 1e-9);
        }
    }

    #[test]
    fn variant_parsing() {
        assert_eq!("SLIsotron".parse::<Variant>().unwrap(), Variant::Slisotron);
        assert!("perceptron".parse::<Variant>().is_err());
    }
}
