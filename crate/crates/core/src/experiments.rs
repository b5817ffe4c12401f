//! Experiment configuration and the two learning experiments: recovering the
//! corrupted link on synthetic data, and the noise sweep comparing ridge
//! regression with the Isotron.
//!
//! Config files are flat `key = value` lines; `#` starts a comment. Keys:
//!
//! | key              | value                                             |
//! |------------------|---------------------------------------------------|
//! | `kind`           | `synthetic`, `noise-sweep` or `verify`            |
//! | `dataset`        | `digits-like`, `csv:PATH` or `idx:IMAGES,LABELS`  |
//! | `dataset_size`   | examples drawn by `digits-like`                   |
//! | `digits`         | digit pair such as `6v7` (first is positive)      |
//! | `alphas`         | comma-separated, fractions allowed (`1/8, 1, 8`)  |
//! | `trials`         | corruption trials per alpha                       |
//! | `train_fraction` | share of the filtered data used for training      |
//! | `gamma`          | margin filter threshold                           |
//! | `lambda`         | ridge penalty                                     |
//! | `iterations`     | Isotron iterations                                |
//! | `variant`        | `isotron` or `slisotron`                          |
//! | `flip`           | synthetic flip function, e.g. `sigmoid-abs(1)`    |
//! | `train_size`     | synthetic training sample size                    |
//! | `test_size`      | synthetic test sample size                        |
//! | `oracle_trials`  | trials per check for `verify`                     |
//! | `seed`           | base seed                                         |
//! | `out`            | output path                                       |
//! | `format`         | `csv` or `json`                                   |

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{margin_filter, ridge_fit, LinearModel};
use crate::data::{load_dataset, with_bias, DatasetSource, DigitPair, DigitsLike};
use crate::dist::{dot, sample_clean, stream_rng, GenerativeDistribution, LabeledSample, Link, Provenance};
use crate::error::{Error, Result};
use crate::isotonic::{lpav, pav};
use crate::isotron::{train, TrainConfig, Variant};
use crate::metrics::{accuracy, Predictor};
use crate::noise::{corrupt_sample, corrupted_link, parse_number, FlipFn, NoiseModel, Scorer};

/// Stream used for the train/test split of the sweep.
pub const SPLIT_STREAM: u64 = 3;
/// Offset separating per-alpha seed blocks in the sweep.
pub const ALPHA_SEED_STRIDE: u64 = 1_000_000;
/// Offset of the synthetic test-sample seed from the training seed.
const TEST_SEED_OFFSET: u64 = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Synthetic,
    NoiseSweep,
    Verify,
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "synthetic" | "synth" => Ok(ExperimentKind::Synthetic),
            "noise-sweep" | "sweep" => Ok(ExperimentKind::NoiseSweep),
            "verify" => Ok(ExperimentKind::Verify),
            other => Err(Error::Config(format!("unknown experiment kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Config(format!("unknown output format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetSpec {
    DigitsLike,
    File(DatasetSource),
}

impl std::str::FromStr for DatasetSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "digits-like" {
            return Ok(DatasetSpec::DigitsLike);
        }
        if let Some(path) = s.strip_prefix("csv:") {
            return Ok(DatasetSpec::File(DatasetSource::Csv { path: path.into() }));
        }
        if let Some(rest) = s.strip_prefix("idx:") {
            let (images, labels) = rest
                .split_once(',')
                .ok_or_else(|| Error::Config(format!("`{s}`: expected idx:IMAGES,LABELS")))?;
            return Ok(DatasetSpec::File(DatasetSource::Idx {
                images: images.trim().into(),
                labels: labels.trim().into(),
            }));
        }
        Err(Error::Config(format!("unknown dataset `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub dataset: DatasetSpec,
    pub dataset_size: usize,
    pub digits: Option<DigitPair>,
    pub alphas: Vec<f64>,
    pub trials: usize,
    pub train_fraction: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub iterations: usize,
    pub variant: Variant,
    pub flip: String,
    pub train_size: usize,
    pub test_size: usize,
    pub oracle_trials: usize,
    pub seed: u64,
    pub out: Option<String>,
    pub format: OutputFormat,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            dataset: DatasetSpec::DigitsLike,
            dataset_size: DigitsLike::default().examples,
            digits: None,
            alphas: vec![0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0],
            trials: 25,
            train_fraction: 0.8,
            gamma: 0.1,
            lambda: 1e-8,
            iterations: if kind == ExperimentKind::Synthetic { 1000 } else { 100 },
            variant: Variant::Isotron,
            flip: "sigmoid-abs(1)".into(),
            train_size: 5000,
            test_size: 5000,
            oracle_trials: 1000,
            seed: 0,
            out: None,
            format: OutputFormat::Csv,
        }
    }

    /// Parses a config file. A `kind` line, wherever it appears, selects
    /// the defaults the other keys override; otherwise `default_kind` does.
    pub fn parse(text: &str, default_kind: ExperimentKind) -> Result<Self> {
        let mut pairs = Vec::new();
        for (number, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", number + 1)))?;
            pairs.push((number + 1, key.trim().to_string(), value.trim().to_string()));
        }
        let kind = match pairs.iter().find(|(_, k, _)| k == "kind") {
            Some((_, _, v)) => v.parse()?,
            None => default_kind,
        };
        let mut config = Self::new(kind);
        for (number, key, value) in &pairs {
            config
                .set(key, value)
                .map_err(|e| Error::Config(format!("line {number}: {e}")))?;
        }
        config.validate()?;
        Ok(config)
    }

    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("`{key}`: `{value}` is not {what}"));
        let integer = || value.parse::<usize>().map_err(|_| bad("a non-negative integer"));
        let real = || parse_number(value).map_err(|_| bad("a number"));
        match key {
            "kind" => {
                let kind: ExperimentKind = value.parse()?;
                if kind != self.kind {
                    return Err(Error::Config(format!(
                        "`kind = {value}` conflicts with the selected experiment"
                    )));
                }
            }
            "dataset" => self.dataset = value.parse()?,
            "dataset_size" => self.dataset_size = integer()?,
            "digits" => self.digits = Some(value.parse().map_err(|_| bad("a digit pair like 6v7"))?),
            "alphas" => {
                self.alphas = value
                    .split(',')
                    .map(|v| parse_number(v).map_err(|_| bad("a list of numbers")))
                    .collect::<Result<_>>()?
            }
            "trials" => self.trials = integer()?,
            "train_fraction" => self.train_fraction = real()?,
            "gamma" => self.gamma = real()?,
            "lambda" => self.lambda = real()?,
            "iterations" => self.iterations = integer()?,
            "variant" => self.variant = value.parse().map_err(|_| bad("isotron or slisotron"))?,
            "flip" => {
                FlipFn::parse(value)?;
                self.flip = value.into();
            }
            "train_size" => self.train_size = integer()?,
            "test_size" => self.test_size = integer()?,
            "oracle_trials" => self.oracle_trials = integer()?,
            "seed" => self.seed = value.parse().map_err(|_| bad("a 64-bit seed"))?,
            "out" => self.out = Some(value.into()),
            "format" => self.format = value.parse()?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.trials == 0 || self.oracle_trials == 0 {
            return fail("trials must be at least 1".into());
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return fail(format!("train_fraction {} is not in (0, 1)", self.train_fraction));
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
            return fail("alphas must be a non-empty list of positive numbers".into());
        }
        if !(self.gamma >= 0.0) || !(self.lambda >= 0.0) {
            return fail("gamma and lambda must be non-negative".into());
        }
        if self.iterations == 0 || self.train_size == 0 || self.test_size == 0 {
            return fail("iterations and sample sizes must be at least 1".into());
        }
        Ok(())
    }

    /// SHA-256 of the settings that affect results (not the output
    /// destination), as hex.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.out = None;
        canonical.format = OutputFormat::Csv;
        let json = serde_json::to_string(&canonical).expect("config serialises");
        Sha256::digest(json.as_bytes()).iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

/// Mean and standard error `sd / sqrt(n)` with the sample standard
/// deviation; the error is zero for a single value.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn classify_all<P: Predictor + ?Sized>(model: &P, features: &[Vec<f64>]) -> Result<Vec<i8>> {
    features.iter().map(|x| model.classify(x)).collect()
}

fn isotron_config(config: &ExperimentConfig, seed: u64) -> TrainConfig {
    TrainConfig {
        iterations: config.iterations,
        variant: config.variant,
        lipschitz: None,
        holdout_fraction: 0.0,
        seed,
        normalize_to_unit_ball: true,
    }
}

// ---------------------------------------------------------------------------
// Synthetic link recovery

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkPoint {
    pub z: f64,
    pub u_hat: f64,
    pub eta_bar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthReport {
    pub seed: u64,
    pub config_hash: String,
    pub flip: String,
    pub test_accuracy: f64,
    /// Mean of `|u_hat - eta_bar|` over the dump grid.
    pub mean_abs_link_error: f64,
    pub train_flip_fraction: f64,
    pub weights: Vec<f64>,
    pub dump: Vec<LinkPoint>,
}

/// Grid of the true score `x1 + x2` over which the link is dumped.
pub const SYNTH_GRID: (f64, f64, usize) = (-4.0, 4.0, 161);

/// Trains the Isotron on a boundary-consistent corruption of the
/// two-Gaussian preset and compares the learned link with the analytic
/// corrupted class-probability.
///
/// The learned link is a function of the learned index, so it is dumped
/// along the line `x = z w* / |w*|^2`, on which the true score equals `z`.
pub fn run_synthetic(config: &ExperimentConfig) -> Result<SynthReport> {
    config.validate()?;
    let dist = GenerativeDistribution::synthetic_preset();
    let flip = FlipFn::parse(&config.flip)?;
    let noise = NoiseModel::bcn_plus(flip.clone(), flip.clone(), Scorer::Linear(dist.scorer()));
    let clean = sample_clean(&dist, config.train_size, config.seed)?;
    let corrupted = corrupt_sample(&clean, &noise, config.seed)?;
    let flipped = clean
        .labels
        .iter()
        .zip(&corrupted.labels)
        .filter(|(a, b)| a != b)
        .count();
    let model = train(&corrupted, &isotron_config(config, config.seed))?;

    let test = sample_clean(&dist, config.test_size, config.seed.wrapping_add(TEST_SEED_OFFSET))?;
    let test_accuracy = accuracy(&classify_all(&model, &test.features)?, &test.labels);

    let w_star = dist.weights();
    let scale = dot(w_star, w_star);
    let (lo, hi, n) = SYNTH_GRID;
    let dump = (0..n)
        .map(|i| {
            let z = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            let x: Vec<f64> = w_star.iter().map(|w| z * w / scale).collect();
            Ok(LinkPoint {
                z,
                u_hat: model.predict_proba(&x)?,
                eta_bar: corrupted_link(&Link::Step, &flip, &flip, z),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mean_abs_link_error = dump.iter().map(|p| (p.u_hat - p.eta_bar).abs()).sum::<f64>() / n as f64;

    Ok(SynthReport {
        seed: config.seed,
        config_hash: config.hash(),
        flip: config.flip.clone(),
        test_accuracy,
        mean_abs_link_error,
        train_flip_fraction: flipped as f64 / clean.len() as f64,
        weights: model.weights,
        dump,
    })
}

pub fn synth_csv(report: &SynthReport) -> String {
    let mut out = String::from("z,u_hat,eta_bar\n");
    for p in &report.dump {
        let _ = writeln!(out, "{:.4},{:.4},{:.4}", p.z, p.u_hat, p.eta_bar);
    }
    out
}

// ---------------------------------------------------------------------------
// Noise sweep

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialRecord {
    pub alpha_index: usize,
    pub alpha: f64,
    pub trial: usize,
    pub seed: u64,
    /// Percentage of training labels flipped.
    pub flip_percent: f64,
    /// Mean flip probability over the training set, in percent.
    pub expected_flip_percent: f64,
    pub ridge_accuracy: f64,
    pub isotron_accuracy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub flip_mean: f64,
    pub flip_se: f64,
    pub ridge_mean: f64,
    pub ridge_se: f64,
    pub isotron_mean: f64,
    pub isotron_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub seed: u64,
    pub config_hash: String,
    pub dataset: String,
    pub examples: usize,
    pub kept_after_filter: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub rows: Vec<SweepRow>,
    pub trials: Vec<TrialRecord>,
}

/// Seed of trial `trial` at alpha position `alpha_index`.
pub fn sweep_trial_seed(base: u64, alpha_index: usize, trial: usize) -> u64 {
    base.wrapping_add(trial as u64)
        .wrapping_add(ALPHA_SEED_STRIDE.wrapping_mul(alpha_index as u64))
}

pub fn describe_dataset(config: &ExperimentConfig) -> String {
    match &config.dataset {
        DatasetSpec::DigitsLike => format!("digits-like({})", config.dataset_size),
        DatasetSpec::File(DatasetSource::Csv { path }) => format!("csv:{path}"),
        DatasetSpec::File(DatasetSource::Idx { images, labels }) => format!("idx:{images},{labels}"),
    }
}

/// Loads or generates the sweep dataset.
pub fn load_experiment_data(config: &ExperimentConfig) -> Result<LabeledSample> {
    match &config.dataset {
        DatasetSpec::DigitsLike => DigitsLike {
            examples: config.dataset_size,
            ..DigitsLike::default()
        }
        .generate(),
        DatasetSpec::File(source) => load_dataset(source, config.digits),
    }
}

/// Filters `data` to a margin-separable subset, splits it once, and for each
/// alpha and trial corrupts the training labels with the flip probability
/// `1 / (1 + exp(|<w*, x>| / alpha))`, where `w*` is the unit least-squares
/// hyperplane (with a bias feature). Ridge regression and the Isotron are
/// trained on the corrupted labels and scored on clean test labels.
pub fn run_noise_sweep(config: &ExperimentConfig, data: &LabeledSample) -> Result<SweepReport> {
    config.validate()?;
    let features = with_bias(&data.features);
    let filtered = margin_filter(&features, &data.labels, config.gamma)?;

    let mut order: Vec<usize> = (0..filtered.labels.len()).collect();
    order.shuffle(&mut stream_rng(config.seed, SPLIT_STREAM));
    let train_len = ((config.train_fraction * order.len() as f64).round() as usize).clamp(1, order.len() - 1);
    let (train_idx, test_idx) = order.split_at(train_len);
    let pick = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<i8>) {
        (
            idx.iter().map(|&i| filtered.features[i].clone()).collect(),
            idx.iter().map(|&i| filtered.labels[i]).collect(),
        )
    };
    let (train_x, train_y) = pick(train_idx);
    let (test_x, test_y) = pick(test_idx);
    if !train_y.contains(&1) || !train_y.contains(&-1) {
        return Err(Error::FilterEmpty("training split lost a class".into()));
    }
    let clean_train = LabeledSample::new(train_x.clone(), train_y, Provenance::External)?;
    let hyperplane = filtered.hyperplane.clone();
    let margins: Vec<f64> = train_x.iter().map(|x| dot(&hyperplane, x).abs()).collect();

    let jobs: Vec<(usize, usize)> = (0..config.alphas.len())
        .flat_map(|a| (0..config.trials).map(move |t| (a, t)))
        .collect();
    let trials = jobs
        .par_iter()
        .map(|&(alpha_index, trial)| -> Result<TrialRecord> {
            let alpha = config.alphas[alpha_index];
            let seed = sweep_trial_seed(config.seed, alpha_index, trial);
            let flip = FlipFn::SigmoidAbsTempered { temperature: alpha };
            let noise = NoiseModel::sin(flip.clone(), flip.clone(), hyperplane.clone());
            let noisy = corrupt_sample(&clean_train, &noise, seed)?;
            let flipped = clean_train
                .labels
                .iter()
                .zip(&noisy.labels)
                .filter(|(a, b)| a != b)
                .count();
            let expected = margins.iter().map(|&m| flip.eval(m)).sum::<f64>() / margins.len() as f64;

            let ridge = LinearModel {
                weights: ridge_fit(&noisy.features, &noisy.labels, config.lambda)?,
            };
            let isotron = train(&noisy, &isotron_config(config, seed))?;
            Ok(TrialRecord {
                alpha_index,
                alpha,
                trial,
                seed,
                flip_percent: 100.0 * flipped as f64 / noisy.len() as f64,
                expected_flip_percent: 100.0 * expected,
                ridge_accuracy: accuracy(&classify_all(&ridge, &test_x)?, &test_y),
                isotron_accuracy: accuracy(&classify_all(&isotron, &test_x)?, &test_y),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let rows = config
        .alphas
        .iter()
        .enumerate()
        .map(|(a, &alpha)| {
            let of = |f: fn(&TrialRecord) -> f64| -> (f64, f64) {
                let values: Vec<f64> = trials.iter().filter(|r| r.alpha_index == a).map(f).collect();
                mean_and_se(&values)
            };
            let (flip_mean, flip_se) = of(|r| r.flip_percent);
            let (ridge_mean, ridge_se) = of(|r| r.ridge_accuracy);
            let (isotron_mean, isotron_se) = of(|r| r.isotron_accuracy);
            SweepRow {
                alpha,
                flip_mean,
                flip_se,
                ridge_mean,
                ridge_se,
                isotron_mean,
                isotron_se,
            }
        })
        .collect();

    Ok(SweepReport {
        seed: config.seed,
        config_hash: config.hash(),
        dataset: describe_dataset(config),
        examples: data.len(),
        kept_after_filter: filtered.kept.len(),
        train_size: train_x.len(),
        test_size: test_x.len(),
        rows,
        trials,
    })
}

pub fn sweep_csv(report: &SweepReport) -> String {
    let mut out = String::from("alpha,flip_mean,flip_se,ridge_mean,ridge_se,isotron_mean,isotron_se\n");
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4}",
            r.alpha, r.flip_mean, r.flip_se, r.ridge_mean, r.ridge_se, r.isotron_mean, r.isotron_se
        );
    }
    out
}

/// One human-readable line per alpha.
pub fn summary_line(row: &SweepRow) -> String {
    format!(
        "alpha {:<6} flips {:6.2}% +- {:.2}  ridge {:.4} +- {:.4}  isotron {:.4} +- {:.4}",
        row.alpha, row.flip_mean, row.flip_se, row.ridge_mean, row.ridge_se, row.isotron_mean, row.isotron_se
    )
}

// ---------------------------------------------------------------------------
// Isotonic regression demo

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IsotonicPoint {
    pub x: f64,
    pub y: f64,
    pub pav: f64,
    pub lpav: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsotonicDemo {
    pub seed: u64,
    pub lipschitz: f64,
    pub pav_sse: f64,
    pub lpav_sse: f64,
    pub points: Vec<IsotonicPoint>,
}

/// Fits PAV and Lipschitz PAV to binary draws whose probability follows a
/// logistic curve on `[0, 1]`.
pub fn run_isotonic_demo(points: usize, lipschitz: f64, seed: u64) -> Result<IsotonicDemo> {
    use rand::Rng;

    if points == 0 {
        return Err(Error::InvalidInput("at least one point is required".into()));
    }
    let mut rng = stream_rng(seed, crate::dist::SAMPLING_STREAM);
    let mut xs: Vec<f64> = (0..points).map(|_| rng.random()).collect();
    xs.sort_by(f64::total_cmp);
    let ys: Vec<f64> = xs
        .iter()
        .map(|&x| {
            let p = crate::func::sigmoid(8.0 * (x - 0.5));
            if rng.random::<f64>() < p {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let plain = pav(&xs, &ys)?;
    let smooth = lpav(&xs, &ys, lipschitz)?;
    Ok(IsotonicDemo {
        seed,
        lipschitz,
        pav_sse: plain.sse(&ys),
        lpav_sse: smooth.sse(&ys),
        points: (0..points)
            .map(|i| IsotonicPoint {
                x: xs[i],
                y: ys[i],
                pav: plain.values()[i],
                lpav: smooth.values()[i],
            })
            .collect(),
    })
}

pub fn isotonic_csv(demo: &IsotonicDemo) -> String {
    let mut out = String::from("x,y,pav,lpav\n");
    for p in &demo.points {
        let _ = writeln!(out, "{:.4},{:.4},{:.4},{:.4}", p.x, p.y, p.pav, p.lpav);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_grammar() {
        let text = "# sweep\nkind = noise-sweep\nalphas = 1/8, 1, 8  # three\ntrials=3\nseed = 9\n";
        let c = ExperimentConfig::parse(text, ExperimentKind::Synthetic).unwrap();
        assert_eq!(c.kind, ExperimentKind::NoiseSweep);
        assert_eq!(c.alphas, vec![0.125, 1.0, 8.0]);
        assert_eq!((c.trials, c.seed, c.iterations), (3, 9, 100));
        assert!(ExperimentConfig::parse("nonsense", ExperimentKind::Verify).is_err());
        assert!(ExperimentConfig::parse("colour = red", ExperimentKind::Verify).is_err());
        assert!(ExperimentConfig::parse("trials = 0", ExperimentKind::Verify).is_err());
        assert!(ExperimentConfig::parse("train_fraction = 1", ExperimentKind::Verify).is_err());
        assert!(ExperimentConfig::parse("alphas = 1, -2", ExperimentKind::Verify).is_err());
    }

    #[test]
    fn dataset_specs() {
        assert_eq!("digits-like".parse::<DatasetSpec>().unwrap(), DatasetSpec::DigitsLike);
        assert_eq!(
            "idx:a.idx, b.idx".parse::<DatasetSpec>().unwrap(),
            DatasetSpec::File(DatasetSource::Idx {
                images: "a.idx".into(),
                labels: "b.idx".into()
            })
        );
        assert!("idx:a.idx".parse::<DatasetSpec>().is_err());
    }

    #[test]
    fn hash_ignores_output_destination() {
        let mut a = ExperimentConfig::new(ExperimentKind::NoiseSweep);
        let h = a.hash();
        assert_eq!(h.len(), 64);
        a.out = Some("x.csv".into());
        a.format = OutputFormat::Json;
        assert_eq!(a.hash(), h);
        a.seed = 1;
        assert_ne!(a.hash(), h);
    }

    #[test]
    fn standard_error_uses_sample_deviation() {
        let (m, se) = mean_and_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((se - sd / 2.0).abs() < 1e-15);
        assert_eq!(mean_and_se(&[0.7]), (0.7, 0.0));
    }

    #[test]
    fn trial_seeds_are_stable_when_alphas_are_added() {
        assert_eq!(sweep_trial_seed(5, 0, 3), 8);
        assert_eq!(sweep_trial_seed(5, 2, 3), 2_000_008);
    }

    #[test]
    fn small_sweep_runs() {
        let mut config = ExperimentConfig::new(ExperimentKind::NoiseSweep);
        config.alphas = vec![0.125, 8.0];
        config.trials = 2;
        config.dataset_size = 300;
        config.iterations = 10;
        let data = load_experiment_data(&config).unwrap();
        let report = run_noise_sweep(&config, &data).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert_eq!(report.trials.len(), 4);
        assert!(report.rows[0].flip_mean < report.rows[1].flip_mean);
        let csv = sweep_csv(&report);
        assert!(csv.starts_with("alpha,flip_mean,flip_se,ridge_mean,ridge_se,isotron_mean,isotron_se\n0.1250,"));
    }

    #[test]
    fn isotonic_demo_orders_fits() {
        let demo = run_isotonic_demo(50, 2.0, 1).unwrap();
        assert!(demo.pav_sse <= demo.lpav_sse + 1e-12);
        assert!(isotonic_csv(&demo).starts_with("x,y,pav,lpav\n"));
    }
}
