use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use labelnoise::experiments::{
    isotonic_csv, load_experiment_data, run_isotonic_demo, run_noise_sweep, run_synthetic, summary_line, sweep_csv,
    synth_csv, ExperimentConfig, ExperimentKind, OutputFormat,
};
use labelnoise::oracle::run_all;
use labelnoise::Error;

/// Learning from labels corrupted by instance- and label-dependent noise.
#[derive(Debug, Parser)]
#[command(name = "labelnoise", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Recover the corrupted link on the two-Gaussian synthetic problem.
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        iterations: Option<usize>,
        /// Flip function applied to both labels, e.g. `sigmoid-abs(1)`.
        #[arg(long)]
        flip: Option<String>,
        #[arg(long)]
        train_size: Option<usize>,
        #[arg(long)]
        test_size: Option<usize>,
    },
    /// Compare ridge regression and the Isotron across noise levels.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// `digits-like`, `csv:PATH` or `idx:IMAGES,LABELS`.
        #[arg(long)]
        dataset: Option<String>,
        /// Digit pair for digit-labelled data, e.g. `6v7`.
        #[arg(long)]
        digits: Option<String>,
        /// Comma-separated noise temperatures, e.g. `1/8,1,8`.
        #[arg(long)]
        alphas: Option<String>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        lambda: Option<String>,
        #[arg(long)]
        gamma: Option<String>,
        #[arg(long)]
        variant: Option<String>,
    },
    /// Run the randomised theory checks and counterexample finders.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Trials per check.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Fit PAV and Lipschitz PAV to a noisy monotone sample.
    IsotonicDemo {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 200)]
        points: usize,
        #[arg(long, default_value_t = 2.0)]
        lipschitz: f64,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Flat `key = value` config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Parse(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn load_config(
    common: &Common,
    kind: ExperimentKind,
    overrides: &[(&str, Option<String>)],
) -> Result<ExperimentConfig, Failure> {
    let mut config = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
            ExperimentConfig::parse(&text, kind)?
        }
        None => ExperimentConfig::new(kind),
    };
    if config.kind != kind {
        return Err(Failure::Usage(format!(
            "config is for `{:?}`, not this subcommand",
            config.kind
        )));
    }
    let common_overrides = [
        ("seed", common.seed.map(|s| s.to_string())),
        ("out", common.out.as_ref().map(|p| p.display().to_string())),
        ("format", common.format.clone()),
    ];
    for (key, value) in common_overrides.iter().chain(overrides) {
        if let Some(v) = value {
            config.set(key, v)?;
        }
    }
    config.validate()?;
    Ok(config)
}

fn emit(
    config: &ExperimentConfig,
    csv: impl FnOnce() -> String,
    json: impl FnOnce() -> Result<String, Error>,
) -> Result<(), Failure> {
    let text = match config.format {
        OutputFormat::Csv => csv(),
        OutputFormat::Json => json()? + "\n",
    };
    match &config.out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Runtime(format!("cannot write {path}: {e}"))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn opt<T: ToString>(v: &Option<T>) -> Option<String> {
    v.as_ref().map(ToString::to_string)
}

/// Returns whether every check passed.
fn run(cli: Cli) -> Result<bool, Failure> {
    match cli.command {
        Command::Synth {
            common,
            iterations,
            flip,
            train_size,
            test_size,
        } => {
            let config = load_config(
                &common,
                ExperimentKind::Synthetic,
                &[
                    ("iterations", opt(&iterations)),
                    ("flip", flip),
                    ("train_size", opt(&train_size)),
                    ("test_size", opt(&test_size)),
                ],
            )?;
            let report = run_synthetic(&config)?;
            eprintln!(
                "test accuracy {:.4}, mean |u_hat - eta_bar| {:.4}",
                report.test_accuracy, report.mean_abs_link_error
            );
            emit(
                &config,
                || synth_csv(&report),
                || Ok(serde_json::to_string_pretty(&report)?),
            )?;
            Ok(true)
        }
        Command::Sweep {
            common,
            dataset,
            digits,
            alphas,
            trials,
            iterations,
            lambda,
            gamma,
            variant,
        } => {
            let config = load_config(
                &common,
                ExperimentKind::NoiseSweep,
                &[
                    ("dataset", dataset),
                    ("digits", digits),
                    ("alphas", alphas),
                    ("trials", opt(&trials)),
                    ("iterations", opt(&iterations)),
                    ("lambda", lambda),
                    ("gamma", gamma),
                    ("variant", variant),
                ],
            )?;
            let data = load_experiment_data(&config)?;
            let report = run_noise_sweep(&config, &data)?;
            for row in &report.rows {
                eprintln!("{}", summary_line(row));
            }
            emit(
                &config,
                || sweep_csv(&report),
                || Ok(serde_json::to_string_pretty(&report)?),
            )?;
            Ok(true)
        }
        Command::Verify { common, trials } => {
            let mut config = load_config(&common, ExperimentKind::Verify, &[("oracle_trials", opt(&trials))])?;
            if common.format.is_none() && common.config.is_none() {
                config.format = OutputFormat::Json;
            }
            let report = run_all(config.oracle_trials, config.seed);
            for check in &report.checks {
                eprintln!(
                    "{:<20} {} {}/{} max violation {:.3e}",
                    check.name,
                    if check.all_passed() { "PASS" } else { "FAIL" },
                    check.passed,
                    check.trials,
                    check.max_violation
                );
                if let Some(case) = &check.failure {
                    eprintln!("  replay: {}", serde_json::to_string(case).unwrap_or_default());
                }
            }
            for (name, witness) in &report.witnesses {
                eprintln!(
                    "{name:<20} {}",
                    if witness.is_some() {
                        "witness found"
                    } else {
                        "NO WITNESS"
                    }
                );
            }
            let passed = report.all_passed();
            emit(
                &config,
                || {
                    let mut out = String::from("check,trials,passed,max_violation,tightest_slack\n");
                    for c in &report.checks {
                        out += &format!(
                            "{},{},{},{:e},{:e}\n",
                            c.name, c.trials, c.passed, c.max_violation, c.tightest_slack
                        );
                    }
                    out
                },
                || Ok(serde_json::to_string_pretty(&report)?),
            )?;
            Ok(passed)
        }
        Command::IsotonicDemo {
            common,
            points,
            lipschitz,
        } => {
            let config = load_config(&common, ExperimentKind::Verify, &[])?;
            let demo = run_isotonic_demo(points, lipschitz, config.seed)?;
            eprintln!("sse: pav {:.4}, lpav {:.4}", demo.pav_sse, demo.lpav_sse);
            emit(
                &config,
                || isotonic_csv(&demo),
                || Ok(serde_json::to_string_pretty(&demo)?),
            )?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
