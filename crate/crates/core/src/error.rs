use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error(
        "noise not admissible{}: rho_pos + rho_neg = {rho_pos} + {rho_neg} exceeds 1 - 1e-9",
        instance_suffix(.instance)
    )]
    Inadmissible {
        instance: Option<usize>,
        rho_pos: f64,
        rho_neg: f64,
    },

    #[error("invalid noise model: {0}")]
    InvalidNoiseModel(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("scores are not sorted: position {0} is smaller than its predecessor")]
    UnsortedScores(usize),

    #[error("empty input")]
    Empty,

    #[error("labels must be -1 or +1, found {0}")]
    InvalidLabel(i64),

    #[error("AUC is undefined: sample contains a single class")]
    SingleClass,

    #[error("linear system is singular; use a positive regularisation strength")]
    Singular,

    #[error("loss `{0}` has no closed-form Bayes risk; supply one")]
    UnsupportedLoss(String),

    #[error("margin filter: {0}")]
    FilterEmpty(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn instance_suffix(instance: &Option<usize>) -> String {
    match instance {
        Some(i) => format!(" at instance {i}"),
        None => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;
