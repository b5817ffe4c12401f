//! Learning from binary labels corrupted by instance- and label-dependent
//! noise: noise models, isotonic regression, the Isotron family of
//! single-index learners, risk and ranking metrics, and numerical checks of
//! the theory linking clean and corrupted problems.

pub mod baselines;
pub mod data;
pub mod dist;
pub mod error;
pub mod experiments;
pub mod func;
pub mod isotonic;
pub mod isotron;
pub mod metrics;
pub mod noise;
pub mod oracle;

pub use error::{Error, Result};
