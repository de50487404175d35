//! Estimation of the power of a regularly varying tail from the sample
//! maximum, `theta_hat = log n / log max |X_k|`, with exact finite-n laws,
//! asymptotic limits, a hypothesis test and a deterministic Monte Carlo
//! harness.

pub mod acceptance;
pub mod distributions;
pub mod error;
pub mod estimator;
pub mod hypothesis;
pub mod json;
pub mod limits;
pub mod montecarlo;
pub mod rng;

pub use distributions::{AtomTable, Domain, Family, ModelSpec, TailModel};
pub use error::{Error, Result};
pub use estimator::{safe_log, theta_hat, theta_hat_from_log_max, trace, EstimateTrace, LogBase};
pub use hypothesis::{Decision, TestReport};
pub use limits::LimitLaw;
pub use montecarlo::{run_experiment, ExperimentKind, ExperimentPlan, ExperimentReport};
pub use rng::{RandomStream, DEFAULT_SEED};
