use serde::{Deserialize, Serialize};

use crate::distributions::ModelSpec;
use crate::error::{Error, Result};
use crate::rng::DEFAULT_SEED;

/// Version tag carried by every plan and report.
pub const SCHEMA: &str = "mpower/1";

/// Smallest replicate count for experiments that report interval estimates.
pub const MIN_INTERVAL_REPLICATES: usize = 100;

/// How each replicate's maximum is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// One O(1) draw from the law of the maximum.
    DirectMax,
    /// `n` plain draws reduced to their maximum.
    Plain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExperimentKind {
    Consistency {},
    DeviationLower {
        s: f64,
    },
    DeviationUpper {
        t: f64,
    },
    LimitLaw {
        #[serde(default = "default_x_grid")]
        x_grid: Vec<f64>,
    },
    Stability {},
    Oscillation {},
}

/// `-2.0, -1.9, ..., 3.0`.
pub fn default_x_grid() -> Vec<f64> {
    (0..=50).map(|k| -2.0 + k as f64 / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub schema: String,
    pub model: ModelSpec,
    pub n_grid: Vec<u64>,
    pub replicates: usize,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    /// Defaults to plain sampling for normal and Poisson stability runs and
    /// direct maxima everywhere else.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<Sampling>,
    pub experiment: ExperimentKind,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

impl ExperimentPlan {
    pub fn new(model: ModelSpec, n_grid: Vec<u64>, replicates: usize, experiment: ExperimentKind) -> Self {
        Self {
            schema: SCHEMA.to_string(),
            model,
            n_grid,
            replicates,
            master_seed: DEFAULT_SEED,
            sampling: None,
            experiment,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn with_sampling(mut self, sampling: Sampling) -> Self {
        self.sampling = Some(sampling);
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let plan: Self = crate::json::from_str(text)?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        let schema_err = |path: &str, message: String| Error::Schema {
            path: path.to_string(),
            message,
        };
        if self.schema != SCHEMA {
            return Err(schema_err(
                "schema",
                format!("expected \"{SCHEMA}\", got \"{}\"", self.schema),
            ));
        }
        if self.n_grid.is_empty() {
            return Err(schema_err("n_grid", "must not be empty".into()));
        }
        if self.n_grid[0] == 0 {
            return Err(schema_err("n_grid[0]", "sample sizes must be at least 1".into()));
        }
        if let Some(i) = self.n_grid.windows(2).position(|w| w[0] >= w[1]) {
            return Err(schema_err(
                &format!("n_grid[{}]", i + 1),
                "grid must be strictly increasing".into(),
            ));
        }
        if self.replicates == 0 {
            return Err(schema_err("replicates", "must be at least 1".into()));
        }
        let needs_interval = matches!(
            self.experiment,
            ExperimentKind::DeviationLower { .. } | ExperimentKind::DeviationUpper { .. }
        );
        if needs_interval && self.replicates < MIN_INTERVAL_REPLICATES {
            return Err(schema_err(
                "replicates",
                format!("probability estimates need at least {MIN_INTERVAL_REPLICATES} replicates"),
            ));
        }
        Ok(())
    }
}
