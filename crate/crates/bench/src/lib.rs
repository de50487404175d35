//! Shared fixtures for the benchmarks.

use mpower::{ExperimentKind, ExperimentPlan, ModelSpec, RandomStream, TailModel};

pub fn pareto_model() -> TailModel {
    TailModel::pareto_log(1.5, 1.0, 1.0).expect("valid parameters")
}

/// `n` draws from [`pareto_model`] with a fixed seed.
pub fn pareto_sample(n: usize) -> Vec<f64> {
    pareto_model().sample(&mut RandomStream::new(1), n)
}

pub fn consistency_plan(replicates: usize) -> ExperimentPlan {
    ExperimentPlan::new(
        ModelSpec::ParetoLog {
            theta: 2.0,
            tau: 0.0,
            c: 1.0,
            x0: None,
        },
        vec![1_000, 1_000_000],
        replicates,
        ExperimentKind::Consistency {},
    )
}
