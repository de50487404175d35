//! One-sided test of `H0: theta <= theta0` against `H1: theta > theta0`
//! using the observed estimate `theta1`.
//!
//! The composite null is evaluated at its least favorable point
//! `theta = theta0`. The asymptotic p-value drops the `o(1)` corrections of
//! the exponent; [`p_value_exact_boundary`] gives the finite-n value for the
//! exact-tail family.

use serde::Serialize;

use crate::distributions::TailModel;
use crate::error::{ensure_finite, Error, Result};

/// Relative tolerance below which `theta1` and `theta0` count as tied.
pub const DEFAULT_TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Above,
    Below,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PValueKind {
    /// Leading-order asymptotic formula.
    Asymptotic,
    /// Limit of the tie case, from supplied tail constants.
    BoundaryLimit,
    /// Finite-n value from an exact tail.
    Exact,
    /// Tie case without tail constants: no number can be given.
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    RejectH0,
    FailToReject,
}

/// Tail constants `(c, tau)` of `P(|X| > x) ~ c (log x)^tau / x^theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailConstants {
    pub c: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PValue {
    pub branch: Branch,
    pub kind: PValueKind,
    /// `None` exactly when `kind` is `Indeterminate`.
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub n: u64,
    pub theta0: f64,
    pub theta1_observed: f64,
    pub branch: Branch,
    pub p_value: Option<f64>,
    pub p_value_kind: PValueKind,
    pub alpha: f64,
    pub decision: Option<Decision>,
}

pub fn p_value_asymptotic(
    n: u64,
    theta0: f64,
    theta1: f64,
    tie_tol: f64,
    constants: Option<TailConstants>,
) -> Result<PValue> {
    if n < 3 {
        return Err(Error::domain(format!("n must be at least 3, got {n}")));
    }
    for (name, v) in [("theta0", theta0), ("theta1", theta1)] {
        ensure_finite(name, v)?;
        if v <= 0.0 {
            return Err(Error::domain(format!("{name} must be positive, got {v}")));
        }
    }
    if tie_tol.is_nan() || tie_tol < 0.0 {
        return Err(Error::domain(format!(
            "tie tolerance must be nonnegative, got {tie_tol}"
        )));
    }
    let ln_n = (n as f64).ln();
    if (theta1 - theta0).abs() <= tie_tol * theta0 {
        return Ok(match constants {
            None => PValue {
                branch: Branch::Boundary,
                kind: PValueKind::Indeterminate,
                value: None,
            },
            Some(TailConstants { c, tau }) => PValue {
                branch: Branch::Boundary,
                kind: PValueKind::BoundaryLimit,
                value: Some(if tau > 0.0 {
                    0.0
                } else if tau == 0.0 {
                    (-c).exp()
                } else {
                    1.0
                }),
            },
        });
    }
    let (branch, value) = if theta1 > theta0 {
        // exp(-n^((theta1 - theta0) / theta1))
        (Branch::Above, (-((theta1 - theta0) / theta1 * ln_n).exp()).exp())
    } else {
        // 1 - n^(-(theta0 - theta1) / theta1)
        (Branch::Below, -(-(theta0 - theta1) / theta1 * ln_n).exp_m1())
    };
    Ok(PValue {
        branch,
        kind: PValueKind::Asymptotic,
        value: Some(value),
    })
}

/// `P(max |X_k| < n^(1/theta0))` under an exact `ParetoLog` tail with
/// `theta = theta0`.
pub fn p_value_exact_boundary(model: &TailModel, n: u64, theta0: f64) -> Result<f64> {
    let TailModel::ParetoLog(m) = model else {
        return Err(Error::domain(format!(
            "exact boundary p-value needs a pareto_log model, got {:?}",
            model.family()
        )));
    };
    if (m.theta() - theta0).abs() > 1e-12 * theta0 {
        return Err(Error::domain(format!(
            "model theta = {} does not match theta0 = {theta0}",
            m.theta()
        )));
    }
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    let level = ((n as f64).ln() / theta0).exp();
    if level < m.x0() {
        return Err(Error::domain(format!(
            "n^(1/theta0) = {level} lies below the tail threshold {}",
            m.x0()
        )));
    }
    let s = m.survival(level)?;
    Ok((n as f64 * (-s).ln_1p()).exp())
}

/// Rejects `H0` iff `p <= alpha`.
pub fn decide(p: f64, alpha: f64) -> Decision {
    if p <= alpha {
        Decision::RejectH0
    } else {
        Decision::FailToReject
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::domain(format!("alpha must lie in [0, 1], got {alpha}")))
    }
}

/// Full test from an observed estimate.
pub fn run_test(
    n: u64,
    theta1_observed: f64,
    theta0: f64,
    alpha: f64,
    constants: Option<TailConstants>,
) -> Result<TestReport> {
    check_alpha(alpha)?;
    let p = p_value_asymptotic(n, theta0, theta1_observed, DEFAULT_TIE_TOLERANCE, constants)?;
    Ok(TestReport {
        n,
        theta0,
        theta1_observed,
        branch: p.branch,
        p_value: p.value,
        p_value_kind: p.kind,
        alpha,
        decision: p.value.map(|v| decide(v, alpha)),
    })
}
