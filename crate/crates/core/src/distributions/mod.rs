//! Distribution families with exact tails, quantiles and samplers.
//!
//! Every family exposes `S(x) = P(X > x)` in closed form (or as a convergent
//! series), a generalized inverse, plain sampling, and a direct O(1) draw of
//! the maximum of `n` iid values through `S(max) = 1 - U^(1/n)`.

mod atomic;
mod normal;
mod pareto;
mod poisson;
mod stretched;

use serde::{Deserialize, Serialize};

pub use atomic::{build_atom_table, AtomTable, MAX_LOG2_ATOM};
pub use normal::StdNormal;
pub use pareto::ParetoLog;
pub use poisson::Poisson;
pub use stretched::StretchedDoubleExp;

use crate::error::{ensure_finite, Error, Result};
use crate::rng::RandomStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    ParetoLog,
    StdNormal,
    Poisson,
    StretchedDoubleExp,
    AtomicOscillating,
}

/// Scale in which sampled values are reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Natural,
    Log2Magnitude,
}

/// A distribution together with its tail parameters.
///
/// `theta` is the moment power, `rho1`/`rho2` the lim and liminf tail
/// exponents. They coincide except for [`Family::AtomicOscillating`].
/// Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub enum TailModel {
    ParetoLog(ParetoLog),
    StdNormal(StdNormal),
    Poisson(Poisson),
    StretchedDoubleExp(StretchedDoubleExp),
    AtomicOscillating(AtomTable),
}

/// JSON form of a model, e.g. `{"family": "pareto_log", "theta": 2.0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    ParetoLog {
        theta: f64,
        #[serde(default)]
        tau: f64,
        #[serde(default = "one")]
        c: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x0: Option<f64>,
    },
    StdNormal {},
    Poisson {
        lambda: f64,
    },
    StretchedDoubleExp {
        zeta: f64,
        gamma: f64,
    },
    AtomicOscillating {
        rho1: f64,
        rho2: f64,
        atom_count: usize,
    },
}

fn one() -> f64 {
    1.0
}

impl ModelSpec {
    pub fn build(&self) -> Result<TailModel> {
        TailModel::from_spec(self)
    }

    /// Parses a model spec from JSON, reporting the offending field path.
    pub fn from_json(text: &str) -> Result<Self> {
        crate::json::from_str(text)
    }
}

impl TailModel {
    pub fn pareto_log(theta: f64, tau: f64, c: f64) -> Result<Self> {
        Ok(Self::ParetoLog(ParetoLog::new(theta, tau, c, None)?))
    }

    pub fn std_normal() -> Self {
        Self::StdNormal(StdNormal)
    }

    pub fn poisson(lambda: f64) -> Result<Self> {
        Ok(Self::Poisson(Poisson::new(lambda)?))
    }

    pub fn stretched_double_exp(zeta: f64, gamma: f64) -> Result<Self> {
        Ok(Self::StretchedDoubleExp(StretchedDoubleExp::new(zeta, gamma)?))
    }

    pub fn atomic_oscillating(rho1: f64, rho2: f64, atom_count: usize) -> Result<Self> {
        Ok(Self::AtomicOscillating(build_atom_table(rho1, rho2, atom_count)?))
    }

    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        match *spec {
            ModelSpec::ParetoLog { theta, tau, c, x0 } => Ok(Self::ParetoLog(ParetoLog::new(theta, tau, c, x0)?)),
            ModelSpec::StdNormal {} => Ok(Self::std_normal()),
            ModelSpec::Poisson { lambda } => Self::poisson(lambda),
            ModelSpec::StretchedDoubleExp { zeta, gamma } => Self::stretched_double_exp(zeta, gamma),
            ModelSpec::AtomicOscillating { rho1, rho2, atom_count } => Self::atomic_oscillating(rho1, rho2, atom_count),
        }
    }

    pub fn spec(&self) -> ModelSpec {
        match self {
            Self::ParetoLog(m) => ModelSpec::ParetoLog {
                theta: m.theta(),
                tau: m.tau(),
                c: m.c(),
                x0: Some(m.x0()),
            },
            Self::StdNormal(_) => ModelSpec::StdNormal {},
            Self::Poisson(m) => ModelSpec::Poisson { lambda: m.lambda() },
            Self::StretchedDoubleExp(m) => ModelSpec::StretchedDoubleExp {
                zeta: m.zeta(),
                gamma: m.gamma(),
            },
            Self::AtomicOscillating(t) => ModelSpec::AtomicOscillating {
                rho1: t.rho1,
                rho2: t.rho2,
                atom_count: t.len(),
            },
        }
    }

    pub fn family(&self) -> Family {
        match self {
            Self::ParetoLog(_) => Family::ParetoLog,
            Self::StdNormal(_) => Family::StdNormal,
            Self::Poisson(_) => Family::Poisson,
            Self::StretchedDoubleExp(_) => Family::StretchedDoubleExp,
            Self::AtomicOscillating(_) => Family::AtomicOscillating,
        }
    }

    pub fn domain(&self) -> Domain {
        match self {
            Self::AtomicOscillating(_) => Domain::Log2Magnitude,
            _ => Domain::Natural,
        }
    }

    /// Moment power `sup{r : E|X|^r < inf}`.
    pub fn theta(&self) -> f64 {
        match self {
            Self::ParetoLog(m) => m.theta(),
            Self::AtomicOscillating(t) => t.rho1,
            _ => f64::INFINITY,
        }
    }

    pub fn rho1(&self) -> f64 {
        self.theta()
    }

    pub fn rho2(&self) -> f64 {
        match self {
            Self::AtomicOscillating(t) => t.rho2,
            _ => self.theta(),
        }
    }

    /// Log-factor exponent of the tail, where the family has one.
    pub fn tau(&self) -> Option<f64> {
        match self {
            Self::ParetoLog(m) => Some(m.tau()),
            _ => None,
        }
    }

    /// Smallest point of the exact tail formula (support start otherwise).
    pub fn x0(&self) -> f64 {
        match self {
            Self::ParetoLog(m) => m.x0(),
            Self::AtomicOscillating(t) => t.log2_atoms[0].exp2(),
            Self::StdNormal(_) => f64::NEG_INFINITY,
            _ => 0.0,
        }
    }

    /// `P(X > x)`. For `ParetoLog`, `x` must be at least `x0`.
    pub fn survival(&self, x: f64) -> Result<f64> {
        ensure_finite("x", x)?;
        match self {
            Self::ParetoLog(m) => m.survival(x),
            _ => Ok(self.tail(x)),
        }
    }

    /// `P(X > x)` on the whole real line.
    pub fn tail(&self, x: f64) -> f64 {
        match self {
            Self::ParetoLog(m) => m.tail(x),
            Self::StdNormal(m) => m.tail(x),
            Self::Poisson(m) => m.tail(x),
            Self::StretchedDoubleExp(m) => m.tail(x),
            Self::AtomicOscillating(t) => t.tail(x),
        }
    }

    /// Smallest `x` with `S(x) <= u`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        check_level(u)?;
        Ok(match self {
            Self::ParetoLog(m) => m.quantile(u),
            Self::StdNormal(m) => m.quantile(u),
            Self::Poisson(m) => m.quantile(u) as f64,
            Self::StretchedDoubleExp(m) => m.quantile(u),
            Self::AtomicOscillating(t) => {
                let x = t.quantile_log2(u).exp2();
                if !x.is_finite() {
                    return Err(Error::Overflow(format!(
                        "atom 2^{} is not representable; use the log2 quantile",
                        t.quantile_log2(u)
                    )));
                }
                x
            }
        })
    }

    /// `log2` of the quantile; exact for the atomic family at any depth.
    pub fn quantile_log2(&self, u: f64) -> Result<f64> {
        check_level(u)?;
        match self {
            Self::AtomicOscillating(t) => Ok(t.quantile_log2(u)),
            Self::ParetoLog(m) => Ok(m.log_quantile(u) / std::f64::consts::LN_2),
            _ => Ok(self.quantile(u)?.log2()),
        }
    }

    /// `(1 - S(x))^n`, the exact law of the maximum of `n` draws.
    pub fn max_cdf(&self, n: u64, x: f64) -> f64 {
        max_cdf_from_tail(self.tail(x), n)
    }

    /// `n` iid draws. Atomic values are returned as `log2 |X|`.
    pub fn sample(&self, stream: &mut RandomStream, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.draw(stream)).collect()
    }

    fn draw(&self, stream: &mut RandomStream) -> f64 {
        match self {
            Self::ParetoLog(m) => m.draw(stream),
            Self::StdNormal(m) => m.draw(stream),
            Self::Poisson(m) => m.draw(stream),
            Self::StretchedDoubleExp(m) => m.draw(stream),
            Self::AtomicOscillating(t) => t.draw_log2(stream),
        }
    }

    /// One draw distributed as the maximum of `n` iid values, in O(1).
    /// Atomic values are returned as `log2`.
    pub fn sample_maximum(&self, stream: &mut RandomStream, n: u64) -> Result<f64> {
        if n == 0 {
            return Err(Error::domain("sample size must be at least 1"));
        }
        Ok(match self {
            Self::ParetoLog(m) => m.draw_log_max(stream, n).exp(),
            Self::StdNormal(m) => m.draw_max(stream, n),
            Self::Poisson(m) => m.draw_max(stream, n),
            Self::StretchedDoubleExp(m) => m.draw_max(stream, n),
            Self::AtomicOscillating(t) => t.draw_log2_max(stream, n),
        })
    }

    /// Natural log of a direct maximum draw; `-inf` when the maximum is not
    /// positive. Never overflows for the power-law families.
    pub fn sample_log_maximum(&self, stream: &mut RandomStream, n: u64) -> Result<f64> {
        if n == 0 {
            return Err(Error::domain("sample size must be at least 1"));
        }
        Ok(match self {
            Self::ParetoLog(m) => m.draw_log_max(stream, n),
            Self::AtomicOscillating(t) => t.draw_log2_max(stream, n) * std::f64::consts::LN_2,
            _ => {
                let x = self.sample_maximum(stream, n)?;
                if x > 0.0 {
                    x.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
        })
    }
}

fn check_level(u: f64) -> Result<()> {
    if u > 0.0 && u < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("probability level must lie in (0, 1), got {u}")))
    }
}

pub(crate) fn max_cdf_from_tail(s: f64, n: u64) -> f64 {
    if s >= 1.0 {
        return 0.0;
    }
    (n as f64 * (-s).ln_1p()).exp()
}

/// Survival level `1 - v^(1/n)` of the maximum, given a uniform `v`.
pub(crate) fn max_survival_level(v: f64, n: u64) -> f64 {
    -(v.ln() / n as f64).exp_m1()
}

/// Solves `g(y) = target` for `y >= lo`, where `g` is decreasing on
/// `[lo, inf)` and `g(lo) > target`. Returns the end of the final bracket
/// where `g <= target`.
pub(crate) fn bisect_decreasing(g: impl Fn(f64) -> f64, lo: f64, target: f64) -> f64 {
    let mut lo = lo;
    let mut hi = if lo > 0.0 { 2.0 * lo } else { lo + 1.0 };
    while g(hi) > target {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests;
