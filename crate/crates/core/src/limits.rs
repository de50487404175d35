//! Closed-form asymptotics: large-deviation exponents of the estimator and
//! of the normalized log-maximum, Gumbel limit laws, and maxima norming.

use serde::Serialize;

use crate::distributions::TailModel;
use crate::error::{ensure_finite, Error, Result};
use crate::estimator::safe_log_unchecked as safe_log;

/// Polynomial rate `s / (theta - s)` of `P(theta_hat <= theta - s)`.
pub fn ld_exponent_theta_lower(theta: f64, s: f64) -> Result<f64> {
    check_theta(theta)?;
    ensure_finite("s", s)?;
    if s <= 0.0 || s >= theta {
        return Err(Error::domain(format!("s must lie in (0, theta = {theta}), got {s}")));
    }
    Ok(s / (theta - s))
}

/// Stretched-exponential rate `t / (theta + t)` of `P(theta_hat >= theta + t)`,
/// on the `ln(-ln p) / ln n` scale.
pub fn ld_exponent_theta_upper(theta: f64, t: f64) -> Result<f64> {
    check_theta(theta)?;
    if t.is_nan() || t <= 0.0 {
        return Err(Error::domain(format!("t must be positive, got {t}")));
    }
    if t.is_infinite() {
        return Ok(1.0);
    }
    Ok(t / (theta + t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogMaxRates {
    /// `rho x`: polynomial rate of `P(log M_n / log n >= 1/rho + x)`.
    pub upper: f64,
    /// `rho y`: stretched-exponential rate of `P(log M_n / log n <= 1/rho - y)`.
    pub lower: f64,
}

pub fn ld_exponents_logmax(rho: f64, x: f64, y: f64) -> Result<LogMaxRates> {
    check_theta(rho)?;
    ensure_finite("x", x)?;
    ensure_finite("y", y)?;
    if x <= 0.0 {
        return Err(Error::domain(format!("x must be positive, got {x}")));
    }
    if y <= 0.0 || y >= 1.0 / rho {
        return Err(Error::domain(format!(
            "y must lie in (0, 1/rho = {}), got {y}",
            1.0 / rho
        )));
    }
    Ok(LogMaxRates {
        upper: rho * x,
        lower: rho * y,
    })
}

/// Deviation of `log M_n / log n` above `1/theta` equivalent to
/// `theta_hat <= theta - s`.
pub fn logmax_offset_for_lower(theta: f64, s: f64) -> f64 {
    s / (theta * (theta - s))
}

/// Deviation of `log M_n / log n` below `1/theta` equivalent to
/// `theta_hat >= theta + t`.
pub fn logmax_offset_for_upper(theta: f64, t: f64) -> f64 {
    t / (theta * (theta + t))
}

fn check_theta(theta: f64) -> Result<()> {
    if theta.is_finite() && theta > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "tail exponent must be finite and positive, got {theta}"
        )))
    }
}

/// Gumbel law approximating `log M_n`:
/// `P(log M_n <= v) ≈ exp(-e^(-(v - location) / scale))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitLaw {
    pub n: u64,
    pub rho: f64,
    pub tau: f64,
    pub location: f64,
    pub scale: f64,
}

impl LimitLaw {
    pub fn standardize(&self, v: f64) -> f64 {
        (v - self.location) / self.scale
    }

    pub fn cdf(&self, v: f64) -> f64 {
        gumbel_cdf(self.standardize(v))
    }

    /// `b_n(x) = exp(location + scale x)`.
    pub fn level(&self, x: f64) -> f64 {
        (self.location + self.scale * x).exp()
    }
}

/// Standard Gumbel CDF `exp(-e^-x)`.
pub fn gumbel_cdf(x: f64) -> f64 {
    (-(-x).exp()).exp()
}

fn pareto_params(model: &TailModel, n: u64) -> Result<(f64, f64, f64)> {
    let TailModel::ParetoLog(m) = model else {
        return Err(Error::unsupported(format!(
            "Gumbel law of log M_n needs a tail c (ln x)^tau x^-theta; {:?} has none",
            model.family()
        )));
    };
    if n < 3 {
        return Err(Error::domain(format!("n must be at least 3, got {n}")));
    }
    Ok((m.theta(), m.tau(), m.c()))
}

/// Location `(ln n + tau ln ln n + ln c - tau ln rho) / rho`, scale `1/rho`.
/// The model constant `c` plays the role of the slowly varying factor.
pub fn gumbel_law_logmax(model: &TailModel, n: u64) -> Result<LimitLaw> {
    let (rho, tau, c) = pareto_params(model, n)?;
    let ln_n = (n as f64).ln();
    let location = (ln_n + tau * ln_n.ln() + c.ln() - tau * rho.ln()) / rho;
    Ok(LimitLaw {
        n,
        rho,
        tau,
        location,
        scale: 1.0 / rho,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaHatLimit {
    /// Bound on `theta_hat - theta`.
    pub threshold: f64,
    /// Limiting probability `1 - exp(-e^x)`.
    pub prob: f64,
}

pub fn theta_hat_limit_cdf(model: &TailModel, n: u64, x: f64) -> Result<ThetaHatLimit> {
    let (theta, tau, c) = pareto_params(model, n)?;
    if x.is_nan() {
        return Err(Error::domain("x must not be NaN"));
    }
    let ln_n = (n as f64).ln();
    let threshold = (-theta * tau * ln_n.ln() - theta * c.ln() + theta * tau * theta.ln() + theta * x) / ln_n;
    Ok(ThetaHatLimit {
        threshold,
        prob: -(-x.exp()).exp_m1(),
    })
}

/// Almost-sure growth level of `max_k X_k` for light-tailed families:
/// `sqrt(2 log n)` (normal), `log n / log log n` (Poisson) and
/// `(log log n / zeta)^(1/gamma)` (double exponential).
pub fn stability_norming(model: &TailModel, n: u64) -> Result<f64> {
    if n < 3 {
        return Err(Error::domain(format!("n must be at least 3, got {n}")));
    }
    let log_n = safe_log(n as f64);
    match model {
        TailModel::StdNormal(_) => Ok((2.0 * log_n).sqrt()),
        TailModel::Poisson(_) => Ok(log_n / safe_log(log_n)),
        TailModel::StretchedDoubleExp(m) => Ok((safe_log(log_n) / m.zeta()).powf(1.0 / m.gamma())),
        other => Err(Error::unsupported(format!(
            "maxima stability norming covers tails exp(-phi(x) + H(x)) with H = o(phi) \
             (std_normal, poisson, stretched_double_exp); {:?} maxima grow polynomially in n",
            other.family()
        ))),
    }
}

/// `mu_n = inf{x : F(x) >= 1 - 1/n}`, the quantile-based norming constant.
pub fn quantile_norming(model: &TailModel, n: u64) -> Result<f64> {
    if n < 2 {
        return Err(Error::domain(format!("n must be at least 2, got {n}")));
    }
    model.quantile(1.0 / n as f64)
}
