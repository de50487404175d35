//! The moment-power estimator `log n / log max |X_k|` with `log x = ln(e ∨ x)`.

use std::io::BufRead;

use serde::Serialize;

use crate::distributions::{Domain, TailModel};
use crate::error::{ensure_finite, Error, Result};

/// `ln(max(e, x))`; always at least 1.
pub fn safe_log(x: f64) -> Result<f64> {
    ensure_finite("x", x)?;
    Ok(safe_log_unchecked(x))
}

pub(crate) fn safe_log_unchecked(x: f64) -> f64 {
    if x <= std::f64::consts::E {
        1.0
    } else {
        x.ln().max(1.0)
    }
}

fn count_log(n: u64) -> f64 {
    safe_log_unchecked(n as f64)
}

/// Base of a logarithmic magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LogBase {
    E,
    Two,
}

/// Estimate from raw values. `n_override` replaces the sample size when the
/// caller passes a pre-reduced maximum standing for `n` draws.
pub fn theta_hat(values: &[f64], n_override: Option<u64>) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::domain("cannot estimate from an empty sample"));
    }
    let mut max_abs = 0.0f64;
    for &v in values {
        ensure_finite("sample value", v)?;
        max_abs = max_abs.max(v.abs());
    }
    let n = n_override.unwrap_or(values.len() as u64);
    if n == 0 {
        return Err(Error::domain("sample size must be at least 1"));
    }
    Ok(count_log(n) / safe_log_unchecked(max_abs))
}

/// Estimate from the logarithm of the maximum magnitude, for data whose
/// natural scale overflows.
pub fn theta_hat_from_log_max(log_mag: f64, n: u64, base: LogBase) -> Result<f64> {
    ensure_finite("log magnitude", log_mag)?;
    if n == 0 {
        return Err(Error::domain("sample size must be at least 1"));
    }
    let ln_mag = match base {
        LogBase::E => log_mag,
        LogBase::Two => log_mag * std::f64::consts::LN_2,
    };
    Ok(count_log(n) / ln_mag.max(1.0))
}

/// Estimate from a direct maximum draw of `model` (see
/// [`TailModel::sample_maximum`]), in the model's sampling domain.
pub fn theta_hat_for_draw(model: &TailModel, draw: f64, n: u64) -> Result<f64> {
    match model.domain() {
        Domain::Natural => theta_hat(&[draw], Some(n)),
        Domain::Log2Magnitude => theta_hat_from_log_max(draw, n, LogBase::Two),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Checkpoint {
    pub n: u64,
    /// `ln(e ∨ max |X_k|)`.
    pub log_max: f64,
    pub theta_hat: f64,
    /// The maximum is at most `e`, so the estimate equals `ln(e ∨ n)`.
    pub floor_active: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateTrace {
    pub domain: Domain,
    pub checkpoints: Vec<Checkpoint>,
}

impl EstimateTrace {
    pub fn last(&self) -> Option<&Checkpoint> {
        self.checkpoints.last()
    }
}

/// Single-pass running estimator with O(1) state.
#[derive(Debug, Clone)]
pub struct RunningEstimate {
    domain: Domain,
    n: u64,
    /// Natural log of the running max magnitude, before flooring.
    ln_max: f64,
}

impl RunningEstimate {
    pub fn new(domain: Domain) -> Self {
        Self {
            domain,
            n: 0,
            ln_max: f64::NEG_INFINITY,
        }
    }

    pub fn push(&mut self, value: f64) -> Result<()> {
        ensure_finite("sample value", value)?;
        let ln_mag = match self.domain {
            Domain::Natural => value.abs().ln(),
            Domain::Log2Magnitude => value * std::f64::consts::LN_2,
        };
        self.n += 1;
        if ln_mag > self.ln_max {
            self.ln_max = ln_mag;
        }
        Ok(())
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn checkpoint(&self) -> Option<Checkpoint> {
        if self.n == 0 {
            return None;
        }
        let log_max = self.ln_max.max(1.0);
        Some(Checkpoint {
            n: self.n,
            log_max,
            theta_hat: count_log(self.n) / log_max,
            floor_active: self.ln_max <= 1.0,
        })
    }
}

/// Streams `values` once, emitting a checkpoint each time the count reaches
/// a grid point. Grid points beyond the stream length are not emitted.
pub fn trace<I>(values: I, grid: &[u64], domain: Domain) -> Result<EstimateTrace>
where
    I: IntoIterator<Item = f64>,
{
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("checkpoint grid must be strictly increasing"));
    }
    let mut running = RunningEstimate::new(domain);
    let mut next = grid.iter().peekable();
    while next.peek().is_some_and(|&&g| g == 0) {
        next.next();
    }
    let mut checkpoints = Vec::with_capacity(grid.len());
    for v in values {
        if next.peek().is_none() {
            break;
        }
        running.push(v)?;
        if next.peek().is_some_and(|&&g| g == running.count()) {
            checkpoints.extend(running.checkpoint());
            next.next();
        }
    }
    Ok(EstimateTrace { domain, checkpoints })
}

/// Reads one finite decimal per line; blank lines are skipped and any other
/// failure aborts with its line number.
pub fn read_values<R: BufRead>(reader: R) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let v: f64 = text.parse().map_err(|e| Error::Parse {
            line: i + 1,
            message: format!("`{text}` is not a number ({e})"),
        })?;
        if !v.is_finite() {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("`{text}` is not finite"),
            });
        }
        out.push(v);
    }
    Ok(out)
}

/// Powers of ten up to `n`, followed by `n` itself.
pub fn decade_grid(n: u64) -> Vec<u64> {
    let mut grid: Vec<u64> = std::iter::successors(Some(1u64), |g| g.checked_mul(10))
        .take_while(|&g| g < n)
        .collect();
    if n > 0 {
        grid.push(n);
    }
    grid
}
