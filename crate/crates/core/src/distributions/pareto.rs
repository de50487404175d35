use crate::error::{ensure_finite, Error, Result};
use crate::rng::RandomStream;

use super::{bisect_decreasing, max_survival_level};

/// Power law with a logarithmic factor: `S(x) = c (ln x)^tau x^(-theta)`
/// exactly for `x >= x0`, with the remaining mass `1 - S(x0)` as an atom at
/// `x0`.
///
/// The slowly varying factor `h` is fixed to the constant `c`. A monotone
/// `h` with `h(x^2)/h(x) -> 1` would enter `log_tail` as an additive
/// `ln h(x)` term; the Gumbel location in `limits` would pick it up as
/// `ln h(n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoLog {
    theta: f64,
    tau: f64,
    c: f64,
    x0: f64,
}

impl ParetoLog {
    /// Builds the family. With `x0 = None` the threshold is the smallest
    /// point where the tail formula is at most 1 and decreasing; an explicit
    /// `x0` must lie at or beyond that point.
    pub fn new(theta: f64, tau: f64, c: f64, x0: Option<f64>) -> Result<Self> {
        ensure_finite("theta", theta)?;
        ensure_finite("tau", tau)?;
        ensure_finite("c", c)?;
        if theta <= 0.0 {
            return Err(Error::domain(format!("theta must be positive, got {theta}")));
        }
        if c <= 0.0 {
            return Err(Error::domain(format!("c must be positive, got {c}")));
        }
        let min_x0 = minimal_threshold(theta, tau, c);
        let x0 = match x0 {
            None => min_x0,
            Some(x0) => {
                ensure_finite("x0", x0)?;
                if x0 < min_x0 * (1.0 - 1e-12) {
                    return Err(Error::domain(format!(
                        "x0 = {x0} is below the smallest valid threshold {min_x0}"
                    )));
                }
                x0
            }
        };
        Ok(Self { theta, tau, c, x0 })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    /// `ln S(e^y)` for `e^y >= x0`.
    fn log_tail(&self, y: f64) -> f64 {
        log_formula(self.theta, self.tau, self.c, y)
    }

    /// Tail probability, total over the real line (1 below `x0`).
    pub(crate) fn tail(&self, x: f64) -> f64 {
        if x < self.x0 {
            1.0
        } else {
            self.log_tail(x.ln()).exp().min(1.0)
        }
    }

    /// `ln P(X > e^y)` on the whole line (0 below `ln x0`).
    pub fn ln_tail_at_ln(&self, y: f64) -> f64 {
        if y < self.x0.ln() {
            0.0
        } else {
            self.log_tail(y).min(0.0)
        }
    }

    pub fn survival(&self, x: f64) -> Result<f64> {
        ensure_finite("x", x)?;
        if x < self.x0 {
            return Err(Error::domain(format!(
                "x = {x} lies below the tail threshold x0 = {}",
                self.x0
            )));
        }
        Ok(self.tail(x))
    }

    /// Natural log of the quantile; avoids overflow for small `theta`.
    pub fn log_quantile(&self, u: f64) -> f64 {
        let y0 = self.x0.ln();
        let target = u.ln();
        if target >= self.log_tail(y0) {
            return y0;
        }
        if self.tau == 0.0 {
            return (self.c.ln() - target) / self.theta;
        }
        bisect_decreasing(|y| self.log_tail(y), y0, target)
    }

    pub fn quantile(&self, u: f64) -> f64 {
        self.log_quantile(u).exp()
    }

    pub(crate) fn draw(&self, stream: &mut RandomStream) -> f64 {
        self.quantile(stream.uniform())
    }

    /// Natural log of a direct draw of the maximum of `n` values.
    pub(crate) fn draw_log_max(&self, stream: &mut RandomStream, n: u64) -> f64 {
        self.log_quantile(max_survival_level(stream.uniform(), n))
    }
}

fn log_formula(theta: f64, tau: f64, c: f64, y: f64) -> f64 {
    if tau == 0.0 {
        c.ln() - theta * y
    } else {
        c.ln() + tau * y.ln() - theta * y
    }
}

/// Smallest `x` where `c (ln x)^tau x^-theta` is decreasing and at most 1.
fn minimal_threshold(theta: f64, tau: f64, c: f64) -> f64 {
    if tau == 0.0 {
        return if c <= 1.0 { 1.0 } else { c.powf(1.0 / theta) };
    }
    // d/dy (tau ln y - theta y) = 0 at y = tau/theta; for tau < 0 the
    // formula decreases from +inf on (0, inf).
    let y_dec = if tau > 0.0 { tau / theta } else { 0.0 };
    let g = |y: f64| log_formula(theta, tau, c, y);
    if tau > 0.0 && g(y_dec) <= 0.0 {
        return y_dec.exp();
    }
    bisect_decreasing(g, y_dec, 0.0).exp()
}
