use crate::error::{ensure_finite, Error, Result};
use crate::rng::RandomStream;

use super::max_survival_level;

/// Double-exponential tail `S(x) = exp(1 - e^(zeta x^gamma))` on `x >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StretchedDoubleExp {
    zeta: f64,
    gamma: f64,
}

impl StretchedDoubleExp {
    pub fn new(zeta: f64, gamma: f64) -> Result<Self> {
        ensure_finite("zeta", zeta)?;
        ensure_finite("gamma", gamma)?;
        if zeta <= 0.0 || gamma <= 0.0 {
            return Err(Error::domain(format!(
                "zeta and gamma must be positive, got zeta = {zeta}, gamma = {gamma}"
            )));
        }
        Ok(Self { zeta, gamma })
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn tail(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        // 1 - e^z = -expm1(z)
        (-(self.zeta * x.powf(self.gamma)).exp_m1()).exp()
    }

    /// Closed-form inverse `x = (ln(1 - ln u) / zeta)^(1/gamma)`.
    pub fn quantile(&self, u: f64) -> f64 {
        ((-u.ln()).ln_1p() / self.zeta).powf(1.0 / self.gamma)
    }

    pub(crate) fn draw(&self, stream: &mut RandomStream) -> f64 {
        self.quantile(stream.uniform())
    }

    pub(crate) fn draw_max(&self, stream: &mut RandomStream, n: u64) -> f64 {
        self.quantile(max_survival_level(stream.uniform(), n))
    }
}
