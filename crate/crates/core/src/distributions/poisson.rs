use rand_distr::Poisson as PoissonDist;
use statrs::function::gamma::ln_gamma;

use crate::error::{ensure_finite, Error, Result};
use crate::rng::RandomStream;

use super::max_survival_level;

/// Largest rate sampled by sequential inversion.
const INVERSION_MAX_RATE: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Poisson {
    lambda: f64,
}

impl Poisson {
    pub fn new(lambda: f64) -> Result<Self> {
        ensure_finite("lambda", lambda)?;
        if lambda <= 0.0 || lambda > 700.0 {
            return Err(Error::domain(format!("lambda must lie in (0, 700], got {lambda}")));
        }
        Ok(Self { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn pmf(&self, k: u64) -> f64 {
        let k = k as f64;
        (-self.lambda + k * self.lambda.ln() - ln_gamma(k + 1.0)).exp()
    }

    /// `P(X > m)` summed over the upper tail, so it stays accurate when tiny.
    pub fn upper_tail(&self, m: u64) -> f64 {
        let mut k = m + 1;
        let mut term = self.pmf(k);
        let mut sum = 0.0;
        loop {
            sum += term;
            k += 1;
            term *= self.lambda / k as f64;
            if (k as f64) > self.lambda && term <= sum * 1e-17 {
                break;
            }
            if term == 0.0 {
                break;
            }
        }
        sum.min(1.0)
    }

    pub fn tail(&self, x: f64) -> f64 {
        if x < 0.0 {
            1.0
        } else {
            self.upper_tail(x.floor() as u64)
        }
    }

    /// Smallest `m` with `P(X > m) <= u`.
    pub fn quantile(&self, u: f64) -> u64 {
        let mut m = 0;
        while self.upper_tail(m) > u {
            m += 1;
        }
        m
    }

    pub(crate) fn draw(&self, stream: &mut RandomStream) -> f64 {
        if self.lambda > INVERSION_MAX_RATE {
            let dist = PoissonDist::new(self.lambda).expect("rate validated at construction");
            return stream.sample(dist);
        }
        let u = stream.uniform();
        let mut k = 0u64;
        let mut p = (-self.lambda).exp();
        let mut cdf = p;
        while u > cdf {
            k += 1;
            p *= self.lambda / k as f64;
            if p == 0.0 {
                break;
            }
            cdf += p;
        }
        k as f64
    }

    pub(crate) fn draw_max(&self, stream: &mut RandomStream, n: u64) -> f64 {
        self.quantile(max_survival_level(stream.uniform(), n)) as f64
    }
}
