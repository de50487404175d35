use rand_distr::StandardNormal;
use statrs::function::erf::{erfc, erfc_inv};

use crate::rng::RandomStream;

use super::max_survival_level;

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Standard normal. The tail is the upper tail `P(X > x)`, so maxima are
/// maxima of the signed draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StdNormal;

fn density(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

impl StdNormal {
    pub fn tail(&self, x: f64) -> f64 {
        0.5 * erfc(x / SQRT_2)
    }

    pub fn quantile(&self, u: f64) -> f64 {
        let mut x = SQRT_2 * erfc_inv(2.0 * u);
        // One Newton step on S(x) = u tightens the relative error in S.
        let d = density(x);
        if d > 0.0 {
            x += (self.tail(x) - u) / d;
        }
        x
    }

    pub(crate) fn draw(&self, stream: &mut RandomStream) -> f64 {
        stream.sample(StandardNormal)
    }

    pub(crate) fn draw_max(&self, stream: &mut RandomStream, n: u64) -> f64 {
        self.quantile(max_survival_level(stream.uniform(), n))
    }
}
