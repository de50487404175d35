//! Discrete law whose tail oscillates between two power rates.
//!
//! Atoms sit at `d_k = 2^((rho2/rho1)^k)` with `P(X = d_k) ∝ d_k^(-rho1)`,
//! truncated at `K` atoms and renormalized. `d_5` already exceeds `2^32` for
//! a ratio of 2, so atoms are stored and sampled as `log2 d_k`.

use serde::Serialize;

use crate::error::{ensure_finite, Error, Result};
use crate::rng::RandomStream;

/// Largest admissible `log2` of an atom.
pub const MAX_LOG2_ATOM: f64 = (1u64 << 60) as f64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomTable {
    pub rho1: f64,
    pub rho2: f64,
    /// `log2 d_k`, k = 1..K.
    pub log2_atoms: Vec<f64>,
    pub probs: Vec<f64>,
    /// Normalizing constant of the truncated series.
    pub c: f64,
    /// `tails[k] = P(X > d_k)`, summed from the top.
    #[serde(skip)]
    tails: Vec<f64>,
}

pub fn build_atom_table(rho1: f64, rho2: f64, atom_count: usize) -> Result<AtomTable> {
    ensure_finite("rho1", rho1)?;
    ensure_finite("rho2", rho2)?;
    if rho1 <= 0.0 || rho2 <= rho1 {
        return Err(Error::domain(format!(
            "need 0 < rho1 < rho2 < inf, got rho1 = {rho1}, rho2 = {rho2}"
        )));
    }
    if atom_count < 2 {
        return Err(Error::domain(format!(
            "atom count must be at least 2, got {atom_count}"
        )));
    }
    let ratio = rho2 / rho1;
    let mut log2_atoms = Vec::with_capacity(atom_count);
    let mut a = ratio;
    for k in 1..=atom_count {
        if a > MAX_LOG2_ATOM {
            return Err(Error::Overflow(format!(
                "atom {k} has log2 value {a:e}, beyond the supported 2^60; reduce the atom count or rho2/rho1"
            )));
        }
        log2_atoms.push(a);
        a *= ratio;
    }

    let weights: Vec<f64> = log2_atoms.iter().map(|&a| (-rho1 * a).exp2()).collect();
    let c = 1.0 / weights.iter().sum::<f64>();
    let probs: Vec<f64> = weights.iter().map(|w| c * w).collect();

    let mut tails = vec![0.0; atom_count];
    let mut acc = 0.0;
    for k in (0..atom_count).rev() {
        tails[k] = acc;
        acc += probs[k];
    }

    Ok(AtomTable {
        rho1,
        rho2,
        log2_atoms,
        probs,
        c,
        tails,
    })
}

impl AtomTable {
    pub fn len(&self) -> usize {
        self.log2_atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log2_atoms.is_empty()
    }

    /// `P(X > d_k)` for the 0-based atom index `k`.
    pub fn tail_at(&self, k: usize) -> f64 {
        self.tails[k]
    }

    /// `P(X > 2^l)`.
    pub fn survival_log2(&self, l: f64) -> f64 {
        // Index of the first atom strictly above 2^l.
        let idx = self.log2_atoms.partition_point(|&a| a <= l);
        if idx == 0 {
            1.0
        } else {
            self.tails[idx - 1]
        }
    }

    pub fn tail(&self, x: f64) -> f64 {
        if x <= 0.0 {
            1.0
        } else {
            self.survival_log2(x.log2())
        }
    }

    /// Index of the smallest atom `d_k` with `P(X > d_k) <= u`.
    pub fn quantile_index(&self, u: f64) -> usize {
        self.tails.partition_point(|&t| t > u).min(self.len() - 1)
    }

    pub fn quantile_log2(&self, u: f64) -> f64 {
        self.log2_atoms[self.quantile_index(u)]
    }

    /// `P(max of n draws <= d_k)`, i.e. `(1 - tails[k])^n`.
    pub fn max_cdf_at(&self, k: usize, n: u64) -> f64 {
        (n as f64 * (-self.tails[k]).ln_1p()).exp()
    }

    /// Index of the atom that is the `p`-quantile of the maximum of `n` draws.
    pub fn max_quantile_index(&self, p: f64, n: u64) -> usize {
        let target = p.ln();
        (0..self.len())
            .find(|&k| n as f64 * (-self.tails[k]).ln_1p() >= target)
            .unwrap_or(self.len() - 1)
    }

    pub(crate) fn draw_log2(&self, stream: &mut RandomStream) -> f64 {
        self.quantile_log2(stream.uniform())
    }

    pub(crate) fn draw_log2_max(&self, stream: &mut RandomStream, n: u64) -> f64 {
        self.log2_atoms[self.max_quantile_index(stream.uniform(), n)]
    }
}
