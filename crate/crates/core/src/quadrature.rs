//! Offset midpoint rule on `(-π, π)` with optional endpoint corrections for the
//! algebraic singularity at `z = 0`.
//!
//! For an integrand `F(z) = |z|^{-alpha} z^k g(z)` with `g` smooth, the
//! generalized Euler-Maclaurin expansion of the midpoint sum reads
//!
//! ```text
//! h sum_i F(z_i) - ∫ F = sum_{l : k + l even} 2 zeta(alpha - k - l, 1/2) h^{k+l+1-alpha} g_l + ...
//! ```
//!
//! where `g_l` are Taylor coefficients of `g` at 0. Subtracting the first
//! `corrections` terms raises the order of the rule from `k + 1 - alpha` to
//! `k + 2 corrections + 1 - alpha`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dispersion::Alpha;
use crate::error::{Error, Result};
use crate::special::hurwitz_zeta_half;

/// Default number of endpoint correction terms.
pub const DEFAULT_CORRECTIONS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureRule {
    m: usize,
    corrections: usize,
}

impl QuadratureRule {
    pub fn new(m: usize) -> Result<Self> {
        Self::with_corrections(m, DEFAULT_CORRECTIONS)
    }

    /// Plain offset midpoint rule, without endpoint corrections.
    pub fn plain(m: usize) -> Result<Self> {
        Self::with_corrections(m, 0)
    }

    pub fn with_corrections(m: usize, corrections: usize) -> Result<Self> {
        if m < 4 || !m.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "quadrature size {m} must be a power of two >= 4"
            )));
        }
        Ok(QuadratureRule { m, corrections })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn corrections(&self) -> usize {
        self.corrections
    }

    pub fn step(&self) -> f64 {
        2.0 * PI / self.m as f64
    }

    /// `z_i = -π + (i + 1/2) h`.
    pub fn node(&self, i: usize) -> f64 {
        -PI + (i as f64 + 0.5) * self.step()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.m).map(|i| self.node(i))
    }

    /// Weights of the correction terms for `|z|^{-alpha} z^k g(z)`, already
    /// divided by `2π`: the corrected average is
    /// `(1/m) sum F(z_i) - sum_t weights[t] g_{l_t}` with `l_t = l0 + 2t`,
    /// where `l0 = k mod 2`.
    pub fn correction_weights(&self, alpha: Alpha, k: usize) -> Result<CorrectionWeights> {
        let a = alpha.value();
        let h = self.step();
        let first = k % 2;
        let weights = (0..self.corrections)
            .map(|t| {
                let l = first + 2 * t;
                let p = (k + l) as f64;
                Ok(2.0 * hurwitz_zeta_half(a - p)? * h.powf(p + 1.0 - a) / (2.0 * PI))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(CorrectionWeights { first, weights })
    }

    /// Average `(1/2π) ∫ F` of `F = |z|^{-alpha} z^k g(z)` given the integrand and
    /// the Taylor coefficients of `g`.
    pub fn average(
        &self,
        alpha: Alpha,
        k: usize,
        mut integrand: impl FnMut(f64) -> f64,
        g_coeffs: &[f64],
    ) -> Result<f64> {
        let sum: f64 = self.nodes().map(&mut integrand).sum::<f64>() / self.m as f64;
        let w = self.correction_weights(alpha, k)?;
        Ok(sum - w.apply(g_coeffs))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionWeights {
    first: usize,
    weights: Vec<f64>,
}

impl CorrectionWeights {
    /// Highest Taylor index of `g` that is used.
    pub fn max_index(&self) -> Option<usize> {
        if self.weights.is_empty() {
            None
        } else {
            Some(self.first + 2 * (self.weights.len() - 1))
        }
    }

    /// `sum_t weights[t] g_{first + 2t}`; missing coefficients count as zero.
    pub fn apply(&self, g: &[f64]) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(t, w)| w * g.get(self.first + 2 * t).copied().unwrap_or(0.0))
            .sum()
    }
}
