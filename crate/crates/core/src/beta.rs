//! Beta distributions and normalized mixtures of Beta distributions.
//!
//! A [`BetaMixture`] over a base `Beta(α, β)` with `n` absorbed observations
//! is the density
//!
//! ```text
//! Σ_i C_i · Beta(θ; α + i, β + n − i),     Σ_i C_i = 1,  C_i ≥ 0
//! ```
//!
//! where the component index `i` counts how many observations were credited
//! to the success side. Mixtures are immutable once built; every constructor
//! normalizes the weights and drops components whose weight falls below
//! [`PRUNE_THRESHOLD`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normalized weights below this are dropped from a mixture.
pub const PRUNE_THRESHOLD: f64 = 1e-15;

/// A single `Beta(alpha, beta)` distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    pub alpha: f64,
    pub beta: f64,
}

impl BetaParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::InvalidBeta { alpha, beta });
        }
        Ok(Self { alpha, beta })
    }

    /// The uniform prior `Beta(1, 1)`.
    pub fn uniform() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
        }
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    /// Raw second moment `E[θ²]`.
    pub fn moment2(&self) -> f64 {
        let total = self.alpha + self.beta;
        self.alpha * (self.alpha + 1.0) / (total * (total + 1.0))
    }

    pub fn variance(&self) -> f64 {
        let total = self.alpha + self.beta;
        self.alpha * self.beta / (total * total * (total + 1.0))
    }

    /// Log of the normalized density at `theta`, computed from `theta` and
    /// `1 - theta` separately so that both tails stay accurate.
    pub fn ln_pdf_split(&self, theta: f64, one_minus_theta: f64) -> f64 {
        (self.alpha - 1.0) * theta.ln() + (self.beta - 1.0) * one_minus_theta.ln()
            - ln_beta_fn(self.alpha, self.beta)
    }

    pub fn pdf(&self, theta: f64) -> f64 {
        if !(0.0..=1.0).contains(&theta) {
            return 0.0;
        }
        self.ln_pdf_split(theta, 1.0 - theta).exp()
    }
}

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7, n = 9).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    let t = x + G + 0.5;
    for (k, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + k as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// `ln B(a, b)`.
pub fn ln_beta_fn(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Divide every weight by the total.
///
/// Fails with [`Error::DegenerateWeights`] when the input is empty, contains a
/// negative or non-finite entry, or sums to zero.
pub fn normalize(weights: &[f64]) -> Result<Vec<f64>> {
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::DegenerateWeights);
    }
    let max = weights.iter().copied().fold(0.0_f64, f64::max);
    if max <= 0.0 {
        return Err(Error::DegenerateWeights);
    }
    // Scale by the maximum first so that huge or tiny inputs neither overflow
    // nor underflow in the sum.
    let total: f64 = weights.iter().map(|w| w / max).sum();
    Ok(weights.iter().map(|w| (w / max) / total).collect())
}

/// Normalize weights given as natural logs (`-inf` means zero weight).
pub fn normalize_log(log_weights: &[f64]) -> Result<Vec<f64>> {
    if log_weights
        .iter()
        .any(|w| w.is_nan() || *w == f64::INFINITY)
    {
        return Err(Error::DegenerateWeights);
    }
    let max = log_weights
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::DegenerateWeights);
    }
    let shifted: Vec<f64> = log_weights.iter().map(|w| (w - max).exp()).collect();
    let total: f64 = shifted.iter().sum();
    Ok(shifted.into_iter().map(|w| w / total).collect())
}

/// A normalized mixture `Σ C_i Beta(α + i, β + n − i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaMixture {
    base: BetaParams,
    total: usize,
    /// `(i, C_i)` sorted by `i`, all indices in `0..=total`.
    components: Vec<(usize, f64)>,
}

impl BetaMixture {
    /// The single-component mixture holding `prior` with no observations.
    pub fn from_prior(prior: BetaParams) -> Self {
        Self {
            base: prior,
            total: 0,
            components: vec![(0, 1.0)],
        }
    }

    /// Build from unnormalized `(index, weight)` pairs.
    pub fn from_weights(
        base: BetaParams,
        total: usize,
        weights: impl IntoIterator<Item = (usize, f64)>,
    ) -> Result<Self> {
        let (indices, raw): (Vec<usize>, Vec<f64>) = weights.into_iter().unzip();
        let normalized = normalize(&raw)?;
        Self::assemble(base, total, indices, normalized)
    }

    /// Build from `(index, ln weight)` pairs.
    pub fn from_log_weights(
        base: BetaParams,
        total: usize,
        log_weights: impl IntoIterator<Item = (usize, f64)>,
    ) -> Result<Self> {
        let (indices, raw): (Vec<usize>, Vec<f64>) = log_weights.into_iter().unzip();
        let normalized = normalize_log(&raw)?;
        Self::assemble(base, total, indices, normalized)
    }

    fn assemble(
        base: BetaParams,
        total: usize,
        indices: Vec<usize>,
        normalized: Vec<f64>,
    ) -> Result<Self> {
        let mut components: Vec<(usize, f64)> = indices
            .into_iter()
            .zip(normalized)
            .filter(|&(_, w)| w >= PRUNE_THRESHOLD)
            .collect();
        if let Some(&(i, _)) = components.iter().find(|&&(i, _)| i > total) {
            return Err(Error::InvalidConfig(format!(
                "mixture component {i} exceeds observation count {total}"
            )));
        }
        components.sort_unstable_by_key(|&(i, _)| i);
        if components.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidConfig(
                "duplicate mixture component index".into(),
            ));
        }
        let sum: f64 = components.iter().map(|&(_, w)| w).sum();
        if sum != 1.0 {
            for (_, w) in &mut components {
                *w /= sum;
            }
        }
        Ok(Self {
            base,
            total,
            components,
        })
    }

    pub fn base(&self) -> BetaParams {
        self.base
    }

    /// Number of absorbed observations `n`.
    pub fn total(&self) -> usize {
        self.total
    }

    pub fn components(&self) -> &[(usize, f64)] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Weight of component `i`, zero when absent.
    pub fn weight(&self, i: usize) -> f64 {
        self.components
            .binary_search_by_key(&i, |&(j, _)| j)
            .map(|k| self.components[k].1)
            .unwrap_or(0.0)
    }

    /// Parameters of component `i`: `Beta(α + i, β + n − i)`.
    pub fn component(&self, i: usize) -> BetaParams {
        BetaParams {
            alpha: self.base.alpha + i as f64,
            beta: self.base.beta + (self.total - i) as f64,
        }
    }

    pub fn mean(&self) -> f64 {
        self.components
            .iter()
            .map(|&(i, c)| c * self.component(i).mean())
            .sum()
    }

    pub fn moment2(&self) -> f64 {
        self.components
            .iter()
            .map(|&(i, c)| c * self.component(i).moment2())
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        (self.moment2() - m * m).max(0.0)
    }

    pub fn pdf(&self, theta: f64) -> f64 {
        self.components
            .iter()
            .map(|&(i, c)| c * self.component(i).pdf(theta))
            .sum()
    }

    /// The distribution of `1 − θ`: component `i` maps to index `n − i`
    /// over the base `Beta(β, α)`.
    pub fn reflect(&self) -> Self {
        let mut components: Vec<(usize, f64)> = self
            .components
            .iter()
            .map(|&(i, c)| (self.total - i, c))
            .collect();
        components.reverse();
        Self {
            base: BetaParams {
                alpha: self.base.beta,
                beta: self.base.alpha,
            },
            total: self.total,
            components,
        }
    }
}

impl From<BetaParams> for BetaMixture {
    fn from(p: BetaParams) -> Self {
        Self::from_prior(p)
    }
}
