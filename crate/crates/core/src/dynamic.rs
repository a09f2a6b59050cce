//! Contextual Bernoulli tests and the Contextual Smooth Beta Process.
//!
//! A contextual test succeeds with probability `A·π(x) + B`. Conditioning a
//! Beta prior on such outcomes yields a normalized mixture of Betas
//! ([`BetaMixture`]) whose weights follow a two-term recursion:
//!
//! ```text
//! success: C'_i ∝ B·C_i·(β+n−i)     + (A+B)·C_{i−1}·(α+i−1)
//! failure: C'_i ∝ (1−B)·C_i·(β+n−i) + (1−A−B)·C_{i−1}·(α+i−1)
//! ```
//!
//! Component `i` is `Beta(α+i, β+n−i)`. For a constant lift with `A + B = 1`
//! the fold has the closed form
//! `C_i ∝ binom(S, i) Γ(α+i) Γ(β+t−i) B^(S−i)` and is evaluated in `O(S)`
//! from the ratio of consecutive weights.
//!
//! [`posterior_csbp`] shares experience between nearby tests: every test within
//! ℓ∞ distance Δ of the query counts as if performed there, with its
//! coefficients replaced by the neighborhood means `(Ā, B̄)`.

use crate::beta::{BetaMixture, BetaParams};
use crate::error::{Error, Result};
use crate::neighbor::{delta_schedule, KernelWidth, NeighborIndex, PointSet};
use crate::quadrature;
use crate::static_sbp::DeltaMode;

/// Slack allowed on the coefficient constraints, so that `A = 1 − B`
/// computed in floating point is accepted.
const COEF_TOL: f64 = 1e-12;

/// `|Ā + B̄ − 1|` at or below this routes to the closed-form recursion.
pub const CERTAINTY_TOL: f64 = 1e-12;

/// Below this `B` the closed form collapses to the static component.
const ZERO_LIFT: f64 = 1e-12;

/// Absolute tolerance of the quadrature oracle.
pub const ORACLE_TOL: f64 = 1e-10;

/// Contextual coefficients of a test: `Pr(s = 1) = A·π + B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub a: f64,
    pub b: f64,
}

impl Coefficients {
    /// Requires `0 ≤ B ≤ 1` and `0 ≤ A + B ≤ 1`.
    pub fn new(a: f64, b: f64) -> Result<Self> {
        let sum = a + b;
        let ok = a.is_finite()
            && b.is_finite()
            && (-COEF_TOL..=1.0 + COEF_TOL).contains(&b)
            && (-COEF_TOL..=1.0 + COEF_TOL).contains(&sum);
        if !ok {
            return Err(Error::InvalidCoefficients { a, b });
        }
        Ok(Self { a, b })
    }

    /// Plain Bernoulli test: `A = 1, B = 0`.
    pub fn identity() -> Self {
        Self { a: 1.0, b: 0.0 }
    }

    /// Certainty-invariant lift `(1 − B, B)`.
    pub fn lift(b: f64) -> Result<Self> {
        Self::new(1.0 - b, b)
    }

    /// `(stay, up)` multipliers of the recursion for an outcome: the weight
    /// that keeps component `i` and the weight that moves it to `i + 1`.
    fn step_factors(self, success: bool) -> (f64, f64) {
        let b = self.b.clamp(0.0, 1.0);
        let ab = (self.a + self.b).clamp(0.0, 1.0);
        if success {
            (b, ab)
        } else {
            (1.0 - b, 1.0 - ab)
        }
    }

    /// Coefficients after swapping the meaning of success and failure.
    pub fn mirrored(self) -> Self {
        Self {
            a: self.a,
            b: 1.0 - self.a - self.b,
        }
    }
}

/// Outcome of one contextual test at a fixed location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContextualOutcome {
    pub success: bool,
    pub coef: Coefficients,
}

impl ContextualOutcome {
    pub fn new(success: bool, a: f64, b: f64) -> Result<Self> {
        Ok(Self {
            success,
            coef: Coefficients::new(a, b)?,
        })
    }
}

/// Condition `m` on one outcome with coefficients `(a, b)`.
pub fn update_single(m: &BetaMixture, success: bool, a: f64, b: f64) -> Result<BetaMixture> {
    let coef = Coefficients::new(a, b)?;
    let (stay, up) = coef.step_factors(success);
    let base = m.base();
    let n = m.total();
    let mut weights: Vec<(usize, f64)> = Vec::with_capacity(m.len() + 1);
    for &(i, c) in m.components() {
        let keep = stay * c * (base.beta + (n - i) as f64);
        let raise = up * c * (base.alpha + i as f64);
        match weights.last_mut() {
            Some(last) if last.0 == i => last.1 += keep,
            _ => weights.push((i, keep)),
        }
        weights.push((i + 1, raise));
    }
    BetaMixture::from_weights(base, n + 1, weights).map_err(|e| match e {
        Error::DegenerateWeights => Error::ImpossibleObservations,
        other => other,
    })
}

/// Dense weight buffer for folding many outcomes without reallocating.
struct DenseFold {
    base: BetaParams,
    weights: Vec<f64>,
    scratch: Vec<f64>,
}

impl DenseFold {
    fn new(base: BetaParams, capacity: usize) -> Self {
        let mut weights = Vec::with_capacity(capacity + 1);
        weights.push(1.0);
        Self {
            base,
            weights,
            scratch: Vec::with_capacity(capacity + 1),
        }
    }

    fn step(&mut self, stay: f64, up: f64) -> Result<()> {
        let n = self.weights.len() - 1;
        let (alpha, beta) = (self.base.alpha, self.base.beta);
        self.scratch.clear();
        self.scratch.resize(n + 2, 0.0);
        for (i, &c) in self.weights.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            self.scratch[i] += stay * c * (beta + (n - i) as f64);
            self.scratch[i + 1] += up * c * (alpha + i as f64);
        }
        let total: f64 = self.scratch.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::ImpossibleObservations);
        }
        for w in &mut self.scratch {
            *w /= total;
        }
        std::mem::swap(&mut self.weights, &mut self.scratch);
        Ok(())
    }

    fn finish(self) -> Result<BetaMixture> {
        let n = self.weights.len() - 1;
        BetaMixture::from_weights(self.base, n, self.weights.into_iter().enumerate())
    }
}

/// Exact posterior after a sequence of contextual outcomes, `O(t²)`.
pub fn posterior_general<I>(outcomes: I, prior: BetaParams) -> Result<BetaMixture>
where
    I: IntoIterator<Item = ContextualOutcome>,
{
    let iter = outcomes.into_iter();
    let mut fold = DenseFold::new(prior, iter.size_hint().0);
    for o in iter {
        let (stay, up) = o.coef.step_factors(o.success);
        fold.step(stay, up)?;
    }
    fold.finish()
}

/// Exact posterior after `t` tests with `successes` successes, all lifted by
/// the same certainty-invariant `(1 − B, B)`. `O(successes)`.
pub fn posterior_simplified(
    t: usize,
    successes: usize,
    b: f64,
    prior: BetaParams,
) -> Result<BetaMixture> {
    if successes > t {
        return Err(Error::SuccessesExceedTrials {
            successes,
            trials: t,
        });
    }
    if !(0.0..1.0).contains(&b) {
        return Err(Error::InvalidCoefficients { a: 1.0 - b, b });
    }
    if b < ZERO_LIFT {
        return BetaMixture::from_weights(prior, t, [(successes, 1.0)]);
    }
    let (alpha, beta) = (prior.alpha, prior.beta);
    let ln_b = b.ln();
    let mut ln_w = 0.0;
    let mut log_weights = Vec::with_capacity(successes + 1);
    log_weights.push((0, ln_w));
    for i in 0..successes {
        // C_{i+1} / C_i = (S − i)(α + i) / (B (i + 1)(β + t − 1 − i))
        ln_w += ((successes - i) as f64).ln() + (alpha + i as f64).ln()
            - ln_b
            - ((i + 1) as f64).ln()
            - (beta + (t - 1 - i) as f64).ln();
        log_weights.push((i + 1, ln_w));
    }
    BetaMixture::from_log_weights(prior, t, log_weights)
}

/// Posterior mean and raw second moment by quadrature of
/// `prior(θ) · Π (A_iθ + B_i)^{s_i} (1 − A_iθ − B_i)^{1 − s_i}`.
///
/// Independent of the mixture recursions; serves as their oracle.
pub fn exact_posterior_moments(
    outcomes: &[ContextualOutcome],
    prior: BetaParams,
) -> Result<(f64, f64)> {
    // Factors written as convex combinations of θ and 1 − θ stay nonnegative
    // and accurate at both ends.
    let factors: Vec<(f64, f64)> = outcomes
        .iter()
        .map(|o| {
            let (stay, up) = o.coef.step_factors(o.success);
            // stay multiplies (1 − θ), up multiplies θ.
            (up, stay)
        })
        .collect();
    let ln_density = |theta: f64, one_minus: f64| {
        let mut acc = (prior.alpha - 1.0) * theta.ln() + (prior.beta - 1.0) * one_minus.ln();
        for &(on_theta, on_rest) in &factors {
            acc += (on_theta * theta + on_rest * one_minus).ln();
        }
        acc
    };
    quadrature::log_density_moments(ln_density, ORACLE_TOL * 1e-2)
}

/// One contextual test `(x, s, A, B)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicExperiment {
    pub x: Vec<f64>,
    pub success: bool,
    pub coef: Coefficients,
}

/// Contextual experiments with a neighbor index over their locations.
#[derive(Debug, Clone)]
pub struct DynamicDataset {
    index: NeighborIndex,
    outcomes: Vec<bool>,
    coefs: Vec<Coefficients>,
    mean_b: f64,
}

impl DynamicDataset {
    pub fn new(dim: usize, experiments: &[DynamicExperiment]) -> Result<Self> {
        let mut points = PointSet::new(dim)?;
        for e in experiments {
            points.push(&e.x)?;
        }
        Ok(Self::from_parts(
            points,
            experiments.iter().map(|e| e.success).collect(),
            experiments.iter().map(|e| e.coef).collect(),
        ))
    }

    /// Panics if lengths differ.
    pub fn from_parts(points: PointSet, outcomes: Vec<bool>, coefs: Vec<Coefficients>) -> Self {
        assert_eq!(points.len(), outcomes.len(), "one outcome per point");
        assert_eq!(points.len(), coefs.len(), "one coefficient pair per point");
        let mean_b = if coefs.is_empty() {
            0.0
        } else {
            compensated_sum(coefs.iter().map(|c| c.b)) / coefs.len() as f64
        };
        Self {
            index: NeighborIndex::build(points),
            outcomes,
            coefs,
            mean_b,
        }
    }

    pub fn empty(dim: usize) -> Result<Self> {
        Ok(Self::from_parts(
            PointSet::new(dim)?,
            Vec::new(),
            Vec::new(),
        ))
    }

    pub fn dim(&self) -> usize {
        self.index.dim()
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn index(&self) -> &NeighborIndex {
        &self.index
    }

    pub fn outcomes(&self) -> &[bool] {
        &self.outcomes
    }

    pub fn coefficients(&self) -> &[Coefficients] {
        &self.coefs
    }

    /// Dataset-wide mean of `B_i`.
    pub fn mean_b(&self) -> f64 {
        self.mean_b
    }

    pub fn experiments(&self) -> impl Iterator<Item = DynamicExperiment> + '_ {
        self.index
            .points()
            .iter()
            .zip(&self.outcomes)
            .zip(&self.coefs)
            .map(|((x, &success), &coef)| DynamicExperiment {
                x: x.to_vec(),
                success,
                coef,
            })
    }

    /// The first `t` experiments as a new dataset.
    pub fn prefix(&self, t: usize) -> Self {
        let t = t.min(self.len());
        let dim = self.dim();
        let mut points = PointSet::new(dim).expect("dimension already validated");
        for p in self.index.points().iter().take(t) {
            points.push(p).expect("points already validated");
        }
        Self::from_parts(
            points,
            self.outcomes[..t].to_vec(),
            self.coefs[..t].to_vec(),
        )
    }

    /// Aggregates over the neighbors of `x`.
    pub fn neighbor_stats(&self, x: &[f64], delta: KernelWidth) -> Result<NeighborStats> {
        let mut stats = NeighborStats::default();
        self.index.for_each_in_radius(x, delta, |id| {
            stats.push(self.outcomes[id], self.coefs[id]);
        })?;
        Ok(stats)
    }

    /// `Δ` for this dataset. Scheduled widths shrink the sample count by
    /// `1 − B̄` (or `shrink_override` when given).
    pub fn resolve_delta(
        &self,
        mode: DeltaMode,
        shrink_override: Option<f64>,
    ) -> Result<KernelWidth> {
        match mode {
            DeltaMode::Fixed(d) => Ok(d),
            DeltaMode::Scheduled { lipschitz } => {
                let shrink = shrink_override
                    .unwrap_or(1.0 - self.mean_b)
                    .clamp(1e-12, 1.0);
                delta_schedule(self.len().max(1), self.dim(), lipschitz, shrink)
            }
        }
    }
}

/// Neighborhood aggregates: counts and compensated coefficient sums.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NeighborStats {
    pub count: usize,
    pub successes: usize,
    sum_a: Neumaier,
    sum_b: Neumaier,
}

impl NeighborStats {
    pub fn push(&mut self, success: bool, coef: Coefficients) {
        self.count += 1;
        self.successes += success as usize;
        self.sum_a.add(coef.a);
        self.sum_b.add(coef.b);
    }

    /// `(Ā, B̄)`; `None` with no neighbors.
    pub fn mean_coefficients(&self) -> Option<(f64, f64)> {
        (self.count > 0).then(|| {
            let n = self.count as f64;
            (self.sum_a.value() / n, self.sum_b.value() / n)
        })
    }

    /// Stats after swapping success and failure: `S → n − S`, `B → 1 − A − B`.
    pub fn mirrored(&self) -> Self {
        let mut sum_b = Neumaier::default();
        sum_b.add(self.count as f64);
        sum_b.add(-self.sum_a.value());
        sum_b.add(-self.sum_b.value());
        Self {
            count: self.count,
            successes: self.count - self.successes,
            sum_a: self.sum_a,
            sum_b,
        }
    }
}

/// Posterior from neighborhood aggregates with constant `(Ā, B̄)`.
pub fn posterior_from_stats(stats: &NeighborStats, prior: BetaParams) -> Result<BetaMixture> {
    let Some((a, b)) = stats.mean_coefficients() else {
        return Ok(BetaMixture::from_prior(prior));
    };
    let coef = Coefficients::new(a, b)?;
    if (a + b - 1.0).abs() <= CERTAINTY_TOL && b < 1.0 {
        return posterior_simplified(stats.count, stats.successes, b.max(0.0), prior);
    }
    let failures = stats.count - stats.successes;
    let outcomes = std::iter::repeat_n(
        ContextualOutcome {
            success: true,
            coef,
        },
        stats.successes,
    )
    .chain(std::iter::repeat_n(
        ContextualOutcome {
            success: false,
            coef,
        },
        failures,
    ));
    posterior_general(outcomes, prior)
}

/// CSBP posterior at `x` with kernel width `delta`.
pub fn posterior_csbp(
    data: &DynamicDataset,
    x: &[f64],
    delta: KernelWidth,
    prior: BetaParams,
) -> Result<BetaMixture> {
    posterior_from_stats(&data.neighbor_stats(x, delta)?, prior)
}

/// [`posterior_csbp`] with `Δ = delta_schedule(t, d, L, 1 − B̄)` where `B̄`
/// is the dataset-wide mean lift.
pub fn posterior_csbp_scheduled(
    data: &DynamicDataset,
    x: &[f64],
    lipschitz: f64,
    prior: BetaParams,
) -> Result<BetaMixture> {
    let delta = data.resolve_delta(DeltaMode::Scheduled { lipschitz }, None)?;
    posterior_csbp(data, x, delta, prior)
}

/// CSBP for impossibility-invariant data (`π = 0` forces failure whatever
/// the context). Runs inference on `1 − π` with success and failure swapped
/// and `B → 1 − A − B`, then reflects the result back onto `π`.
pub fn posterior_csbp_mirrored(
    data: &DynamicDataset,
    x: &[f64],
    delta: KernelWidth,
    prior: BetaParams,
) -> Result<BetaMixture> {
    let stats = data.neighbor_stats(x, delta)?.mirrored();
    let flipped_prior = BetaParams {
        alpha: prior.beta,
        beta: prior.alpha,
    };
    Ok(posterior_from_stats(&stats, flipped_prior)?.reflect())
}

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = Neumaier::default();
    for v in values {
        acc.add(v);
    }
    acc.value()
}
