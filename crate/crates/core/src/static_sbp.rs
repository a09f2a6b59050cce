//! Smooth Beta Process posterior for plain Bernoulli tests.
//!
//! Every experiment within ℓ∞ distance Δ of the query point is counted as if
//! it had been performed at the query point, giving the conjugate update
//! `Beta(α + successes, β + failures)` over that neighborhood.

use crate::beta::BetaParams;
use crate::error::{Error, Result};
use crate::neighbor::{check_point, delta_schedule, KernelWidth, NeighborIndex, PointSet};

/// One Bernoulli test `(x, s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticExperiment {
    pub x: Vec<f64>,
    pub success: bool,
}

/// Experiments plus a neighbor index over their locations. Outcome `k`
/// belongs to point id `k` of the index.
#[derive(Debug, Clone)]
pub struct StaticDataset {
    index: NeighborIndex,
    outcomes: Vec<bool>,
}

/// How the kernel width is chosen for a query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaMode {
    /// `Δ` from [`delta_schedule`] with the given Lipschitz constant.
    Scheduled { lipschitz: f64 },
    /// Sample-size independent width.
    Fixed(KernelWidth),
}

impl Default for DeltaMode {
    fn default() -> Self {
        DeltaMode::Scheduled { lipschitz: 1.0 }
    }
}

impl StaticDataset {
    pub fn new(dim: usize, experiments: &[StaticExperiment]) -> Result<Self> {
        let mut points = PointSet::new(dim)?;
        let mut outcomes = Vec::with_capacity(experiments.len());
        for e in experiments {
            points.push(&e.x)?;
            outcomes.push(e.success);
        }
        Ok(Self::from_parts(points, outcomes))
    }

    /// Panics if lengths differ.
    pub fn from_parts(points: PointSet, outcomes: Vec<bool>) -> Self {
        assert_eq!(points.len(), outcomes.len(), "one outcome per point");
        Self {
            index: NeighborIndex::build(points),
            outcomes,
        }
    }

    pub fn empty(dim: usize) -> Result<Self> {
        Ok(Self::from_parts(PointSet::new(dim)?, Vec::new()))
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

    pub fn experiments(&self) -> impl Iterator<Item = StaticExperiment> + '_ {
        self.index
            .points()
            .iter()
            .zip(&self.outcomes)
            .map(|(x, &success)| StaticExperiment {
                x: x.to_vec(),
                success,
            })
    }

    /// `(neighbors, successes)` within `delta` of `x`.
    pub fn neighbor_counts(&self, x: &[f64], delta: KernelWidth) -> Result<(usize, usize)> {
        let (mut n, mut s) = (0, 0);
        self.index.for_each_in_radius(x, delta, |id| {
            n += 1;
            s += self.outcomes[id] as usize;
        })?;
        Ok((n, s))
    }

    /// Kernel width used for a query under `mode`.
    pub fn resolve_delta(&self, mode: DeltaMode) -> Result<KernelWidth> {
        match mode {
            DeltaMode::Fixed(d) => Ok(d),
            DeltaMode::Scheduled { lipschitz } => {
                delta_schedule(self.len().max(1), self.dim(), lipschitz, 1.0)
            }
        }
    }
}

/// `Beta(α + S_x, β + n − S_x)` over the `n` experiments within `delta` of `x`,
/// `S_x` of which succeeded. No neighbors returns the prior.
pub fn posterior_static(
    data: &StaticDataset,
    x: &[f64],
    delta: KernelWidth,
    prior: BetaParams,
) -> Result<BetaParams> {
    let (n, s) = data.neighbor_counts(x, delta)?;
    Ok(BetaParams {
        alpha: prior.alpha + s as f64,
        beta: prior.beta + (n - s) as f64,
    })
}

/// [`posterior_static`] with `Δ = delta_schedule(t, d, lipschitz, 1)`.
pub fn posterior_static_scheduled(
    data: &StaticDataset,
    x: &[f64],
    lipschitz: f64,
    prior: BetaParams,
) -> Result<BetaParams> {
    let delta = data.resolve_delta(DeltaMode::Scheduled { lipschitz })?;
    posterior_static(data, x, delta, prior)
}

/// Posterior under either kernel-width mode.
pub fn posterior_static_with(
    data: &StaticDataset,
    x: &[f64],
    mode: DeltaMode,
    prior: BetaParams,
) -> Result<BetaParams> {
    posterior_static(data, x, data.resolve_delta(mode)?, prior)
}

/// Parse a 0/1 outcome given as a float.
pub fn outcome_from_f64(v: f64) -> Result<bool> {
    match v {
        0.0 => Ok(false),
        1.0 => Ok(true),
        v => Err(Error::InvalidOutcome(v)),
    }
}

impl StaticExperiment {
    pub fn new(x: Vec<f64>, success: bool) -> Self {
        Self { x, success }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        check_point(dim, &self.x)
    }
}
