//! Rehabilitation case study: success curves that degrade with fatigue.
//!
//! A patient runs `H` sessions of `U` exercises. Each session starts rested
//! (level 0); after every exercise the fatigue level moves up by one with
//! probability `p`, stopping at level `Z`. Level `z` lifts the most-fatigued
//! curve `π_Z(x) = 1 − x` to `(1 − B_z)π_Z + B_z`. The level is never observed,
//! so exercise `u` is modelled with the belief-weighted lift
//! `B̃_u = Σ_z P(z at u)·B_z`, which is certainty invariant.

use std::fmt::Write as _;

use rand::Rng;

use super::convergence::l2_error_at;
use super::sampling::stream_rng;
use super::targets::{fatigued_base, query_grid};
use crate::beta::BetaParams;
use crate::dynamic::{posterior_csbp, Coefficients, DynamicDataset};
use crate::error::{Error, Result};
use crate::neighbor::PointSet;
use crate::static_sbp::DeltaMode;

#[derive(Debug, Clone, PartialEq)]
pub struct FatigueChainConfig {
    /// Highest fatigue level `Z`.
    pub levels: usize,
    /// Per-exercise probability of moving up one level.
    pub p: f64,
    pub sessions: usize,
    pub exercises: usize,
    /// `B_0..=B_Z`.
    pub b_levels: Vec<f64>,
}

impl Default for FatigueChainConfig {
    fn default() -> Self {
        Self {
            levels: 5,
            p: 0.1,
            sessions: 40,
            exercises: 20,
            b_levels: vec![0.5, 0.4, 0.3, 0.2, 0.1, 0.0],
        }
    }
}

impl FatigueChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.b_levels.len() != self.levels + 1 {
            return Err(Error::InvalidConfig(format!(
                "expected {} lift levels, got {}",
                self.levels + 1,
                self.b_levels.len()
            )));
        }
        if self.b_levels.iter().any(|b| !(0.0..=1.0).contains(b))
            || self.b_levels.windows(2).any(|w| w[1] > w[0])
        {
            return Err(Error::InvalidConfig(
                "lift levels must be nonincreasing in [0, 1]".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::InvalidProbability(self.p));
        }
        Ok(())
    }

    pub fn total_experiments(&self) -> usize {
        self.sessions * self.exercises
    }
}

/// Fatigue distribution before each exercise of a session (`U` rows of
/// `Z + 1` probabilities).
pub fn fatigue_beliefs(cfg: &FatigueChainConfig) -> Vec<Vec<f64>> {
    let z = cfg.levels;
    let mut state = vec![0.0; z + 1];
    state[0] = 1.0;
    let mut out = Vec::with_capacity(cfg.exercises);
    for _ in 0..cfg.exercises {
        out.push(state.clone());
        let mut next = vec![0.0; z + 1];
        for (level, &mass) in state.iter().enumerate() {
            if level == z {
                next[z] += mass;
            } else {
                next[level] += (1.0 - cfg.p) * mass;
                next[level + 1] += cfg.p * mass;
            }
        }
        state = next;
    }
    out
}

/// Belief-weighted lift `B̃_u` per exercise.
pub fn effective_lifts(cfg: &FatigueChainConfig) -> Vec<f64> {
    fatigue_beliefs(cfg)
        .iter()
        .map(|belief| belief.iter().zip(&cfg.b_levels).map(|(p, b)| p * b).sum())
        .collect()
}

/// Simulated sessions in chronological order.
pub fn simulate_sessions(cfg: &FatigueChainConfig, seed: u64) -> Result<DynamicDataset> {
    cfg.validate()?;
    let lifts = effective_lifts(cfg);
    let base = fatigued_base();
    let mut rng = stream_rng(seed, 0);
    let mut points = PointSet::new(1)?;
    let mut outcomes = Vec::with_capacity(cfg.total_experiments());
    let mut coefs = Vec::with_capacity(cfg.total_experiments());
    for _ in 0..cfg.sessions {
        for &b in &lifts {
            let x = rng.random::<f64>();
            let p = (1.0 - b) * base.eval(&[x]) + b;
            outcomes.push(rng.random::<f64>() < p);
            coefs.push(Coefficients::lift(b)?);
            points.push(&[x])?;
        }
    }
    Ok(DynamicDataset::from_parts(points, outcomes, coefs))
}

#[derive(Debug, Clone)]
pub struct RehabOptions {
    pub query_grid_size: usize,
    /// Prefix sizes at which the rested-state error is evaluated.
    pub t_eval: Vec<usize>,
    pub lipschitz: f64,
}

impl Default for RehabOptions {
    fn default() -> Self {
        Self {
            query_grid_size: 101,
            t_eval: vec![20, 40, 80, 160, 320, 640, 800],
            lipschitz: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RehabReport {
    pub data: DynamicDataset,
    pub grid: Vec<f64>,
    /// Posterior mean and variance of the most-fatigued curve.
    pub base_mean: Vec<f64>,
    pub base_var: Vec<f64>,
    /// `(1 − B_0)·base_mean + B_0`.
    pub rested_mean: Vec<f64>,
    pub rested_true: Vec<f64>,
    pub fatigued_true: Vec<f64>,
    /// `(t, grid-averaged rested-state L2 error)`.
    pub rested_l2: Vec<(usize, f64)>,
}

impl RehabReport {
    pub fn curves_csv(&self) -> String {
        let mut out =
            String::from("x,base_post_mean,base_post_var,base_true,rested_post_mean,rested_true\n");
        for k in 0..self.grid.len() {
            let _ = writeln!(
                out,
                "{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
                self.grid[k],
                self.base_mean[k],
                self.base_var[k],
                self.fatigued_true[k],
                self.rested_mean[k],
                self.rested_true[k]
            );
        }
        out
    }

    pub fn error_csv(&self) -> String {
        let mut out = String::from("t,rested_l2\n");
        for (t, e) in &self.rested_l2 {
            let _ = writeln!(out, "{t},{e:.12e}");
        }
        out
    }

    pub fn error_at(&self, t: usize) -> Option<f64> {
        self.rested_l2
            .iter()
            .find(|(s, _)| *s == t)
            .map(|&(_, e)| e)
    }
}

/// Grid-averaged L2 error of the reconstructed rested curve from the first
/// `t` experiments.
fn rested_error(data: &DynamicDataset, grid: &[f64], b0: f64, opts: &RehabOptions) -> Result<f64> {
    let delta = data.resolve_delta(
        DeltaMode::Scheduled {
            lipschitz: opts.lipschitz,
        },
        None,
    )?;
    let mut total = 0.0;
    for &x in grid {
        let post = posterior_csbp(data, &[x], delta, BetaParams::uniform())?;
        // Rested curve is affine in the base curve, so the error scales.
        total += (1.0 - b0).powi(2) * l2_error_at(post.mean(), post.moment2(), 1.0 - x);
    }
    Ok(total / grid.len() as f64)
}

pub fn rehab_simulation(
    cfg: &FatigueChainConfig,
    seed: u64,
    opts: &RehabOptions,
) -> Result<RehabReport> {
    let data = simulate_sessions(cfg, seed)?;
    let b0 = cfg.b_levels[0];
    let grid: Vec<f64> = query_grid(1, opts.query_grid_size)
        .into_iter()
        .map(|p| p[0])
        .collect();
    let delta = data.resolve_delta(
        DeltaMode::Scheduled {
            lipschitz: opts.lipschitz,
        },
        None,
    )?;
    let mut base_mean = Vec::with_capacity(grid.len());
    let mut base_var = Vec::with_capacity(grid.len());
    for &x in &grid {
        let post = posterior_csbp(&data, &[x], delta, BetaParams::uniform())?;
        base_mean.push(post.mean());
        base_var.push(post.variance());
    }
    let rested_mean = base_mean.iter().map(|m| (1.0 - b0) * m + b0).collect();
    let fatigued_true: Vec<f64> = grid.iter().map(|x| 1.0 - x).collect();
    let rested_true = fatigued_true.iter().map(|f| (1.0 - b0) * f + b0).collect();
    let rested_l2 = opts
        .t_eval
        .iter()
        .filter(|&&t| t > 0 && t <= data.len())
        .map(|&t| Ok((t, rested_error(&data.prefix(t), &grid, b0, opts)?)))
        .collect::<Result<_>>()?;
    Ok(RehabReport {
        data,
        grid,
        base_mean,
        base_var,
        rested_mean,
        rested_true,
        fatigued_true,
        rested_l2,
    })
}
