//! Excess Bayes risk of the thresholded SBP classifier.

use std::fmt::Write as _;

use rayon::prelude::*;

use super::convergence::seed_for_size;
use super::sampling::{sample_static, stream_rng};
use super::targets::{query_grid, TargetFunction};
use crate::beta::BetaParams;
use crate::classify::{bayes_optimal, classify, informative_prior, no_prior, risk};
use crate::error::Result;
use crate::static_sbp::{posterior_static, DeltaMode};

/// Prior used at every query point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriorMode {
    /// `Beta(ε, ε)`: majority vote over the neighborhood.
    NoPrior,
    Uniform,
    /// Mean `π(x)`, variance `fraction · π(x)(1 − π(x))`.
    Informative {
        fraction: f64,
    },
}

impl PriorMode {
    pub fn label(&self) -> String {
        match self {
            PriorMode::NoPrior => "no_prior".into(),
            PriorMode::Uniform => "uniform".into(),
            PriorMode::Informative { fraction } => format!("informative_{fraction}"),
        }
    }

    fn prior_at(&self, p: f64) -> Result<BetaParams> {
        match *self {
            PriorMode::NoPrior => Ok(no_prior()),
            PriorMode::Uniform => Ok(BetaParams::uniform()),
            PriorMode::Informative { fraction } => {
                // Keep the mean strictly inside (0, 1).
                let m = p.clamp(1e-6, 1.0 - 1e-6);
                informative_prior(m, fraction * m * (1.0 - m))
            }
        }
    }
}

/// Default variance fractions for the informative prior.
pub const DEFAULT_FRACTIONS: [f64; 3] = [0.25, 0.5, 0.9];

#[derive(Debug, Clone, PartialEq)]
pub struct RiskPoint {
    pub t: usize,
    pub mode: PriorMode,
    pub mean_excess: f64,
    pub std_excess: f64,
}

#[derive(Debug, Clone)]
pub struct ClassificationConfig {
    pub target: TargetFunction,
    pub t_grid: Vec<usize>,
    pub seeds: usize,
    pub query_grid_size: usize,
    pub delta_mode: DeltaMode,
    pub modes: Vec<PriorMode>,
    pub seed: u64,
}

/// Grid-averaged `R(s̃, x) − R*(x)` using the exact risk at `π(x)`.
pub fn excess_risk(
    data: &crate::static_sbp::StaticDataset,
    target: &TargetFunction,
    grid: &[Vec<f64>],
    mode: PriorMode,
    delta_mode: DeltaMode,
) -> Result<f64> {
    let delta = data.resolve_delta(delta_mode)?;
    let mut total = 0.0;
    for x in grid {
        let p = target.eval(x);
        let post = posterior_static(data, x, delta, mode.prior_at(p)?)?;
        total += risk(classify(post), p) - bayes_optimal(p).1;
    }
    Ok(total / grid.len() as f64)
}

/// Mean excess risk per `(t, mode)`; all modes see the same datasets.
pub fn run_classification(cfg: &ClassificationConfig) -> Result<Vec<RiskPoint>> {
    let grid = query_grid(cfg.target.dim(), cfg.query_grid_size);
    let mut out = Vec::new();
    for &t in &cfg.t_grid {
        let per_seed: Vec<Vec<f64>> = (0..cfg.seeds)
            .into_par_iter()
            .map(|rep| {
                let mut rng = stream_rng(seed_for_size(cfg.seed, t), rep as u64);
                let data = sample_static(&cfg.target, t, &mut rng);
                cfg.modes
                    .iter()
                    .map(|&m| excess_risk(&data, &cfg.target, &grid, m, cfg.delta_mode))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?;
        for (k, &mode) in cfg.modes.iter().enumerate() {
            let n = per_seed.len() as f64;
            let mean = per_seed.iter().map(|r| r[k]).sum::<f64>() / n;
            let var = per_seed.iter().map(|r| (r[k] - mean).powi(2)).sum::<f64>() / n;
            out.push(RiskPoint {
                t,
                mode,
                mean_excess: mean,
                std_excess: var.sqrt(),
            });
        }
    }
    Ok(out)
}

pub fn risk_csv(points: &[RiskPoint]) -> String {
    let mut out = String::from("t,mode,mean_excess_risk,std_excess_risk\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{:.12e},{:.12e}",
            p.t,
            p.mode.label(),
            p.mean_excess,
            p.std_excess
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::targets::synth_1d;

    #[test]
    fn excess_risk_is_nonnegative() {
        let f = synth_1d();
        let grid = query_grid(1, 51);
        let data = sample_static(&f, 300, &mut stream_rng(1, 0));
        for mode in [
            PriorMode::NoPrior,
            PriorMode::Uniform,
            PriorMode::Informative { fraction: 0.5 },
        ] {
            let r = excess_risk(&data, &f, &grid, mode, DeltaMode::default()).unwrap();
            assert!(r >= -1e-15, "{mode:?}: {r}");
        }
    }

    #[test]
    fn perfect_prior_without_data_is_bayes_optimal() {
        let f = synth_1d();
        let grid = query_grid(1, 51);
        let data = sample_static(&f, 0, &mut stream_rng(1, 0));
        let r = excess_risk(
            &data,
            &f,
            &grid,
            PriorMode::Informative { fraction: 0.5 },
            DeltaMode::default(),
        )
        .unwrap();
        assert_eq!(r, 0.0);
    }
}
