//! Error-curve sweeps over the number of tests.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;

use super::sampling::{mix_seed, sample_dynamic, sample_static, stream_rng, LiftSampler};
use super::targets::{query_grid, TargetFunction};
use crate::beta::BetaParams;
use crate::dynamic::{posterior_csbp, DynamicDataset};
use crate::error::{Error, Result};
use crate::static_sbp::{posterior_static, DeltaMode, StaticDataset};

/// `E[(θ − p)²]` for a posterior with mean `m1` and raw second moment `m2`.
pub fn l2_error_at(m1: f64, m2: f64, p_true: f64) -> f64 {
    (m2 - 2.0 * p_true * m1 + p_true * p_true).max(0.0)
}

/// Which observation model a sweep samples from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Setting {
    Static,
    Dynamic { lift: LiftSampler, noise_sd: f64 },
}

#[derive(Debug, Clone)]
pub struct ConvergenceConfig {
    pub setting: Setting,
    pub target: TargetFunction,
    pub t_grid: Vec<usize>,
    pub reps: usize,
    /// Query points per axis.
    pub query_grid_size: usize,
    pub delta_mode: DeltaMode,
    pub prior: BetaParams,
    pub seed: u64,
    /// Record wall-clock query time. Timings make output non-reproducible.
    pub record_runtime: bool,
}

impl ConvergenceConfig {
    pub fn new(setting: Setting, target: TargetFunction, t_grid: Vec<usize>) -> Self {
        let query_grid_size = default_grid_size(target.dim());
        let delta_mode = target.scheduled_mode();
        Self {
            setting,
            target,
            t_grid,
            reps: 20,
            query_grid_size,
            delta_mode,
            prior: BetaParams::uniform(),
            seed: DEFAULT_SEED,
            record_runtime: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.t_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(
                "t grid must be strictly increasing".into(),
            ));
        }
        if self.reps == 0 {
            return Err(Error::InvalidConfig("reps must be positive".into()));
        }
        if self.query_grid_size == 0 {
            return Err(Error::InvalidConfig("query grid must be non-empty".into()));
        }
        Ok(())
    }
}

/// Default seed for every command and experiment.
pub const DEFAULT_SEED: u64 = 20_200_601;

/// 101 points in 1D, 51 per axis in 2D and above.
pub fn default_grid_size(dim: usize) -> usize {
    if dim == 1 {
        101
    } else {
        51
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub t: usize,
    pub mean_l2: f64,
    pub std_l2: f64,
    /// Mean wall-clock time per query, when recorded.
    pub runtime_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCurve {
    pub entries: Vec<CurvePoint>,
    pub reps: usize,
    pub seed: u64,
}

impl ErrorCurve {
    pub const CSV_HEADER: &'static str = "t,mean_l2,std_l2,runtime_ms";

    /// CSV text; `runtime_ms` is left empty when not recorded.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for e in &self.entries {
            let runtime = e.runtime_ms.map(|r| format!("{r:.6}")).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{:.12e},{:.12e},{}",
                e.t, e.mean_l2, e.std_l2, runtime
            );
        }
        out
    }

    pub fn ts(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.t as f64).collect()
    }

    pub fn errors(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.mean_l2).collect()
    }

    pub fn error_at(&self, t: usize) -> Option<f64> {
        self.entries.iter().find(|e| e.t == t).map(|e| e.mean_l2)
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidConfig(
            "need at least two points for a slope".into(),
        ));
    }
    if let Some(&bad) = xs.iter().chain(ys).find(|v| **v <= 0.0 || v.is_nan()) {
        return Err(Error::InvalidConfig(format!(
            "nonpositive value {bad} in log-log fit"
        )));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidConfig("all x values identical".into()));
    }
    Ok(sxy / sxx)
}

/// Slope of `ln mean_l2` against `ln t`; requires at least three entries.
pub fn fit_loglog_slope(curve: &ErrorCurve) -> Result<f64> {
    if curve.entries.len() < 3 {
        return Err(Error::InvalidConfig(
            "need at least three curve entries".into(),
        ));
    }
    loglog_slope(&curve.ts(), &curve.errors())
}

/// Slope over the last `k` entries.
pub fn tail_slope(curve: &ErrorCurve, k: usize) -> Result<f64> {
    let start = curve.entries.len().saturating_sub(k);
    let tail = ErrorCurve {
        entries: curve.entries[start..].to_vec(),
        ..curve.clone()
    };
    loglog_slope(&tail.ts(), &tail.errors())
}

/// A sampled dataset of either kind.
#[derive(Debug, Clone)]
pub enum Sampled {
    Static(StaticDataset),
    Dynamic(DynamicDataset),
}

impl Sampled {
    pub fn draw(setting: Setting, f: &TargetFunction, t: usize, seed: u64, stream: u64) -> Self {
        let mut rng = stream_rng(seed, stream);
        match setting {
            Setting::Static => Sampled::Static(sample_static(f, t, &mut rng)),
            Setting::Dynamic { lift, noise_sd } => {
                Sampled::Dynamic(sample_dynamic(f, t, lift, noise_sd, &mut rng).data)
            }
        }
    }

    /// Posterior `(mean, second moment)` at `x`.
    pub fn moments(&self, x: &[f64], mode: DeltaMode, prior: BetaParams) -> Result<(f64, f64)> {
        match self {
            Sampled::Static(d) => {
                let post = posterior_static(d, x, d.resolve_delta(mode)?, prior)?;
                Ok((post.mean(), post.moment2()))
            }
            Sampled::Dynamic(d) => {
                let post = posterior_csbp(d, x, d.resolve_delta(mode, None)?, prior)?;
                Ok((post.mean(), post.moment2()))
            }
        }
    }
}

/// Seed for the datasets of size `t`; replication `r` uses stream `r`.
pub fn seed_for_size(seed: u64, t: usize) -> u64 {
    mix_seed(seed, t as u64)
}

struct RepResult {
    mean_l2: f64,
    runtime_ms: f64,
}

fn run_rep(
    cfg: &ConvergenceConfig,
    grid: &[Vec<f64>],
    truth: &[f64],
    t: usize,
    rep: usize,
) -> Result<RepResult> {
    let data = Sampled::draw(
        cfg.setting,
        &cfg.target,
        t,
        seed_for_size(cfg.seed, t),
        rep as u64,
    );
    let start = Instant::now();
    let mut total = 0.0;
    for (x, &p) in grid.iter().zip(truth) {
        let (m1, m2) = data.moments(x, cfg.delta_mode, cfg.prior)?;
        total += l2_error_at(m1, m2, p);
    }
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    Ok(RepResult {
        mean_l2: total / grid.len() as f64,
        runtime_ms: elapsed / grid.len() as f64,
    })
}

/// Grid-averaged L2 error per sample size, averaged over replications.
pub fn run_convergence(cfg: &ConvergenceConfig) -> Result<ErrorCurve> {
    cfg.validate()?;
    let grid = query_grid(cfg.target.dim(), cfg.query_grid_size);
    let truth: Vec<f64> = grid.iter().map(|x| cfg.target.eval(x)).collect();
    let mut entries = Vec::with_capacity(cfg.t_grid.len());
    for &t in &cfg.t_grid {
        let reps: Vec<RepResult> = (0..cfg.reps)
            .into_par_iter()
            .map(|rep| run_rep(cfg, &grid, &truth, t, rep))
            .collect::<Result<_>>()?;
        let n = reps.len() as f64;
        let mean = reps.iter().map(|r| r.mean_l2).sum::<f64>() / n;
        let var = reps.iter().map(|r| (r.mean_l2 - mean).powi(2)).sum::<f64>() / n;
        let runtime = reps.iter().map(|r| r.runtime_ms).sum::<f64>() / n;
        entries.push(CurvePoint {
            t,
            mean_l2: mean,
            std_l2: var.sqrt(),
            runtime_ms: cfg.record_runtime.then_some(runtime),
        });
    }
    Ok(ErrorCurve {
        entries,
        reps: cfg.reps,
        seed: cfg.seed,
    })
}

/// One row of a function-reconstruction dump.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionRow {
    pub x: Vec<f64>,
    pub post_mean: f64,
    pub post_var: f64,
    pub true_pi: f64,
}

/// Posterior mean and variance over a query grid.
pub fn reconstruct(
    data: &Sampled,
    target: &TargetFunction,
    grid_size: usize,
    mode: DeltaMode,
    prior: BetaParams,
) -> Result<Vec<ReconstructionRow>> {
    query_grid(target.dim(), grid_size)
        .into_iter()
        .map(|x| {
            let (m1, m2) = data.moments(&x, mode, prior)?;
            let true_pi = target.eval(&x);
            Ok(ReconstructionRow {
                x,
                post_mean: m1,
                post_var: (m2 - m1 * m1).max(0.0),
                true_pi,
            })
        })
        .collect()
}

/// CSV with header `x,post_mean,post_var,true_pi` (1D) or
/// `x1,...,xd,post_mean,post_var,true_pi`.
pub fn reconstruction_csv(rows: &[ReconstructionRow]) -> String {
    let dim = rows.first().map_or(1, |r| r.x.len());
    let mut out = if dim == 1 {
        "x".to_string()
    } else {
        (1..=dim)
            .map(|k| format!("x{k}"))
            .collect::<Vec<_>>()
            .join(",")
    };
    out.push_str(",post_mean,post_var,true_pi\n");
    for r in rows {
        for v in &r.x {
            let _ = write!(out, "{v},");
        }
        let _ = writeln!(
            out,
            "{:.12e},{:.12e},{:.12e}",
            r.post_mean, r.post_var, r.true_pi
        );
    }
    out
}

/// Per-query static inference time over sample sizes, single-threaded.
///
/// Dataset generation and index construction are excluded. Each size runs
/// `queries` random query points, repeated until at least `min_ms` elapse.
pub fn bench_runtime(
    target: &TargetFunction,
    t_grid: &[usize],
    queries: usize,
    lipschitz: f64,
    seed: u64,
    min_ms: f64,
) -> Result<ErrorCurve> {
    use rand::Rng;
    let mut entries = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let data = sample_static(target, t, &mut stream_rng(seed_for_size(seed, t), 0));
        let delta = data.resolve_delta(DeltaMode::Scheduled { lipschitz })?;
        let mut rng = stream_rng(seed_for_size(seed, t), 1);
        let qs: Vec<Vec<f64>> = (0..queries)
            .map(|_| (0..target.dim()).map(|_| rng.random::<f64>()).collect())
            .collect();
        let truth: Vec<f64> = qs.iter().map(|q| target.eval(q)).collect();
        let mut done = 0usize;
        let mut err = 0.0;
        let start = Instant::now();
        loop {
            for (q, &p) in qs.iter().zip(&truth) {
                let post = posterior_static(&data, q, delta, BetaParams::uniform())?;
                err += l2_error_at(post.mean(), post.moment2(), p);
            }
            done += qs.len();
            if start.elapsed().as_secs_f64() * 1e3 >= min_ms {
                break;
            }
        }
        let elapsed = start.elapsed().as_secs_f64() * 1e3;
        entries.push(CurvePoint {
            t,
            mean_l2: err / done as f64,
            std_l2: 0.0,
            runtime_ms: Some(elapsed / done as f64),
        });
    }
    Ok(ErrorCurve {
        entries,
        reps: 1,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::targets::synth_1d;
    use approx::assert_relative_eq;

    #[test]
    fn l2_examples() {
        assert_relative_eq!(
            l2_error_at(0.5, 1.0 / 3.0, 0.5),
            1.0 / 12.0,
            epsilon = 1e-15
        );
        let tight = BetaParams {
            alpha: 1e6,
            beta: 1e6,
        };
        assert!(l2_error_at(tight.mean(), tight.moment2(), 0.5) < 1e-6);
        assert_relative_eq!(l2_error_at(0.375, 0.2, 0.4), 0.06, epsilon = 1e-15);
    }

    fn curve(points: &[(usize, f64)]) -> ErrorCurve {
        ErrorCurve {
            entries: points
                .iter()
                .map(|&(t, e)| CurvePoint {
                    t,
                    mean_l2: e,
                    std_l2: 0.0,
                    runtime_ms: None,
                })
                .collect(),
            reps: 1,
            seed: 0,
        }
    }

    #[test]
    fn slope_examples() {
        let c = curve(&[10, 100, 1000].map(|t| (t, (t as f64).powf(-2.0 / 3.0))));
        assert_relative_eq!(fit_loglog_slope(&c).unwrap(), -2.0 / 3.0, epsilon = 1e-12);
        let c = curve(&[(10, 0.3), (100, 0.3), (1000, 0.3)]);
        assert_relative_eq!(fit_loglog_slope(&c).unwrap(), 0.0, epsilon = 1e-12);
        let c = curve(&[10, 100, 1000].map(|t| (t, 4.0 / t as f64)));
        assert_relative_eq!(fit_loglog_slope(&c).unwrap(), -1.0, epsilon = 1e-12);
    }

    #[test]
    fn slope_errors() {
        assert!(fit_loglog_slope(&curve(&[(10, 0.1), (100, 0.0), (1000, 0.1)])).is_err());
        assert!(fit_loglog_slope(&curve(&[(10, 0.1), (100, 0.1)])).is_err());
    }

    #[test]
    fn smoke_run() {
        let mut cfg = ConvergenceConfig::new(Setting::Static, synth_1d(), vec![10]);
        cfg.reps = 1;
        cfg.query_grid_size = 11;
        let c = run_convergence(&cfg).unwrap();
        assert_eq!(c.entries.len(), 1);
        let e = c.entries[0].mean_l2;
        assert!((0.0..=1.0).contains(&e));
    }

    #[test]
    fn rejects_unsorted_grid() {
        let cfg = ConvergenceConfig::new(Setting::Static, synth_1d(), vec![100, 10]);
        assert!(run_convergence(&cfg).is_err());
    }

    #[test]
    fn runs_are_deterministic() {
        let mut cfg = ConvergenceConfig::new(
            Setting::Dynamic {
                lift: LiftSampler::Uniform { lo: 0.0, hi: 1.0 },
                noise_sd: 0.05,
            },
            synth_1d(),
            vec![50, 200],
        );
        cfg.reps = 4;
        assert_eq!(
            run_convergence(&cfg).unwrap(),
            run_convergence(&cfg).unwrap()
        );
    }

    #[test]
    fn csv_layout() {
        let c = curve(&[(10, 0.5)]);
        assert_eq!(
            c.to_csv(),
            "t,mean_l2,std_l2,runtime_ms\n10,5.000000000000e-1,0.000000000000e0,\n"
        );
        let rows = vec![ReconstructionRow {
            x: vec![0.5, 0.25],
            post_mean: 0.5,
            post_var: 0.1,
            true_pi: 0.4,
        }];
        assert!(
            reconstruction_csv(&rows).starts_with("x1,x2,post_mean,post_var,true_pi\n0.5,0.25,")
        );
    }

    #[test]
    fn posterior_mean_stays_in_range() {
        let data = Sampled::draw(Setting::Static, &synth_1d(), 500, 3, 0);
        let rows = reconstruct(
            &data,
            &synth_1d(),
            101,
            DeltaMode::default(),
            BetaParams::uniform(),
        )
        .unwrap();
        assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r.post_mean)));
    }
}
