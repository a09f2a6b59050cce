//! Synthetic experiments: targets, samplers, error curves, classification
//! risk, the rehabilitation case study and runtime measurements.
//!
//! All randomness derives from a single `u64` seed. Datasets of size `t`
//! use the seed `mix_seed(seed, t)`; replication `r` reads ChaCha8 stream `r`
//! of that seed, so replications can run in any order or in parallel and
//! still reproduce bit for bit.

pub mod classification;
pub mod convergence;
pub mod rehab;
pub mod sampling;
pub mod targets;

pub use classification::{run_classification, ClassificationConfig, PriorMode, RiskPoint};
pub use convergence::{
    bench_runtime, fit_loglog_slope, l2_error_at, loglog_slope, run_convergence, tail_slope,
    ConvergenceConfig, CurvePoint, ErrorCurve, Sampled, Setting, DEFAULT_SEED,
};
pub use rehab::{fatigue_beliefs, rehab_simulation, FatigueChainConfig, RehabOptions, RehabReport};
pub use sampling::{sample_dynamic, sample_static, stream_rng, DynamicSample, LiftSampler};
pub use targets::{synth_1d, synth_2d, TargetFunction};

/// `n` log-spaced sample sizes from `10^lo` to `10^hi`, rounded.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<usize> {
    if n == 1 {
        return vec![10f64.powf(lo).round() as usize];
    }
    let mut out: Vec<usize> = (0..n)
        .map(|k| {
            10f64
                .powf(lo + (hi - lo) * k as f64 / (n - 1) as f64)
                .round() as usize
        })
        .collect();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_grid_half_decades() {
        assert_eq!(
            log_grid(2.0, 5.0, 7),
            vec![100, 316, 1000, 3162, 10000, 31623, 100000]
        );
    }
}
