//! Acceptance criteria. Each test prints one PASS/FAIL line.
//!
//! Run with `cargo test -p sbp-core --test acceptance -- --nocapture` to see
//! the report. Tests take a shared lock so that sweeps do not compete for
//! cores (the runtime criterion measures wall-clock time).

use std::sync::Mutex;
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::seq::SliceRandom;
use rand::Rng;

use sbp_core::harness::{
    bench_runtime, fit_loglog_slope, log_grid, loglog_slope, rehab_simulation, run_classification,
    run_convergence, stream_rng, synth_1d, synth_2d, tail_slope, ClassificationConfig,
    ConvergenceConfig, FatigueChainConfig, LiftSampler, PriorMode, RehabOptions, Setting,
};
use sbp_core::neighbor::brute_force_radius;
use sbp_core::{
    exact_posterior_moments, posterior_csbp, posterior_general, posterior_simplified,
    posterior_static, BetaParams, Coefficients, ContextualOutcome, DeltaMode, DynamicDataset,
    DynamicExperiment, KernelWidth, NeighborIndex, PointSet, StaticDataset, StaticExperiment,
};

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(id: &str, name: &str, pass: bool, detail: String, started: Instant) {
    let status = if pass { "PASS" } else { "FAIL" };
    println!(
        "[{status}] {id} {name}: {detail} ({:.1}s)",
        started.elapsed().as_secs_f64()
    );
    assert!(pass, "{id} {name} failed: {detail}");
}

const SEED: u64 = 20_200_601;

fn static_grid() -> Vec<usize> {
    // 10^2, 10^2.5, ..., 10^5
    log_grid(2.0, 5.0, 7)
}

#[test]
fn c01_static_1d_rate() {
    let _g = serial();
    let started = Instant::now();
    let mut cfg = ConvergenceConfig::new(Setting::Static, synth_1d(), static_grid());
    cfg.reps = 20;
    cfg.seed = SEED;
    let curve = run_convergence(&cfg).unwrap();
    let slope = fit_loglog_slope(&curve).unwrap();
    report(
        "C1",
        "static 1D L2 rate",
        (-0.82..=-0.52).contains(&slope),
        format!("slope {slope:.4} in [-0.82, -0.52]"),
        started,
    );
}

#[test]
fn c02_static_2d_rate() {
    let _g = serial();
    let started = Instant::now();
    let mut cfg = ConvergenceConfig::new(Setting::Static, synth_2d(), static_grid());
    cfg.reps = 10;
    cfg.seed = SEED;
    let curve = run_convergence(&cfg).unwrap();
    let slope = fit_loglog_slope(&curve).unwrap();
    report(
        "C2",
        "static 2D L2 rate",
        (-0.65..=-0.35).contains(&slope),
        format!("slope {slope:.4} in [-0.65, -0.35]"),
        started,
    );
}

#[test]
fn c03_dynamic_1d_rate() {
    let _g = serial();
    let started = Instant::now();
    let setting = Setting::Dynamic {
        lift: LiftSampler::Uniform { lo: 0.0, hi: 1.0 },
        noise_sd: 0.0,
    };
    let mut cfg = ConvergenceConfig::new(setting, synth_1d(), static_grid());
    cfg.reps = 20;
    cfg.seed = SEED;
    let curve = run_convergence(&cfg).unwrap();
    let slope = fit_loglog_slope(&curve).unwrap();
    report(
        "C3",
        "dynamic 1D (B ~ U[0,1]) CSBP L2 rate",
        (-0.82..=-0.52).contains(&slope),
        format!("slope {slope:.4} in [-0.82, -0.52]"),
        started,
    );
}

fn random_outcome<R: Rng>(rng: &mut R) -> ContextualOutcome {
    let b: f64 = rng.random();
    let sum: f64 = rng.random();
    ContextualOutcome::new(rng.random_bool(0.5), sum - b, b).unwrap()
}

#[test]
fn c04_oracle_equivalence() {
    let _g = serial();
    let started = Instant::now();
    let mut rng = stream_rng(SEED, 4);
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for _ in 0..1000 {
        let len = rng.random_range(0..=50);
        let seq: Vec<ContextualOutcome> = (0..len).map(|_| random_outcome(&mut rng)).collect();
        let prior =
            BetaParams::new(rng.random_range(0.5..=5.0), rng.random_range(0.5..=5.0)).unwrap();
        let mix = posterior_general(seq.iter().copied(), prior).unwrap();
        let (m1, m2) = exact_posterior_moments(&seq, prior).unwrap();
        let err = (mix.mean() - m1).abs().max((mix.moment2() - m2).abs());
        worst = worst.max(err);
        if err > 1e-8 {
            failures += 1;
        }
    }
    report(
        "C4",
        "general recursion vs quadrature oracle",
        failures == 0,
        format!("{failures}/1000 beyond 1e-8, worst {worst:.2e}"),
        started,
    );
}

#[test]
fn c05_simplified_equals_general() {
    let _g = serial();
    let started = Instant::now();
    let mut rng = stream_rng(SEED, 5);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let t = rng.random_range(0..=300);
        let s = rng.random_range(0..=t);
        let b = rng.random_range(0.0..=0.95);
        let prior = BetaParams::new(
            rng.random_range(1..=5) as f64,
            rng.random_range(1..=5) as f64,
        )
        .unwrap();
        let mut outcomes: Vec<bool> = (0..t).map(|k| k < s).collect();
        outcomes.shuffle(&mut rng);
        let coef = Coefficients::lift(b).unwrap();
        let general = posterior_general(
            outcomes
                .iter()
                .map(|&success| ContextualOutcome { success, coef }),
            prior,
        )
        .unwrap();
        let simple = posterior_simplified(t, s, b, prior).unwrap();
        for i in 0..=t {
            worst = worst.max((general.weight(i) - simple.weight(i)).abs());
        }
    }
    report(
        "C5",
        "closed-form O(t) weights vs general recursion",
        worst <= 1e-10,
        format!("max weight difference {worst:.2e} <= 1e-10"),
        started,
    );
}

#[test]
fn c06_static_reduction() {
    let _g = serial();
    let started = Instant::now();
    let mut rng = stream_rng(SEED, 6);
    let mut mismatches = 0;
    for _ in 0..100 {
        let dim = rng.random_range(1..=3);
        let t = rng.random_range(0..=500);
        let mut statics = Vec::with_capacity(t);
        let mut dynamics = Vec::with_capacity(t);
        for _ in 0..t {
            let x: Vec<f64> = (0..dim).map(|_| rng.random()).collect();
            let success = rng.random_bool(0.4);
            statics.push(StaticExperiment {
                x: x.clone(),
                success,
            });
            dynamics.push(DynamicExperiment {
                x,
                success,
                coef: Coefficients::identity(),
            });
        }
        let sd = StaticDataset::new(dim, &statics).unwrap();
        let dd = DynamicDataset::new(dim, &dynamics).unwrap();
        let prior =
            BetaParams::new(rng.random_range(0.5..=5.0), rng.random_range(0.5..=5.0)).unwrap();
        for _ in 0..10 {
            let x: Vec<f64> = (0..dim).map(|_| rng.random()).collect();
            let delta = KernelWidth::new(rng.random_range(0.01..=1.0)).unwrap();
            let a = posterior_static(&sd, &x, delta, prior).unwrap();
            let b = posterior_csbp(&dd, &x, delta, prior).unwrap();
            if a.mean() != b.mean() || a.moment2() != b.moment2() {
                mismatches += 1;
            }
        }
    }
    report(
        "C6",
        "CSBP with A=1, B=0 equals static SBP",
        mismatches == 0,
        format!("{mismatches}/1000 queries differ"),
        started,
    );
}

#[test]
fn c07_kernel_width_ablation() {
    let _g = serial();
    let started = Instant::now();
    let run = |mode: DeltaMode| {
        let mut cfg = ConvergenceConfig::new(Setting::Static, synth_1d(), static_grid());
        cfg.reps = 20;
        cfg.seed = SEED;
        cfg.delta_mode = mode;
        run_convergence(&cfg).unwrap()
    };
    let wide = KernelWidth::new(50f64.powf(-1.0 / 3.0)).unwrap();
    let narrow = KernelWidth::new(500_000f64.powf(-1.0 / 3.0)).unwrap();
    let scheduled = run(synth_1d().scheduled_mode());
    let wide_curve = run(DeltaMode::Fixed(wide));
    let narrow_curve = run(DeltaMode::Fixed(narrow));
    let wide_tail = tail_slope(&wide_curve, 3).unwrap();
    let sched_tail = tail_slope(&scheduled, 3).unwrap();
    let narrow_1k = narrow_curve.error_at(1000).unwrap();
    let sched_1k = scheduled.error_at(1000).unwrap();
    let pass = wide_tail > -0.2 && sched_tail < -0.4 && narrow_1k > sched_1k;
    report(
        "C7",
        "kernel-width ablation",
        pass,
        format!(
            "wide tail slope {wide_tail:.3} > -0.2, scheduled tail slope {sched_tail:.3} < -0.4, \
             narrow L2@1e3 {narrow_1k:.3e} > scheduled {sched_1k:.3e}"
        ),
        started,
    );
}

#[test]
fn c08_runtime_linearity() {
    let _g = serial();
    let started = Instant::now();
    let curve = bench_runtime(
        &synth_1d(),
        &[1_000, 10_000, 100_000, 1_000_000],
        1000,
        1.0,
        SEED,
        200.0,
    )
    .unwrap();
    let ts = curve.ts();
    let times: Vec<f64> = curve
        .entries
        .iter()
        .map(|e| e.runtime_ms.unwrap())
        .collect();
    let slope = loglog_slope(&ts, &times).unwrap();
    report(
        "C8",
        "per-query runtime growth",
        slope <= 1.2,
        format!("log-log slope {slope:.3} <= 1.2 (ms per query: {times:.3?})"),
        started,
    );
}

#[test]
fn c09_classification() {
    let _g = serial();
    let started = Instant::now();
    let cfg = ClassificationConfig {
        target: synth_1d(),
        t_grid: vec![100, 1_000, 10_000],
        seeds: 20,
        query_grid_size: 101,
        delta_mode: synth_1d().scheduled_mode(),
        modes: vec![PriorMode::NoPrior, PriorMode::Informative { fraction: 0.5 }],
        seed: SEED,
    };
    let points = run_classification(&cfg).unwrap();
    let series = |mode: PriorMode| -> Vec<f64> {
        points
            .iter()
            .filter(|p| p.mode == mode)
            .map(|p| p.mean_excess)
            .collect()
    };
    let no_prior = series(PriorMode::NoPrior);
    let informed = series(PriorMode::Informative { fraction: 0.5 });
    let decreasing = no_prior.windows(2).all(|w| w[1] < w[0]);
    let small = no_prior[2] < 0.05;
    let prior_helps = informed[0] < no_prior[0];
    report(
        "C9",
        "excess Bayes risk",
        decreasing && small && prior_helps,
        format!(
            "no-prior excess {no_prior:.4?} decreasing, {:.4} < 0.05 at 1e4; \
             informative {:.4} < no-prior {:.4} at 1e2",
            no_prior[2], informed[0], no_prior[0]
        ),
        started,
    );
}

#[test]
fn c10_rehab_case_study() {
    let _g = serial();
    let started = Instant::now();
    let cfg = FatigueChainConfig::default();
    let opts = RehabOptions::default();
    let mut wins = 0;
    for seed in 0..20 {
        let r = rehab_simulation(&cfg, SEED + seed, &opts).unwrap();
        assert_eq!(r.data.len(), 800);
        if r.error_at(800).unwrap() < r.error_at(80).unwrap() {
            wins += 1;
        }
    }
    report(
        "C10",
        "rehabilitation rested-state error",
        wins >= 18,
        format!("L2@800 < L2@80 in {wins}/20 seeds (need >= 18)"),
        started,
    );
}

fn runner() -> TestRunner {
    TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    })
}

fn outcome_strategy() -> impl Strategy<Value = ContextualOutcome> {
    (any::<bool>(), 0.0..=1.0f64, 0.0..=1.0f64)
        .prop_map(|(s, b, sum)| ContextualOutcome::new(s, sum - b, b).unwrap())
}

fn prior_strategy() -> impl Strategy<Value = BetaParams> {
    (0.5..=5.0f64, 0.5..=5.0f64).prop_map(|(a, b)| BetaParams::new(a, b).unwrap())
}

#[test]
fn c11_invariant_suites() {
    let _g = serial();
    let started = Instant::now();
    let mut results = Vec::new();

    let r = runner().run(
        &(
            prop::collection::vec(outcome_strategy(), 0..60),
            prior_strategy(),
        ),
        |(seq, prior)| {
            let m = posterior_general(seq.iter().copied(), prior).unwrap();
            let sum: f64 = m.components().iter().map(|c| c.1).sum();
            prop_assert!((sum - 1.0).abs() <= 1e-12);
            prop_assert!(m
                .components()
                .iter()
                .all(|c| c.1 >= 0.0 && c.0 <= m.total()));
            Ok(())
        },
    );
    results.push(("mixture normalization", r.is_ok()));

    let r = runner().run(
        &(
            prop::collection::vec(outcome_strategy(), 0..60),
            prior_strategy(),
        ),
        |(seq, prior)| {
            let m = posterior_general(seq.iter().copied(), prior).unwrap();
            let (m1, m2) = (m.mean(), m.moment2());
            prop_assert!((0.0..=1.0).contains(&m1));
            prop_assert!(m2 >= m1 * m1 - 1e-12);
            Ok(())
        },
    );
    results.push(("moment bounds", r.is_ok()));

    let r = runner().run(
        &(
            prop::collection::vec(outcome_strategy(), 1..40),
            prior_strategy(),
            any::<u64>(),
        ),
        |(seq, prior, shuffle_seed)| {
            let mut permuted = seq.clone();
            permuted.shuffle(&mut stream_rng(shuffle_seed, 0));
            let a = posterior_general(seq, prior).unwrap();
            let b = posterior_general(permuted, prior).unwrap();
            prop_assert!((a.mean() - b.mean()).abs() <= 1e-10);
            prop_assert!((a.moment2() - b.moment2()).abs() <= 1e-10);
            Ok(())
        },
    );
    results.push(("permutation invariance", r.is_ok()));

    let r = runner().run(
        &(
            prop::collection::vec((0.0..=1.0f64, any::<bool>()), 0..200),
            0.0..=1.0f64,
            0.001..=1.0f64,
            prior_strategy(),
        ),
        |(rows, q, delta, prior)| {
            let exps: Vec<StaticExperiment> = rows
                .iter()
                .map(|&(x, s)| StaticExperiment::new(vec![x], s))
                .collect();
            let data = StaticDataset::new(1, &exps).unwrap();
            let delta = KernelWidth::new(delta).unwrap();
            let post = posterior_static(&data, &[q], delta, prior).unwrap();
            let n = data.index().count_in_radius(&[q], delta).unwrap() as f64;
            prop_assert!((post.alpha + post.beta - (prior.alpha + prior.beta + n)).abs() <= 1e-9);
            Ok(())
        },
    );
    results.push(("pseudo-count conservation", r.is_ok()));

    let r = runner().run(
        &(
            1usize..=3,
            0usize..=2000,
            any::<u64>(),
            prop::collection::vec((prop::collection::vec(0.0..=1.0f64, 3), 0.0005..=1.0f64), 5),
        ),
        |(dim, n, seed, queries)| {
            let mut rng = stream_rng(seed, 0);
            let mut points = PointSet::new(dim).unwrap();
            for _ in 0..n {
                // Snap some coordinates to a coarse lattice to exercise ties
                // with the ball boundary.
                let p: Vec<f64> = (0..dim)
                    .map(|_| {
                        let v: f64 = rng.random();
                        if rng.random_bool(0.3) {
                            (v * 20.0).round() / 20.0
                        } else {
                            v
                        }
                    })
                    .collect();
                points.push(&p).unwrap();
            }
            let index = NeighborIndex::build(points.clone());
            for (q, d) in queries {
                let q = &q[..dim];
                let d = KernelWidth::new(d).unwrap();
                prop_assert_eq!(
                    index.query_radius(q, d).unwrap(),
                    brute_force_radius(&points, q, d)
                );
            }
            Ok(())
        },
    );
    results.push(("neighbor query equals brute force", r.is_ok()));

    let failed: Vec<&str> = results.iter().filter(|r| !r.1).map(|r| r.0).collect();
    report(
        "C11",
        "invariant suites (1000 cases each)",
        failed.is_empty(),
        format!("{} suites, failed: {:?}", results.len(), failed),
        started,
    );
}
