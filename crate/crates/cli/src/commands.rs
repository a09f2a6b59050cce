use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sbp_core::classify::{classify, informative_prior, no_prior};
use sbp_core::harness::classification::risk_csv;
use sbp_core::harness::convergence::{reconstruct, reconstruction_csv, seed_for_size};
use sbp_core::harness::targets::query_grid;
use sbp_core::harness::{
    bench_runtime, fit_loglog_slope, log_grid, loglog_slope, rehab_simulation, run_classification,
    run_convergence, synth_1d, synth_2d, ClassificationConfig, ConvergenceConfig,
    FatigueChainConfig, LiftSampler, PriorMode, RehabOptions, Sampled, Setting, TargetFunction,
};
use sbp_core::io::{dynamic_to_csv, parse_dynamic, parse_static, Format};
use sbp_core::quadrature::log_density_moments;
use sbp_core::{
    posterior_csbp, posterior_csbp_mirrored, posterior_static, BetaParams, DeltaMode,
    DynamicDataset, KernelWidth, StaticDataset,
};

use crate::args::{
    join, BenchArgs, ClassifyArgs, DeltaModeArg, ExpClassifyArgs, ExpDynamicArgs, ExpRehabArgs,
    ExpStaticArgs, InferArgs, InferDynamicArgs, LiftArg, PriorArgs, QueryArgs, SweepArgs,
};
use crate::error::CliError;
use crate::output::{write_with_meta, RunMeta};

/// Largest moment disagreement tolerated by `--self-check`.
const SELF_CHECK_TOL: f64 = 1e-8;

type Result<T> = std::result::Result<T, CliError>;

fn usage(context: &str) -> impl Fn(sbp_core::Error) -> CliError + '_ {
    move |e| CliError::Usage(format!("{context}: {e}"))
}

fn read_data(path: &Path) -> Result<(String, Format)> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok((text, Format::from_path(path)))
}

fn load_static(path: &Path) -> Result<StaticDataset> {
    let (text, format) = read_data(path)?;
    parse_static(&text, format).map_err(|e| CliError::from_core(&path.display().to_string(), e))
}

fn load_dynamic(path: &Path) -> Result<DynamicDataset> {
    let (text, format) = read_data(path)?;
    parse_dynamic(&text, format).map_err(|e| CliError::from_core(&path.display().to_string(), e))
}

fn resolve_prior(p: &PriorArgs) -> Result<BetaParams> {
    match (p.prior, p.prior_mv) {
        (Some(ab), _) => BetaParams::new(ab.0, ab.1).map_err(usage("--prior")),
        (None, Some(mv)) => informative_prior(mv.0, mv.1).map_err(usage("--prior-mv")),
        (None, None) => Ok(BetaParams::uniform()),
    }
}

fn query_points(q: &QueryArgs, dim: usize) -> Result<Vec<Vec<f64>>> {
    if let Some(n) = q.query_grid {
        if n == 0 {
            return Err(CliError::Usage("--query-grid: must be at least 1".into()));
        }
        return Ok(query_grid(dim, n));
    }
    q.query
        .iter()
        .map(|p| {
            let shown = join(&p.0);
            if p.0.len() != dim {
                return Err(CliError::Usage(format!(
                    "--query {shown}: expected {dim} coordinates to match the data"
                )));
            }
            sbp_core::neighbor::check_point(dim, &p.0)
                .map_err(|e| CliError::Usage(format!("--query {shown}: {e}")))?;
            Ok(p.0.clone())
        })
        .collect()
}

fn fixed_width(delta: f64, flag: &str) -> Result<KernelWidth> {
    KernelWidth::new(delta).map_err(usage(flag))
}

fn coordinate_header(dim: usize) -> String {
    if dim == 1 {
        "x".into()
    } else {
        (1..=dim)
            .map(|k| format!("x{k}"))
            .collect::<Vec<_>>()
            .join(",")
    }
}

pub fn infer_static(args: &InferArgs) -> Result<String> {
    let q = &args.query;
    let data = load_static(&q.data)?;
    let prior = resolve_prior(&args.prior)?;
    let delta = match q.delta {
        Some(d) => fixed_width(d, "--delta")?,
        None => data
            .resolve_delta(DeltaMode::Scheduled {
                lipschitz: q.lipschitz,
            })
            .map_err(usage("--lipschitz"))?,
    };
    let mut out = format!(
        "{},alpha,beta,mean,variance,neighbors,delta\n",
        coordinate_header(data.dim())
    );
    for x in query_points(q, data.dim())? {
        let post = posterior_static(&data, &x, delta, prior).map_err(usage("--query"))?;
        let n = data
            .index()
            .count_in_radius(&x, delta)
            .map_err(usage("--query"))?;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{n},{}",
            join(&x),
            post.alpha,
            post.beta,
            post.mean(),
            post.variance(),
            delta.get()
        );
    }
    Ok(out)
}

/// Mean and second moment of the neighborhood posterior by integrating its
/// density directly: every neighbor contributes the likelihood factor of
/// the shared coefficients `(Ā, B̄)`.
fn integrated_moments(
    successes: usize,
    failures: usize,
    (a, b): (f64, f64),
    prior: BetaParams,
) -> sbp_core::Result<(f64, f64)> {
    let (s, f) = (successes as f64, failures as f64);
    log_density_moments(
        |theta, rest| {
            let p_success = (a + b) * theta + b * rest;
            let p_failure = (1.0 - a - b) * theta + (1.0 - b) * rest;
            let mut ln = (prior.alpha - 1.0) * theta.ln() + (prior.beta - 1.0) * rest.ln();
            if s > 0.0 {
                ln += s * p_success.ln();
            }
            if f > 0.0 {
                ln += f * p_failure.ln();
            }
            ln
        },
        1e-12,
    )
}

pub fn infer_dynamic(args: &InferDynamicArgs) -> Result<String> {
    let q = &args.query;
    let data = load_dynamic(&q.data)?;
    let prior = resolve_prior(&args.prior)?;
    let delta = match q.delta {
        Some(d) => fixed_width(d, "--delta")?,
        None => data
            .resolve_delta(
                DeltaMode::Scheduled {
                    lipschitz: q.lipschitz,
                },
                None,
            )
            .map_err(usage("--lipschitz"))?,
    };
    let mut out = format!(
        "{},mean,variance,neighbors,components,delta\n",
        coordinate_header(data.dim())
    );
    let mut worst: f64 = 0.0;
    for x in query_points(q, data.dim())? {
        let here = join(&x);
        let post = if args.mirrored {
            posterior_csbp_mirrored(&data, &x, delta, prior)
        } else {
            posterior_csbp(&data, &x, delta, prior)
        }
        .map_err(|e| CliError::from_core(&format!("query {here}"), e))?;
        let stats = data.neighbor_stats(&x, delta).map_err(usage("--query"))?;
        let _ = writeln!(
            out,
            "{here},{},{},{},{},{}",
            post.mean(),
            post.variance(),
            stats.count,
            post.len(),
            delta.get()
        );
        if args.self_check {
            let coef = stats.mean_coefficients().unwrap_or((1.0, 0.0));
            let (m1, m2) =
                integrated_moments(stats.successes, stats.count - stats.successes, coef, prior)
                    .map_err(|e| CliError::Numerical(format!("self-check at {here}: {e}")))?;
            let dev = (m1 - post.mean()).abs().max((m2 - post.moment2()).abs());
            if dev > SELF_CHECK_TOL {
                return Err(CliError::Numerical(format!(
                    "self-check at {here}: posterior moments differ from integration by {dev:.3e}"
                )));
            }
            worst = worst.max(dev);
        }
    }
    if args.self_check {
        eprintln!("self-check passed: largest moment deviation {worst:.3e}");
    }
    Ok(out)
}

pub fn classify_cmd(args: &ClassifyArgs) -> Result<String> {
    let q = &args.query;
    let data = load_static(&q.data)?;
    let prior = if args.no_prior {
        no_prior()
    } else {
        resolve_prior(&args.prior)?
    };
    let delta = match q.delta {
        Some(d) => fixed_width(d, "--delta")?,
        None => data
            .resolve_delta(DeltaMode::Scheduled {
                lipschitz: q.lipschitz,
            })
            .map_err(usage("--lipschitz"))?,
    };
    let mut out = format!("{},label,mean,delta\n", coordinate_header(data.dim()));
    for x in query_points(q, data.dim())? {
        let post = posterior_static(&data, &x, delta, prior).map_err(usage("--query"))?;
        let _ = writeln!(
            out,
            "{},{},{},{}",
            join(&x),
            classify(post),
            post.mean(),
            delta.get()
        );
    }
    Ok(out)
}

fn target_for(dim: usize) -> Result<TargetFunction> {
    match dim {
        1 => Ok(synth_1d()),
        2 => Ok(synth_2d()),
        _ => Err(CliError::Usage(format!(
            "--dim {dim}: synthetic targets exist for 1 and 2"
        ))),
    }
}

fn delta_mode(
    arg: DeltaModeArg,
    lipschitz: Option<f64>,
    target: &TargetFunction,
) -> Result<DeltaMode> {
    match arg {
        DeltaModeArg::Fixed(d) => Ok(DeltaMode::Fixed(fixed_width(d, "--delta-mode")?)),
        DeltaModeArg::Scheduled => match lipschitz {
            Some(l) if l > 0.0 && l.is_finite() => Ok(DeltaMode::Scheduled { lipschitz: l }),
            Some(l) => Err(CliError::Usage(format!(
                "--lipschitz {l}: must be positive"
            ))),
            None => Ok(target.scheduled_mode()),
        },
    }
}

fn record_delta_mode(meta: &mut RunMeta, mode: DeltaMode) {
    match mode {
        DeltaMode::Fixed(d) => meta.set("delta-mode", DeltaModeArg::Fixed(d.get())),
        DeltaMode::Scheduled { lipschitz } => meta
            .set("delta-mode", DeltaModeArg::Scheduled)
            .set("lipschitz", lipschitz),
    };
}

fn run_sweep(
    setting: Setting,
    sweep: &SweepArgs,
    out_dir: &Path,
    mut meta: RunMeta,
    prefix: &str,
) -> Result<String> {
    let target = target_for(sweep.dim)?;
    let t_grid = sweep
        .t_grid
        .as_ref()
        .map_or_else(|| log_grid(2.0, 5.0, 7), |g| g.0.clone());
    let mut cfg = ConvergenceConfig::new(setting, target.clone(), t_grid);
    cfg.reps = sweep.reps;
    cfg.seed = sweep.seed;
    cfg.record_runtime = sweep.timing;
    if let Some(n) = sweep.query_grid {
        cfg.query_grid_size = n;
    }
    cfg.delta_mode = delta_mode(sweep.delta_mode, sweep.lipschitz, &target)?;
    if cfg.reps == 0 || cfg.query_grid_size == 0 {
        return Err(CliError::Usage(
            "--reps and --query-grid must be at least 1".into(),
        ));
    }

    meta.set("dim", sweep.dim)
        .set("t-grid", join(&cfg.t_grid))
        .set("reps", cfg.reps)
        .set("seed", cfg.seed)
        .set("query-grid", cfg.query_grid_size);
    record_delta_mode(&mut meta, cfg.delta_mode);
    meta.set("timing", cfg.record_runtime);

    let curve = run_convergence(&cfg).map_err(|e| CliError::from_core("sweep", e))?;
    let mut report = String::new();
    let name = format!("{prefix}_{}d_curve.csv", sweep.dim);
    let path = write_with_meta(out_dir, &name, &curve.to_csv(), &meta)?;
    let _ = writeln!(report, "wrote {}", path.display());
    if curve.entries.len() >= 3 {
        if let Ok(slope) = fit_loglog_slope(&curve) {
            let _ = writeln!(report, "log-log slope {slope:.4}");
        }
    }
    if let Some(t) = sweep.reconstruct {
        let data = Sampled::draw(setting, &target, t, seed_for_size(cfg.seed, t), 0);
        let rows = reconstruct(
            &data,
            &target,
            cfg.query_grid_size,
            cfg.delta_mode,
            cfg.prior,
        )
        .map_err(|e| CliError::from_core("--reconstruct", e))?;
        let mut rmeta = meta.clone();
        rmeta.set("reconstruct", t);
        let name = format!("{prefix}_{}d_reconstruction_t{t}.csv", sweep.dim);
        let path = write_with_meta(out_dir, &name, &reconstruction_csv(&rows), &rmeta)?;
        let _ = writeln!(report, "wrote {}", path.display());
    }
    Ok(report)
}

pub fn exp_static(args: &ExpStaticArgs) -> Result<String> {
    run_sweep(
        Setting::Static,
        &args.sweep,
        &args.out.out_dir,
        RunMeta::new("exp-static"),
        "static",
    )
}

pub fn exp_dynamic(args: &ExpDynamicArgs) -> Result<String> {
    if !(args.noise_sd >= 0.0 && args.noise_sd.is_finite()) {
        return Err(CliError::Usage(format!(
            "--noise-sd {}: must be nonnegative",
            args.noise_sd
        )));
    }
    let lift = match args.b_dist {
        LiftArg::Uniform(lo, hi) => LiftSampler::Uniform { lo, hi },
        LiftArg::Const(b) => LiftSampler::Constant(b),
    };
    let mut meta = RunMeta::new("exp-dynamic");
    meta.set("b-dist", args.b_dist)
        .set("noise-sd", args.noise_sd);
    let setting = Setting::Dynamic {
        lift,
        noise_sd: args.noise_sd,
    };
    run_sweep(setting, &args.sweep, &args.out.out_dir, meta, "dynamic")
}

pub fn exp_rehab(args: &ExpRehabArgs) -> Result<String> {
    let levels = args.b_levels.0.len();
    if levels < 1 {
        return Err(CliError::Usage(
            "--b-levels: need at least one level".into(),
        ));
    }
    let cfg = FatigueChainConfig {
        levels: levels - 1,
        p: args.p,
        sessions: args.sessions,
        exercises: args.exercises,
        b_levels: args.b_levels.0.clone(),
    };
    cfg.validate().map_err(usage("fatigue chain"))?;
    if args.query_grid == 0 || args.lipschitz <= 0.0 || args.lipschitz.is_nan() {
        return Err(CliError::Usage(
            "--query-grid and --lipschitz must be positive".into(),
        ));
    }
    let opts = RehabOptions {
        query_grid_size: args.query_grid,
        t_eval: args.t_eval.0.clone(),
        lipschitz: args.lipschitz,
    };
    let report = rehab_simulation(&cfg, args.seed, &opts)
        .map_err(|e| CliError::from_core("rehab simulation", e))?;

    let mut meta = RunMeta::new("exp-rehab");
    meta.set("seed", args.seed)
        .set("sessions", cfg.sessions)
        .set("exercises", cfg.exercises)
        .set("p", cfg.p)
        .set("b-levels", join(&cfg.b_levels))
        .set("t-eval", join(&opts.t_eval))
        .set("query-grid", opts.query_grid_size)
        .set("lipschitz", opts.lipschitz);
    let dir = &args.out.out_dir;
    let mut out = format!("experiments {}\n", report.data.len());
    for (name, text) in [
        ("rehab_data.csv", dynamic_to_csv(&report.data)),
        ("rehab_curves.csv", report.curves_csv()),
        ("rehab_error.csv", report.error_csv()),
    ] {
        let path = write_with_meta(dir, name, &text, &meta)?;
        let _ = writeln!(out, "wrote {}", path.display());
    }
    for (t, e) in &report.rested_l2 {
        let _ = writeln!(out, "rested L2 at t={t}: {e:.6e}");
    }
    Ok(out)
}

pub fn exp_classify(args: &ExpClassifyArgs) -> Result<String> {
    let target = synth_1d();
    if args.seeds == 0 || args.query_grid == 0 {
        return Err(CliError::Usage(
            "--seeds and --query-grid must be at least 1".into(),
        ));
    }
    if let Some(f) = args.fractions.0.iter().find(|f| !(**f > 0.0 && **f < 1.0)) {
        return Err(CliError::Usage(format!(
            "--fractions: {f} is not in (0, 1)"
        )));
    }
    let mut modes = vec![PriorMode::NoPrior, PriorMode::Uniform];
    modes.extend(
        args.fractions
            .0
            .iter()
            .map(|&fraction| PriorMode::Informative { fraction }),
    );
    let cfg = ClassificationConfig {
        delta_mode: delta_mode(args.delta_mode, args.lipschitz, &target)?,
        target,
        t_grid: args.t_grid.0.clone(),
        seeds: args.seeds,
        query_grid_size: args.query_grid,
        modes,
        seed: args.seed,
    };
    let points = run_classification(&cfg).map_err(|e| CliError::from_core("classification", e))?;

    let mut meta = RunMeta::new("exp-classify");
    meta.set("t-grid", join(&cfg.t_grid))
        .set("seeds", cfg.seeds)
        .set("seed", cfg.seed)
        .set("query-grid", cfg.query_grid_size)
        .set("fractions", join(&args.fractions.0));
    record_delta_mode(&mut meta, cfg.delta_mode);
    let path = write_with_meta(
        &args.out.out_dir,
        "classify_risk.csv",
        &risk_csv(&points),
        &meta,
    )?;
    Ok(format!("wrote {}\n", path.display()))
}

pub fn bench(args: &BenchArgs) -> Result<String> {
    if args.lipschitz <= 0.0 || args.lipschitz.is_nan() || args.queries == 0 {
        return Err(CliError::Usage(
            "--lipschitz and --queries must be positive".into(),
        ));
    }
    let curve = bench_runtime(
        &synth_1d(),
        &args.t_grid.0,
        args.queries,
        args.lipschitz,
        args.seed,
        args.min_ms,
    )
    .map_err(|e| CliError::from_core("benchmark", e))?;
    let mut meta = RunMeta::new("bench-runtime");
    meta.set("t-grid", join(&args.t_grid.0))
        .set("queries", args.queries)
        .set("min-ms", args.min_ms)
        .set("lipschitz", args.lipschitz)
        .set("seed", args.seed);
    let path = write_with_meta(&args.out.out_dir, "runtime.csv", &curve.to_csv(), &meta)?;
    let mut out = format!("wrote {}\n", path.display());
    let times: Vec<f64> = curve.entries.iter().filter_map(|e| e.runtime_ms).collect();
    if times.len() >= 2 {
        if let Ok(slope) = loglog_slope(&curve.ts(), &times) {
            let _ = writeln!(out, "runtime log-log slope {slope:.3}");
        }
    }
    Ok(out)
}
