use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use sbp_core::harness::DEFAULT_SEED;

#[derive(Debug, Parser)]
#[command(
    name = "sbp",
    version,
    about = "Smooth Beta Process inference and experiments"
)]
pub struct Cli {
    /// Read `key = value` lines from FILE as flags placed before the ones on
    /// the command line (which take precedence).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Static posterior Beta(α, β) at query points.
    InferStatic(InferArgs),
    /// Contextual posterior mixture at query points.
    InferDynamic(InferDynamicArgs),
    /// Binary labels from the static posterior mean.
    Classify(ClassifyArgs),
    /// L2 error curve for static inference on a synthetic target.
    ExpStatic(ExpStaticArgs),
    /// L2 error curve for contextual inference on a synthetic target.
    ExpDynamic(ExpDynamicArgs),
    /// Rehabilitation case study with a fatigue Markov chain.
    ExpRehab(ExpRehabArgs),
    /// Excess Bayes risk of posterior classification.
    ExpClassify(ExpClassifyArgs),
    /// Per-query inference time as the sample size grows (wall-clock, so not
    /// reproducible).
    BenchRuntime(BenchArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::InferStatic(_) => "infer-static",
            Command::InferDynamic(_) => "infer-dynamic",
            Command::Classify(_) => "classify",
            Command::ExpStatic(_) => "exp-static",
            Command::ExpDynamic(_) => "exp-dynamic",
            Command::ExpRehab(_) => "exp-rehab",
            Command::ExpClassify(_) => "exp-classify",
            Command::BenchRuntime(_) => "bench-runtime",
        }
    }
}

#[derive(Debug, Args)]
pub struct OutDir {
    /// Directory for output files.
    #[arg(long, env = "SBP_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct PriorArgs {
    /// Prior as `alpha,beta`.
    #[arg(long, value_name = "A,B", conflicts_with = "prior_mv")]
    pub prior: Option<Pair>,
    /// Prior by mean and variance, `m,v`.
    #[arg(long, value_name = "M,V")]
    pub prior_mv: Option<Pair>,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    /// Dataset (`.csv`/`.tsv`/`.txt` delimited, `.jsonl` JSON lines).
    #[arg(long)]
    pub data: PathBuf,
    /// Query point `x1,...,xd`; repeat for several points.
    #[arg(long, value_name = "X", required_unless_present = "query_grid")]
    pub query: Vec<Point>,
    /// Query an evenly spaced grid with N points per axis instead.
    #[arg(long, value_name = "N")]
    pub query_grid: Option<usize>,
    /// Fixed kernel half-width; defaults to the schedule for the data size.
    #[arg(long, conflicts_with = "lipschitz")]
    pub delta: Option<f64>,
    /// Lipschitz constant for the kernel-width schedule.
    #[arg(long, default_value_t = 1.0)]
    pub lipschitz: f64,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct InferArgs {
    #[command(flatten)]
    pub query: QueryArgs,
    #[command(flatten)]
    pub prior: PriorArgs,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct InferDynamicArgs {
    #[command(flatten)]
    pub query: QueryArgs,
    #[command(flatten)]
    pub prior: PriorArgs,
    /// Infer on `1 − π` and reflect back (for data where `π = 0` rules out
    /// success in every context).
    #[arg(long)]
    pub mirrored: bool,
    /// Check every posterior against direct numerical integration; exit 3 if
    /// any moment differs by more than 1e-8.
    #[arg(long)]
    pub self_check: bool,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub query: QueryArgs,
    #[command(flatten)]
    pub prior: PriorArgs,
    /// Majority vote over the neighborhood (near-flat `Beta(ε, ε)` prior).
    #[arg(long, conflicts_with_all = ["prior", "prior_mv"])]
    pub no_prior: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Synthetic target dimension (1 or 2).
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    /// Sample sizes; defaults to 100 .. 100000 in half-decade steps.
    #[arg(long, value_name = "T1,T2,...")]
    pub t_grid: Option<SizeList>,
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Query points per axis (default 101 in 1D, 51 otherwise).
    #[arg(long)]
    pub query_grid: Option<usize>,
    /// `scheduled` or `fixed:DELTA`.
    #[arg(long, default_value = "scheduled")]
    pub delta_mode: DeltaModeArg,
    /// Lipschitz constant for the schedule (defaults to the target's).
    #[arg(long)]
    pub lipschitz: Option<f64>,
    /// Also dump the posterior over the query grid for one dataset of this size.
    #[arg(long, value_name = "T")]
    pub reconstruct: Option<usize>,
    /// Record per-query wall-clock time (makes output non-reproducible).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct ExpStaticArgs {
    #[command(flatten)]
    pub out: OutDir,
    #[command(flatten)]
    pub sweep: SweepArgs,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct ExpDynamicArgs {
    #[command(flatten)]
    pub out: OutDir,
    #[command(flatten)]
    pub sweep: SweepArgs,
    /// Distribution of the lift B: `uniform:LO,HI` or `const:B`.
    #[arg(long, default_value = "uniform:0,1")]
    pub b_dist: LiftArg,
    /// Standard deviation of the zero-mean noise added to B when sampling.
    #[arg(long, default_value_t = 0.0)]
    pub noise_sd: f64,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct ExpRehabArgs {
    #[command(flatten)]
    pub out: OutDir,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = 40)]
    pub sessions: usize,
    #[arg(long, default_value_t = 20)]
    pub exercises: usize,
    /// Probability of moving up one fatigue level after each exercise.
    #[arg(long, default_value_t = 0.1)]
    pub p: f64,
    /// Lift per fatigue level, rested first.
    #[arg(
        long,
        value_name = "B0,B1,...",
        default_value = "0.5,0.4,0.3,0.2,0.1,0"
    )]
    pub b_levels: FloatList,
    /// Prefix sizes at which the rested-state error is reported.
    #[arg(
        long,
        value_name = "T1,T2,...",
        default_value = "20,40,80,160,320,640,800"
    )]
    pub t_eval: SizeList,
    #[arg(long, default_value_t = 101)]
    pub query_grid: usize,
    #[arg(long, default_value_t = 1.0)]
    pub lipschitz: f64,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct ExpClassifyArgs {
    #[command(flatten)]
    pub out: OutDir,
    #[arg(long, value_name = "T1,T2,...", default_value = "100,1000,10000")]
    pub t_grid: SizeList,
    /// Independent datasets per sample size.
    #[arg(long, default_value_t = 20)]
    pub seeds: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = 101)]
    pub query_grid: usize,
    /// Informative-prior variances as fractions of `π(1 − π)`.
    #[arg(long, value_name = "F1,F2,...", default_value = "0.25,0.5,0.9")]
    pub fractions: FloatList,
    /// `scheduled` or `fixed:DELTA`.
    #[arg(long, default_value = "scheduled")]
    pub delta_mode: DeltaModeArg,
    /// Lipschitz constant for the schedule (defaults to the target's).
    #[arg(long)]
    pub lipschitz: Option<f64>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct BenchArgs {
    #[command(flatten)]
    pub out: OutDir,
    #[arg(
        long,
        value_name = "T1,T2,...",
        default_value = "1000,10000,100000,1000000"
    )]
    pub t_grid: SizeList,
    /// Query points timed per sample size.
    #[arg(long, default_value_t = 1000)]
    pub queries: usize,
    /// Repeat the queries until at least this many milliseconds elapse.
    #[arg(long, default_value_t = 200.0)]
    pub min_ms: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lipschitz: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

fn parse_list<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<T>().map_err(|_| format!("invalid {what} {p:?}")))
        .collect()
}

/// Comma-separated numbers. A newtype so clap treats it as one value.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatList(pub Vec<f64>);

impl FromStr for FloatList {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        parse_list(s, "number").map(FloatList)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SizeList(pub Vec<usize>);

impl FromStr for SizeList {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let v = parse_list(s, "size")?;
        if v.is_empty() {
            return Err("empty list".into());
        }
        Ok(SizeList(v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pair(pub f64, pub f64);

impl FromStr for Pair {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match parse_list::<f64>(s, "number")?[..] {
            [a, b] => Ok(Pair(a, b)),
            _ => Err(format!("expected two comma-separated numbers, got {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Point(pub Vec<f64>);

impl FromStr for Point {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let v = parse_list(s, "coordinate")?;
        if v.is_empty() {
            return Err("empty point".into());
        }
        Ok(Point(v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaModeArg {
    Scheduled,
    Fixed(f64),
}

impl FromStr for DeltaModeArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s == "scheduled" {
            return Ok(DeltaModeArg::Scheduled);
        }
        s.strip_prefix("fixed:")
            .and_then(|d| d.parse().ok())
            .map(DeltaModeArg::Fixed)
            .ok_or_else(|| format!("expected `scheduled` or `fixed:DELTA`, got {s:?}"))
    }
}

impl std::fmt::Display for DeltaModeArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DeltaModeArg::Scheduled => f.write_str("scheduled"),
            DeltaModeArg::Fixed(d) => write!(f, "fixed:{d}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LiftArg {
    Uniform(f64, f64),
    Const(f64),
}

impl FromStr for LiftArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("expected `uniform:LO,HI` or `const:B`, got {s:?}");
        if let Some(rest) = s.strip_prefix("uniform:") {
            let Pair(lo, hi) = rest.parse().map_err(|_| bad())?;
            if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
                return Err(format!("lift range {lo}..{hi} must lie within [0, 1]"));
            }
            return Ok(LiftArg::Uniform(lo, hi));
        }
        let b: f64 = s
            .strip_prefix("const:")
            .and_then(|b| b.parse().ok())
            .ok_or_else(bad)?;
        if !(0.0..=1.0).contains(&b) {
            return Err(format!("lift {b} must lie within [0, 1]"));
        }
        Ok(LiftArg::Const(b))
    }
}

impl std::fmt::Display for LiftArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LiftArg::Uniform(lo, hi) => write!(f, "uniform:{lo},{hi}"),
            LiftArg::Const(b) => write!(f, "const:{b}"),
        }
    }
}

pub fn join<T: std::fmt::Display>(values: &[T]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn value_parsers() {
        assert_eq!("1, 2".parse::<Pair>().unwrap(), Pair(1.0, 2.0));
        assert!("1".parse::<Pair>().is_err());
        assert_eq!(
            "fixed:0.1".parse::<DeltaModeArg>().unwrap(),
            DeltaModeArg::Fixed(0.1)
        );
        assert!("fixed".parse::<DeltaModeArg>().is_err());
        assert_eq!(
            "uniform:0,0.5".parse::<LiftArg>().unwrap(),
            LiftArg::Uniform(0.0, 0.5)
        );
        assert!("const:1.5".parse::<LiftArg>().is_err());
        assert_eq!(
            "100,1000".parse::<SizeList>().unwrap(),
            SizeList(vec![100, 1000])
        );
        for s in ["scheduled", "fixed:0.25"] {
            assert_eq!(s.parse::<DeltaModeArg>().unwrap().to_string(), s);
        }
        for s in ["uniform:0,1", "const:0.3"] {
            assert_eq!(s.parse::<LiftArg>().unwrap().to_string(), s);
        }
    }
}
