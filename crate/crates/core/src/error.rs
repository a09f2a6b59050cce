use thiserror::Error;

/// Errors raised by inference, indexing and the experiment harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid Beta parameters: alpha={alpha}, beta={beta}")]
    InvalidBeta { alpha: f64, beta: f64 },

    #[error("degenerate weight vector")]
    DegenerateWeights,

    #[error("point out of domain: coordinate {value} at axis {axis} is outside [0, 1]")]
    PointOutOfDomain { axis: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid kernel width {0}: must lie in (0, 1]")]
    InvalidKernelWidth(f64),

    #[error("invalid schedule argument: {0}")]
    InvalidSchedule(String),

    #[error("invalid contextual coefficients: A={a}, B={b}")]
    InvalidCoefficients { a: f64, b: f64 },

    #[error("invalid outcome {0}: must be 0 or 1")]
    InvalidOutcome(f64),

    #[error("success count {successes} exceeds trial count {trials}")]
    SuccessesExceedTrials { successes: usize, trials: usize },

    #[error("likelihood vanishes on [0, 1]: impossible observation sequence")]
    ImpossibleObservations,

    #[error("quadrature failed to converge (last change {0:e})")]
    QuadratureNoConvergence(f64),

    #[error("variance infeasible for Beta: v={variance} with mean {mean}")]
    InfeasibleVariance { mean: f64, variance: f64 },

    #[error("invalid probability {0}")]
    InvalidProbability(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
