use std::process::ExitCode;

use sbp_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        })
    }

    /// Classifies a library error raised while handling `context` (a file
    /// name or flag).
    pub fn from_core(context: &str, err: CoreError) -> Self {
        let msg = format!("{context}: {err}");
        match err {
            CoreError::Parse { .. }
            | CoreError::PointOutOfDomain { .. }
            | CoreError::DimensionMismatch { .. }
            | CoreError::InvalidOutcome(_)
            | CoreError::InvalidCoefficients { .. }
            | CoreError::SuccessesExceedTrials { .. }
            | CoreError::ImpossibleObservations => CliError::Data(msg),
            CoreError::QuadratureNoConvergence(_) | CoreError::DegenerateWeights => {
                CliError::Numerical(msg)
            }
            CoreError::InvalidBeta { .. }
            | CoreError::InvalidKernelWidth(_)
            | CoreError::InvalidSchedule(_)
            | CoreError::InfeasibleVariance { .. }
            | CoreError::InvalidProbability(_)
            | CoreError::InvalidConfig(_) => CliError::Usage(msg),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(e: CoreError) -> ExitCode {
        CliError::from_core("ctx", e).exit_code()
    }

    #[test]
    fn library_errors_map_to_exit_codes() {
        assert_eq!(
            code(CoreError::Parse {
                line: 3,
                message: "x".into()
            }),
            ExitCode::from(2)
        );
        assert_eq!(code(CoreError::ImpossibleObservations), ExitCode::from(2));
        assert_eq!(
            code(CoreError::QuadratureNoConvergence(1.0)),
            ExitCode::from(3)
        );
        assert_eq!(
            code(CoreError::InvalidBeta {
                alpha: 0.0,
                beta: 1.0
            }),
            ExitCode::from(1)
        );
        let msg = CliError::from_core(
            "d.csv",
            CoreError::Parse {
                line: 3,
                message: "bad".into(),
            },
        );
        assert_eq!(msg.to_string(), "d.csv: line 3: bad");
    }
}
