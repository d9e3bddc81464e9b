use std::path::PathBuf;

/// Errors produced by the solver, calibration and I/O layers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid mismatch: {left} cells vs {right} cells")]
    GridMismatch { left: usize, right: usize },

    #[error("degenerate weights: masses must be nonnegative with a positive sum")]
    DegenerateMasses,

    /// Every utility value is nonpositive under the vanishing-noise limit,
    /// so the normalizing sum is zero.
    #[error("degenerate limit weights (all utilities <= 0){}", step_suffix(*.step))]
    DegenerateWeights { step: Option<usize> },

    #[error("no stationary state within {max_steps} steps")]
    NotStationary { max_steps: usize },

    #[error("empty sample")]
    EmptySample,

    #[error("every grid-search evaluation failed ({evaluations} attempted)")]
    AllEvaluationsFailed { evaluations: usize },

    #[error("{path}: row {row}: {message}")]
    MalformedData { path: String, row: usize, message: String },

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn step_suffix(step: Option<usize>) -> String {
    match step {
        Some(k) => format!(" at step {k}"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Process exit code used by the command-line front end:
    /// 1 for configuration problems, 2 for solver failures, 3 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter { .. } | Error::Config(_) => 1,
            Error::Io { .. } | Error::MalformedData { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
