use thiserror::Error;

/// Errors raised by the waveform design library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DfrcError {
    /// An input violated a documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Operand shapes do not agree.
    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    Dimension {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    /// An iterative routine failed to reach its tolerance.
    #[error("numeric failure in {routine}: {detail} (residual {residual:.3e})")]
    Numeric {
        routine: &'static str,
        detail: String,
        residual: f64,
    },

    /// A Hermitian system was singular or indefinite.
    #[error("matrix not positive definite: smallest eigenvalue {min_eigenvalue:.3e}")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    /// The constructive-interference region (with the power ball) has no interior point.
    #[error("infeasible constraint set: user {user} reaches at best margin {best_margin:.3e}")]
    Infeasible { user: usize, best_margin: f64 },

    /// The waveform puts (numerically) no energy on the target.
    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    /// Gaussian randomization produced no feasible candidate, fallback included.
    #[error("randomization produced no feasible candidate after {samples} samples")]
    RandomizationFailed { samples: usize },

    /// Invalid experiment or scenario configuration.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for DfrcError {
    fn from(e: std::io::Error) -> Self {
        DfrcError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, DfrcError>;
