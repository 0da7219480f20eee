use std::path::PathBuf;

/// Errors raised anywhere in the simulator.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Validation(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("config not found: {}", .0.display())]
    ConfigNotFound(PathBuf),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite value in {what} at index {index}")]
    NonFinite { what: String, index: usize },

    #[error("negative density at index {index} ({value})")]
    NegativeDensity { index: usize, value: f64 },

    #[error("density underflow at ({index}): {value} below floor {floor}")]
    DensityUnderflow { index: usize, value: f64, floor: f64 },

    #[error("step rejected at t={t}: {reason}; retry with dt <= {suggested_dt}")]
    StepRejected { t: f64, reason: String, suggested_dt: f64 },

    #[error("{0}")]
    Numerical(String),

    #[error("snapshot format: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. } | Error::DensityUnderflow { .. } | Error::StepRejected { .. } | Error::Numerical(_)
        )
    }

    /// Short machine-readable tag used on stderr by the CLI.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Validation(_) => "validation",
            Error::Config { .. } => "config",
            Error::ConfigNotFound(_) => "config_not_found",
            Error::GridMismatch(_) => "grid_mismatch",
            Error::NonFinite { .. } => "non_finite",
            Error::NegativeDensity { .. } => "negative_density",
            Error::DensityUnderflow { .. } => "density_underflow",
            Error::StepRejected { .. } => "step_rejected",
            Error::Numerical(_) => "numerical",
            Error::Snapshot(_) => "snapshot",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
