use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the crate.
///
/// The variants mirror the failure classes a study can hit: bad configuration,
/// bad data (non-finite samples, fields violating a precondition), misuse of an
/// operator, geometric problems between grids, and solver breakdown.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("domain too small: support radius {radius} does not fit in box of half-width {alpha}")]
    DomainTooSmall { radius: f64, alpha: f64 },

    #[error("grid mismatch: lattice spacing {left} vs {right}")]
    GridMismatch { left: f64, right: f64 },

    #[error("truncated support: target half-width {target} is smaller than {required}")]
    TruncatedSupport { target: f64, required: f64 },

    #[error("support error: field leaks {leak:e} (relative) outside the target box")]
    Support { leak: f64 },

    #[error("step size too large: CFL number {cfl:.3} exceeds limit, try dt = {suggested_dt:e}")]
    StepSize { cfl: f64, suggested_dt: f64 },

    #[error("blow-up detected after t = {last_valid_time}: {reason}")]
    BlowUp { last_valid_time: f64, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the error stems from configuration (CLI exit code 2).
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::Usage(_)
                | Error::DomainTooSmall { .. }
                | Error::GridMismatch { .. }
                | Error::TruncatedSupport { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
