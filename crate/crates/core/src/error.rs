use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("axis group out of range: {0}")]
    AxisOutOfRange(String),

    #[error("particle index {index} out of range for {count} particles")]
    ParticleOutOfRange { index: usize, count: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("scheme {scheme} is not valid here: {reason}")]
    SchemeMismatch { scheme: String, reason: String },

    #[error("non-finite value encountered at step {step}: {what}")]
    NonFinite { step: usize, what: String },

    #[error("basis is not orthonormal: residual {residual:e} exceeds {tolerance:e}")]
    NotOrthonormal { residual: f64, tolerance: f64 },

    #[error("tangent vectors collapsed at step {step} (norm {norm:e})")]
    TangentCollapse { step: usize, norm: f64 },

    #[error("state is fully node-masked: {0}")]
    FullyMasked(String),

    #[error("linear solver did not converge after {iterations} iterations (residual {residual:e})")]
    SolverDivergence { iterations: usize, residual: f64 },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("config not found: {}", .0.display())]
    ConfigNotFound(PathBuf),

    #[error("config parse error at line {line}, column {column}: {message}")]
    ConfigParse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("config validation error at `{key}`: {message}")]
    ConfigValidation { key: String, message: String },

    #[error("malformed file {}: {message}", .path.display())]
    Format { path: PathBuf, message: String },

    #[error("i/o error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for failures raised by the numerics rather than by inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. }
                | Error::TangentCollapse { .. }
                | Error::SolverDivergence { .. }
                | Error::FullyMasked(_)
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

impl Error {
    /// Stable snake_case tag for machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::GridMismatch(_) => "grid_mismatch",
            Error::AxisOutOfRange(_) => "axis_out_of_range",
            Error::ParticleOutOfRange { .. } => "particle_out_of_range",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::SchemeMismatch { .. } => "scheme_mismatch",
            Error::NonFinite { .. } => "non_finite",
            Error::NotOrthonormal { .. } => "not_orthonormal",
            Error::TangentCollapse { .. } => "tangent_collapse",
            Error::FullyMasked(_) => "fully_masked",
            Error::SolverDivergence { .. } => "solver_divergence",
            Error::UnknownScenario(_) => "unknown_scenario",
            Error::ConfigNotFound(_) => "config_not_found",
            Error::ConfigParse { .. } => "config_parse",
            Error::ConfigValidation { .. } => "config_validation",
            Error::Format { .. } => "format",
            Error::Io { .. } => "io",
        }
    }

    /// Process exit code: 2 for numerical aborts, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        if self.is_numerical() {
            2
        } else {
            1
        }
    }
}
