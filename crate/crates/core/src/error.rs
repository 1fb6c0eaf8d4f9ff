use std::path::PathBuf;

use thiserror::Error;

use crate::gee::GeeFit;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("week {week} is outside the covered range {start}..{end}")]
    OutOfRange {
        week: String,
        start: String,
        end: String,
    },

    #[error("unknown level `{level}` for {variable}")]
    UnknownLevel { variable: String, level: String },

    #[error("singular design: collinear columns {columns:?}")]
    SingularDesign { columns: Vec<String> },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("perfect separation: coefficient `{column}` reached {value:.3} on the log-odds scale")]
    Separation { column: String, value: f64 },

    #[error("no convergence after {iterations} iterations (last max step {last_step:e})")]
    NonConvergence {
        iterations: usize,
        last_step: f64,
        last: Box<GeeFit>,
    },

    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("missing profiles: {0:?}")]
    MissingProfiles(Vec<String>),

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("degenerate curve for segment {0}: no significant SRD bins")]
    DegenerateCurve(String),

    #[error("stratification error: {0}")]
    Stratification(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("schema error in {file}:{line}:{column}: {message}")]
    Schema {
        file: String,
        line: u64,
        column: String,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn schema(
        file: impl Into<String>,
        line: u64,
        column: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Error::Schema {
            file: file.into(),
            line,
            column: column.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag used in the CLI's error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::OutOfRange { .. } => "out_of_range",
            Error::UnknownLevel { .. } => "unknown_level",
            Error::SingularDesign { .. } => "singular_design",
            Error::InsufficientData(_) => "insufficient_data",
            Error::Separation { .. } => "separation",
            Error::NonConvergence { .. } => "non_convergence",
            Error::Shape { .. } => "shape",
            Error::MissingProfiles(_) => "missing_profiles",
            Error::NoSolution(_) => "no_solution",
            Error::DegenerateCurve(_) => "degenerate_curve",
            Error::Stratification(_) => "stratification",
            Error::Config(_) => "config",
            Error::Schema { .. } => "schema",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
