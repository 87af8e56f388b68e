use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum ScdgError {
    /// A state left the admissible set of the system.
    #[error("inadmissible state for {system}: {predicate}")]
    Domain { system: &'static str, predicate: String },

    /// The straight-line path between two entropy states left the admissible set.
    #[error("entropy-variable path leaves the admissible set at theta = {theta}: {source}")]
    Path {
        theta: f64,
        #[source]
        source: Box<ScdgError>,
    },

    #[error("invalid configuration field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("slab {slab}: Newton did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        slab: usize,
        iterations: usize,
        residual: f64,
    },

    #[error("slab {slab}: no admissible Newton step found ({reason})")]
    LineSearch { slab: usize, reason: String },

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("need at least {needed} refinement levels, got {got}")]
    InsufficientLevels { needed: usize, got: usize },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{0}")]
    Internal(String),
}

impl ScdgError {
    pub(crate) fn domain(system: &'static str, predicate: impl Into<String>) -> Self {
        ScdgError::Domain {
            system,
            predicate: predicate.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        ScdgError::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, ScdgError>;
