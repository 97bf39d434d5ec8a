use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SearchError {
    /// A parameter or config field violates its domain. `field` is a dotted
    /// path into the config when the value came from one.
    #[error("{field}: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("observation {value} lies outside the support of the {law} law")]
    OutsideSupport { value: f64, law: &'static str },

    #[error("observation {value} has zero likelihood under both hidden states")]
    ZeroEvidence { value: f64 },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("quadrature did not converge on [{lo}, {hi}]: estimate {estimate}, error {error} after {intervals} intervals")]
    Quadrature {
        lo: f64,
        hi: f64,
        estimate: f64,
        error: f64,
        intervals: usize,
    },

    #[error("cannot mix continuous and discrete laws ({0})")]
    MixedSupport(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("config parse error in {path}: {message}")]
    ConfigParse { path: String, message: String },

    #[error("{context}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv file {path}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl SearchError {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Prefix the field path of an `InvalidParameter` error.
    pub fn within(self, prefix: &str) -> Self {
        match self {
            Self::InvalidParameter { field, reason } => Self::InvalidParameter {
                field: if field.is_empty() {
                    prefix.to_string()
                } else {
                    format!("{prefix}.{field}")
                },
                reason,
            },
            other => other,
        }
    }

    /// Whether the error stems from user input (exit code 2 territory) rather
    /// than a runtime failure.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Self::InvalidParameter { .. } | Self::ConfigParse { .. } | Self::MixedSupport(_)
        )
    }
}

pub type Result<T, E = SearchError> = std::result::Result<T, E>;
