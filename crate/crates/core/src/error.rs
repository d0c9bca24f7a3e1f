use thiserror::Error;

/// Errors produced anywhere in the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("timestamp mismatch: {left} vs {right}")]
    Timestamp { left: f64, right: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("state corruption: {0}")]
    StateCorruption(String),

    #[error(
        "composition ambiguity on variable {variable} at t={t}: overriding faults {first} and {second} are both active"
    )]
    CompositionAmbiguity {
        variable: usize,
        t: f64,
        first: usize,
        second: usize,
    },

    #[error("simulation diverged at step {step} (t={t}): {reason}")]
    Divergence { step: usize, t: f64, reason: String },

    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid configuration field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),

    #[error("{context}: {message}")]
    Io { context: String, message: String },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(context: impl Into<String>, err: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            message: err.to_string(),
        }
    }

    /// True for errors caused by the input configuration rather than by the
    /// simulation itself.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Syntax { .. } | Error::Config { .. } | Error::UnknownKey(_) | Error::Parameter { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
