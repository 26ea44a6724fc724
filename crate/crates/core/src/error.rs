use thiserror::Error;

/// Errors raised by the numerical kernels and the command layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A required device parameter was not supplied.
    #[error("missing parameter: {0}")]
    MissingParam(&'static str),

    /// The closed-form average area does not exist for these parameters.
    #[error("convergence condition violated: {0}")]
    Convergence(String),

    /// The maximiser sits on the edge of the search window, or the objective is flat.
    #[error("peak not bracketed: {0}")]
    Bracket(String),

    /// Both conditional output densities are degenerate.
    #[error("degenerate channel: {0}")]
    Degenerate(String),

    /// Configuration text could not be parsed.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A configuration value violates an invariant; `field` names the key.
    #[error("invalid value for `{field}`: {msg}")]
    Validation { field: String, msg: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn validation(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            msg: msg.into(),
        }
    }

    /// Process exit status for this error: 2 for input problems, 3 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Bracket(_) | Error::Convergence(_) | Error::Degenerate(_) => 3,
            Error::Domain(_)
            | Error::MissingParam(_)
            | Error::Parse { .. }
            | Error::Validation { .. }
            | Error::Io(_) => 2,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
