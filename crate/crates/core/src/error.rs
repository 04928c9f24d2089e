use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed document (syntax error, missing or mistyped key).
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// Well-formed document whose values break a layer invariant.
    #[error("layer `{layer}`: invalid `{field}`: {reason}")]
    Validation {
        layer: String,
        field: &'static str,
        reason: String,
    },

    #[error("duplicate layer name `{0}` in suite")]
    DuplicateLayer(String),

    #[error("unknown built-in suite `{0}` (expected one of: alexnet, zfnet, vgg, inception-v3, resnet)")]
    UnknownSuite(String),

    /// A schedule, tile choice or buffering assignment that breaks the nest invariants.
    #[error("invalid schedule: {0}")]
    Schedule(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("simulation refused: {required} iterations exceed the cap of {cap}")]
    OracleCap { required: u64, cap: u64 },
}

impl Error {
    pub(crate) fn schedule(msg: impl Into<String>) -> Self {
        Error::Schedule(msg.into())
    }

    pub fn io(path: impl Into<String>, err: impl std::fmt::Display) -> Self {
        Error::Io {
            path: path.into(),
            message: err.to_string(),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        // serde_json appends " at line X column Y" to its Display output.
        let message = err.to_string();
        let message = match message.rfind(" at line ") {
            Some(idx) => message[..idx].to_string(),
            None => message,
        };
        Error::Parse {
            line: err.line(),
            column: err.column(),
            message,
        }
    }
}
