use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("value {value} outside interpolation range [{lo}, {hi}]")]
    InterpolationRange { value: f64, lo: f64, hi: f64 },

    #[error("island m={m} lies outside the grid window")]
    OutOfWindow { m: u32 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("{metric} is undefined: {reason}")]
    Undefined {
        metric: &'static str,
        reason: String,
    },

    #[error("unit error: {0}")]
    Unit(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn undefined(metric: &'static str, reason: impl Into<String>) -> Error {
    Error::Undefined {
        metric,
        reason: reason.into(),
    }
}
