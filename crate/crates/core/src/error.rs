use alloc::boxed::Box;
use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Two operands disagree on a length or dimension.
    Dimension {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    /// Input outside the domain of the operation (zero norm, empty set, non-finite value).
    Domain(String),
    /// Invalid configuration or parameter value.
    Parameter(String),
    /// Unknown class or concept.
    Lookup(String),
    /// Inconsistent input collection (e.g. duplicate image ids).
    Ingestion(String),
    /// Loss became non-finite during optimization.
    NumericFailure { epoch: usize, batch: usize },
    /// Metric is undefined for the given input (no positives, empty cell).
    UndefinedMetric(String),
    /// Failure while processing a specific class.
    Class { class: String, source: Box<Error> },
}

impl Error {
    pub(crate) fn dim(what: &'static str, expected: usize, actual: usize) -> Self {
        Error::Dimension {
            what,
            expected,
            actual,
        }
    }

    pub fn in_class(self, class: &str) -> Self {
        Error::Class {
            class: class.into(),
            source: Box::new(self),
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Dimension {
                what,
                expected,
                actual,
            } => write!(f, "dimension mismatch in {what}: expected {expected}, got {actual}"),
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Parameter(msg) => write!(f, "parameter error: {msg}"),
            Error::Lookup(msg) => write!(f, "lookup error: {msg}"),
            Error::Ingestion(msg) => write!(f, "ingestion error: {msg}"),
            Error::NumericFailure { epoch, batch } => {
                write!(f, "non-finite loss at epoch {epoch}, batch {batch}")
            }
            Error::UndefinedMetric(msg) => write!(f, "undefined metric: {msg}"),
            Error::Class { class, source } => write!(f, "class '{class}': {source}"),
        }
    }
}

impl core::error::Error for Error {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        match self {
            Error::Class { source, .. } => Some(source.as_ref()),
            _ => None,
        }
    }
}
