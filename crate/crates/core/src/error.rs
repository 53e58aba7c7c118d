use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate density: covariance determinant {det:e} is not positive")]
    DegenerateDensity { det: f64 },

    #[error("degenerate fusion: summed covariance determinant {det:e} is not positive")]
    DegenerateFusion { det: f64 },

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("invalid covariance: {0}")]
    InvalidCovariance(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown key or character {0:?}")]
    UnknownKey(char),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("arpa line {line}: {message}")]
    ArpaSyntax { line: usize, message: String },

    #[error("arpa count mismatch for order {order}: declared {declared}, found {found}")]
    ArpaCountMismatch {
        order: usize,
        declared: usize,
        found: usize,
    },

    #[error("arpa: missing \\end\\ marker")]
    ArpaMissingEnd,

    #[error("word {word:?} contains out-of-vocabulary character {ch:?}")]
    OutOfVocabulary { word: String, ch: char },

    #[error("bisection did not converge after {iterations} iterations (target {target}, last estimate {estimate})")]
    NoConvergence {
        iterations: usize,
        target: f64,
        estimate: f64,
    },

    #[error("line {line}: {message}")]
    Format { line: usize, message: String },

    #[error(transparent)]
    Json(#[from] JsonError),
}

/// `serde_json::Error` is not `Clone`; keep its message only.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{0}")]
pub struct JsonError(pub String);

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(JsonError(e.to_string()))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
