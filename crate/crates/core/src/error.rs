use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain size must be at least 1")]
    EmptyDomain,

    #[error("dimension mismatch: {what} has length {found}, expected {expected}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("instance index {index} is outside the domain of size {size}")]
    IndexOutOfDomain { index: usize, size: usize },

    #[error("invalid label {0}: labels must be -1 or +1")]
    InvalidLabel(i64),

    #[error("hypothesis class is empty")]
    EmptyClass,

    #[error("hypothesis class contains duplicate members at positions {first} and {second}")]
    DuplicateHypothesis { first: usize, second: usize },

    #[error("bad probabilities: {0}")]
    BadProbabilities(String),

    #[error("perturbation set of instance {0} is empty")]
    EmptyPerturbationSet(usize),

    #[error("{0} is empty")]
    EmptyInput(&'static str),

    #[error("no hypothesis is robustly correct on the training data and robustly stable on the test data")]
    Infeasible,

    #[error("domain size {size} exceeds the exhaustive-search limit of {limit}")]
    DomainTooLarge { size: usize, limit: usize },

    #[error("exact attack needs {candidates} candidates, more than the cap of {cap}")]
    BudgetExceeded { candidates: u128, cap: u128 },

    #[error("delta must lie strictly between 0 and 1, got {0}")]
    BadDelta(f64),

    #[error("training set has {0} points; the split reduction needs at least 2")]
    TrainTooSmall(usize),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Whether the error stems from malformed input rather than a failure
    /// while computing on valid input.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::EmptyDomain
                | Error::DimensionMismatch { .. }
                | Error::IndexOutOfDomain { .. }
                | Error::InvalidLabel(_)
                | Error::EmptyClass
                | Error::DuplicateHypothesis { .. }
                | Error::BadProbabilities(_)
                | Error::EmptyPerturbationSet(_)
                | Error::EmptyInput(_)
                | Error::BadDelta(_)
                | Error::TrainTooSmall(_)
                | Error::Config(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
