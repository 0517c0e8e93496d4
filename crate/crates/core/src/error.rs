use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("variable `{name}`: {reason}")]
    InvalidVariable { name: String, reason: String },
    #[error("duplicate variable name `{0}`")]
    DuplicateName(String),
    #[error("search space must contain at least one variable")]
    Empty,
    #[error("variable `{name}`: code {code} does not select one of {levels} levels")]
    LevelOutOfRange { name: String, code: i64, levels: usize },
    #[error("expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KrigingError {
    #[error("need at least 2 finite observations to fit, got {0}")]
    TooFewPoints(usize),
    #[error("training inputs contain non-finite values")]
    NonFiniteInput,
    #[error("all training inputs are identical; fit with noise = true")]
    IdenticalInputs,
    #[error("correlation matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("non-finite entry in correlation matrix")]
    NonFiniteCorrelation,
    #[error("invalid surrogate configuration: {0}")]
    Config(String),
    #[error("likelihood optimization found no finite parameter point")]
    NoFiniteLikelihood,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObjectiveError {
    #[error("objective `{0}` has no formula available")]
    FormulaUnavailable(String),
    #[error("unknown objective `{0}`")]
    Unknown(String),
    #[error("objective `{name}` expects {expected} dimensions, got {got}")]
    Dimension {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("objective `{0}` needs numeric inputs")]
    NonNumeric(String),
    #[error("objective protocol violation: {0}")]
    Protocol(String),
    #[error("initial design produced {successes} successful points after {attempts} attempts, need {required}")]
    InitialDesignFailed {
        successes: usize,
        attempts: usize,
        required: usize,
    },
    #[error("objective failed {0} times in a row")]
    RepeatedFailure(usize),
}

#[derive(Debug, Error)]
pub enum SpotError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("surrogate: {0}")]
    Surrogate(#[from] KrigingError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error("invalid state: {0}")]
    State(String),
    #[error("unsupported state schema version {found} (expected {expected})")]
    SchemaVersion { found: u64, expected: u64 },
    #[error("argument error: {0}")]
    Argument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
