use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("malformed bracket word `{0}`")]
    MalformedWord(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("ambiguous control: |h1| = {h1:e} within tolerance but |h01| = {h01:e} is not")]
    AmbiguousControl { h1: f64, h01: f64 },

    #[error("degenerate singular arc: |h101| = {h101:e} within tolerance")]
    DegenerateSingular { h101: f64 },

    #[error("singular control {u} outside the admissible range")]
    InadmissibleSingular { u: f64 },

    #[error("no sign change on the bracket [{ta}, {tb}]")]
    NoSignChange { ta: f64, tb: f64 },

    #[error("costate vanished at t = {t}")]
    CostateVanished { t: f64 },

    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}
