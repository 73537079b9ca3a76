use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("angle must be finite, got {0}")]
    NonFiniteAngle(f64),

    #[error("angle {value} outside domain {domain}")]
    AngleDomain { value: f64, domain: &'static str },

    #[error("scenario has {0} observables; at most {max} are supported", max = crate::lhv::MAX_OBSERVABLES)]
    ScenarioTooLarge(usize),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("unknown observable `{0}`")]
    UnknownObservable(String),

    #[error("missing coincidence for pair ({0}, {1})")]
    MissingPair(String, String),

    #[error("invalid probability {value} for {what}")]
    InvalidProbability { value: f64, what: String },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("run table error: {0}")]
    RunTable(String),

    #[error("malformed problem: {0}")]
    MalformedProblem(String),

    #[error("empty grid: {0}")]
    EmptyGrid(String),

    #[error("trial count must be at least 1")]
    NoTrials,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
