use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("exact computation requested on a sampling-mode source")]
    ModeMismatch,

    #[error("distributions are defined over different universes")]
    UniverseMismatch,

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A conditioned oracle failed to hit its event within the attempt cap.
    #[error("event `{event}` not observed in {attempts} consecutive attempts")]
    EventNegligible { event: &'static str, attempts: u64 },

    #[error("concept class does not contain the constant {} function", u8::from(*.0))]
    MissingConstant(bool),

    #[error("class enumeration of {size} entries exceeds the cap of {cap}")]
    ResolutionCap { size: u128, cap: u128 },

    #[error("labels are not consistent with any parity")]
    NoConsistentParity,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("learner requires labeled examples")]
    Unlabeled,

    #[error("invalid scenario: {}", .0.join("; "))]
    InvalidScenario(Vec<String>),

    #[error("plotting requires a two-dimensional scenario")]
    UnsupportedPlot,

    #[error("i/o error: {0}")]
    Io(String),

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

pub(crate) fn check_unit_open(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must lie in (0, 1), got {value}")))
    }
}
