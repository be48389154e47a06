use thiserror::Error;

/// Everything that can go wrong between a configuration and a spectrum.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("A_p = {0} is at or above the oscillation threshold (must satisfy 0 <= A_p < 1)")]
    AboveThreshold(f64),

    #[error("non-physical value for `{field}`: {value}")]
    NonPhysical { field: &'static str, value: f64 },

    #[error("pump is both flagged plane-wave and given a finite waist w_p = {0}")]
    AmbiguousPump(f64),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("linear system is singular or ill-conditioned (condition number {condition:.3e})")]
    SingularSystem { condition: f64 },

    #[error("mode at q = {q} is at or above threshold (|denominator| = {denominator:.3e})")]
    AtOrAboveThreshold { q: f64, denominator: f64 },

    #[error("detector mask contains no grid point")]
    EmptyDetector,

    #[error("detection plane mismatch: {0}")]
    PlaneMismatch(String),

    #[error("configuration error in `{key}`: {message}")]
    Config { key: String, message: String },
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// `true` for failures that come from the numerics rather than the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::GridTooCoarse(_)
                | Error::SingularSystem { .. }
                | Error::AtOrAboveThreshold { .. }
                | Error::EmptyDetector
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
