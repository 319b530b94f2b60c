//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("concentration must be nonnegative, got {0}")]
    NegativeConcentration(f64),

    #[error("substrate {value} outside [{lo}, {hi}]")]
    OutOfDomain { value: f64, lo: f64, hi: f64 },

    #[error("rate {0} has no preimage under the growth law")]
    NoPreimage(f64),

    #[error("beta vanishes at s = {0}; g has a pole there")]
    Pole(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no sign change on [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },

    #[error("internal inconsistency: {0}")]
    Inconsistency(String),

    #[error("sensitivity system is singular (det Gamma = {0})")]
    SingularSensitivity(f64),

    #[error("design undefined: {0}")]
    DesignUndefined(String),
}

pub type Result<T> = std::result::Result<T, Error>;
