use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("coordinate index {index} out of range for a space of {n} coordinates")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("space has {n} coordinates; at most {max} are supported")]
    TooManyCoordinates { n: usize, max: usize },

    #[error("probability vector has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("probability p[{index}] = {value} is outside [0, 1]")]
    InvalidProbability { index: usize, value: f64 },

    #[error("weight c[{index}] = {value} is not strictly positive")]
    NonPositiveWeight { index: usize, value: f64 },

    #[error("support of {support} coordinates exceeds the exact cap of {cap}; enable Monte Carlo or raise --max-exact-support")]
    TooLargeForExact { support: usize, cap: usize },

    #[error("family has {k} events; the enumeration oracle handles at most {max}")]
    TooManyEvents { k: usize, max: usize },

    #[error(
        "bound {bound} is stated for unweighted families; use the weighted i2e / i2a variants"
    )]
    WeightedFamily { bound: &'static str },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("invalid dependency relation: {0}")]
    InvalidRelation(String),

    #[error("invalid generator parameters: {0}")]
    Generator(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
