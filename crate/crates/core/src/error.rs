use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("derivative order {requested} exceeds the supported maximum {max}")]
    UnsupportedOrder { requested: usize, max: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("pole: {0} is one of the imposed zeros")]
    Pole(Complex64),

    #[error("evaluators are linearly dependent (condition estimate {condition:e})")]
    LinearDependence { condition: f64 },

    #[error("invalid epsilon schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid structure function: {0}")]
    InvalidStructure(String),
}

pub type Result<T> = std::result::Result<T, Error>;
