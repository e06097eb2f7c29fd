use thiserror::Error;

use crate::vfdsl::DslError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("model mismatch: expected {expected}, got {got}")]
    ModelMismatch { expected: String, got: String },

    #[error("dimension mismatch: expected {expected} components, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("points are not in the same fiber (orbit gap {gap:.3e})")]
    NotSameFiber { gap: f64 },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("step limit of {steps} exceeded at t = {t}")]
    StepLimit { t: f64, steps: usize },

    #[error("trajectory blew up at t = {t} (|y| = {norm:e})")]
    BlowUp { t: f64, norm: f64 },

    #[error("non-finite vector field value at t = {t}")]
    NonFinite { t: f64 },

    #[error("vector field is not S1-invariant (defect {defect:.3e} at {at:?})")]
    NotInvariant { defect: f64, at: Vec<f64> },

    #[error("trajectory left the domain {domain} at t = {t}")]
    DomainExit { t: f64, domain: String },

    #[error("J_O is not a first integral of the reduced averaged field (defect {defect:.3e} at {at:?})")]
    FirstIntegralViolated { defect: f64, at: Vec<f64> },

    #[error(transparent)]
    Dsl(#[from] DslError),

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
