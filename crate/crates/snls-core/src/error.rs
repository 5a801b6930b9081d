use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("amplitude overflow at t = {time}: max |u| = {max_amplitude:e}")]
    Overflow { time: f64, max_amplitude: f64 },
    #[error("non-finite field at t = {time} (max finite amplitude {max_amplitude:e})")]
    NonFinite { time: f64, max_amplitude: f64 },
    #[error("record is missing {0}")]
    MissingLedger(&'static str),
    #[error("step index {step} outside Brownian path range [{first}, {end})")]
    StepOutOfRange { step: usize, first: usize, end: usize },
    #[error("empty input: {0}")]
    Empty(&'static str),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
