use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected} cells, found {found}")]
    Shape { expected: usize, found: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("zero magnetization at cell ({i}, {j}, {k})")]
    DegenerateCell { i: usize, j: usize, k: usize },

    #[error("mode mismatch: {0}")]
    ModeMismatch(String),

    #[error("time {t} outside schedule range [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite magnetization at t = {t}")]
    BlowUp { t: f64 },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
