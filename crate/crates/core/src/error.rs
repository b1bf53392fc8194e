use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("cyclic prefix of {cp} samples cannot absorb a {needed}-sample channel")]
    CpTooShort { cp: usize, needed: usize },

    #[error("channel delay {delay:.3e} s exceeds the tap budget of {budget:.3e} s")]
    DelayBudget { delay: f64, budget: f64 },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("instance too large for exhaustive enumeration: {0} symbols")]
    TooLarge(usize),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Dimension { expected, actual })
    }
}
