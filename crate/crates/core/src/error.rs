use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A hypothesis of the operation does not hold; the message names it.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("no real root: {0}")]
    NoRealRoot(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("no convergence after t = {time}: {detail}")]
    NonConvergence { time: f64, detail: String },

    #[error("blow-up guard tripped; last valid time {last_valid_time}")]
    BlowUp { last_valid_time: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} = {x} is not finite")))
    }
}
