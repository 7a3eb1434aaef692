use thiserror::Error;

use crate::spectra::Spectrum;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("inconsistent matrix shape: {0}")]
    Shape(String),

    /// Truncation doubling hit its ceiling before every requested level
    /// settled. The partial spectrum carries the certified prefix.
    #[error(
        "truncation did not converge: {certified} of {requested} levels certified at N = {trunc}"
    )]
    NotConverged {
        requested: usize,
        certified: usize,
        trunc: usize,
        partial: Box<Spectrum>,
    },

    #[error("spectrum too short: need at least {needed} certified levels, have {have}")]
    TooShort { needed: usize, have: usize },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("spectrum carries no parity labels")]
    MissingLabels,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
