//! Crate-wide error with module-qualified codes.

use thiserror::Error;

use crate::corpus::CorpusError;
use crate::distributions::DistError;
use crate::fitting::FitError;
use crate::meta::MetaError;
use crate::rates::RateError;
use crate::reinsurance::ContractError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Rates(#[from] RateError),
    #[error(transparent)]
    Distributions(#[from] DistError),
    #[error(transparent)]
    Fitting(#[from] FitError),
    #[error(transparent)]
    Meta(#[from] MetaError),
    #[error(transparent)]
    Reinsurance(#[from] ContractError),
}

impl Error {
    /// Dotted code such as `corpus.bad_date`.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Corpus(e) => e.code(),
            Error::Rates(e) => e.code(),
            Error::Distributions(e) => e.code(),
            Error::Fitting(e) => e.code(),
            Error::Meta(e) => e.code(),
            Error::Reinsurance(e) => e.code(),
        }
    }
}
