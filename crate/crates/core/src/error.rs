use thiserror::Error;

use crate::domain::Ansatz;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("E/M = {eta} is outside the open interval (-1, 1)")]
    EtaOutOfRange { eta: f64 },

    #[error("array lengths differ ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },

    #[error("dimension D = {dimension} is not supported by {ansatz}")]
    UnsupportedDimension { dimension: u32, ansatz: Ansatz },

    #[error("coefficient denominator c*rho^(D-3) + A vanishes at rho = {rho}")]
    DenominatorVanishes { rho: f64 },

    #[error("Numerov coefficient vanishes at rho = {rho}")]
    SingularCoefficient { rho: f64 },

    #[error("non-finite value produced at rho = {rho}")]
    NonFiniteValue { rho: f64 },

    #[error("supercritical coupling: |K| = {k} does not exceed xi = {xi}")]
    SupercriticalCoupling { k: f64, xi: f64 },

    #[error("unsupported case: {0}")]
    UnsupportedCase(String),

    #[error("hypergeometric argument outside its domain: {0}")]
    DomainError(String),

    #[error("series failed to converge after {terms} terms")]
    NonConvergence { terms: usize },

    #[error("at E/M = {eta}: {source}")]
    AtEta { eta: f64, source: Box<Error> },
}

impl Error {
    pub(crate) fn at_eta(self, eta: f64) -> Self {
        match self {
            Error::AtEta { .. } => self,
            other => Error::AtEta {
                eta,
                source: Box::new(other),
            },
        }
    }
}
