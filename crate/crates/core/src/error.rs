//! Error taxonomy shared by all solvers and quadratures.

use thiserror::Error;

/// Failure modes of the numerical routines.
///
/// `CertificateFailure` is special: it signals that a quantity the theory
/// guarantees positive came out nonpositive, i.e. an implementation bug
/// rather than a mathematical possibility.
#[derive(Debug, Clone, Error)]
pub enum KdError {
    #[error("did not converge: {0}")]
    NonConvergence(String),
    #[error("overflow: {0}")]
    Overflow(String),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("bracket error: {0}")]
    BracketError(String),
    #[error("certificate failure: {0}")]
    CertificateFailure(String),
    #[error("eigensolver failure: {0}")]
    EigensolverFailure(String),
    #[error("blow-up detected: {0}")]
    BlowupDetected(String),
}

pub type Result<T> = std::result::Result<T, KdError>;
