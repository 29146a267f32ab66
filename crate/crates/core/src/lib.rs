//! Exact-arithmetic library for four discrete-time interacting particle
//! systems on the integer line: geometric or Bernoulli jumps combined with
//! blocking or pushing interactions.
//!
//! Every probability in this crate is an exact rational.  The library
//! provides the stochastic recursions themselves, exact one-step and n-step
//! kernels obtained by marginalizing the innovations, the determinantal
//! transition kernels, the RSK-variant couplings that tie the particle
//! processes to tableau shape processes, and the intertwining kernels
//! (with their inverses) that connect the two layers.

pub mod exactnum;
pub mod intertwine;
pub mod rsk;
pub mod symfun;
pub mod systems;
pub mod verify;

/// Exact arbitrary-precision rational, the sole numeric scalar for kernel values.
pub type Rational = num::BigRational;
/// Arbitrary-precision integer.
pub type Int = num::BigInt;
/// Matrix of exact rationals.
pub type RationalMatrix = exactnum::Matrix<Rational>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("chamber violation: {0}")]
    ChamberViolation(String),
    #[error("innovation support mismatch: {0}")]
    SupportMismatch(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("uncertified window: {0}")]
    UncertifiedWindow(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
