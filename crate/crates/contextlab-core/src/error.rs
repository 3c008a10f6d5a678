//! Shared error type for all core modules.

use alloc::string::String;
use core::fmt;

/// Errors raised by the core library.
///
/// Domain "signals" that are expected analysis outcomes (a pair of PVMs being
/// incompatible, Fine's construction having no joint distribution, ...) are
/// modelled as dedicated result enums on the operations themselves, not as
/// errors; this type covers genuine contract violations and resource limits.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operator or state dimensions do not match.
    DimensionMismatch { expected: usize, got: usize },
    /// A computed probability fell outside `[0,1]` by more than the tolerance.
    NumericalRangeError { value: f64 },
    /// A Bloch-like effect vector violates the two-cone validity condition.
    InvalidBloch,
    /// Matrix/vector shapes are inconsistent with the operation's contract.
    ShapeMismatch(String),
    /// A configured resource cap (dimension, class count, ...) was exceeded.
    ResourceLimit(String),
    /// Sharpness parameters of the observables differ.
    EtaMismatch { eta_i: f64, eta_j: f64 },
    /// Joint-POVM parameters violate a validity inequality (message names it).
    InvalidJointParams(String),
    /// An input believed projective failed the idempotency check.
    NotProjective,
    /// Polytope dimension exceeds the enumeration cap.
    DimensionLimit { dim: usize, cap: usize },
    /// The polytope is empty, so the linear program has no feasible point.
    EmptyPolytope,
    /// Pairwise statistics violate the no-disturbance consistency conditions.
    NoDisturbanceViolated(String),
    /// A measurement pair is not jointly measurable at the requested sharpness.
    IncompatiblePair { i: usize, j: usize },
    /// A constructed set of operators failed its operational-equivalence check
    /// (signals a construction bug or an invalid custom configuration).
    EquivalenceCheckFailed(String),
    /// A polytope vertex could not be classified (no odd half-cycle found).
    ClassificationFailure(String),
    /// An outcome distribution does not sum to one.
    NotNormalized { sum: f64 },
    /// The data matrix cannot identify the requested number of hyperplanes.
    DegenerateFit(String),
    /// The secondary-procedure linear program is infeasible for this data.
    InfeasibleLp(String),
    /// A value fails a documented precondition (message explains which).
    InvalidInput(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::NumericalRangeError { value } => {
                write!(f, "probability {value} outside [0,1] beyond tolerance")
            }
            Error::InvalidBloch => write!(f, "Bloch vector violates the two-cone effect condition"),
            Error::ShapeMismatch(msg) => write!(f, "shape mismatch: {msg}"),
            Error::ResourceLimit(msg) => write!(f, "resource limit exceeded: {msg}"),
            Error::EtaMismatch { eta_i, eta_j } => {
                write!(f, "sharpness mismatch: {eta_i} vs {eta_j}")
            }
            Error::InvalidJointParams(msg) => write!(f, "invalid joint-POVM parameters: {msg}"),
            Error::NotProjective => write!(f, "input POVM is not projective"),
            Error::DimensionLimit { dim, cap } => {
                write!(f, "polytope dimension {dim} exceeds cap {cap}")
            }
            Error::EmptyPolytope => write!(f, "polytope is empty"),
            Error::NoDisturbanceViolated(msg) => write!(f, "no-disturbance violated: {msg}"),
            Error::IncompatiblePair { i, j } => {
                write!(f, "measurements {i} and {j} are not jointly measurable")
            }
            Error::EquivalenceCheckFailed(msg) => {
                write!(f, "operational equivalence check failed: {msg}")
            }
            Error::ClassificationFailure(msg) => write!(f, "vertex classification failed: {msg}"),
            Error::NotNormalized { sum } => {
                write!(f, "distribution sums to {sum}, expected 1")
            }
            Error::DegenerateFit(msg) => write!(f, "degenerate fit: {msg}"),
            Error::InfeasibleLp(msg) => write!(f, "infeasible linear program: {msg}"),
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
