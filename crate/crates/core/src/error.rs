use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Failures reported by the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A domain or operation parameter violates its precondition.
    InvalidParameter(String),
    /// Array lengths disagree (grid vs. coefficients, operator vs. rhs, ...).
    DimensionMismatch { expected: usize, found: usize },
    /// The discretization produced no interior node.
    EmptyGrid,
    /// Iterative solver hit its cap; carries the final relative residual.
    NotConverged { iterations: usize, residual: f64 },
    /// Direct elimination met a zero pivot.
    Singular { row: usize },
    /// Dense oracle refuses systems above its size cap.
    TooLarge { n: usize, max: usize },
    /// Potential sign condition violated under Dirichlet data.
    NegativePotential { node: usize, value: f64 },
    /// Requested combination is not supported (e.g. Neumann with V != 0).
    Unsupported(&'static str),
    /// Initial datum does not vanish on the boundary.
    NonzeroBoundaryData { node: usize, value: f64 },
    /// Multiplier left its sub/supersolution envelope beyond tolerance.
    EnvelopeViolation { node: usize, relative: f64 },
    /// A value exceeded the overflow guard while integrating an ODE.
    Overflow { x: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::EmptyGrid => write!(f, "discretization has no interior node"),
            Error::NotConverged { iterations, residual } => write!(
                f,
                "linear solver did not converge after {iterations} iterations (relative residual {residual:e})"
            ),
            Error::Singular { row } => write!(f, "singular matrix (zero pivot at row {row})"),
            Error::TooLarge { n, max } => write!(f, "system of size {n} exceeds oracle limit {max}"),
            Error::NegativePotential { node, value } => write!(
                f,
                "potential is negative at node {node} ({value}); Dirichlet problem requires V >= 0"
            ),
            Error::Unsupported(what) => write!(f, "unsupported: {what}"),
            Error::NonzeroBoundaryData { node, value } => write!(
                f,
                "initial datum must vanish on the boundary (node {node} has {value})"
            ),
            Error::EnvelopeViolation { node, relative } => write!(
                f,
                "multiplier leaves its envelope at node {node} by {relative:e} (relative to the upper envelope); refine h"
            ),
            Error::Overflow { x } => write!(
                f,
                "trajectory exceeded 1e300 at x = {x}; exponential envelope violated"
            ),
        }
    }
}

impl core::error::Error for Error {}
