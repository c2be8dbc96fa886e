use alloc::string::String;
use core::fmt;

/// Errors raised by the algebra, action and normalization routines.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A denominator evaluates to zero at the base point.
    DenominatorVanishes,
    /// A derivative was requested beyond the stored jet order.
    OrderExceeded { requested: usize, order: usize },
    /// Two jets of different order were compared.
    OrderMismatch { left: usize, right: usize },
    /// Variable counts of composed maps do not line up.
    ArityMismatch { expected: usize, found: usize },
    /// Target isotropy data violates the `S^2_{eps,sigma}` constraint.
    ConstraintViolated(String),
    /// A self-check of a constructed automorphism failed.
    SelfCheckFailed { max_residual: f64 },
    /// A point expected on a hypersurface is not.
    NotOnHypersurface { residual: f64 },
    /// The map signature index is not available for this signature.
    InvalidSignature { index: usize },
    /// Input is not a 2-nondegenerate transversal map fixing 0.
    NotInF2(String),
    /// The normal-form solver did not reach the acceptance threshold.
    NoConvergence { max_residual: f64 },
    /// Classification certificate above threshold.
    Unclassifiable { certificate: f64 },
    /// A parameter inversion did not converge.
    SolveFailed,
    /// A user-supplied function failed during finite differencing.
    EvaluationFailed(String),
    /// Stabilizer witnesses disagree with the s-based prediction.
    Inconsistent(String),
    /// A search ended above its success threshold.
    SearchStalled { best_distance: f64 },
    /// Invalid argument for an operation.
    InvalidInput(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DenominatorVanishes => write!(f, "denominator vanishes at the base point"),
            Error::OrderExceeded { requested, order } => {
                write!(f, "derivative order {requested} exceeds jet order {order}")
            }
            Error::OrderMismatch { left, right } => {
                write!(f, "jet order mismatch: {left} vs {right}")
            }
            Error::ArityMismatch { expected, found } => {
                write!(f, "expected {expected} components, found {found}")
            }
            Error::ConstraintViolated(msg) => write!(f, "constraint violated: {msg}"),
            Error::SelfCheckFailed { max_residual } => {
                write!(f, "self-check failed (max residual {max_residual:e})")
            }
            Error::NotOnHypersurface { residual } => {
                write!(f, "point not on hypersurface (residual {residual:e})")
            }
            Error::InvalidSignature { index } => {
                write!(f, "map ({index}) requires eps = -1")
            }
            Error::NotInF2(msg) => write!(f, "map is not in F2: {msg}"),
            Error::NoConvergence { max_residual } => {
                write!(f, "normalization did not converge (max residual {max_residual:e})")
            }
            Error::Unclassifiable { certificate } => {
                write!(f, "no catalog member within threshold (certificate {certificate:e})")
            }
            Error::SolveFailed => write!(f, "parameter inversion failed"),
            Error::EvaluationFailed(msg) => write!(f, "evaluation failed: {msg}"),
            Error::Inconsistent(msg) => write!(f, "inconsistent stabilizer witnesses: {msg}"),
            Error::SearchStalled { best_distance } => {
                write!(f, "search stalled at distance {best_distance:e}")
            }
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T, E = Error> = core::result::Result<T, E>;
