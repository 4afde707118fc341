use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("division by zero while evaluating expression (point lies on a divisor)")]
    DivisionByZero,
    #[error("floating-point overflow while evaluating expression; use log-magnitude evaluation")]
    Overflow,
    #[error("phase is indeterminate: both addends vanish identically")]
    IndeterminatePhase,
    #[error("evaluation point has dimension {got}, expression expects at least {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("expression parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },
    #[error("invalid meromorphic map: {0}")]
    InvalidMap(String),
    #[error("quadrature did not converge: disagreement {disagreement:.3e} after {levels} refinement levels")]
    NoConvergence { disagreement: f64, levels: u32 },
    #[error("winding number ambiguous: residual {residual:.3} from nearest integer at radius {radius}")]
    WindingAmbiguous { residual: f64, radius: f64 },
    #[error("counting in dimension >= 2 requires a divisor oracle when neither component has a non-vanishing certificate")]
    NeedsDivisorOracle,
    #[error("difference of the map is identically zero: the map is periodic with the given shift")]
    IdenticallyZero,
    #[error("profile does not grow enough for a {kind} fit: need at least {needed} rows with T >= {threshold}")]
    InsufficientGrowth {
        kind: &'static str,
        needed: usize,
        threshold: f64,
    },
    #[error("rational expression is degenerate: denominator vanishes at sampled points")]
    DegenerateRational,
    #[error("candidate does not satisfy the difference equation: max residual {residual:.3e} exceeds {tol:.1e}")]
    NotASolution { residual: f64, tol: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
