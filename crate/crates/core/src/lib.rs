//! Numerical Nevanlinna theory for difference operators on meromorphic
//! maps `C^n -> P^1`.
//!
//! The crate evaluates proximity, counting and characteristic functions on
//! sphere boundaries, applies the shift and difference operators to
//! expression-level maps, checks the explicit difference-quotient bounds
//! and the difference second-main-theorem ledger at finite radii, and runs
//! the Picard-type forward-invariance and difference-Riccati analyses.
//!
//! Modules:
//! - [`expr`]: expression trees, parsing, log-magnitude evaluation.
//! - [`quad`]: circle / sphere / ball quadrature with fiber integration.
//! - [`nevanlinna`]: `m`, `N`, `T`, growth orders, Jensen / FMT residuals.
//! - [`difference`]: `Delta_c`, difference-quotient proximity, explicit
//!   bounds, second-main-theorem ledger.
//! - [`applications`]: forward invariance, Picard verdicts, rational
//!   degree analysis, difference-Riccati classification.

pub mod applications;
pub mod difference;
mod error;
pub mod expr;
pub mod nevanlinna;
pub mod quad;

pub use error::{Error, Result};
