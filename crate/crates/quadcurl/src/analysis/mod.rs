//! Manufactured solutions, discrete norms and errors, error-equation
//! diagnostics and observed convergence orders.

mod errors;
mod report;
mod solutions;
pub mod symbolic;

pub use errors::{compute_errors, error_equation_residual, norm_equivalence_probe, ErrorEquationResidual, Errors, NormRatio};
pub use report::{convergence_rates, observed_order, fortran_sci, Column, ConvergenceReport, ErrorRecord};
pub use solutions::{ManufacturedSolution, NAMES as SOLUTION_NAMES};
