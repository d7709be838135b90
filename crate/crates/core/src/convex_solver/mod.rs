//! Small dense LP and diagonal-QP solvers.

mod lp;
mod qp;

pub use lp::{solve_lp, LinearProgram, LpOutcome, LpSolution};
pub use qp::{solve_qp, solve_qp_with, QpSolution, QuadraticProgram, QP_MAX_ITERS, QP_TOL};
