//! Dense exact solvers: a primal transportation simplex for optimal
//! transport between two probability tables, and a small two-phase tableau
//! simplex for the Lipschitz-type linear programs.

pub mod dense_lp;
pub mod transportation;

pub use dense_lp::{LpProblem, LpSolution, RowKind};
pub use transportation::{TransportSolution, TransportationSolver};
