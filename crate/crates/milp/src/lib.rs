//! A small, deterministic mixed-integer linear programming solver.
//!
//! Problems are always maximizations over box-bounded variables (continuous
//! or binary) with linear equality/inequality rows. LP relaxations are solved
//! by a two-phase bounded-variable primal simplex; integer problems by
//! best-bound branch-and-bound with depth-first dives.
//!
//! Determinism is a design requirement, not an accident: pivot selection,
//! node ordering, branching, and tie-breaking are all fixed rules, so the
//! same problem yields the same iteration counts, node counts, and solution
//! on every run.

mod branch;
mod lpfile;
mod problem;
mod simplex;

pub use branch::{solve_milp, MilpOptions, MilpSolution, MilpStatus};
pub use lpfile::write_lp;
pub use problem::{Problem, Row, RowSense, VarKind, Variable};
pub use simplex::{solve_lp, LpSolution, LpStatus, SimplexOptions};

/// Hard failures. Infeasible and unbounded problems are *statuses*, not
/// errors; an `Error` means the solver could not produce a trustworthy
/// answer at all.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("problem has {rows} rows, exceeding the configured limit of {limit}")]
    TooManyRows { rows: usize, limit: usize },
    #[error("simplex iteration limit reached after {0} iterations")]
    IterationLimit(u64),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("LP relaxation is unbounded; cannot bound the search")]
    UnboundedRelaxation,
}
