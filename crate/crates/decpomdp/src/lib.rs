//! Exact finite-horizon planning for decentralized POMDPs.
//!
//! A Dec-POMDP is solved by writing each agent's policy in *sequence form*
//! (a 0/1 vector over its action-observation sequences, constrained by a
//! small linear system), precomputing the value contribution of every
//! length-κ joint sequence, and assembling a mixed-integer linear program
//! whose optimum is the optimal joint policy value. The MILP is solved by
//! the deterministic branch-and-bound engine in the `milp` crate.
//!
//! Crate layout mirrors the pipeline:
//! - [`model`]: instance data, file parsing, belief updates
//! - [`sequences`]: per-agent sequence spaces, policy constraints, tree and
//!   vector policy forms
//! - [`valuation`]: joint-sequence probability/reward/value tables and the
//!   two equivalent policy evaluators
//! - [`dominance`]: iterated elimination of provably useless sequences
//! - [`formulation`]: assembling the integer programs and extracting
//!   policies from solutions
//! - [`bounds`]: optional objective bounds (previous horizon, centralized
//!   relaxation)
//! - [`oracle`]: brute-force enumeration for ground truth at small sizes
//! - [`pipeline`] / [`report`]: end-to-end runs with machine-readable output

pub mod bounds;
pub mod dominance;
pub mod formulation;
pub mod model;
pub mod oracle;
pub mod pipeline;
pub mod report;
pub mod sequences;
pub mod valuation;

pub use model::DecPomdp;

/// Errors from parsing, construction, and solving. Statuses that are
/// expected outcomes (infeasible LP, node limit) are not errors; see the
/// individual modules.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid model: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidModel(Vec<model::Violation>),
    #[error("{what} ({size}) exceeds the configured limit of {limit}")]
    Capacity {
        what: String,
        size: u128,
        limit: u128,
    },
    #[error("invalid policy: {0}")]
    Policy(String),
    #[error("policy extraction failed (solver inconsistency): {0}")]
    Extraction(String),
    #[error("lower bound {lower} exceeds upper bound {upper}")]
    BadBounds { lower: f64, upper: f64 },
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error(transparent)]
    Solver(#[from] milp::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}
