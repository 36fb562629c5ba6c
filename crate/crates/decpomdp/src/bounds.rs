//! Cheap value bounds used to tighten the integer program before search.
//!
//! Lower bound: extend an optimal horizon-(κ−1) joint policy by one final
//! step; whatever the belief then is, some joint action is worth at least
//! its own worst-state reward, so V(κ) ≥ V(κ−1) + max_a min_s R(a, s).
//!
//! Upper bound: let the agents pool their observations, which turns the
//! problem into a single-agent one over joint actions and joint
//! observations. Randomized policies are optimal there, so its sequence
//! form solves as a plain LP; decentralization can only do worse.

use milp::{LpStatus, Problem, RowSense, SimplexOptions, VarKind};

use crate::model::DecPomdp;
use crate::sequences::{policy_constraints, SequenceSpace};
use crate::valuation::JointSequenceTable;
use crate::Error;

/// One-step extension bound from a shorter optimum `previous_value`.
pub fn lower_bound(previous_value: f64, model: &DecPomdp) -> f64 {
    let step = model
        .reward
        .iter()
        .map(|row| row.iter().fold(f64::INFINITY, |m, &r| m.min(r)))
        .fold(f64::NEG_INFINITY, f64::max);
    previous_value + step
}

/// Exact value of the centralized (pooled-observation) relaxation, via the
/// sequence-form LP of the corresponding single-agent problem. The joint
/// payoffs are read from `table` by splitting each centralized history into
/// its per-agent parts, so no second expectation pass is needed.
pub fn pomdp_upper_bound(
    model: &DecPomdp,
    horizon: usize,
    table: &JointSequenceTable,
) -> Result<f64, Error> {
    debug_assert_eq!(table.horizon, horizon);
    let ja_count = model.num_joint_actions();
    let jo_count = model.num_joint_observations();
    let vspace = SequenceSpace::new(0, ja_count, jo_count, horizon)?;

    let mut problem = Problem::new("pooled_relaxation");
    for q in 0..vspace.len() {
        let (t, w) = vspace.split(q);
        let obj = if t == horizon {
            table.nu[centralized_to_flat(model, table, w, horizon)]
        } else {
            0.0
        };
        problem.add_variable(format!("w{q}"), 0.0, 1.0, VarKind::Continuous, obj);
    }
    for (r, row) in policy_constraints(&vspace).rows.iter().enumerate() {
        problem.add_row(format!("c{r}"), row.coeffs.clone(), RowSense::Eq, row.rhs);
    }

    let sol = milp::solve_lp(&problem, &SimplexOptions::default())?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Solver(milp::Error::Numerical(format!(
            "pooled relaxation LP ended {:?}, expected an optimum",
            sol.status
        ))));
    }
    Ok(sol.objective)
}

/// Maps a full-length centralized sequence (within-length index over joint
/// actions/observations) to the flat table index of the same joint history.
fn centralized_to_flat(
    model: &DecPomdp,
    table: &JointSequenceTable,
    within: usize,
    horizon: usize,
) -> usize {
    let ja_count = model.num_joint_actions();
    let jo_count = model.num_joint_observations();
    let mut jas = vec![0usize; horizon];
    let mut jos = vec![0usize; horizon.saturating_sub(1)];
    let mut w = within;
    for t in (0..horizon).rev() {
        jas[t] = w % ja_count;
        w /= ja_count;
        if t > 0 {
            jos[t - 1] = w % jo_count;
            w /= jo_count;
        }
    }
    let n = model.num_agents;
    let mut parts = vec![0usize; n];
    for t in 0..horizon {
        if t > 0 {
            let obs = model.decode_joint_observation(jos[t - 1]);
            for i in 0..n {
                parts[i] = parts[i] * model.observations[i] + obs[i];
            }
        }
        let acts = model.decode_joint_action(jas[t]);
        for i in 0..n {
            parts[i] = parts[i] * model.actions[i] + acts[i];
        }
    }
    table.flat_index(&parts)
}

/// A lower/upper pair with a note on where each side came from.
#[derive(Debug, Clone, Default)]
pub struct BoundPair {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub lower_source: Option<String>,
    pub upper_source: Option<String>,
}

impl BoundPair {
    /// Rejects crossed bounds (beyond numerical slack), which would make
    /// the bounded program infeasible.
    pub fn check(&self) -> Result<(), Error> {
        if let (Some(l), Some(u)) = (self.lower, self.upper) {
            if l > u + 1e-9 {
                return Err(Error::BadBounds { lower: l, upper: u });
            }
        }
        Ok(())
    }
}
