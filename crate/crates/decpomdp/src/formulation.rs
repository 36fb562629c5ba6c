//! Assembly of the planning problem as a 0/1 program over sequence weights.
//!
//! Variables, in order:
//! - one `y` per joint sequence of full length, in flat table order, with
//!   objective coefficient ν (the weighted payoff of that joint history);
//! - one `x` per agent per sequence of any length, agents in order, within
//!   an agent in canonical sequence order.
//!
//! Constraints, in order:
//! - per agent, the policy rows: the root mass row, then one flow row per
//!   (sequence, observation) pair for lengths below the horizon;
//! - per agent, one linking row per full-length sequence p tying the joint
//!   weights to the agent's own weight: Σ_{q: q_i = p} y_q = τ_i·x_p, where
//!   τ_i is the number of completions the other agents contribute per
//!   deterministic policy.
//!
//! Three variants of the same program:
//! - [`Variant::Ilp`]: every variable binary.
//! - [`Variant::Milp`]: only full-length `x` binary; the linking rows force
//!   everything else to 0/1 at an optimum.
//! - [`Variant::MilpPr`]: as `Milp`, but dominated sequences (and any joint
//!   sequence touching one) are dropped, linking rows relax to ≤, and the
//!   objective is shifted by κ·c per unit of realization weight (c lifts
//!   the most negative reward to zero) with a compensating constant so the
//!   reported objective is unchanged. The shift makes every retained joint
//!   weight worth taking, which is what lets the equalities relax without
//!   losing exactness.

use milp::{Problem, RowSense, VarKind};

use crate::dominance::DominanceResult;
use crate::model::DecPomdp;
use crate::sequences::{policy_constraints, tree_to_vector, PolicyTree, PolicyVector, SequenceSpace};
use crate::valuation::{tree_value, JointSequenceTable};
use crate::Error;

/// Classification tolerance when reading sequence weights back out of a
/// solver solution. Binary variables come back exact; continuous ones carry
/// simplex-level noise.
const EXTRACT_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Ilp,
    Milp,
    MilpPr,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Ilp => "ilp",
            Variant::Milp => "milp",
            Variant::MilpPr => "milp-pr",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What a column of the assembled program stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarRole {
    /// Weight of the joint sequence with this flat table index.
    Joint(usize),
    /// Weight of one agent's sequence (global index).
    Policy { agent: usize, sequence: usize },
}

#[derive(Debug)]
pub struct Formulation {
    pub problem: Problem,
    pub variant: Variant,
    pub horizon: usize,
    /// Column index of each joint weight, by flat table index; `None` when
    /// pruned away.
    pub y_vars: Vec<Option<usize>>,
    /// Column index of each agent sequence weight, by global sequence
    /// index; `None` when pruned away.
    pub x_vars: Vec<Vec<Option<usize>>>,
    /// Meaning of each column, in column order.
    pub roles: Vec<VarRole>,
}

impl Formulation {
    pub fn num_joint_vars(&self) -> usize {
        self.y_vars.iter().filter(|v| v.is_some()).count()
    }

    pub fn num_policy_vars(&self, agent: usize) -> usize {
        self.x_vars[agent].iter().filter(|v| v.is_some()).count()
    }
}

/// Builds the program for one variant. `dominance` is consulted only by
/// [`Variant::MilpPr`]; the other variants keep every sequence.
pub fn build(
    model: &DecPomdp,
    horizon: usize,
    variant: Variant,
    table: &JointSequenceTable,
    spaces: &[SequenceSpace],
    dominance: Option<&DominanceResult>,
) -> Result<Formulation, Error> {
    debug_assert_eq!(table.horizon, horizon);
    let n = spaces.len();
    let pruned = |agent: usize, seq: usize| -> bool {
        variant == Variant::MilpPr
            && dominance.map(|d| d.is_dominated(agent, seq)).unwrap_or(false)
    };

    // Objective shift for the relaxed linking rows: lift rewards so every
    // unit of realization weight has non-negative worth.
    let (nu_shift, offset) = if variant == Variant::MilpPr {
        let worst = model
            .reward
            .iter()
            .flatten()
            .fold(0.0_f64, |acc, &r| acc.min(r));
        let c = -worst;
        (horizon as f64 * c, -(horizon as f64) * c)
    } else {
        (0.0, 0.0)
    };

    let mut problem = Problem::new(format!("plan_h{horizon}_{variant}"));
    problem.objective_offset = offset;
    let mut roles = Vec::new();

    let y_kind = match variant {
        Variant::Ilp => VarKind::Binary,
        Variant::Milp | Variant::MilpPr => VarKind::Continuous,
    };
    let mut y_vars: Vec<Option<usize>> = vec![None; table.len()];
    for flat in 0..table.len() {
        let withins = table.split_index(flat);
        let all_alive = withins.iter().enumerate().all(|(i, &w)| {
            !pruned(i, spaces[i].join(horizon, w))
        });
        if !all_alive {
            continue;
        }
        let obj = table.nu[flat] + nu_shift * table.rho[flat];
        let v = problem.add_variable(format!("y{flat}"), 0.0, 1.0, y_kind, obj);
        y_vars[flat] = Some(v);
        roles.push(VarRole::Joint(flat));
    }

    let mut x_vars: Vec<Vec<Option<usize>>> = Vec::with_capacity(n);
    for (i, space) in spaces.iter().enumerate() {
        let mut cols = vec![None; space.len()];
        for p in 0..space.len() {
            if pruned(i, p) {
                continue;
            }
            let kind = match variant {
                Variant::Ilp => VarKind::Binary,
                Variant::Milp | Variant::MilpPr => {
                    if space.length_of(p) == horizon {
                        VarKind::Binary
                    } else {
                        VarKind::Continuous
                    }
                }
            };
            let v = problem.add_variable(format!("x{i}_{p}"), 0.0, 1.0, kind, 0.0);
            cols[p] = Some(v);
            roles.push(VarRole::Policy { agent: i, sequence: p });
        }
        x_vars.push(cols);
    }

    // Policy rows. Flow rows whose every continuation was pruned are
    // dropped: elimination only empties a branch the start state can never
    // reach, so any action completes the policy there without changing its
    // value.
    for (i, space) in spaces.iter().enumerate() {
        let roots: Vec<(usize, f64)> = (0..space.num_actions)
            .filter_map(|a| x_vars[i][space.join(1, a)].map(|v| (v, 1.0)))
            .collect();
        debug_assert!(!roots.is_empty());
        problem.add_row(format!("pol{i}_root"), roots, RowSense::Eq, 1.0);
        for t in 1..horizon {
            for p in space.slice(t) {
                let Some(parent_var) = x_vars[i][p] else { continue };
                for o in 0..space.num_observations {
                    let mut coeffs = vec![(parent_var, 1.0)];
                    coeffs.extend((0..space.num_actions).filter_map(|a| {
                        x_vars[i][space.child(p, o, a)].map(|v| (v, -1.0))
                    }));
                    if coeffs.len() == 1 {
                        continue;
                    }
                    problem.add_row(format!("pol{i}_s{p}_o{o}"), coeffs, RowSense::Eq, 0.0);
                }
            }
        }
    }

    // Linking rows. Gather, in one table pass, which joint columns touch
    // each agent sequence.
    let mut touching: Vec<Vec<Vec<(usize, f64)>>> = spaces
        .iter()
        .map(|sp| vec![Vec::new(); sp.slice_len(horizon)])
        .collect();
    for flat in 0..table.len() {
        let Some(v) = y_vars[flat] else { continue };
        for (i, &w) in table.split_index(flat).iter().enumerate() {
            touching[i][w].push((v, 1.0));
        }
    }
    let sense = match variant {
        Variant::Ilp | Variant::Milp => RowSense::Eq,
        Variant::MilpPr => RowSense::Le,
    };
    for (i, space) in spaces.iter().enumerate() {
        let completions: f64 = spaces
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, sp)| sp.terminal_per_policy() as f64)
            .product();
        for w in 0..space.slice_len(horizon) {
            let p = space.join(horizon, w);
            let Some(xv) = x_vars[i][p] else { continue };
            let mut coeffs = std::mem::take(&mut touching[i][w]);
            coeffs.push((xv, -completions));
            problem.add_row(format!("link{i}_s{p}"), coeffs, sense, 0.0);
        }
    }

    Ok(Formulation {
        problem,
        variant,
        horizon,
        y_vars,
        x_vars,
        roles,
    })
}

impl Formulation {
    /// Appends rows pinning the objective between known bounds. They go in
    /// last so the rest of the program is byte-identical with and without
    /// them.
    pub fn add_bounds(&mut self, lower: Option<f64>, upper: Option<f64>) -> Result<(), Error> {
        if let (Some(l), Some(u)) = (lower, upper) {
            if l > u + 1e-9 {
                return Err(Error::BadBounds { lower: l, upper: u });
            }
        }
        let terms: Vec<(usize, f64)> = self
            .roles
            .iter()
            .enumerate()
            .filter(|(_, r)| matches!(r, VarRole::Joint(_)))
            .map(|(v, _)| (v, self.problem.objective[v]))
            .filter(|&(_, c)| c != 0.0)
            .collect();
        let offset = self.problem.objective_offset;
        if let Some(l) = lower {
            problem_bound_row(&mut self.problem, "bound_lo", &terms, RowSense::Ge, l - offset);
        }
        if let Some(u) = upper {
            problem_bound_row(&mut self.problem, "bound_hi", &terms, RowSense::Le, u - offset);
        }
        Ok(())
    }

    /// Reads a solved variable assignment back into one policy tree per
    /// agent. Branches with no selected continuation (possible only after
    /// pruning, on histories the start state cannot reach) fall back to
    /// action 0 throughout.
    pub fn extract_trees(
        &self,
        values: &[f64],
        spaces: &[SequenceSpace],
    ) -> Result<Vec<PolicyTree>, Error> {
        let mut trees = Vec::with_capacity(spaces.len());
        for (i, space) in spaces.iter().enumerate() {
            let weight = |p: usize| -> f64 {
                self.x_vars[i][p].map(|v| values[v]).unwrap_or(0.0)
            };
            let chosen = |candidates: &[usize]| -> Result<Option<usize>, Error> {
                let mut hit = None;
                for &p in candidates {
                    let v = weight(p);
                    if (v - 1.0).abs() <= EXTRACT_TOL {
                        if hit.is_some() {
                            return Err(Error::Extraction(format!(
                                "agent {i} selects more than one continuation among {}..",
                                space.render(candidates[0])
                            )));
                        }
                        hit = Some(p);
                    } else if v.abs() > EXTRACT_TOL {
                        return Err(Error::Extraction(format!(
                            "agent {i}: weight {v} of sequence `{}` is neither 0 nor 1",
                            space.render(p)
                        )));
                    }
                }
                Ok(hit)
            };

            let mut actions: Vec<usize> = Vec::new();
            // The selected sequence realized at each node of the current
            // level; `None` inside a dead branch.
            let mut frontier: Vec<Option<usize>> = Vec::new();
            let roots: Vec<usize> = (0..space.num_actions).map(|a| space.join(1, a)).collect();
            let root = chosen(&roots)?.ok_or_else(|| {
                Error::Extraction(format!("agent {i} selects no first action"))
            })?;
            actions.push(space.last_action(root));
            frontier.push(Some(root));
            for _t in 1..self.horizon {
                let mut next = Vec::with_capacity(frontier.len() * space.num_observations);
                for node in &frontier {
                    for o in 0..space.num_observations {
                        match node {
                            None => {
                                actions.push(0);
                                next.push(None);
                            }
                            Some(p) => {
                                let kids: Vec<usize> = (0..space.num_actions)
                                    .map(|a| space.child(*p, o, a))
                                    .collect();
                                match chosen(&kids)? {
                                    Some(c) => {
                                        actions.push(space.last_action(c));
                                        next.push(Some(c));
                                    }
                                    None => {
                                        actions.push(0);
                                        next.push(None);
                                    }
                                }
                            }
                        }
                    }
                }
                frontier = next;
            }
            trees.push(PolicyTree {
                horizon: self.horizon,
                num_observations: space.num_observations,
                actions,
            });
        }
        Ok(trees)
    }
}

fn problem_bound_row(
    problem: &mut Problem,
    name: &str,
    terms: &[(usize, f64)],
    sense: RowSense,
    rhs: f64,
) {
    problem.add_row(name, terms.to_vec(), sense, rhs);
}

/// A complete deterministic joint policy in both representations, with its
/// exact value from the start distribution.
#[derive(Debug, Clone)]
pub struct JointPolicy {
    pub trees: Vec<PolicyTree>,
    pub vectors: Vec<PolicyVector>,
    pub value: f64,
}

impl JointPolicy {
    /// Builds the vector forms, verifies them against the policy
    /// constraints, and evaluates the trees by exact expectation.
    pub fn from_trees(
        model: &DecPomdp,
        spaces: &[SequenceSpace],
        trees: Vec<PolicyTree>,
    ) -> Result<Self, Error> {
        let mut vectors = Vec::with_capacity(trees.len());
        for (tree, space) in trees.iter().zip(spaces) {
            let vector = tree_to_vector(tree, space)?;
            if let Err(row) = vector.check_feasible(&policy_constraints(space)) {
                return Err(Error::Policy(format!(
                    "agent {}: extracted policy violates constraint row {row}",
                    space.agent
                )));
            }
            vectors.push(vector);
        }
        let value = tree_value(model, &trees);
        Ok(JointPolicy {
            trees,
            vectors,
            value,
        })
    }
}
