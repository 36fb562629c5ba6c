//! Joint-sequence values and the two equivalent policy evaluators.
//!
//! For a joint sequence q (one equal-length sequence per agent, i.e. a
//! joint-action/joint-observation history) the planner needs
//! ρ(q) — the probability of seeing q's observations when its actions are
//! played, R(q) — the expected reward accumulated along it, and their
//! product ν(q). Only length-κ joint sequences carry objective weight; the
//! table stores all of them, indexed by the tuple of per-agent within-length
//! sequence indices.
//!
//! Construction walks the joint history tree once, chaining belief updates,
//! so shared prefixes are computed once. Zero-probability branches are cut
//! immediately: every entry below them keeps ρ = 0, R = 0, ν = 0 (reporting
//! a partially-accumulated R under ρ = 0 would add noise to dumps; the MILP
//! only ever consumes ν).

use std::io;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::model::DecPomdp;
use crate::sequences::{PolicyConstraintSystem, PolicyTree, PolicyVector, SequenceSpace};
use crate::Error;

/// Default cap on the number of length-κ joint sequences.
pub const TABLE_LIMIT: u128 = 100_000_000;

#[derive(Debug, Clone)]
pub struct JointSequenceTable {
    pub horizon: usize,
    /// Per agent: number of its length-κ sequences.
    pub slice_sizes: Vec<usize>,
    /// Flat index = Σ_i within_i · strides[i]; agent 0 most significant.
    pub strides: Vec<usize>,
    pub rho: Vec<f64>,
    pub reward: Vec<f64>,
    pub nu: Vec<f64>,
}

impl JointSequenceTable {
    pub fn len(&self) -> usize {
        self.nu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nu.is_empty()
    }

    pub fn flat_index(&self, withins: &[usize]) -> usize {
        withins
            .iter()
            .zip(&self.strides)
            .map(|(&w, &s)| w * s)
            .sum()
    }

    /// Per-agent within-length indices of a flat index.
    pub fn split_index(&self, flat: usize) -> Vec<usize> {
        self.strides
            .iter()
            .zip(&self.slice_sizes)
            .map(|(&s, &size)| (flat / s) % size)
            .collect()
    }
}

type Entry = (usize, f64, f64); // (flat index, rho, accumulated reward)

struct Walker<'m> {
    m: &'m DecPomdp,
    horizon: usize,
    ja_parts: Vec<Vec<usize>>,
    jo_parts: Vec<Vec<usize>>,
    strides: Vec<usize>,
}

impl Walker<'_> {
    /// All nonzero-ρ table entries whose first joint action is `ja0`.
    fn branch(&self, ja0: usize) -> Vec<Entry> {
        let mut out = Vec::new();
        let us = vec![0usize; self.m.num_agents];
        self.act(1, &self.m.start, 1.0, 0.0, &us, ja0, &mut out);
        out
    }

    /// Applies joint action `ja` as the t-th action. `us[i]` is agent i's
    /// length-(t−1) sequence index already shifted by its t-th observation.
    fn act(
        &self,
        t: usize,
        belief: &[f64],
        rho: f64,
        acc: f64,
        us: &[usize],
        ja: usize,
        out: &mut Vec<Entry>,
    ) {
        let parts = &self.ja_parts[ja];
        let withins: Vec<usize> = us
            .iter()
            .zip(parts)
            .zip(&self.m.actions)
            .map(|((&u, &a), &count)| u * count + a)
            .collect();
        let acc = acc + self.m.expected_reward(belief, ja);
        if t == self.horizon {
            let flat: usize = withins
                .iter()
                .zip(&self.strides)
                .map(|(&w, &s)| w * s)
                .sum();
            out.push((flat, rho, acc));
            return;
        }
        for jo in 0..self.m.num_joint_observations() {
            let (prob, next) = self.m.belief_update(belief, ja, jo);
            if let Some(next) = next {
                let oparts = &self.jo_parts[jo];
                let us2: Vec<usize> = withins
                    .iter()
                    .zip(oparts)
                    .zip(&self.m.observations)
                    .map(|((&w, &o), &count)| w * count + o)
                    .collect();
                for ja2 in 0..self.m.num_joint_actions() {
                    self.act(t + 1, &next, rho * prob, acc, &us2, ja2, out);
                }
            }
        }
    }
}

fn build_impl(m: &DecPomdp, horizon: usize, parallel: bool) -> Result<JointSequenceTable, Error> {
    if horizon == 0 {
        return Err(Error::ZeroHorizon);
    }
    let mut total: u128 = 1;
    let mut slice_sizes = Vec::with_capacity(m.num_agents);
    for i in 0..m.num_agents {
        let a = m.actions[i] as u128;
        let o = m.observations[i] as u128;
        let size = a.pow(horizon as u32) * o.pow(horizon as u32 - 1);
        total = total.saturating_mul(size);
        slice_sizes.push(size as usize);
    }
    if total > TABLE_LIMIT {
        return Err(Error::Capacity {
            what: "joint sequence table".into(),
            size: total,
            limit: TABLE_LIMIT,
        });
    }
    let total = total as usize;
    let mut strides = vec![1usize; m.num_agents];
    for i in (0..m.num_agents.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * slice_sizes[i + 1];
    }

    let walker = Walker {
        m,
        horizon,
        ja_parts: (0..m.num_joint_actions())
            .map(|ja| m.decode_joint_action(ja))
            .collect(),
        jo_parts: (0..m.num_joint_observations())
            .map(|jo| m.decode_joint_observation(jo))
            .collect(),
        strides: strides.clone(),
    };

    // First-action branches fill disjoint table regions, so they can be
    // walked independently; scatter order does not affect the result.
    let branches: Vec<Vec<Entry>> = {
        #[cfg(feature = "parallel")]
        {
            if parallel {
                (0..m.num_joint_actions())
                    .into_par_iter()
                    .map(|ja| walker.branch(ja))
                    .collect()
            } else {
                (0..m.num_joint_actions()).map(|ja| walker.branch(ja)).collect()
            }
        }
        #[cfg(not(feature = "parallel"))]
        {
            let _ = parallel;
            (0..m.num_joint_actions()).map(|ja| walker.branch(ja)).collect()
        }
    };

    let mut rho = vec![0.0; total];
    let mut reward = vec![0.0; total];
    let mut nu = vec![0.0; total];
    for branch in branches {
        for (flat, r, acc) in branch {
            rho[flat] = r;
            reward[flat] = acc;
            nu[flat] = r * acc;
        }
    }
    Ok(JointSequenceTable {
        horizon,
        slice_sizes,
        strides,
        rho,
        reward,
        nu,
    })
}

/// Builds the length-κ joint sequence table, walking independent history
/// branches concurrently when the `parallel` feature is enabled. The result
/// is identical to [`build_table_seq`].
pub fn build_table(m: &DecPomdp, horizon: usize) -> Result<JointSequenceTable, Error> {
    build_impl(m, horizon, true)
}

/// Single-threaded table construction.
pub fn build_table_seq(m: &DecPomdp, horizon: usize) -> Result<JointSequenceTable, Error> {
    build_impl(m, horizon, false)
}

/// ρ, R, and ν of a single joint sequence given as per-agent digit lists.
/// The sequence may be shorter than the table horizon.
pub fn joint_sequence_value(
    m: &DecPomdp,
    actions: &[Vec<usize>],
    observations: &[Vec<usize>],
) -> (f64, f64, f64) {
    let steps = actions.first().map_or(0, Vec::len);
    let mut belief = m.start.clone();
    let mut rho = 1.0;
    let mut acc = 0.0;
    for t in 0..steps {
        let ja_parts: Vec<usize> = actions.iter().map(|a| a[t]).collect();
        let ja = m.encode_joint_action(&ja_parts);
        acc += m.expected_reward(&belief, ja);
        if t + 1 < steps {
            let jo_parts: Vec<usize> = observations.iter().map(|o| o[t]).collect();
            let jo = m.encode_joint_observation(&jo_parts);
            let (prob, next) = m.belief_update(&belief, ja, jo);
            match next {
                Some(next) => {
                    rho *= prob;
                    belief = next;
                }
                None => return (0.0, 0.0, 0.0),
            }
        }
    }
    (rho, acc, rho * acc)
}

/// Expected value of a deterministic joint policy by the recursive
/// tree-walking evaluator (reward now plus expected value of the subtrees
/// selected by each joint observation).
pub fn tree_value(m: &DecPomdp, trees: &[PolicyTree]) -> f64 {
    fn node_value(m: &DecPomdp, trees: &[PolicyTree], t: usize, nodes: &[usize], s: usize) -> f64 {
        let parts: Vec<usize> = trees
            .iter()
            .zip(nodes)
            .map(|(tree, &node)| tree.action_at(t, node))
            .collect();
        let ja = m.encode_joint_action(&parts);
        let mut value = m.reward[ja][s];
        if t == trees[0].horizon {
            return value;
        }
        let s_count = m.num_states;
        let jo_count = m.num_joint_observations();
        for sp in 0..s_count {
            let p_sp = m.transition[ja][s * s_count + sp];
            if p_sp == 0.0 {
                continue;
            }
            for jo in 0..jo_count {
                let p_o = m.observation[ja][sp * jo_count + jo];
                if p_o == 0.0 {
                    continue;
                }
                let oparts = m.decode_joint_observation(jo);
                let children: Vec<usize> = trees
                    .iter()
                    .zip(nodes)
                    .zip(&oparts)
                    .map(|((tree, &node), &o)| node * tree.num_observations + o)
                    .collect();
                value += p_sp * p_o * node_value(m, trees, t + 1, &children, sp);
            }
        }
        value
    }

    let roots = vec![0usize; trees.len()];
    m.start
        .iter()
        .enumerate()
        .map(|(s, &b)| {
            if b == 0.0 {
                0.0
            } else {
                b * node_value(m, trees, 1, &roots, s)
            }
        })
        .sum()
}

/// Expected value of a deterministic joint policy as the ν-sum over the
/// joint sequences it realizes (each agent contributes its τ_i selected
/// length-κ sequences; the value is the sum over their cross product).
pub fn sequence_form_value(
    table: &JointSequenceTable,
    spaces: &[SequenceSpace],
    constraints: &[PolicyConstraintSystem],
    vectors: &[PolicyVector],
) -> Result<f64, Error> {
    let mut selected = Vec::with_capacity(vectors.len());
    for ((x, space), cons) in vectors.iter().zip(spaces).zip(constraints) {
        if !x.is_binary() {
            return Err(Error::Policy(format!(
                "agent {} policy vector is not 0/1",
                x.agent
            )));
        }
        if let Err(row) = x.check_feasible(cons) {
            return Err(Error::Policy(format!(
                "agent {} policy vector violates constraint row {row}",
                x.agent
            )));
        }
        selected.push(x.selected_terminal(space));
    }

    fn cross(table: &JointSequenceTable, selected: &[Vec<usize>], agent: usize, base: usize) -> f64 {
        if agent == selected.len() {
            return table.nu[base];
        }
        selected[agent]
            .iter()
            .map(|&w| cross(table, selected, agent + 1, base + w * table.strides[agent]))
            .sum()
    }
    Ok(cross(table, &selected, 0, 0))
}

/// Writes the table as text, one line per joint sequence in canonical
/// order: the per-agent sequence indices, then ρ, R, ν.
pub fn dump_table(table: &JointSequenceTable, out: &mut dyn io::Write) -> io::Result<()> {
    for flat in 0..table.len() {
        let withins = table.split_index(flat);
        let parts: Vec<String> = withins.iter().map(|w| w.to_string()).collect();
        writeln!(
            out,
            "{} {} {} {}",
            parts.join(" "),
            table.rho[flat],
            table.reward[flat],
            table.nu[flat]
        )?;
    }
    Ok(())
}
