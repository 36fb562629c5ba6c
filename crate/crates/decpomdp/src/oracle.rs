//! Exhaustive search over deterministic joint policies.
//!
//! Ground truth for everything else: enumerate every assignment of actions
//! to observation histories, score each joint policy from the payoff
//! table, and keep the best. A policy of one agent is identified with a
//! mixed-radix number over its tree nodes in level order, root digit most
//! significant, so id order is lexicographic over node actions. Ties go to
//! the first maximizer in that order, which keeps the result independent
//! of how the scan is scheduled.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::formulation::JointPolicy;
use crate::model::DecPomdp;
use crate::sequences::{num_deterministic_policies, tree_node_count, PolicyTree, SequenceSpace};
use crate::valuation::JointSequenceTable;
use crate::Error;

/// Refuse enumerations beyond this many joint policies.
pub const ENUMERATION_LIMIT: u128 = 100_000_000;

#[derive(Debug, Clone)]
pub struct OracleResult {
    /// Best value found, as scored from the payoff table.
    pub value: f64,
    /// The first policy (in id order) attaining it.
    pub policy: JointPolicy,
    /// How many joint policies were scored.
    pub count: u128,
}

/// Tree for one agent's policy id: digit k of `id` in base `num_actions`
/// (most significant first) is the action at level-order node k.
fn tree_of_id(id: u64, num_actions: usize, num_observations: usize, horizon: usize) -> PolicyTree {
    let nodes = tree_node_count(num_observations, horizon);
    let mut actions = vec![0usize; nodes];
    let mut rest = id;
    for k in (0..nodes).rev() {
        actions[k] = (rest % num_actions as u64) as usize;
        rest /= num_actions as u64;
    }
    PolicyTree {
        horizon,
        num_observations,
        actions,
    }
}

/// Flat-table offsets (within-index × stride) of the full-length sequences
/// the tree realizes, one per observation history, in history order.
fn selected_offsets(tree: &PolicyTree, space: &SequenceSpace, stride: usize) -> Vec<usize> {
    let omega = space.num_observations;
    let mut withins = vec![tree.actions[0]];
    for t in 2..=space.horizon {
        let level = tree.level_offset(t);
        let mut next = Vec::with_capacity(withins.len() * omega);
        for (node, &a) in tree.actions[level..level + withins.len() * omega]
            .iter()
            .enumerate()
        {
            let w = withins[node / omega];
            let o = node % omega;
            next.push((w * omega + o) * space.num_actions + a);
        }
        withins = next;
    }
    withins.iter().map(|&w| w * stride).collect()
}

fn cross_sum(nu: &[f64], lists: &[Vec<Vec<usize>>], ids: &[usize], agent: usize, base: usize) -> f64 {
    if agent == lists.len() {
        return nu[base];
    }
    lists[agent][ids[agent]]
        .iter()
        .map(|&off| cross_sum(nu, lists, ids, agent + 1, base + off))
        .sum()
}

fn run(
    model: &DecPomdp,
    horizon: usize,
    table: &JointSequenceTable,
    spaces: &[SequenceSpace],
    parallel: bool,
) -> Result<OracleResult, Error> {
    debug_assert_eq!(table.horizon, horizon);
    let n = spaces.len();
    let mut total: u128 = 1;
    let mut counts: Vec<u64> = Vec::with_capacity(n);
    for space in spaces {
        let per = num_deterministic_policies(space.num_actions, space.num_observations, horizon)
            .unwrap_or(u128::MAX);
        total = total.saturating_mul(per);
        if total > ENUMERATION_LIMIT {
            return Err(Error::Capacity {
                what: "deterministic joint policies".into(),
                size: total,
                limit: ENUMERATION_LIMIT,
            });
        }
        counts.push(per as u64);
    }

    // Precompute each policy's selected table offsets, per agent.
    let offsets: Vec<Vec<Vec<usize>>> = spaces
        .iter()
        .enumerate()
        .map(|(i, space)| {
            (0..counts[i])
                .map(|id| {
                    let tree = tree_of_id(id, space.num_actions, space.num_observations, horizon);
                    selected_offsets(&tree, space, table.strides[i])
                })
                .collect()
        })
        .collect();

    // Scan: agent 0's policies in the outer loop (possibly concurrent), the
    // rest as one mixed-radix counter per outer policy. Each outer policy
    // reports its first maximizer; folding those in order keeps the global
    // first-maximizer rule exact.
    let rest_total: u64 = counts[1..].iter().product();
    let scan_one = |p0: usize| -> (f64, Vec<usize>) {
        let mut ids = vec![0usize; n];
        ids[0] = p0;
        let mut best = f64::NEG_INFINITY;
        let mut best_ids = ids.clone();
        for rid in 0..rest_total {
            let mut rest = rid;
            for i in (1..n).rev() {
                ids[i] = (rest % counts[i]) as usize;
                rest /= counts[i];
            }
            let v = cross_sum(&table.nu, &offsets, &ids, 0, 0);
            if v > best {
                best = v;
                best_ids.copy_from_slice(&ids);
            }
        }
        (best, best_ids)
    };

    let per_outer: Vec<(f64, Vec<usize>)> = {
        #[cfg(feature = "parallel")]
        {
            if parallel {
                (0..counts[0] as usize)
                    .into_par_iter()
                    .map(scan_one)
                    .collect()
            } else {
                (0..counts[0] as usize).map(scan_one).collect()
            }
        }
        #[cfg(not(feature = "parallel"))]
        {
            let _ = parallel;
            (0..counts[0] as usize).map(scan_one).collect()
        }
    };
    let (value, ids) = per_outer
        .into_iter()
        .fold(None::<(f64, Vec<usize>)>, |acc, cand| match acc {
            Some(best) if cand.0 <= best.0 => Some(best),
            _ => Some(cand),
        })
        .expect("at least one policy per agent");

    let trees: Vec<PolicyTree> = spaces
        .iter()
        .zip(&ids)
        .map(|(space, &id)| {
            tree_of_id(id as u64, space.num_actions, space.num_observations, horizon)
        })
        .collect();
    let policy = JointPolicy::from_trees(model, spaces, trees)?;
    Ok(OracleResult {
        value,
        policy,
        count: total,
    })
}

/// Scores every deterministic joint policy and returns the best (first in
/// id order on ties). Errors out above [`ENUMERATION_LIMIT`].
pub fn brute_force_optimal(
    model: &DecPomdp,
    horizon: usize,
    table: &JointSequenceTable,
    spaces: &[SequenceSpace],
) -> Result<OracleResult, Error> {
    run(model, horizon, table, spaces, true)
}

/// Single-threaded [`brute_force_optimal`], for comparisons.
pub fn brute_force_optimal_seq(
    model: &DecPomdp,
    horizon: usize,
    table: &JointSequenceTable,
    spaces: &[SequenceSpace],
) -> Result<OracleResult, Error> {
    run(model, horizon, table, spaces, false)
}
