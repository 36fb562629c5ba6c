//! Shared fixtures for the integration tests: bundled instance loaders,
//! seeded random policies, and a proptest strategy for small random models.

#![allow(dead_code)]

use decpomdp::model::{parse_model, DecPomdp};
use decpomdp::sequences::{tree_node_count, PolicyTree, SequenceSpace};
use proptest::prelude::*;
use rand::Rng;

pub const MABC: &str = include_str!("../../instances/mabc.dpomdp");
pub const MATIGER: &str = include_str!("../../instances/matiger.dpomdp");

pub fn mabc() -> DecPomdp {
    parse_model(MABC).expect("bundled mabc instance parses")
}

pub fn matiger() -> DecPomdp {
    parse_model(MATIGER).expect("bundled matiger instance parses")
}

pub fn spaces(m: &DecPomdp, horizon: usize) -> Vec<SequenceSpace> {
    SequenceSpace::for_model(m, horizon).expect("sequence spaces fit the limit")
}

/// A uniformly random depth-`horizon` policy tree.
pub fn random_tree(
    rng: &mut impl Rng,
    num_actions: usize,
    num_observations: usize,
    horizon: usize,
) -> PolicyTree {
    let nodes = tree_node_count(num_observations, horizon);
    PolicyTree {
        horizon,
        num_observations,
        actions: (0..nodes).map(|_| rng.gen_range(0..num_actions)).collect(),
    }
}

/// One random tree per agent.
pub fn random_joint(rng: &mut impl Rng, m: &DecPomdp, horizon: usize) -> Vec<PolicyTree> {
    m.actions
        .iter()
        .zip(&m.observations)
        .map(|(&a, &o)| random_tree(rng, a, o, horizon))
        .collect()
}

/// Normalizes raw weights into a distribution; all-zero rows get a point
/// mass on the first entry so generated models always validate.
fn normalize(weights: &[u8]) -> Vec<f64> {
    let total: u32 = weights.iter().map(|&w| w as u32).sum();
    if total == 0 {
        let mut row = vec![0.0; weights.len()];
        row[0] = 1.0;
        return row;
    }
    weights.iter().map(|&w| w as f64 / total as f64).collect()
}

/// Strategy for small two-agent models with normalized tables. Sizes are
/// kept tiny so property tests stay fast at horizon 3.
pub fn arb_model() -> impl Strategy<Value = DecPomdp> {
    (1usize..=3, 1usize..=2, 1usize..=2, 1usize..=2, 1usize..=2).prop_flat_map(
        |(states, a0, a1, o0, o1)| {
            let ja = a0 * a1;
            let jo = o0 * o1;
            let t_rows = proptest::collection::vec(
                proptest::collection::vec(0u8..=4, states),
                ja * states,
            );
            let o_rows = proptest::collection::vec(
                proptest::collection::vec(0u8..=4, jo),
                ja * states,
            );
            let rewards = proptest::collection::vec(-5i8..=5, ja * states);
            let start = proptest::collection::vec(0u8..=4, states);
            (t_rows, o_rows, rewards, start).prop_map(
                move |(t_rows, o_rows, rewards, start)| DecPomdp {
                    num_agents: 2,
                    num_states: states,
                    actions: vec![a0, a1],
                    observations: vec![o0, o1],
                    transition: (0..ja)
                        .map(|j| {
                            (0..states)
                                .flat_map(|s| normalize(&t_rows[j * states + s]))
                                .collect()
                        })
                        .collect(),
                    observation: (0..ja)
                        .map(|j| {
                            (0..states)
                                .flat_map(|s| normalize(&o_rows[j * states + s]))
                                .collect()
                        })
                        .collect(),
                    reward: (0..ja)
                        .map(|j| {
                            (0..states).map(|s| rewards[j * states + s] as f64).collect()
                        })
                        .collect(),
                    start: normalize(&start),
                },
            )
        },
    )
}

/// Strategy for a random tree of the given shape.
pub fn arb_tree(
    num_actions: usize,
    num_observations: usize,
    horizon: usize,
) -> impl Strategy<Value = PolicyTree> {
    let nodes = tree_node_count(num_observations, horizon);
    proptest::collection::vec(0..num_actions, nodes).prop_map(move |actions| PolicyTree {
        horizon,
        num_observations,
        actions,
    })
}
