mod common;

use decpomdp::dominance::{
    co_sequences, eliminate, eliminate_seq, is_dominated, DominanceConfig,
};
use decpomdp::model::DecPomdp;
use decpomdp::sequences::parse_sequence;
use decpomdp::valuation::build_table;

/// One state, no real observations; agent 0 picks reward `a0_reward` vs
/// `a1_reward`, agent 1 has a single action.
fn two_lever_model(a0_reward: f64, a1_reward: f64) -> DecPomdp {
    DecPomdp {
        num_agents: 2,
        num_states: 1,
        actions: vec![2, 1],
        observations: vec![1, 1],
        transition: vec![vec![1.0]; 2],
        observation: vec![vec![1.0]; 2],
        reward: vec![vec![a0_reward], vec![a1_reward]],
        start: vec![1.0],
    }
}

#[test]
fn co_sequences_swap_only_the_last_action() {
    let m = common::mabc();
    let spaces = common::spaces(&m, 3);
    let p = spaces[0]
        .index_of(&parse_sequence("a0 o0 a0 o0 a0").unwrap())
        .unwrap();
    let co = co_sequences(&spaces[0], p);
    let rendered: Vec<String> = co.iter().map(|&j| spaces[0].render(j)).collect();
    assert_eq!(rendered, vec!["a0 o0 a0 o0 a1"]);

    let tiger = common::matiger();
    let tsp = common::spaces(&tiger, 3);
    let p = tsp[0]
        .index_of(&parse_sequence("a2 o1 a0 o0 a1").unwrap())
        .unwrap();
    let co = co_sequences(&tsp[0], p);
    let rendered: Vec<String> = co.iter().map(|&j| tsp[0].render(j)).collect();
    assert_eq!(rendered, vec!["a2 o1 a0 o0 a0", "a2 o1 a0 o0 a2"]);
    // |C(p)| = A − 1 for every terminal sequence.
    for p in tsp[0].slice(3) {
        assert_eq!(co_sequences(&tsp[0], p).len(), 2);
    }
}

#[test]
fn a_strictly_worse_lever_is_dominated() {
    let m = two_lever_model(1.0, 0.0);
    let spaces = common::spaces(&m, 1);
    let table = build_table(&m, 1).unwrap();
    let config = DominanceConfig::default();

    let alive: Vec<Vec<bool>> = spaces.iter().map(|s| vec![true; s.len()]).collect();
    assert!(!is_dominated(&spaces[0], &table, 0, &alive, &config).unwrap());
    assert!(is_dominated(&spaces[0], &table, 1, &alive, &config).unwrap());

    let result = eliminate(&spaces, &table, &config).unwrap();
    assert_eq!(result.dominated[0], vec![false, true]);
    // A single action can never be dominated: it has no co-sequences.
    assert_eq!(result.dominated[1], vec![false]);
    assert_eq!(result.dominated_count(0), 1);
    assert!((result.terminal_fraction(0, &spaces[0]) - 0.5).abs() < 1e-12);
}

#[test]
fn equal_levers_keep_one_representative() {
    // Each action weakly dominates the other; the sweep must not delete the
    // whole reachable group.
    let m = two_lever_model(1.0, 1.0);
    let spaces = common::spaces(&m, 1);
    let table = build_table(&m, 1).unwrap();
    let result = eliminate(&spaces, &table, &DominanceConfig::default()).unwrap();
    assert_eq!(result.dominated[0], vec![false, true]);
}

#[test]
fn matiger_has_no_dominated_sequences() {
    let m = common::matiger();
    for horizon in 1..=3 {
        let spaces = common::spaces(&m, horizon);
        let table = build_table(&m, horizon).unwrap();
        let result = eliminate(&spaces, &table, &DominanceConfig::default()).unwrap();
        for agent in 0..2 {
            assert_eq!(
                result.dominated_count(agent),
                0,
                "agent {agent} at κ={horizon}"
            );
        }
    }
}

#[test]
fn mabc_elimination_counts_are_stable() {
    let m = common::mabc();
    let spaces = common::spaces(&m, 3);
    let table = build_table(&m, 3).unwrap();
    let result = eliminate(&spaces, &table, &DominanceConfig::default()).unwrap();

    for agent in 0..2 {
        assert_eq!(result.dominated_count(agent), 18, "agent {agent}");
        assert!((result.terminal_fraction(agent, &spaces[agent]) - 0.5).abs() < 1e-12);
        let removed_terminal: usize = result
            .rounds
            .iter()
            .map(|round| round[agent].len())
            .sum();
        assert_eq!(removed_terminal, 16);
    }
}

#[test]
fn elimination_is_schedule_independent() {
    let m = common::mabc();
    let spaces = common::spaces(&m, 3);
    let table = build_table(&m, 3).unwrap();
    let config = DominanceConfig::default();
    let par = eliminate(&spaces, &table, &config).unwrap();
    let seq = eliminate_seq(&spaces, &table, &config).unwrap();
    assert_eq!(par.dominated, seq.dominated);
    assert_eq!(par.rounds, seq.rounds);
}

#[test]
fn shorter_sequences_follow_their_descendants() {
    let m = common::mabc();
    let spaces = common::spaces(&m, 3);
    let table = build_table(&m, 3).unwrap();
    let result = eliminate(&spaces, &table, &DominanceConfig::default()).unwrap();

    for (agent, space) in spaces.iter().enumerate() {
        for t in 1..3 {
            for p in space.slice(t) {
                // Terminal descendants of p, one level at a time.
                let mut frontier = vec![p];
                for _ in t..3 {
                    frontier = frontier
                        .iter()
                        .flat_map(|&q| {
                            (0..space.num_observations).flat_map(move |o| {
                                (0..space.num_actions).map(move |a| (q, o, a))
                            })
                        })
                        .map(|(q, o, a)| space.child(q, o, a))
                        .collect();
                }
                let all_gone = frontier.iter().all(|&d| result.dominated[agent][d]);
                assert_eq!(
                    result.dominated[agent][p], all_gone,
                    "agent {agent} sequence `{}`",
                    space.render(p)
                );
            }
        }
    }
}

#[test]
fn conservative_modes_remove_no_more() {
    let m = common::mabc();
    let spaces = common::spaces(&m, 3);
    let table = build_table(&m, 3).unwrap();
    let full = eliminate(&spaces, &table, &DominanceConfig::default()).unwrap();

    let single = eliminate(
        &spaces,
        &table,
        &DominanceConfig {
            single_pass: true,
            ..DominanceConfig::default()
        },
    )
    .unwrap();
    let all_contexts = eliminate(
        &spaces,
        &table,
        &DominanceConfig {
            contexts_over_all: true,
            ..DominanceConfig::default()
        },
    )
    .unwrap();

    for agent in 0..2 {
        assert!(single.dominated_count(agent) <= full.dominated_count(agent));
        assert!(all_contexts.dominated_count(agent) <= full.dominated_count(agent));
        // Whatever a conservative mode removes, the full sweep removes too.
        for j in 0..spaces[agent].len() {
            if all_contexts.dominated[agent][j] {
                assert!(full.dominated[agent][j]);
            }
        }
    }
    assert_eq!(single.rounds.len(), 1);
}
