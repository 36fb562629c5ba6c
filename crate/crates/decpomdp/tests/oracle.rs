mod common;

use decpomdp::model::parse_model;
use decpomdp::oracle::{brute_force_optimal, brute_force_optimal_seq, ENUMERATION_LIMIT};
use decpomdp::valuation::build_table;
use decpomdp::Error;

#[test]
fn broadcast_channel_optima_are_frozen() {
    let m = common::mabc();
    for (horizon, value, count) in [
        (1usize, 1.0, 4u128),
        (2, 2.0, 64),
        (3, 2.9900000000000002, 16384),
    ] {
        let table = build_table(&m, horizon).unwrap();
        let spaces = common::spaces(&m, horizon);
        let r = brute_force_optimal(&m, horizon, &table, &spaces).unwrap();
        assert_eq!(r.count, count);
        assert!(
            (r.value - value).abs() < 1e-12,
            "horizon {horizon}: {} vs {}",
            r.value,
            value
        );
        // The winning policy re-evaluates to the same number on its own.
        assert!((r.policy.value - r.value).abs() < 1e-9);
    }
}

#[test]
fn tiger_optima_are_frozen() {
    let m = common::matiger();
    for (horizon, value, count) in [(1usize, -2.0, 9u128), (2, -4.0, 729)] {
        let table = build_table(&m, horizon).unwrap();
        let spaces = common::spaces(&m, horizon);
        let r = brute_force_optimal(&m, horizon, &table, &spaces).unwrap();
        assert_eq!(r.count, count);
        assert!((r.value - value).abs() < 1e-12);
        // Listening throughout is optimal at these horizons.
        for tree in &r.policy.trees {
            assert!(tree.actions.iter().all(|&a| a == 2));
        }
    }
}

#[test]
fn ties_resolve_to_the_first_policy_in_id_order() {
    let text = "agents: 2\nstates: 1\nactions: 2 2\nobservations: 1 1\nstart: 1\n\
        T: 0 0 0 1\nT: 1 0 0 1\nT: 2 0 0 1\nT: 3 0 0 1\n\
        O: 0 0 0 1\nO: 1 0 0 1\nO: 2 0 0 1\nO: 3 0 0 1\n\
        R: 0 0 0\nR: 1 0 0\nR: 2 0 0\nR: 3 0 0\n";
    let m = parse_model(text).unwrap();
    let table = build_table(&m, 2).unwrap();
    let spaces = common::spaces(&m, 2);
    let r = brute_force_optimal(&m, 2, &table, &spaces).unwrap();
    assert_eq!(r.count, 16);
    assert_eq!(r.value, 0.0);
    // Every policy scores 0, so id 0 — all zeros for both agents — wins.
    for tree in &r.policy.trees {
        assert_eq!(tree.actions, vec![0, 0]);
    }
}

#[test]
fn oversized_enumerations_are_refused() {
    let m = common::matiger();
    let table = build_table(&m, 4).unwrap();
    let spaces = common::spaces(&m, 4);
    match brute_force_optimal(&m, 4, &table, &spaces) {
        Err(Error::Capacity { what, size, limit }) => {
            assert!(what.contains("polic"), "{what}");
            assert_eq!(size, 14_348_907u128 * 14_348_907u128);
            assert_eq!(limit, ENUMERATION_LIMIT);
        }
        other => panic!("expected a capacity refusal, got {other:?}"),
    }
}

#[test]
fn parallel_and_sequential_sweeps_agree() {
    for (m, horizon) in [(common::mabc(), 2usize), (common::matiger(), 2)] {
        let table = build_table(&m, horizon).unwrap();
        let spaces = common::spaces(&m, horizon);
        let a = brute_force_optimal(&m, horizon, &table, &spaces).unwrap();
        let b = brute_force_optimal_seq(&m, horizon, &table, &spaces).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.count, b.count);
        for (ta, tb) in a.policy.trees.iter().zip(&b.policy.trees) {
            assert_eq!(ta.actions, tb.actions);
        }
    }
}
