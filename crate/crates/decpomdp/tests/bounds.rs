mod common;

use decpomdp::bounds::{lower_bound, pomdp_upper_bound, BoundPair};
use decpomdp::model::DecPomdp;
use decpomdp::oracle::brute_force_optimal;
use decpomdp::valuation::build_table;
use decpomdp::Error;

/// Value of the pooled-observation relaxation by direct enumeration over
/// the reachable belief tree — an independent check on the LP.
fn belief_sweep(m: &DecPomdp, belief: &[f64], steps: usize) -> f64 {
    if steps == 0 {
        return 0.0;
    }
    (0..m.num_joint_actions())
        .map(|ja| {
            let immediate = m.expected_reward(belief, ja);
            let future: f64 = (0..m.num_joint_observations())
                .map(|jo| match m.belief_update(belief, ja, jo) {
                    (prob, Some(next)) => prob * belief_sweep(m, &next, steps - 1),
                    (_, None) => 0.0,
                })
                .sum();
            immediate + future
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn lower_bound_adds_the_safest_joint_action() {
    let tiger = common::matiger();
    // Double listen costs 2 in every state; everything else risks −101.
    assert_eq!(lower_bound(-2.0, &tiger), -4.0);
    assert_eq!(lower_bound(5.190812500000002, &tiger), 5.190812500000002 - 2.0);

    let mabc = common::mabc();
    // Every joint action earns 0 in some buffer state.
    assert_eq!(lower_bound(2.99, &mabc), 2.99);
}

#[test]
fn horizon_one_relaxation_is_the_best_expected_reward() {
    let mabc = common::mabc();
    let table = build_table(&mabc, 1).unwrap();
    let u = pomdp_upper_bound(&mabc, 1, &table).unwrap();
    assert!((u - 1.0).abs() < 1e-9, "{u}");

    let tiger = common::matiger();
    let table = build_table(&tiger, 1).unwrap();
    let u = pomdp_upper_bound(&tiger, 1, &table).unwrap();
    assert!((u - (-2.0)).abs() < 1e-9, "{u}");
}

#[test]
fn relaxation_lp_matches_a_direct_belief_sweep() {
    for m in [common::mabc(), common::matiger()] {
        for horizon in 1..=3 {
            let table = build_table(&m, horizon).unwrap();
            let lp = pomdp_upper_bound(&m, horizon, &table).unwrap();
            let dp = belief_sweep(&m, &m.start, horizon);
            assert!(
                (lp - dp).abs() < 1e-6,
                "horizon {horizon}: LP {lp} vs sweep {dp}"
            );
        }
    }
}

#[test]
fn pooling_observations_never_hurts() {
    for (m, horizons) in [
        (common::mabc(), vec![1usize, 2, 3]),
        (common::matiger(), vec![1usize, 2]),
    ] {
        for horizon in horizons {
            let table = build_table(&m, horizon).unwrap();
            let spaces = common::spaces(&m, horizon);
            let best = brute_force_optimal(&m, horizon, &table, &spaces).unwrap();
            let u = pomdp_upper_bound(&m, horizon, &table).unwrap();
            assert!(
                u >= best.value - 1e-9,
                "horizon {horizon}: relaxation {u} below optimum {}",
                best.value
            );
        }
    }
}

#[test]
fn crossed_bounds_are_rejected() {
    let crossed = BoundPair {
        lower: Some(1.0),
        upper: Some(0.5),
        ..Default::default()
    };
    match crossed.check() {
        Err(Error::BadBounds { lower, upper }) => assert_eq!((lower, upper), (1.0, 0.5)),
        other => panic!("expected crossed bounds to fail, got {other:?}"),
    }

    for pair in [
        BoundPair::default(),
        BoundPair {
            lower: Some(1.0),
            upper: Some(1.0),
            ..Default::default()
        },
        // Within numerical slack counts as touching, not crossing.
        BoundPair {
            lower: Some(1.0 + 5e-10),
            upper: Some(1.0),
            ..Default::default()
        },
    ] {
        pair.check().unwrap();
    }
}
