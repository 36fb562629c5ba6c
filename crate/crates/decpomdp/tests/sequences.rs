mod common;

use decpomdp::sequences::{
    num_deterministic_policies, parse_sequence, policy_constraints, render_tree, tree_to_vector,
    vector_to_tree, PolicyTree, Sequence, SequenceSpace,
};
use decpomdp::Error;
use proptest::prelude::*;

/// |S_i^t| = A^t · Ω^(t−1) and the total over t = 1..=κ.
fn expected_sizes(a: usize, omega: usize, horizon: usize) -> (Vec<usize>, usize) {
    let per: Vec<usize> = (1..=horizon)
        .map(|t| a.pow(t as u32) * omega.pow(t as u32 - 1))
        .collect();
    let total = per.iter().sum();
    (per, total)
}

#[test]
fn slice_sizes_match_the_counting_formula() {
    for (a, omega) in [(2usize, 2usize), (3, 2)] {
        for horizon in 1..=5 {
            let space = SequenceSpace::new(0, a, omega, horizon).unwrap();
            let (per, total) = expected_sizes(a, omega, horizon);
            for t in 1..=horizon {
                assert_eq!(space.slice_len(t), per[t - 1], "A={a} Ω={omega} t={t}");
                assert_eq!(space.slice(t).len(), per[t - 1]);
            }
            assert_eq!(space.len(), total);
            assert_eq!(space.terminal_per_policy(), omega.pow(horizon as u32 - 1));
        }
    }
    // The two bundled shapes at κ=3, spelled out.
    let mabc = SequenceSpace::new(0, 2, 2, 3).unwrap();
    assert_eq!(
        (mabc.slice_len(1), mabc.slice_len(2), mabc.slice_len(3)),
        (2, 8, 32)
    );
    assert_eq!(mabc.len(), 42);
    let tiger = SequenceSpace::new(0, 3, 2, 3).unwrap();
    assert_eq!(
        (tiger.slice_len(1), tiger.slice_len(2), tiger.slice_len(3)),
        (3, 18, 108)
    );
    assert_eq!(tiger.len(), 129);
}

#[test]
fn horizon_one_sequences_are_actions() {
    let space = SequenceSpace::new(1, 3, 2, 1).unwrap();
    assert_eq!(space.len(), 3);
    assert_eq!(space.render(2), "a2");
    assert_eq!(space.terminal_per_policy(), 1);
}

#[test]
fn space_larger_than_the_limit_is_refused() {
    match SequenceSpace::new(0, 10, 10, 8) {
        Err(Error::Capacity { limit, .. }) => {
            assert_eq!(limit, decpomdp::sequences::SEQUENCE_LIMIT);
        }
        other => panic!("expected a capacity error, got {other:?}"),
    }
}

#[test]
fn children_extend_parents_in_canonical_order() {
    let space = SequenceSpace::new(0, 2, 2, 4).unwrap();
    // Within a length, order is lexicographic in the digit string, so the
    // first child of the first sequence keeps the first slot.
    assert_eq!(space.render(0), "a0");
    assert_eq!(space.render(2), "a0 o0 a0");
    assert_eq!(space.render(3), "a0 o0 a1");
    let parsed = parse_sequence("a0 o0 a1").unwrap();
    assert_eq!(space.index_of(&parsed).unwrap(), 3);

    for p in space.slice(2) {
        for o in 0..2 {
            for a in 0..2 {
                let c = space.child(p, o, a);
                assert_eq!(space.parent(c), Some((p, o)));
                assert_eq!(space.last_action(c), a);
                assert_eq!(space.length_of(c), space.length_of(p) + 1);
            }
        }
    }
}

#[test]
fn digits_render_and_index_round_trip_exhaustively() {
    for (a, omega) in [(2usize, 2usize), (3, 2)] {
        let space = SequenceSpace::new(0, a, omega, 3).unwrap();
        for j in 0..space.len() {
            let digits = space.digits(j);
            assert_eq!(space.index_of(&digits).unwrap(), j);
            let text = space.render(j);
            let reparsed = parse_sequence(&text).unwrap();
            assert_eq!(reparsed, digits);
        }
    }
}

#[test]
fn constraint_rows_have_the_documented_shape() {
    for (a, omega) in [(2usize, 2usize), (3, 2)] {
        for horizon in 1..=5 {
            let space = SequenceSpace::new(0, a, omega, horizon).unwrap();
            let cons = policy_constraints(&space);
            let expected_rows: usize = 1 + (1..horizon)
                .map(|t| a.pow(t as u32) * omega.pow(t as u32))
                .sum::<usize>();
            assert_eq!(cons.rows.len(), expected_rows, "A={a} Ω={omega} κ={horizon}");

            // Root: Σ_a x[a] = 1 over the length-1 slice.
            assert_eq!(cons.rows[0].rhs, 1.0);
            assert_eq!(cons.rows[0].coeffs.len(), a);
            assert!(cons.rows[0].context.is_none());

            // Every row carries 1 + A nonzeros counting the right-hand side:
            // the root has A coefficients and rhs 1, flow rows have 1 + A
            // coefficients and rhs 0.
            let mut total_nonzeros = 0;
            for row in &cons.rows {
                let augmented = row.coeffs.len() + usize::from(row.rhs != 0.0);
                assert_eq!(augmented, 1 + a);
                total_nonzeros += augmented;
            }
            assert_eq!(total_nonzeros, expected_rows * (1 + a));

            // Flow rows link a parent to exactly its children.
            for row in &cons.rows[1..] {
                let (p, o) = row.context.expect("flow rows carry their context");
                assert_eq!(row.rhs, 0.0);
                assert_eq!(row.coeffs[0], (p, 1.0));
                for (k, &(j, c)) in row.coeffs[1..].iter().enumerate() {
                    assert_eq!(j, space.child(p, o, k));
                    assert_eq!(c, -1.0);
                }
            }
        }
    }
}

#[test]
fn policy_counts_match_the_double_exponential() {
    assert_eq!(num_deterministic_policies(2, 2, 3), Some(128));
    assert_eq!(num_deterministic_policies(3, 2, 3), Some(2187));
    assert_eq!(num_deterministic_policies(2, 2, 1), Some(2));
    assert_eq!(num_deterministic_policies(3, 2, 4), Some(14_348_907));
    // 2^(2^40 − 1) does not fit any machine integer.
    assert_eq!(num_deterministic_policies(2, 2, 40), None);
}

#[test]
fn a_known_tree_realizes_exactly_its_history_sequences() {
    // Depth-3 tree over 3 actions, 2 observations: root plays a0, then a1
    // after o0 / a2 after o1, then (a0, a1, a2, a0) across the four
    // observation histories.
    let tree = PolicyTree {
        horizon: 3,
        num_observations: 2,
        actions: vec![0, 1, 2, 0, 1, 2, 0],
    };
    let space = SequenceSpace::new(0, 3, 2, 3).unwrap();
    let x = tree_to_vector(&tree, &space).unwrap();

    let expected = [
        "a0",
        "a0 o0 a1",
        "a0 o1 a2",
        "a0 o0 a1 o0 a0",
        "a0 o0 a1 o1 a1",
        "a0 o1 a2 o0 a2",
        "a0 o1 a2 o1 a0",
    ];
    let mut want: Vec<usize> = expected
        .iter()
        .map(|s| space.index_of(&parse_sequence(s).unwrap()).unwrap())
        .collect();
    want.sort_unstable();
    assert_eq!(x.selected(), want);
    assert_eq!(x.values.iter().filter(|&&v| v != 0.0).count(), 7);

    let cons = policy_constraints(&space);
    x.check_feasible(&cons).expect("realization vectors satisfy the flow system");
    assert_eq!(x.selected_terminal(&space).len(), space.terminal_per_policy());
}

#[test]
fn corrupted_vectors_name_the_violated_row() {
    let space = SequenceSpace::new(0, 2, 2, 2).unwrap();
    let tree = PolicyTree {
        horizon: 2,
        num_observations: 2,
        actions: vec![0, 0, 1],
    };
    let mut x = tree_to_vector(&tree, &space).unwrap();
    let cons = policy_constraints(&space);
    x.check_feasible(&cons).unwrap();

    // Selecting a second root action breaks the mass row (row 0).
    x.values[1] = 1.0;
    assert_eq!(x.check_feasible(&cons), Err(0));
}

#[test]
fn degenerate_vectors_do_not_reconstruct() {
    let space = SequenceSpace::new(0, 2, 2, 2).unwrap();
    let zeros = decpomdp::sequences::PolicyVector {
        agent: 0,
        values: vec![0.0; space.len()],
    };
    match vector_to_tree(&zeros, &space) {
        Err(Error::Policy(msg)) => assert!(msg.contains("no continuation"), "{msg}"),
        other => panic!("expected a policy error, got {other:?}"),
    }

    let mut half = zeros.clone();
    half.values[0] = 0.5;
    match vector_to_tree(&half, &space) {
        Err(Error::Policy(msg)) => assert!(msg.contains("non-binary"), "{msg}"),
        other => panic!("expected a policy error, got {other:?}"),
    }
}

#[test]
fn sequence_text_errors_are_reported_not_panicked() {
    assert!(matches!(parse_sequence("a0 a1"), Err(Error::Policy(_))));
    assert!(matches!(parse_sequence("a0 o0"), Err(Error::Policy(_))));
    assert!(matches!(parse_sequence("ax"), Err(Error::Policy(_))));
    // Multi-byte first characters must not split mid-character.
    assert!(matches!(parse_sequence("λ0"), Err(Error::Policy(_))));

    let space = SequenceSpace::new(0, 2, 2, 2).unwrap();
    let too_long = Sequence {
        actions: vec![0, 0, 0],
        observations: vec![0, 0],
    };
    assert!(space.index_of(&too_long).is_err());
    let bad_action = Sequence {
        actions: vec![5],
        observations: vec![],
    };
    assert!(space.index_of(&bad_action).is_err());
}

#[test]
fn rendered_trees_nest_by_observation() {
    let tree = PolicyTree {
        horizon: 2,
        num_observations: 2,
        actions: vec![0, 1, 0],
    };
    let text = render_tree(&tree);
    assert_eq!(text, "a0\n  o0: a1\n  o1: a0\n");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn tree_vector_round_trip(
        (a, omega, horizon, tree) in (1usize..=3, 1usize..=3, 1usize..=3)
            .prop_flat_map(|(a, omega, horizon)| {
                common::arb_tree(a, omega, horizon)
                    .prop_map(move |t| (a, omega, horizon, t))
            })
    ) {
        let space = SequenceSpace::new(0, a, omega, horizon).unwrap();
        let x = tree_to_vector(&tree, &space).unwrap();
        let cons = policy_constraints(&space);
        prop_assert!(x.check_feasible(&cons).is_ok());
        prop_assert!(x.is_binary());
        prop_assert_eq!(x.selected_terminal(&space).len(), space.terminal_per_policy());
        let back = vector_to_tree(&x, &space).unwrap();
        prop_assert_eq!(back, tree);
    }
}
