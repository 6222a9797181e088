use pseudoent_core::circuit::random_rounds;
use pseudoent_core::grid2d::{
    default_epsilon, entropy_via_turns, ground_check, legal_shapes, rules_match_shapes,
    GridCircuit, GridHistoryState,
};
use pseudoent_core::Seed;

#[test]
fn padded_round_history_is_the_ground_state() {
    let base = random_rounds(2, 1, Seed::from_u64(11)).unwrap();
    let hist = GridHistoryState::new(GridCircuit::new(&base, 2).unwrap()).unwrap();
    let eps = default_epsilon(hist.length());
    let gc = ground_check(&hist, eps, 1e-10, Seed::from_u64(12)).unwrap();
    assert_eq!(gc.dim, 531_441);
    assert!(gc.block_diagonal);
    assert!(gc.history_energy - gc.lambda_min <= 1e-8, "{gc:?}");
    assert!(gc.overlap >= 1.0 - 1e-6, "{gc:?}");
    assert!(gc.gap > 1e-4, "{gc:?}");
}

#[test]
fn rules_match_shapes_on_three_rows() {
    assert!(rules_match_shapes(3, 2).unwrap());
    assert_eq!(legal_shapes(3, 2).unwrap().len(), 17);
}

#[test]
fn late_turns_carry_the_output_entropy() {
    let base = random_rounds(4, 2, Seed::from_u64(12)).unwrap();
    let hist = GridHistoryState::new(GridCircuit::new(&base, 3).unwrap()).unwrap();
    let te = entropy_via_turns(&hist, 2).unwrap();
    let settled = (3 * 4 - 1) * 2;
    let s_out = hist.output_entropy(2).unwrap();
    assert!(s_out > 0.1);
    for (turn, s) in te.turns.iter().zip(&te.turn_entropies) {
        if turn.start >= settled {
            assert!(
                (s - s_out).abs() < 1e-10,
                "turn {} entropy {s} vs {s_out}",
                turn.p
            );
            let single = hist.entropy_of(&[(turn.start, 1.0)], 2).unwrap();
            assert!((single - s_out).abs() < 1e-10);
        }
    }
    assert!(te.mixing >= 0.0 && te.mixing <= (te.turns.len() as f64).log2() + 1e-12);
}
