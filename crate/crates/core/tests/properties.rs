use proptest::prelude::*;
use pseudoent_core::entanglement::{entropy_bounds, entropy_exact, t_matrix, Cut};
use pseudoent_core::lossy::{sample_function_key, FunctionKey, KeyOverrides, Mode};
use pseudoent_core::{PhaseState, Seed};

fn cut_strategy() -> impl Strategy<Value = Cut> {
    (2usize..=8)
        .prop_flat_map(|n| (Just(n), proptest::collection::btree_set(1..=n, 1..n)))
        .prop_map(|(n, set)| Cut::new(n, set).unwrap())
}

fn phase_and_cut() -> impl Strategy<Value = (Vec<bool>, Cut)> {
    cut_strategy().prop_flat_map(|cut| {
        (proptest::collection::vec(any::<bool>(), 1 << cut.n()), Just(cut))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cut_text_round_trips(cut in cut_strategy()) {
        prop_assert_eq!(cut.to_string().parse::<Cut>().unwrap(), cut);
    }

    #[test]
    fn sandwich_holds_for_any_phase_state((phase, cut) in phase_and_cut()) {
        let n = cut.n();
        let s = entropy_exact(&PhaseState::from_signs(n, phase.iter().copied()).unwrap(), &cut).unwrap();
        let (lo, hi) = entropy_bounds(&t_matrix(&phase, &cut).unwrap(), n);
        prop_assert!(lo <= s + 1e-9 && s <= hi + 1e-9, "{lo} <= {s} <= {hi}");
    }

    #[test]
    fn entropy_is_symmetric_across_the_cut((phase, cut) in phase_and_cut()) {
        let psi = PhaseState::from_signs(cut.n(), phase).unwrap();
        let a = entropy_exact(&psi, &cut).unwrap();
        let b = entropy_exact(&psi, &cut.complement()).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn function_keys_round_trip(seed in any::<u64>(), m in 4usize..=10, lossy in any::<bool>()) {
        let mode = if lossy { Mode::Lossy } else { Mode::Injective };
        let (k, _) = sample_function_key(mode, m, 2, 2, &Seed::from_u64(seed), &KeyOverrides::default()).unwrap();
        let back = FunctionKey::from_json(&k.to_json()).unwrap();
        prop_assert_eq!(back.truth_table().unwrap(), k.truth_table().unwrap());
        prop_assert_eq!(back, k);
    }
}
