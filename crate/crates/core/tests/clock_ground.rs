use pseudoent_core::circuit::{default_padding, random_circuit, ClockEncoding, PaddedCircuit};
use pseudoent_core::clock::{
    build_clock_ham_in, data_register_entropy, history_vector, padded_closeness, target_vector,
    vector_trace_distance, ClockSpace,
};
use pseudoent_core::entanglement::Cut;
use pseudoent_core::lanczos::ground_state;
use pseudoent_core::{Seed, C64};

fn overlap(a: &[C64], b: &[C64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.conj() * y)
        .sum::<C64>()
        .norm_sqr()
}

#[test]
fn seeded_three_qubit_circuit_at_one_percent_padding() {
    let base = random_circuit(3, 6, Seed::from_u64(8)).unwrap();
    let m = default_padding(6, 0.01).unwrap();
    let padded = PaddedCircuit::new(base.clone(), m);
    let out = base.output_state().unwrap();
    let closeness = padded_closeness(&padded).unwrap();
    for enc in [ClockEncoding::Binary, ClockEncoding::Unary] {
        let space = ClockSpace::compact(enc, padded.total());
        let h = build_clock_ham_in(&padded, space).unwrap();
        let psi = history_vector(&padded, space).unwrap();
        assert!(h.expectation(&psi).norm() <= 1e-10);
        let g = ground_state(&h, 1e-10).unwrap();
        assert!(
            overlap(&psi, &g.vector) >= 1.0 - 1e-8,
            "{enc}: {}",
            overlap(&psi, &g.vector)
        );
        assert!(g.gap > 1e-6, "{enc}: gap {}", g.gap);
        let measured = vector_trace_distance(&target_vector(&padded, space).unwrap(), &g.vector);
        assert!((measured - closeness.trace_distance).abs() < 1e-6);
        assert!(measured <= closeness.epsilon_bound);
        for c in 1..3 {
            let r = data_register_entropy(&g.vector, &out, 3, &Cut::prefix(3, c).unwrap()).unwrap();
            assert!(r.fannes_holds(), "{enc} cut {c}: {r:?}");
        }
    }
}
