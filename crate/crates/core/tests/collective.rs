mod common;

use common::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use vbqm_core::circuits::{AnsatzSpec, Gate, GateSequence};
use vbqm_core::collective::{
    angular_momentum, moments_jz, rotation, spin_coherent_plus, twist, weight_distribution,
    Axis, CollectiveSpace, Component, DickeOperator,
};
use vbqm_core::C64;
use vbqm_oracle as oracle;

fn max_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    oracle::max_abs_diff(a, b)
}

#[test]
fn angular_momentum_matches_projection() {
    for n in 1..=5 {
        for (c, axis) in [
            (Component::X, [1.0, 0.0, 0.0]),
            (Component::Y, [0.0, 1.0, 0.0]),
            (Component::Z, [0.0, 0.0, 1.0]),
        ] {
            let full = oracle::dicke_projection(&oracle::collective(axis, n), n);
            let ours = angular_momentum(n, c).matrix;
            assert!(max_diff(&full, &ours) < 1e-12, "n={n} {c:?}");
        }
    }
}

#[test]
fn rotation_and_twist_match_dense() {
    let axis = Axis::normalized(1.0, 1.0, 1.0).unwrap();
    let full = oracle::gate_unitary(&oracle::DenseGate::rotation(axis.components(), 0.7), 3);
    let ours = rotation(3, axis, 0.7).unwrap().matrix;
    assert!(max_diff(&oracle::dicke_projection(&full, 3), &ours) < 1e-12);

    let full = oracle::gate_unitary(&oracle::DenseGate::twist([1.0, 0.0, 0.0], 0.3), 4);
    let ours = twist(4, Axis::X, 0.3).unwrap().matrix;
    assert!(max_diff(&oracle::dicke_projection(&full, 4), &ours) < 1e-12);
}

#[test]
fn non_unit_axis_rejected() {
    assert!(Axis::new(1.0, 1.0, 0.0).is_err());
}

#[test]
fn plus_state_amplitudes() {
    let s = spin_coherent_plus(2);
    let want = [0.5, std::f64::consts::FRAC_1_SQRT_2, 0.5];
    for (a, w) in s.amplitudes.iter().zip(want) {
        assert!((a.re - w).abs() < 1e-15 && a.im == 0.0);
    }
    let (m1, m2) = moments_jz(&spin_coherent_plus(7));
    assert!(m1.abs() < 1e-13 && (m2 - 7.0 / 4.0).abs() < 1e-13);
}

#[test]
fn classical_sign_convention() {
    // e^{-i phi J_z} then R_x(pi/2) on |+>: <J_z> = (N/2) sin phi.
    let n = 4;
    let phi = 0.3;
    let space = CollectiveSpace::new(n);
    let state = space.free_evolution(&spin_coherent_plus(n), phi);
    let state = state.apply(&space.rotation(Axis::X, std::f64::consts::FRAC_PI_2)).unwrap();
    let (m1, _) = moments_jz(&state);
    let (o1, _) = oracle::statevector_moments(
        n,
        &[],
        &[oracle::DenseGate::rotation([1.0, 0.0, 0.0], std::f64::consts::FRAC_PI_2)],
        phi,
    );
    assert!((m1 - o1).abs() < 1e-12);
    assert!((m1 - 2.0 * phi.sin()).abs() < 1e-12);
}

#[test]
fn weight_distribution_after_circuit() {
    let n = 4;
    let mut r = rng(11);
    let seq = random_sequence(&mut r, 6);
    let space = CollectiveSpace::new(n);
    let state = spin_coherent_plus(n).apply(&seq.unitary(&space)).unwrap();
    let psi = oracle::sequence_unitary(&dense(&seq), n) * oracle::plus_state(n);
    let mut want = vec![0.0; n + 1];
    for (x, a) in psi.iter().enumerate() {
        want[oracle::weight(x)] += a.norm_sqr();
    }
    for (p, q) in weight_distribution(&state).iter().zip(&want) {
        assert!((p - q).abs() < 1e-12);
    }
}

#[test]
fn random_sequences_match_statevector() {
    let mut r = rng(5);
    for n in 1..=6 {
        let space = CollectiveSpace::new(n);
        for _ in 0..5 {
            let seq = random_sequence(&mut r, 8);
            let ours = seq.unitary(&space).matrix;
            let full = oracle::dicke_projection(&oracle::sequence_unitary(&dense(&seq), n), n);
            assert!(max_diff(&ours, &full) < 1e-10, "n={n}");
        }
    }
}

#[test]
fn rotation_merging_identity() {
    let mut r = rng(17);
    for n in 1..=10 {
        let space = CollectiveSpace::new(n);
        let a = angles(&mut r, 7);
        let seq = |gates: Vec<Gate>| GateSequence::new(gates).unitary(&space).matrix;
        // time order: rightmost factor first
        let lhs = seq(vec![
            Gate::rotation(Axis::Z, a[0]),
            Gate::rotation(Axis::X, a[1]),
            Gate::rotation(Axis::Z, a[2]),
            Gate::twist(Axis::Z, a[3]),
            Gate::rotation(Axis::Z, a[4]),
            Gate::rotation(Axis::X, a[5]),
            Gate::rotation(Axis::Z, a[6]),
        ]);
        let rhs = seq(vec![
            Gate::rotation(Axis::Z, a[0]),
            Gate::rotation(Axis::X, a[1]),
            Gate::rotation(Axis::Z, a[2] + a[4]),
            Gate::twist(Axis::Z, a[3]),
            Gate::rotation(Axis::X, a[5]),
            Gate::rotation(Axis::Z, a[6]),
        ]);
        assert!(max_diff(&lhs, &rhs) < 1e-12, "n={n}");
    }
}

#[test]
fn par_gates_commute_with_x_parity() {
    let mut r = rng(23);
    for n in 1..=5 {
        let spec = AnsatzSpec::par(n, 1, 1);
        let (enc, dec) = spec.build(&angles(&mut r, spec.param_count())).unwrap();
        let mut parity = oracle::identity(n);
        for j in 0..n {
            parity = oracle::embed(&oracle::pauli([1.0, 0.0, 0.0]), j, n) * parity;
        }
        for g in enc.gates.iter().chain(dec.gates.iter().take(dec.len() - 1)) {
            let u = oracle::gate_unitary(&dense_gate(g), n);
            let c = &u * &parity - &parity * &u;
            assert!(c.iter().all(|v| v.norm() < 1e-10), "n={n} {g:?}");
        }
    }
}

#[test]
fn build_matches_gate_by_gate() {
    let mut r = rng(29);
    let n = 6;
    let space = CollectiveSpace::new(n);
    let spec = AnsatzSpec::aat(n, 1, 2);
    let (enc, _) = spec.build(&angles(&mut r, spec.param_count())).unwrap();
    let mut state = spin_coherent_plus(n);
    for g in &enc.gates {
        state = state.apply(&g.matrix(&space)).unwrap();
    }
    let direct = spin_coherent_plus(n).apply(&enc.unitary(&space)).unwrap();
    for (a, b) in state.amplitudes.iter().zip(direct.amplitudes.iter()) {
        assert!((a - b).norm() < 1e-12);
    }
}

fn axis_strategy() -> impl Strategy<Value = Axis> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
        .prop_filter("nonzero", |(x, y, z)| x * x + y * y + z * z > 1e-3)
        .prop_map(|(x, y, z)| Axis::normalized(x, y, z).unwrap())
}

proptest! {
    #[test]
    fn gates_are_unitary(n in 1usize..12, axis in axis_strategy(), theta in -6.0f64..6.0, tw in any::<bool>()) {
        let space = CollectiveSpace::new(n);
        let m = if tw { space.twist(axis, theta) } else { space.rotation(axis, theta) };
        prop_assert!(m.unitarity_defect() < 1e-12);
    }

    #[test]
    fn rotation_group_property(n in 1usize..10, axis in axis_strategy(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let space = CollectiveSpace::new(n);
        let ab = space.rotation(axis, a).compose(&space.rotation(axis, b)).unwrap();
        let sum: DickeOperator = space.rotation(axis, a + b);
        prop_assert!(max_diff(&ab.matrix, &sum.matrix) < 1e-12);
    }

    #[test]
    fn norm_preserved(n in 1usize..15, seed in 0u64..1000) {
        let mut r = rng(seed);
        let seq = random_sequence(&mut r, 5);
        let state = spin_coherent_plus(n).apply(&seq.unitary(&CollectiveSpace::new(n))).unwrap();
        prop_assert!((state.norm_sqr() - 1.0).abs() < 1e-12);
    }
}
