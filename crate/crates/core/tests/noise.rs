mod common;

use common::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use vbqm_core::circuits::AnsatzSpec;
use vbqm_core::noisemodel::{
    correlation_matrix, dephasing_weight, free_evolution_channel_mpo, gate_dephasing_mpo,
    NoiseSpec,
};
use vbqm_core::objective::{gauss_hermite, moment_curve, Engine, Prior};
use vbqm_core::pinv::basis_bits;
use vbqm_core::tensornet::{mpo_twist_z, simulate_protocol_noisy, DecodingPath, TensorNetOptions};
use vbqm_core::{Error, C64};
use vbqm_oracle::{self as oracle, DenseNoise};

fn ones(n: usize) -> DMatrix<C64> {
    DMatrix::from_element(1 << n, 1 << n, C64::new(1.0, 0.0))
}

#[test]
fn weight_examples() {
    let c = correlation_matrix(1, 0.3, 0.0);
    assert!((dephasing_weight(&[0], &[1], &c).unwrap() - (-0.15f64).exp()).abs() < 1e-15);
    assert_eq!(dephasing_weight(&[1], &[1], &c).unwrap(), 1.0);
    let (c1, c2) = (0.4, -0.2);
    let c = correlation_matrix(2, c1, c2);
    let w = dephasing_weight(&[0, 0], &[1, 1], &c).unwrap();
    assert!((w - (-(c1 + c2)).exp()).abs() < 1e-15);
    let bad = correlation_matrix(3, 0.1, 0.2);
    assert!(matches!(
        dephasing_weight(&[0, 0, 0], &[1, 1, 1], &bad),
        Err(Error::NotPositiveSemidefinite { .. })
    ));
    assert!(NoiseSpec::correlated(0.1, 0.2).validate(3).is_err());
    assert!(NoiseSpec::gate(0.6).validate(3).is_err());
}

#[test]
fn weights_match_quadratic_form() {
    let n = 4;
    let c = correlation_matrix(n, 0.3, 0.12);
    let dense = oracle::tridiagonal(n, 0.3, 0.12);
    for m in 0..1 << n {
        for k in 0..1 << n {
            let w = dephasing_weight(&basis_bits(m, n), &basis_bits(k, n), &c).unwrap();
            let v = dephasing_weight(&basis_bits(k, n), &basis_bits(m, n), &c).unwrap();
            assert!((w - oracle::gaussian_damping(m, k, &dense)).abs() < 1e-14);
            assert_eq!(w, v);
            assert!(w <= 1.0);
        }
    }
}

#[test]
fn channel_mpo_matches_dense() {
    for n in 1..=4 {
        for (c1, c2) in [(0.0, 0.0), (0.2, 0.0), (0.2, 0.08), (0.2, -0.08)] {
            let phi = 0.43;
            let k = free_evolution_channel_mpo(n, phi, &NoiseSpec::correlated(c1, c2)).unwrap();
            assert!(k.max_bond() <= 3);
            let want = oracle::free_evolution(&ones(n), phi, &oracle::tridiagonal(n, c1, c2));
            assert!(oracle::max_abs_diff(&k.to_dense(), &want) < 1e-13, "n={n} {c1} {c2}");
        }
    }
}

#[test]
fn channel_is_cptp() {
    // An elementwise channel is CP iff its weight matrix is PSD, and TP iff the
    // diagonal is one.
    for n in 1..=4 {
        let k = free_evolution_channel_mpo(n, 0.7, &NoiseSpec::correlated(0.3, -0.14))
            .unwrap()
            .to_dense();
        for i in 0..k.nrows() {
            assert!((k[(i, i)] - C64::new(1.0, 0.0)).norm() < 1e-14);
        }
        let min = k.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
        assert!(min >= -1e-10, "n={n}: {min}");
    }
}

#[test]
fn gate_dephasing_matches_kraus() {
    for n in 1..=3 {
        for p in [0.0, 0.1, 0.5] {
            let k = gate_dephasing_mpo(n, p).unwrap().to_dense();
            let want = oracle::pauli_dephasing(&ones(n), [0.0, 0.0, 1.0], p, n);
            assert!(oracle::max_abs_diff(&k, &want) < 1e-14);
        }
    }
    assert!(gate_dephasing_mpo(2, -0.1).is_err());
}

#[test]
fn dephasing_commutes_with_twist() {
    for n in 1..=4 {
        let k = gate_dephasing_mpo(n, 0.2).unwrap();
        let t = mpo_twist_z(n, 0.9);
        // Both are diagonal in the computational bra/ket basis, so channel
        // then conjugation equals conjugation then channel elementwise.
        let td = t.to_dense();
        let kd = k.to_dense();
        let rho = oracle::plus_state(n) * oracle::plus_state(n).adjoint();
        let a = &td * rho.component_mul(&kd) * td.adjoint();
        let b = (&td * &rho * td.adjoint()).component_mul(&kd);
        assert!(oracle::max_abs_diff(&a, &b) < 1e-13);
    }
}

#[test]
fn weights_match_monte_carlo() {
    let n = 3;
    let (c1, c2) = (0.4, 0.15);
    let c = correlation_matrix(n, c1, c2);
    let dense = oracle::tridiagonal(n, c1, c2);
    for (m, k) in [(0b000, 0b111), (0b010, 0b101), (0b001, 0b100), (0b011, 0b000)] {
        let w = dephasing_weight(&basis_bits(m, n), &basis_bits(k, n), &c).unwrap();
        let (mean, se) = oracle::monte_carlo_damping(m, k, &dense, 1_000_000, 99 + m as u64);
        assert!((w - mean).abs() <= 3.0 * se.max(1e-12), "{m:b} {k:b}: {w} vs {mean} +- {se}");
    }
}

fn tn(path: DecodingPath) -> TensorNetOptions {
    TensorNetOptions {
        path,
        ..TensorNetOptions::default()
    }
}

#[test]
fn noisy_protocol_matches_density_oracle() {
    let mut r = rng(31);
    for n in 1..=5 {
        let spec = AnsatzSpec::aat(n, 1, 1);
        let params = angles(&mut r, spec.param_count());
        let (enc, dec) = spec.build(&params).unwrap();
        for noise in [
            NoiseSpec::correlated(0.1, 0.0),
            NoiseSpec::correlated(0.1, 0.05),
            NoiseSpec::correlated(0.1, -0.05),
            NoiseSpec::gate(0.01),
            NoiseSpec::gate(0.1),
        ] {
            let dn = DenseNoise {
                c1: noise.c1,
                c2: noise.c2,
                p: noise.p,
            };
            for phi in [-0.6, 0.2] {
                let want = oracle::density_protocol_moments(n, &dense(&enc), &dense(&dec), phi, dn);
                for path in [DecodingPath::PerGate, DecodingPath::Compiled] {
                    let got = simulate_protocol_noisy(n, &enc, &dec, phi, &noise, &tn(path)).unwrap();
                    assert!(
                        (got.0 - want.0).abs() < 1e-10 && (got.1 - want.1).abs() < 1e-10,
                        "n={n} {noise:?} {path:?}: {got:?} vs {want:?}"
                    );
                }
            }
        }
    }
}

#[test]
fn noisy_curve_n4() {
    let n = 4;
    let spec = AnsatzSpec::aat(n, 1, 1);
    let (enc, dec) = spec.build(&angles(&mut rng(2), spec.param_count())).unwrap();
    let prior = Prior::new(0.5).unwrap();
    let rule = gauss_hermite(9).unwrap();
    let noise = NoiseSpec::correlated(0.1, 0.0);
    let engine = Engine::TensorNet(TensorNetOptions::default());
    let curve = moment_curve(n, &enc, &dec, &prior, &rule, &engine, Some(&noise)).unwrap();
    for (i, phi) in curve.phis.iter().enumerate() {
        let want = oracle::density_protocol_moments(
            n,
            &dense(&enc),
            &dense(&dec),
            *phi,
            DenseNoise { c1: 0.1, ..Default::default() },
        );
        assert!((curve.first[i] - want.0).abs() < 1e-10);
        assert!((curve.second[i] - want.1).abs() < 1e-10);
    }
    assert!(moment_curve(n, &enc, &dec, &prior, &rule, &Engine::Collective, Some(&noise)).is_err());
}

#[test]
fn arbitrary_axis_gate_noise() {
    // Twist-frame dephasing equals Pauli dephasing along the twist axis.
    let n = 3;
    let mut r = rng(8);
    let seq = random_sequence(&mut r, 5);
    let noise = NoiseSpec::gate(0.07);
    let spec = AnsatzSpec::aat(n, 0, 0);
    let (_, dec) = spec.build(&[0.0; 4]).unwrap();
    let got = simulate_protocol_noisy(n, &seq, &dec, 0.3, &noise, &tn(DecodingPath::PerGate)).unwrap();
    let want = oracle::density_protocol_moments(
        n,
        &dense(&seq),
        &dense(&dec),
        0.3,
        DenseNoise { p: 0.07, ..Default::default() },
    );
    assert!((got.0 - want.0).abs() < 1e-10 && (got.1 - want.1).abs() < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn weights_bounded_and_symmetric(m in 0usize..64, k in 0usize..64, c1 in 0.0f64..1.0, frac in -0.5f64..0.5) {
        let n = 6;
        let c = correlation_matrix(n, c1, frac * c1);
        let w = dephasing_weight(&basis_bits(m, n), &basis_bits(k, n), &c).unwrap();
        let v = dephasing_weight(&basis_bits(k, n), &basis_bits(m, n), &c).unwrap();
        prop_assert!(w > 0.0 && w <= 1.0 + 1e-15);
        prop_assert_eq!(w, v);
    }
}
