mod common;

use common::*;
use std::f64::consts::FRAC_PI_2;
use vbqm_core::circuits::{classical_baseline_spec, AnsatzSpec, GateKind};
use vbqm_core::collective::{Axis, CollectiveSpace, DickeOperator};
use vbqm_core::pinv::su2;
use vbqm_core::C64;

type Su2 = [[C64; 2]; 2];

fn mul(a: &Su2, b: &Su2) -> Su2 {
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

/// `u = R_z(alpha) R_x(gamma) R_z(beta)` as matrices.
fn zxz(u: &Su2) -> (f64, f64, f64) {
    let gamma = 2.0 * u[0][1].norm().atan2(u[0][0].norm());
    let sum = -2.0 * u[0][0].arg();
    let diff = -2.0 * (C64::new(0.0, 1.0) * u[0][1]).arg();
    ((sum + diff) / 2.0, gamma, (sum - diff) / 2.0)
}

/// Equal up to a global phase.
fn same_up_to_phase(a: &DickeOperator, b: &DickeOperator) -> f64 {
    let d = a.matrix.nrows() as f64;
    let phase = (a.matrix.adjoint() * &b.matrix).trace() / d;
    let scaled = &a.matrix * phase;
    vbqm_oracle::max_abs_diff(&scaled, &b.matrix).max((phase.norm() - 1.0).abs())
}

fn is_identity(u: &DickeOperator) -> bool {
    let id = DickeOperator::identity(u.n_qubits);
    vbqm_oracle::max_abs_diff(&u.matrix, &id.matrix) < 1e-14
}

#[test]
fn param_counts() {
    assert_eq!(AnsatzSpec::aat(4, 1, 1).param_count(), 10);
    assert_eq!(AnsatzSpec::par(4, 1, 1).param_count(), 6);
    assert_eq!(classical_baseline_spec(4).param_count(), 4);
    let (enc, dec) = AnsatzSpec::aat(4, 1, 2).build(&[0.0; 13]).unwrap();
    assert_eq!(enc.twist_count(), 1);
    assert_eq!(dec.twist_count(), 2);
    assert!(AnsatzSpec::aat(4, 1, 1).build(&[0.0; 9]).is_err());
}

#[test]
fn zero_params_are_identity() {
    let space = CollectiveSpace::new(5);
    for spec in [AnsatzSpec::aat(5, 2, 3), AnsatzSpec::par(5, 2, 1), classical_baseline_spec(5)] {
        let (enc, dec) = spec.build(&vec![0.0; spec.param_count()]).unwrap();
        assert!(enc.unitary(&space).unitarity_defect() < 1e-14 && is_identity(&enc.unitary(&space)));
        let last = dec.gates.last().unwrap();
        assert_eq!(last.kind, GateKind::Rotation);
        assert_eq!((last.axis, last.theta), (Axis::X, FRAC_PI_2));
        let mut body = dec.clone();
        body.gates.pop();
        assert!(is_identity(&body.unitary(&space)));
    }
}

#[test]
fn labels_round_trip() {
    for spec in [AnsatzSpec::aat(30, 1, 2), AnsatzSpec::par(30, 1, 3)] {
        let parsed: AnsatzSpec = spec.label().parse().unwrap();
        assert_eq!(parsed.with_qubits(30), spec);
    }
}

/// Every PAR_2_2 protocol is an AAT_2_2 protocol: each PAR layer maps onto
/// twist slots with basis changes absorbed by Euler decompositions.
#[test]
fn par_embeds_in_aat() {
    let mut r = rng(41);
    let rx = |t: f64| su2(Axis::X, t);
    let ry = |t: f64| su2(Axis::Y, t);
    for n in 2..=6 {
        let space = CollectiveSpace::new(n);
        let par = AnsatzSpec::par(n, 1, 1);
        let (penc, pdec) = par.build(&angles(&mut r, 6)).unwrap();
        let [a, b, c] = [penc.gates[0].theta, penc.gates[1].theta, penc.gates[2].theta];
        let [c2, b2, a2] = [pdec.gates[0].theta, pdec.gates[1].theta, pdec.gates[2].theta];

        // Encoding: T_z(a), R_y(-pi/2) T_z(b) R_y(pi/2), R_x(c).
        let (al, ga, be) = zxz(&mul(&rx(c), &ry(FRAC_PI_2)));
        let enc = [0.0, -FRAC_PI_2, a, -FRAC_PI_2, FRAC_PI_2 + be, b, ga, al];
        // Decoding: R_x(c'), R_y(-pi/2) T_z(b') R_y(pi/2), T_z(a').
        let (al2, ga2, be2) = zxz(&mul(&ry(-FRAC_PI_2), &rx(c2)));
        let dec = [be2, ga2, b2, al2 - FRAC_PI_2, FRAC_PI_2, a2, FRAC_PI_2, 0.0];
        let params: Vec<f64> = enc.iter().chain(&dec).copied().collect();
        let (aenc, adec) = AnsatzSpec::aat(n, 2, 2).build(&params).unwrap();

        let d_enc = same_up_to_phase(&aenc.unitary(&space), &penc.unitary(&space));
        let d_dec = same_up_to_phase(&adec.unitary(&space), &pdec.unitary(&space));
        assert!(d_enc < 1e-8 && d_dec < 1e-8, "n={n}: {d_enc} {d_dec}");
    }
}
