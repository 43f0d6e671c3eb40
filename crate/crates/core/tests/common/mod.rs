#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use vbqm_core::circuits::{Gate, GateKind, GateSequence};
use vbqm_core::collective::Axis;
use vbqm_oracle::DenseGate;

pub fn dense(gates: &GateSequence) -> Vec<DenseGate> {
    gates.gates.iter().map(dense_gate).collect()
}

pub fn dense_gate(g: &Gate) -> DenseGate {
    DenseGate {
        twist: g.kind == GateKind::Twist,
        axis: g.axis.components(),
        theta: g.theta,
    }
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn angles(rng: &mut StdRng, k: usize) -> Vec<f64> {
    (0..k).map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)).collect()
}

pub fn random_axis(rng: &mut StdRng) -> Axis {
    loop {
        let v: [f64; 3] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        if let Ok(a) = Axis::normalized(v[0], v[1], v[2]) {
            return a;
        }
    }
}

/// Random sequence of rotations and twists about arbitrary axes.
pub fn random_sequence(rng: &mut StdRng, len: usize) -> GateSequence {
    GateSequence::new(
        (0..len)
            .map(|_| {
                let axis = random_axis(rng);
                let theta = rng.random_range(-2.0..2.0);
                if rng.random_bool(0.5) {
                    Gate::twist(axis, theta)
                } else {
                    Gate::rotation(axis, theta)
                }
            })
            .collect(),
    )
}
