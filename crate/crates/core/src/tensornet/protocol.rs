//! Noisy protocol simulation: probe, free evolution with correlated
//! dephasing, decoding with twist dephasing, and the `J_z`, `J_z^2` readout.
//!
//! Everything except the free evolution is independent of `phi`, so the
//! probe and the Heisenberg-picture observables are prepared once and each
//! quadrature node costs a single contraction.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{
    conjugate_by_unitary, density_from_dicke, mpo_jz, mpo_jz2, mpo_product, mpo_rotation,
    mpo_twist_z, trace_product, DensityMpo, Mpo,
};
use crate::circuits::{Gate, GateKind, GateSequence};
use crate::collective::{spin_coherent_plus, Component, CollectiveSpace};
use crate::noisemodel::{free_evolution_channel_mpo, gate_dephasing, gate_dephasing_mpo, type_weights, NoiseSpec};
use crate::pinv::{compile_circuit, dephase, expand_twists, heisenberg_gate, multiply, PermInvOperator, TypeSpace};
use crate::{Error, Result, C64};

/// How the decoding circuit is carried through the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DecodingPath {
    /// Gate-by-gate Heisenberg updates of the permutation-invariant observable
    /// tables.
    #[default]
    PerGate,
    /// Noise-free stretches of the decoding are compiled into single
    /// permutation-invariant unitaries by repeated table multiplication.
    Compiled,
    /// Explicit MPO contraction of every stage; bond dimensions grow with each
    /// twist and are checked against the budget.
    Mpo,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TensorNetOptions {
    pub path: DecodingPath,
    /// Largest MPO bond dimension the `Mpo` path may create.
    pub bond_budget: usize,
}

impl Default for TensorNetOptions {
    fn default() -> Self {
        Self {
            path: DecodingPath::PerGate,
            bond_budget: 4096,
        }
    }
}

#[derive(Debug, Clone)]
enum Prepared {
    /// `sums[k][N + d]` collects every contribution to `<O_k>` whose free
    /// evolution phase is `e^{-i phi d}`.
    Types { sums: [Vec<C64>; 2] },
    Network {
        probe: DensityMpo,
        observables: [Mpo; 2],
        noise: NoiseSpec,
    },
}

/// Protocol with all `phi`-independent work done.
#[derive(Debug, Clone)]
pub struct PreparedProtocol {
    n_qubits: usize,
    inner: Prepared,
    /// Largest bond dimension created, per stage, for diagnostics.
    pub bond_profile: Vec<(String, usize)>,
}

impl PreparedProtocol {
    pub fn new(
        n_qubits: usize,
        encoding: &GateSequence,
        decoding: &GateSequence,
        noise: &NoiseSpec,
        options: &TensorNetOptions,
    ) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::Dimension("need at least one qubit".into()));
        }
        noise.validate(n_qubits)?;
        match options.path {
            DecodingPath::Mpo => Self::network(n_qubits, encoding, decoding, noise, options),
            path => Self::types(n_qubits, encoding, decoding, noise, path),
        }
    }

    fn types(
        n: usize,
        encoding: &GateSequence,
        decoding: &GateSequence,
        noise: &NoiseSpec,
        path: DecodingPath,
    ) -> Result<Self> {
        let probe = type_probe(n, encoding, noise.p)?;
        let mut observables = [PermInvOperator::jz(n), PermInvOperator::jz2(n)];
        let expanded = expand_twists(decoding);
        match path {
            DecodingPath::PerGate => {
                for g in expanded.gates.iter().rev() {
                    for o in observables.iter_mut() {
                        if g.kind == GateKind::Twist && noise.p != 0.0 {
                            dephase(o, noise.p);
                        }
                        *o = heisenberg_gate(o, g)?;
                    }
                }
            }
            _ => {
                for (segment, dephased) in segments(&expanded, noise.p != 0.0).iter().rev() {
                    let u = compile_circuit(n, segment)?;
                    let ud = u.adjoint();
                    for o in observables.iter_mut() {
                        if *dephased {
                            dephase(o, noise.p);
                        }
                        *o = multiply(&multiply(&ud, o)?, &u)?;
                    }
                }
            }
        }
        let ts = TypeSpace::new(n);
        let tr = ts.transposed();
        let z = type_weights(n, noise.c1, noise.c2);
        let mut sums = [vec![C64::new(0.0, 0.0); 2 * n + 1], vec![C64::new(0.0, 0.0); 2 * n + 1]];
        for (i, t) in ts.types.iter().enumerate() {
            let d = n + t[0] - t[1];
            let w = probe.coeffs[i] * z[i];
            for k in 0..2 {
                sums[k][d] += w * observables[k].coeffs[tr[i]];
            }
        }
        Ok(Self {
            n_qubits: n,
            inner: Prepared::Types { sums },
            bond_profile: Vec::new(),
        })
    }

    fn network(
        n: usize,
        encoding: &GateSequence,
        decoding: &GateSequence,
        noise: &NoiseSpec,
        options: &TensorNetOptions,
    ) -> Result<Self> {
        let mut profile = Vec::new();
        let budget = options.bond_budget;
        let check = |stage: String, bond: usize, profile: &mut Vec<(String, usize)>| {
            profile.push((stage.clone(), bond));
            if bond > budget {
                return Err(Error::BondBudget {
                    stage,
                    required: bond,
                    budget,
                });
            }
            Ok(())
        };
        let space = CollectiveSpace::new(n);
        let mut probe = if noise.p == 0.0 {
            let psi = spin_coherent_plus(n).apply(&encoding.unitary(&space))?;
            density_from_dicke(&psi.density())?
        } else {
            density_from_dicke(&spin_coherent_plus(n).density())?
        };
        check("probe".into(), probe.0.max_bond(), &mut profile)?;
        if noise.p != 0.0 {
            for (k, g) in expand_twists(encoding).gates.iter().enumerate() {
                let u = gate_mpo(n, g)?;
                let need = probe.0.max_bond() * u.max_bond() * u.max_bond();
                check(format!("encoding gate {k}"), need, &mut profile)?;
                probe = conjugate_by_unitary(&probe, &u)?;
                if g.kind == GateKind::Twist {
                    probe = gate_dephasing(&probe, noise.p)?;
                }
            }
        }
        let mut observables = [mpo_jz(n), mpo_jz2(n)];
        let dephasing = gate_dephasing_mpo(n, noise.p)?;
        let expanded = expand_twists(decoding);
        for (k, g) in expanded.gates.iter().enumerate().rev() {
            let u = gate_mpo(n, g)?;
            for o in observables.iter_mut() {
                let need = o.max_bond() * u.max_bond() * u.max_bond();
                check(format!("decoding gate {k}"), need, &mut profile)?;
                if g.kind == GateKind::Twist && noise.p != 0.0 {
                    *o = o.hadamard(&dephasing)?;
                }
                *o = mpo_product(&mpo_product(&u.adjoint(), o)?, &u)?;
            }
        }
        Ok(Self {
            n_qubits: n,
            inner: Prepared::Network {
                probe,
                observables,
                noise: *noise,
            },
            bond_profile: profile,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// `(<J_z>, <J_z^2>)` after free evolution by `phi`.
    pub fn moments(&self, phi: f64) -> Result<(f64, f64)> {
        match &self.inner {
            Prepared::Types { sums } => {
                let n = self.n_qubits as i64;
                let mut out = [0.0; 2];
                for (k, s) in sums.iter().enumerate() {
                    let mut acc = C64::new(0.0, 0.0);
                    for (i, v) in s.iter().enumerate() {
                        let d = i as i64 - n;
                        acc += v * C64::from_polar(1.0, -phi * d as f64);
                    }
                    out[k] = acc.re;
                }
                Ok((out[0], out[1]))
            }
            Prepared::Network {
                probe,
                observables,
                noise,
            } => {
                let k = free_evolution_channel_mpo(self.n_qubits, phi, noise)?;
                let evolved = probe.0.hadamard(&k)?;
                let m1 = trace_product(&observables[0], &evolved)?;
                let m2 = trace_product(&observables[1], &evolved)?;
                Ok((m1.re, m2.re))
            }
        }
    }
}

/// Probe table: built in the symmetric subspace when the encoding is
/// noiseless, otherwise propagated gate by gate with dephasing after twists.
fn type_probe(n: usize, encoding: &GateSequence, p: f64) -> Result<PermInvOperator> {
    let space = CollectiveSpace::new(n);
    if p == 0.0 {
        let psi = spin_coherent_plus(n).apply(&encoding.unitary(&space))?;
        return PermInvOperator::from_dicke(&psi.density());
    }
    let mut rho = PermInvOperator::from_dicke(&spin_coherent_plus(n).density())?;
    for g in &expand_twists(encoding).gates {
        // G rho G^dagger is the Heisenberg update by G^dagger.
        rho = heisenberg_gate(&rho, &g.inverse())?;
        if g.kind == GateKind::Twist {
            dephase(&mut rho, p);
        }
    }
    Ok(rho)
}

/// Splits a circuit after every twist when twist dephasing is on; the flag
/// marks segments followed by a dephasing layer.
fn segments(gates: &GateSequence, noisy: bool) -> Vec<(GateSequence, bool)> {
    if !noisy {
        return vec![(gates.clone(), false)];
    }
    let mut out = Vec::new();
    let mut cur = Vec::new();
    for g in &gates.gates {
        cur.push(*g);
        if g.kind == GateKind::Twist {
            out.push((GateSequence::new(core::mem::take(&mut cur)), true));
        }
    }
    if !cur.is_empty() {
        out.push((GateSequence::new(cur), false));
    }
    out
}

fn gate_mpo(n: usize, g: &Gate) -> Result<Mpo> {
    match (g.kind, g.axis.component()) {
        (GateKind::Rotation, _) => Ok(mpo_rotation(n, g.axis, g.theta)),
        (GateKind::Twist, Some(Component::Z)) => Ok(mpo_twist_z(n, g.theta)),
        _ => Err(Error::UnsupportedGate("twist must be expanded first".into())),
    }
}

/// Moments at a single `phi`.
pub fn simulate_protocol_noisy(
    n_qubits: usize,
    encoding: &GateSequence,
    decoding: &GateSequence,
    phi: f64,
    noise: &NoiseSpec,
    options: &TensorNetOptions,
) -> Result<(f64, f64)> {
    PreparedProtocol::new(n_qubits, encoding, decoding, noise, options)?.moments(phi)
}
