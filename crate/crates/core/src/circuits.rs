//! Gate sequences for the arbitrary-axis twist (AAT) and parity-symmetric
//! (PAR) ansatz families.
//!
//! Parameters are stored in gate-application order, encoding first. The
//! decoding always ends with a fixed `R_x(pi/2)`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use nalgebra::DMatrix;

use crate::collective::{Axis, CollectiveSpace, Component, DickeOperator};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    Rotation,
    Twist,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub axis: Axis,
    pub theta: f64,
}

impl Gate {
    pub fn rotation(axis: Axis, theta: f64) -> Self {
        Self {
            kind: GateKind::Rotation,
            axis,
            theta,
        }
    }

    pub fn twist(axis: Axis, theta: f64) -> Self {
        Self {
            kind: GateKind::Twist,
            axis,
            theta,
        }
    }

    pub fn matrix(&self, space: &CollectiveSpace) -> DickeOperator {
        match self.kind {
            GateKind::Rotation => space.rotation(self.axis, self.theta),
            GateKind::Twist => space.twist(self.axis, self.theta),
        }
    }

    pub fn inverse(&self) -> Self {
        Self {
            theta: -self.theta,
            ..*self
        }
    }
}

/// Gates in time order: `gates[0]` acts first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GateSequence {
    pub gates: Vec<Gate>,
}

impl GateSequence {
    pub fn new(gates: Vec<Gate>) -> Self {
        Self { gates }
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn twist_count(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| g.kind == GateKind::Twist)
            .count()
    }

    /// Product of all gates, `G_last ... G_first`.
    pub fn unitary(&self, space: &CollectiveSpace) -> DickeOperator {
        let d = space.dim();
        let mut m = DMatrix::<C64>::identity(d, d);
        for g in self.gates.iter().filter(|g| g.theta != 0.0) {
            match g.axis.component() {
                Some(c) => space.left_apply(c, g.kind == GateKind::Twist, g.theta, &mut m),
                None => m = g.matrix(space).matrix * m,
            }
        }
        DickeOperator {
            n_qubits: space.n_qubits(),
            matrix: m,
        }
    }

    /// Inverse circuit: reversed order, negated angles.
    pub fn inverse(&self) -> Self {
        Self {
            gates: self.gates.iter().rev().map(Gate::inverse).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Aat,
    Par,
}

/// Ansatz family with its twist counts.
///
/// For PAR, `n_en` and `n_de` count twists (two per layer) and must be even.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AnsatzSpec {
    pub family: Family,
    pub n_en: usize,
    pub n_de: usize,
    pub n_qubits: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Encoding,
    Decoding,
}

/// Identity of a parameter slot that is stable across depths: side, block
/// (or layer) number and position within the block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SlotLabel {
    pub side: Side,
    pub block: usize,
    pub position: usize,
}

struct Template {
    kind: GateKind,
    axis: Component,
    slot: SlotLabel,
}

fn t(kind: GateKind, axis: Component, side: Side, block: usize, position: usize) -> Template {
    Template {
        kind,
        axis,
        slot: SlotLabel {
            side,
            block,
            position,
        },
    }
}

use Component::{X, Y, Z};
use GateKind::{Rotation as R, Twist as T};

impl AnsatzSpec {
    pub fn aat(n_qubits: usize, n_en: usize, n_de: usize) -> Self {
        Self {
            family: Family::Aat,
            n_en,
            n_de,
            n_qubits,
        }
    }

    /// PAR ansatz with `l_en` encoding and `l_de` decoding layers.
    pub fn par(n_qubits: usize, l_en: usize, l_de: usize) -> Self {
        Self {
            family: Family::Par,
            n_en: 2 * l_en,
            n_de: 2 * l_de,
            n_qubits,
        }
    }

    pub fn with_qubits(self, n_qubits: usize) -> Self {
        Self { n_qubits, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 {
            return Err(Error::InvalidAnsatz("zero qubits".into()));
        }
        if self.family == Family::Par && (self.n_en % 2 != 0 || self.n_de % 2 != 0) {
            return Err(Error::InvalidAnsatz(format!(
                "PAR twist counts must be even, got {} and {}",
                self.n_en, self.n_de
            )));
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        match self.family {
            Family::Aat => 4 + 3 * (self.n_en + self.n_de),
            Family::Par => 3 * (self.n_en + self.n_de) / 2,
        }
    }

    /// Name such as `AAT_1_2` or `PAR_2_6`.
    pub fn label(&self) -> String {
        let f = match self.family {
            Family::Aat => "AAT",
            Family::Par => "PAR",
        };
        format!("{}_{}_{}", f, self.n_en, self.n_de)
    }

    pub fn slots(&self) -> Vec<SlotLabel> {
        self.templates().into_iter().map(|t| t.slot).collect()
    }

    fn templates(&self) -> Vec<Template> {
        use Side::{Decoding as De, Encoding as En};
        let mut v = Vec::new();
        match self.family {
            Family::Aat => {
                if self.n_en == 0 {
                    v.push(t(R, Y, En, 1, 0));
                    v.push(t(R, Z, En, 1, 1));
                } else {
                    v.push(t(R, Y, En, 1, 0));
                    v.push(t(R, Z, En, 1, 1));
                    v.push(t(T, Z, En, 1, 2));
                    v.push(t(R, X, En, 1, 3));
                    v.push(t(R, Z, En, 1, 4));
                    for j in 2..=self.n_en {
                        v.push(t(T, Z, En, j, 0));
                        v.push(t(R, X, En, j, 1));
                        v.push(t(R, Z, En, j, 2));
                    }
                }
                if self.n_de == 0 {
                    v.push(t(R, Z, De, 1, 0));
                    v.push(t(R, X, De, 1, 1));
                } else {
                    for j in (2..=self.n_de).rev() {
                        v.push(t(R, Z, De, j, 0));
                        v.push(t(R, X, De, j, 1));
                        v.push(t(T, Z, De, j, 2));
                    }
                    v.push(t(R, Z, De, 1, 0));
                    v.push(t(R, X, De, 1, 1));
                    v.push(t(T, Z, De, 1, 2));
                    v.push(t(R, Z, De, 1, 3));
                    v.push(t(R, X, De, 1, 4));
                }
            }
            Family::Par => {
                for j in 1..=self.n_en / 2 {
                    v.push(t(T, Z, En, j, 0));
                    v.push(t(T, X, En, j, 1));
                    v.push(t(R, X, En, j, 2));
                }
                for j in (1..=self.n_de / 2).rev() {
                    v.push(t(R, X, De, j, 0));
                    v.push(t(T, X, De, j, 1));
                    v.push(t(T, Z, De, j, 2));
                }
            }
        }
        v
    }

    /// Encoding and decoding circuits for the given parameters.
    pub fn build(&self, params: &[f64]) -> Result<(GateSequence, GateSequence)> {
        self.validate()?;
        let templates = self.templates();
        if params.len() != templates.len() {
            return Err(Error::ParamLength {
                expected: templates.len(),
                got: params.len(),
            });
        }
        let mut enc = Vec::new();
        let mut dec = Vec::new();
        for (tp, &theta) in templates.iter().zip(params) {
            let g = Gate {
                kind: tp.kind,
                axis: tp.axis.into(),
                theta,
            };
            match tp.slot.side {
                Side::Encoding => enc.push(g),
                Side::Decoding => dec.push(g),
            }
        }
        dec.push(final_rotation());
        Ok((GateSequence::new(enc), GateSequence::new(dec)))
    }
}

/// The fixed readout rotation closing every decoding.
pub fn final_rotation() -> Gate {
    Gate::rotation(Axis::X, core::f64::consts::FRAC_PI_2)
}

pub fn build_aat(spec: &AnsatzSpec, params: &[f64]) -> Result<(GateSequence, GateSequence)> {
    if spec.family != Family::Aat {
        return Err(Error::InvalidAnsatz("expected an AAT spec".into()));
    }
    spec.build(params)
}

pub fn build_par(spec: &AnsatzSpec, params: &[f64]) -> Result<(GateSequence, GateSequence)> {
    if spec.family != Family::Par {
        return Err(Error::InvalidAnsatz("expected a PAR spec".into()));
    }
    spec.build(params)
}

/// Twist-free protocol used as the classical reference.
pub fn classical_baseline_spec(n_qubits: usize) -> AnsatzSpec {
    AnsatzSpec::aat(n_qubits, 0, 0)
}

impl fmt::Display for AnsatzSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Parses `AAT_1_2`, `PAR_2_2` or `classical`; the qubit count is left at 1
/// and set with [`AnsatzSpec::with_qubits`].
impl FromStr for AnsatzSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        if lower == "classical" {
            return Ok(AnsatzSpec::aat(1, 0, 0));
        }
        let bad = || Error::InvalidAnsatz(format!("cannot parse ansatz label {s:?}"));
        let mut parts = lower.split('_');
        let family = match parts.next() {
            Some("aat") => Family::Aat,
            Some("par") => Family::Par,
            _ => return Err(bad()),
        };
        let n_en: usize = parts.next().and_then(|p| p.parse().ok()).ok_or_else(bad)?;
        let n_de: usize = parts.next().and_then(|p| p.parse().ok()).ok_or_else(bad)?;
        if parts.next().is_some() {
            return Err(bad());
        }
        let spec = AnsatzSpec {
            family,
            n_en,
            n_de,
            n_qubits: 1,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        assert_eq!(AnsatzSpec::aat(4, 1, 1).param_count(), 10);
        assert_eq!(AnsatzSpec::aat(4, 1, 1).slots().len(), 10);
        assert_eq!(classical_baseline_spec(4).param_count(), 4);
        assert_eq!(classical_baseline_spec(4).slots().len(), 4);
        assert_eq!(AnsatzSpec::par(4, 1, 1).param_count(), 6);
        for en in 0..4 {
            for de in 0..4 {
                let s = AnsatzSpec::aat(3, en, de);
                assert_eq!(s.slots().len(), s.param_count());
                let (e, d) = s.build(&vec![0.1; s.param_count()]).unwrap();
                assert_eq!(e.twist_count(), en);
                assert_eq!(d.twist_count(), de);
                let p = AnsatzSpec::par(3, en, de);
                assert_eq!(p.slots().len(), p.param_count());
            }
        }
    }

    #[test]
    fn decoding_ends_with_readout() {
        let (_, d) = AnsatzSpec::aat(3, 1, 2).build(&[0.0; 13]).unwrap();
        assert_eq!(*d.gates.last().unwrap(), final_rotation());
        assert!(matches!(
            AnsatzSpec::aat(3, 1, 2).build(&[0.0; 12]),
            Err(Error::ParamLength { expected: 13, got: 12 })
        ));
    }

    #[test]
    fn labels_round_trip() {
        for s in ["AAT_1_2", "PAR_2_6", "AAT_0_0"] {
            assert_eq!(s.parse::<AnsatzSpec>().unwrap().label(), s);
        }
        assert_eq!("classical".parse::<AnsatzSpec>().unwrap().label(), "AAT_0_0");
        assert!("PAR_1_2".parse::<AnsatzSpec>().is_err());
        assert!("AAT_1".parse::<AnsatzSpec>().is_err());
    }

    #[test]
    fn zero_params_give_identity() {
        let sp = CollectiveSpace::new(5);
        let s = AnsatzSpec::aat(5, 2, 3);
        let (e, mut d) = s.build(&vec![0.0; s.param_count()]).unwrap();
        d.gates.pop();
        assert!(e.unitary(&sp).unitarity_defect() < 1e-12);
        let id = DMatrix::<C64>::identity(6, 6);
        for u in [e.unitary(&sp), d.unitary(&sp)] {
            assert!((u.matrix - &id).iter().all(|z| z.norm() < 1e-14));
        }
    }

    #[test]
    fn compiled_equals_stepwise() {
        let sp = CollectiveSpace::new(6);
        let s = AnsatzSpec::par(6, 2, 1);
        let params: Vec<f64> = (0..s.param_count()).map(|i| 0.3 * i as f64 - 1.0).collect();
        let (e, _) = s.build(&params).unwrap();
        let mut m = DMatrix::<C64>::identity(7, 7);
        for g in &e.gates {
            m = g.matrix(&sp).matrix * m;
        }
        let u = e.unitary(&sp).matrix;
        assert!((u - m).iter().all(|z| z.norm() < 1e-12));
    }
}
