//! Permutation-invariant operators as coefficient tables over type vectors.
//!
//! For qubit operators a pair of basis strings `(x, y)` has type
//! `t = (t01, t10, t11)`, where `t_{mu nu}` counts sites with ket letter `mu`
//! and bra letter `nu`; `t00 = N - t01 - t10 - t11`. A permutation-invariant
//! operator satisfies `<x|O|y> = c_t`. Tables are stored in canonical order:
//! increasing `|t|_1`, then decreasing `t1`, then decreasing `t2`, and so on.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::circuits::{Gate, GateKind, GateSequence};
use crate::collective::{jz_eigenvalue, Axis};
use crate::combinatorics::{binom_i, binomial, sqrt, BinomialTable};
use crate::tensornet::{Mpo, Mps, Site3, Site4};
use crate::{Error, Result, C64};

/// Number of type vectors of length `d - 1` for `n` sites.
pub fn type_count(n: usize, d: usize) -> usize {
    binom_i((n + d - 1) as i64, (d - 1) as i64)
}

/// All type vectors `(t1, ..., t_{d-1})` with sum at most `n`, in canonical
/// order.
pub fn canonical_types(n: usize, d: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(type_count(n, d));
    for s in 0..=n {
        let mut cur = vec![0usize; d - 1];
        fill_decreasing(&mut cur, 0, s, &mut out);
    }
    out
}

fn fill_decreasing(cur: &mut Vec<usize>, k: usize, rem: usize, out: &mut Vec<Vec<usize>>) {
    if k + 1 >= cur.len() {
        if let Some(last) = cur.last_mut() {
            *last = rem;
            out.push(cur.clone());
        } else if rem == 0 {
            out.push(cur.clone());
        }
        return;
    }
    for v in (0..=rem).rev() {
        cur[k] = v;
        fill_decreasing(cur, k + 1, rem - v, out);
    }
}

/// Zero-based position of `t` in canonical order, by direct binomial offsets.
pub fn canonical_index(t: &[usize], d: usize) -> usize {
    let s: usize = t.iter().sum();
    let d = d as i64;
    let mut idx = binom_i(s as i64 + d - 2, d - 1);
    for k in 1..=(d - 2) as usize {
        let tail: usize = t[k..].iter().sum();
        for n in 0..tail as i64 {
            idx += binom_i(n + d - 2 - k as i64, d - 2 - k as i64);
        }
    }
    idx
}

/// Lookup tables for qubit-operator types at fixed `N`.
#[derive(Debug, Clone)]
pub(crate) struct TypeSpace {
    pub n: usize,
    pub types: Vec<[usize; 3]>,
    /// `cube[(t01 * (N+1) + t10) * (N+1) + t11]` is the canonical index, or
    /// `usize::MAX` outside the simplex.
    pub cube: Vec<usize>,
}

impl TypeSpace {
    pub fn new(n: usize) -> Self {
        let types: Vec<[usize; 3]> = canonical_types(n, 4)
            .into_iter()
            .map(|t| [t[0], t[1], t[2]])
            .collect();
        let m = n + 1;
        let mut cube = vec![usize::MAX; m * m * m];
        for (i, t) in types.iter().enumerate() {
            cube[(t[0] * m + t[1]) * m + t[2]] = i;
        }
        Self { n, types, cube }
    }

    #[inline]
    pub fn index(&self, t01: usize, t10: usize, t11: usize) -> usize {
        let m = self.n + 1;
        self.cube[(t01 * m + t10) * m + t11]
    }

    /// Index of the transposed type (ket and bra exchanged).
    pub fn transposed(&self) -> Vec<usize> {
        self.types
            .iter()
            .map(|t| self.index(t[1], t[0], t[2]))
            .collect()
    }

    /// Number of `(x, y)` pairs of each type.
    pub fn multiplicities(&self) -> Vec<f64> {
        self.types
            .iter()
            .map(|t| crate::multinomial4(self.n - t[0] - t[1] - t[2], t[0], t[1], t[2]))
            .collect()
    }
}

/// Type of the pair `(x, y)` of basis strings given as bit slices.
pub fn pair_type(x: &[u8], y: &[u8]) -> [usize; 3] {
    let mut t = [0usize; 3];
    for (&a, &b) in x.iter().zip(y) {
        match (a, b) {
            (0, 1) => t[0] += 1,
            (1, 0) => t[1] += 1,
            (1, 1) => t[2] += 1,
            _ => {}
        }
    }
    t
}

/// Bits of basis index `i` on `n` qubits, most significant first.
pub fn basis_bits(i: usize, n: usize) -> Vec<u8> {
    (0..n).map(|j| ((i >> (n - 1 - j)) & 1) as u8).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PermInvOperator {
    pub n_qubits: usize,
    /// Coefficients in canonical type order.
    pub coeffs: Vec<C64>,
}

impl PermInvOperator {
    pub fn zeros(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            coeffs: vec![C64::new(0.0, 0.0); type_count(n_qubits, 4)],
        }
    }

    pub fn from_fn(n_qubits: usize, mut f: impl FnMut([usize; 3]) -> C64) -> Self {
        let coeffs = canonical_types(n_qubits, 4)
            .into_iter()
            .map(|t| f([t[0], t[1], t[2]]))
            .collect();
        Self { n_qubits, coeffs }
    }

    pub fn from_coeffs(n_qubits: usize, coeffs: Vec<C64>) -> Result<Self> {
        let expected = type_count(n_qubits, 4);
        if coeffs.len() != expected {
            return Err(Error::IncompleteTable {
                expected,
                got: coeffs.len(),
            });
        }
        Ok(Self { n_qubits, coeffs })
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self::from_fn(n_qubits, |t| {
            if t[0] == 0 && t[1] == 0 {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    /// Coefficient of type `(t01, t10, t11)`.
    pub fn get(&self, t01: usize, t10: usize, t11: usize) -> C64 {
        self.coeffs[canonical_index(&[t01, t10, t11], 4)]
    }

    /// `J_z` as a table.
    pub fn jz(n_qubits: usize) -> Self {
        Self::from_fn(n_qubits, |t| {
            if t[0] == 0 && t[1] == 0 {
                C64::new(jz_eigenvalue(n_qubits, t[2]), 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    /// `J_z^2` as a table.
    pub fn jz2(n_qubits: usize) -> Self {
        Self::from_fn(n_qubits, |t| {
            if t[0] == 0 && t[1] == 0 {
                let l = jz_eigenvalue(n_qubits, t[2]);
                C64::new(l * l, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    /// Lift of a Dicke-basis operator: `<x|O|y> = rho_{|x|,|y|} /
    /// sqrt(C(N,|x|) C(N,|y|))`.
    pub fn from_dicke(matrix: &DMatrix<C64>) -> Result<Self> {
        let d = matrix.nrows();
        if d == 0 || matrix.ncols() != d {
            return Err(Error::Dimension("Dicke operator must be square".into()));
        }
        let n = d - 1;
        let norms: Vec<f64> = (0..=n).map(|w| sqrt(binomial(n, w))).collect();
        Ok(Self::from_fn(n, |t| {
            let wx = t[1] + t[2];
            let wy = t[0] + t[2];
            matrix[(wx, wy)] / (norms[wx] * norms[wy])
        }))
    }

    pub fn adjoint(&self) -> Self {
        let ts = TypeSpace::new(self.n_qubits);
        let tr = ts.transposed();
        Self {
            n_qubits: self.n_qubits,
            coeffs: tr.iter().map(|&j| self.coeffs[j].conj()).collect(),
        }
    }

    /// Dense `2^N x 2^N` matrix; basis index is `sum_j x_j 2^{N-1-j}`.
    pub fn to_dense(&self) -> DMatrix<C64> {
        let n = self.n_qubits;
        let dim = 1usize << n;
        let ts = TypeSpace::new(n);
        let weights: Vec<usize> = (0..dim).map(|i| i.count_ones() as usize).collect();
        DMatrix::from_fn(dim, dim, |x, y| {
            let t11 = (x & y).count_ones() as usize;
            let t10 = weights[x] - t11;
            let t01 = weights[y] - t11;
            self.coeffs[ts.index(t01, t10, t11)]
        })
    }

    /// `Tr(self * other)`.
    pub fn trace_product(&self, other: &Self) -> Result<C64> {
        check_same(self, other)?;
        let ts = TypeSpace::new(self.n_qubits);
        let tr = ts.transposed();
        let mult = ts.multiplicities();
        Ok((0..self.coeffs.len())
            .map(|i| self.coeffs[i] * other.coeffs[tr[i]] * mult[i])
            .sum())
    }

    pub fn trace(&self) -> C64 {
        (0..=self.n_qubits)
            .map(|w| self.get(0, 0, w) * binomial(self.n_qubits, w))
            .sum()
    }

    fn to_cube(&self, ts: &TypeSpace) -> Vec<C64> {
        let mut cube = vec![C64::new(0.0, 0.0); ts.cube.len()];
        for (i, &j) in ts.cube.iter().enumerate() {
            if j != usize::MAX {
                cube[i] = self.coeffs[j];
            }
        }
        cube
    }

    /// Scales each coefficient by `f(t)`.
    pub fn scale_by(&mut self, mut f: impl FnMut([usize; 3]) -> C64) {
        for (c, t) in self.coeffs.iter_mut().zip(canonical_types(self.n_qubits, 4)) {
            *c *= f([t[0], t[1], t[2]]);
        }
    }
}

fn check_same(a: &PermInvOperator, b: &PermInvOperator) -> Result<()> {
    if a.n_qubits != b.n_qubits {
        return Err(Error::QubitMismatch {
            left: a.n_qubits,
            right: b.n_qubits,
        });
    }
    Ok(())
}

/// Coefficient table of the product `u v`.
///
/// Each output pair `(mu, rho)` is split by the intermediate letter; `k_{mu rho}`
/// counts output sites of letter `(mu, rho)` whose intermediate letter is 1.
pub fn multiply(u: &PermInvOperator, v: &PermInvOperator) -> Result<PermInvOperator> {
    check_same(u, v)?;
    let n = u.n_qubits;
    let ts = TypeSpace::new(n);
    let m = n + 1;
    let a = u.to_cube(&ts);
    let b = v.to_cube(&ts);
    let bt = BinomialTable::new(n);
    let at = |x: usize, y: usize, z: usize| a[(x * m + y) * m + z];
    let bt_ = |x: usize, y: usize, z: usize| b[(x * m + y) * m + z];
    let mut out = PermInvOperator::zeros(n);
    for (idx, t) in ts.types.iter().enumerate() {
        let [t01, t10, t11] = *t;
        let t00 = n - t01 - t10 - t11;
        let mut acc = C64::new(0.0, 0.0);
        for k00 in 0..=t00 {
            let c00 = bt.get(t00, k00);
            for k01 in 0..=t01 {
                let c01 = c00 * bt.get(t01, k01);
                for k10 in 0..=t10 {
                    let c10 = c01 * bt.get(t10, k10);
                    let mut inner = C64::new(0.0, 0.0);
                    for k11 in 0..=t11 {
                        let av = at(k00 + k01, t10 - k10 + t11 - k11, k10 + k11);
                        let bv = bt_(t01 - k01 + t11 - k11, k00 + k10, k01 + k11);
                        inner += av * bv * bt.get(t11, k11);
                    }
                    acc += inner * c10;
                }
            }
        }
        out.coeffs[idx] = acc;
    }
    Ok(out)
}

/// Single-qubit matrix `exp(-i theta/2 n.sigma)` as `[[u00, u01], [u10, u11]]`.
pub fn su2(axis: Axis, theta: f64) -> [[C64; 2]; 2] {
    let [x, y, z] = axis.components();
    let (s, c) = libm_sincos(theta / 2.0);
    let i = C64::new(0.0, 1.0);
    // cos(t/2) I - i sin(t/2) (x X + y Y + z Z)
    [
        [C64::new(c, 0.0) - i * s * z, (-i * x - y) * s],
        [(-i * x + y) * s, C64::new(c, 0.0) + i * s * z],
    ]
}

fn libm_sincos(x: f64) -> (f64, f64) {
    (num_traits::Float::sin(x), num_traits::Float::cos(x))
}

/// Table of a rotation or a `z`-twist.
pub fn gate_to_pinv(n_qubits: usize, gate: &Gate) -> Result<PermInvOperator> {
    match (gate.kind, gate.axis.component()) {
        (GateKind::Rotation, _) => {
            let u = su2(gate.axis, gate.theta);
            Ok(product_operator(n_qubits, &u))
        }
        (GateKind::Twist, Some(crate::collective::Component::Z)) => {
            let theta = gate.theta;
            Ok(PermInvOperator::from_fn(n_qubits, |t| {
                if t[0] == 0 && t[1] == 0 {
                    let l = jz_eigenvalue(n_qubits, t[2]);
                    C64::from_polar(1.0, -theta * l * l)
                } else {
                    C64::new(0.0, 0.0)
                }
            }))
        }
        _ => Err(Error::UnsupportedGate(alloc::format!(
            "twist about {:?} must be expanded into rotations and a z-twist",
            gate.axis.components()
        ))),
    }
}

/// Table of `u^{otimes N}`: `c_t = u00^{t00} u01^{t01} u10^{t10} u11^{t11}`.
pub fn product_operator(n_qubits: usize, u: &[[C64; 2]; 2]) -> PermInvOperator {
    let pw = |z: C64, k: usize| -> C64 {
        let mut acc = C64::new(1.0, 0.0);
        for _ in 0..k {
            acc *= z;
        }
        acc
    };
    PermInvOperator::from_fn(n_qubits, |t| {
        let t00 = n_qubits - t[0] - t[1] - t[2];
        pw(u[0][0], t00) * pw(u[0][1], t[0]) * pw(u[1][0], t[1]) * pw(u[1][1], t[2])
    })
}

/// Rewrites twists about arbitrary axes as `R T_z R^dagger` so that every gate
/// is supported by [`gate_to_pinv`].
pub fn expand_twists(gates: &GateSequence) -> GateSequence {
    let mut out = Vec::new();
    for g in &gates.gates {
        match (g.kind, g.axis.component()) {
            (GateKind::Twist, Some(crate::collective::Component::Z)) | (GateKind::Rotation, _) => {
                out.push(*g)
            }
            (GateKind::Twist, _) => {
                for h in twist_frame(g.axis, g.theta) {
                    out.push(h);
                }
            }
        }
    }
    GateSequence::new(out)
}

/// Time-ordered gates realizing `T_n(theta) = W T_z(theta) W^dagger` with
/// `W = R_z(azimuth) R_y(polar)`.
pub(crate) fn twist_frame(axis: Axis, theta: f64) -> [Gate; 5] {
    let (polar, azimuth) = axis.spherical();
    [
        Gate::rotation(Axis::Z, -azimuth),
        Gate::rotation(Axis::Y, -polar),
        Gate::twist(Axis::Z, theta),
        Gate::rotation(Axis::Y, polar),
        Gate::rotation(Axis::Z, azimuth),
    ]
}

/// Left fold of [`multiply`] over the circuit in time order.
pub fn compile_circuit(n_qubits: usize, gates: &GateSequence) -> Result<PermInvOperator> {
    let expanded = expand_twists(gates);
    let mut acc = PermInvOperator::identity(n_qubits);
    for g in &expanded.gates {
        acc = multiply(&gate_to_pinv(n_qubits, g)?, &acc)?;
    }
    Ok(acc)
}

/// `F[k][m][q]`: sum over strings `z` of `k` sites with `q` ones of
/// `prod_j u[x_j][z_j]`, for a fixed string `x` with `m` ones.
fn group_amplitudes(n: usize, u: &[[C64; 2]; 2]) -> Vec<Vec<Vec<C64>>> {
    let zero = C64::new(0.0, 0.0);
    let mut f: Vec<Vec<Vec<C64>>> = Vec::with_capacity(n + 1);
    f.push(vec![vec![C64::new(1.0, 0.0)]]);
    for k in 1..=n {
        let prev = &f[k - 1];
        let mut cur = vec![vec![zero; k + 1]; k + 1];
        for m in 0..=k {
            // Extend a string of k - 1 sites by one site with x = 0 (if
            // m < k) or x = 1.
            let (src, row) = if m < k { (m, 0) } else { (m - 1, 1) };
            for q in 0..=k {
                let mut acc = zero;
                if q < k {
                    acc += u[row][0] * prev[src][q];
                }
                if q > 0 {
                    acc += u[row][1] * prev[src][q - 1];
                }
                cur[m][q] = acc;
            }
        }
        f.push(cur);
    }
    f
}

/// `u^{otimes N} O` in `O(N^4)` operations.
pub fn left_multiply_product(u: &[[C64; 2]; 2], op: &PermInvOperator) -> PermInvOperator {
    let n = op.n_qubits;
    let ts = TypeSpace::new(n);
    let f = group_amplitudes(n, u);
    let zero = C64::new(0.0, 0.0);
    let mut out = PermInvOperator::zeros(n);
    // Sites split by bra letter: n0 with bra 0, n1 with bra 1.
    for n1 in 0..=n {
        let n0 = n - n1;
        // tmp[m0][q1] = sum_q0 F[n0][m0][q0] c(t01 = n1 - q1, t10 = q0, t11 = q1)
        let mut tmp = vec![zero; (n0 + 1) * (n1 + 1)];
        for m0 in 0..=n0 {
            for q1 in 0..=n1 {
                let mut acc = zero;
                for q0 in 0..=n0 {
                    acc += f[n0][m0][q0] * op.coeffs[ts.index(n1 - q1, q0, q1)];
                }
                tmp[m0 * (n1 + 1) + q1] = acc;
            }
        }
        for m0 in 0..=n0 {
            for m1 in 0..=n1 {
                let mut acc = zero;
                for q1 in 0..=n1 {
                    acc += f[n1][m1][q1] * tmp[m0 * (n1 + 1) + q1];
                }
                out.coeffs[ts.index(n1 - m1, m0, m1)] = acc;
            }
        }
    }
    out
}

/// `O u^{otimes N}` in `O(N^4)` operations.
pub fn right_multiply_product(op: &PermInvOperator, u: &[[C64; 2]; 2]) -> PermInvOperator {
    let n = op.n_qubits;
    let ts = TypeSpace::new(n);
    let ut = [[u[0][0], u[1][0]], [u[0][1], u[1][1]]];
    let f = group_amplitudes(n, &ut);
    let zero = C64::new(0.0, 0.0);
    let mut out = PermInvOperator::zeros(n);
    // Sites split by ket letter: n0 with ket 0, n1 with ket 1.
    for n1 in 0..=n {
        let n0 = n - n1;
        let mut tmp = vec![zero; (n0 + 1) * (n1 + 1)];
        for m0 in 0..=n0 {
            for q1 in 0..=n1 {
                let mut acc = zero;
                for q0 in 0..=n0 {
                    acc += f[n0][m0][q0] * op.coeffs[ts.index(q0, n1 - q1, q1)];
                }
                tmp[m0 * (n1 + 1) + q1] = acc;
            }
        }
        for m0 in 0..=n0 {
            for m1 in 0..=n1 {
                let mut acc = zero;
                for q1 in 0..=n1 {
                    acc += f[n1][m1][q1] * tmp[m0 * (n1 + 1) + q1];
                }
                out.coeffs[ts.index(m0, n1 - m1, m1)] = acc;
            }
        }
    }
    out
}

fn dagger2(u: &[[C64; 2]; 2]) -> [[C64; 2]; 2] {
    [
        [u[0][0].conj(), u[1][0].conj()],
        [u[0][1].conj(), u[1][1].conj()],
    ]
}

/// Heisenberg update `O -> G^dagger O G` for a rotation or `z`-twist.
pub fn heisenberg_gate(op: &PermInvOperator, gate: &Gate) -> Result<PermInvOperator> {
    let n = op.n_qubits;
    match (gate.kind, gate.axis.component()) {
        (GateKind::Rotation, Some(crate::collective::Component::Z)) => {
            let mut out = op.clone();
            let theta = gate.theta;
            // lambda_x - lambda_y = t01 - t10
            out.scale_by(|t| {
                let dw = t[0] as f64 - t[1] as f64;
                C64::from_polar(1.0, theta * dw)
            });
            Ok(out)
        }
        (GateKind::Rotation, _) => {
            let u = su2(gate.axis, gate.theta);
            let left = left_multiply_product(&dagger2(&u), op);
            Ok(right_multiply_product(&left, &u))
        }
        (GateKind::Twist, Some(crate::collective::Component::Z)) => {
            let mut out = op.clone();
            let theta = gate.theta;
            out.scale_by(|t| {
                let lx = jz_eigenvalue(n, t[1] + t[2]);
                let ly = jz_eigenvalue(n, t[0] + t[2]);
                C64::from_polar(1.0, theta * (lx * lx - ly * ly))
            });
            Ok(out)
        }
        (GateKind::Twist, _) => Err(Error::UnsupportedGate(
            "expand arbitrary-axis twists before a Heisenberg update".into(),
        )),
    }
}

/// Per-site dephasing `rho -> (1-p) rho + p Z rho Z` on every qubit; the
/// channel is its own adjoint.
pub fn dephase(op: &mut PermInvOperator, p: f64) {
    let f = 1.0 - 2.0 * p;
    op.scale_by(|t| {
        let k = t[0] + t[1];
        let mut acc = 1.0;
        for _ in 0..k {
            acc *= f;
        }
        C64::new(acc, 0.0)
    });
}

/// MPS over `d`-dimensional sites for the permutation-invariant state whose
/// coefficient on every string of type `t` is `coeffs[canonical_index(t)]`.
///
/// Left of the center site the bond index tracks the type of the prefix;
/// right of it, the type of the suffix; the center tensor holds the
/// coefficients.
pub fn typevec_mps(d: usize, n: usize, coeffs: &[C64]) -> Result<Mps> {
    if d < 2 || n == 0 {
        return Err(Error::Dimension("need d >= 2 and N >= 1".into()));
    }
    let expected = type_count(n, d);
    if coeffs.len() != expected {
        return Err(Error::IncompleteTable {
            expected,
            got: coeffs.len(),
        });
    }
    let center = (n + 2) / 2; // ceil((N+1)/2), one-based
    let one = C64::new(1.0, 0.0);
    let types_by_len: Vec<Vec<Vec<usize>>> = (0..=n).map(|k| canonical_types(k, d)).collect();
    let add_letter = |t: &[usize], s: usize| -> Vec<usize> {
        let mut t = t.to_vec();
        if s > 0 {
            t[s - 1] += 1;
        }
        t
    };
    let mut sites = Vec::with_capacity(n);
    for j in 1..=n {
        if j < center {
            let left = type_count(j - 1, d);
            let right = type_count(j, d);
            let mut site = Site3::zeros(left, d, right);
            for (mu, t) in types_by_len[j - 1].iter().enumerate() {
                for s in 0..d {
                    site.set(mu, s, canonical_index(&add_letter(t, s), d), one);
                }
            }
            sites.push(site);
        } else if j == center {
            let left_len = center - 1;
            let right_len = n - center;
            let mut site = Site3::zeros(type_count(left_len, d), d, type_count(right_len, d));
            for (mu, tl) in types_by_len[left_len].iter().enumerate() {
                for (nu, tr) in types_by_len[right_len].iter().enumerate() {
                    for s in 0..d {
                        let total: Vec<usize> = add_letter(tl, s)
                            .iter()
                            .zip(tr)
                            .map(|(a, b)| a + b)
                            .collect();
                        site.set(mu, s, nu, coeffs[canonical_index(&total, d)]);
                    }
                }
            }
            sites.push(site);
        } else {
            let suffix = n - j + 1;
            let left = type_count(suffix, d);
            let right = type_count(suffix - 1, d);
            let mut site = Site3::zeros(left, d, right);
            for (nu, t) in types_by_len[suffix - 1].iter().enumerate() {
                for s in 0..d {
                    site.set(canonical_index(&add_letter(t, s), d), s, nu, one);
                }
            }
            sites.push(site);
        }
    }
    Ok(Mps { sites })
}

/// MPO for a permutation-invariant qubit operator, built as a `d = 4` MPS over
/// letter pairs `s = 2 mu + nu` (ket `mu`, bra `nu`).
pub fn pinv_to_mpo(op: &PermInvOperator) -> Result<Mpo> {
    let mps = typevec_mps(4, op.n_qubits, &op.coeffs)?;
    let sites = mps
        .sites
        .into_iter()
        .map(|s| {
            let mut out = Site4::zeros(s.left, 2, 2, s.right);
            for l in 0..s.left {
                for r in 0..s.right {
                    for mu in 0..2 {
                        for nu in 0..2 {
                            out.set(l, mu, nu, r, s.get(l, 2 * mu + nu, r));
                        }
                    }
                }
            }
            out
        })
        .collect();
    Ok(Mpo { sites })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_order_matches_formula() {
        for d in 2..=5 {
            for n in 0..=6 {
                let types = canonical_types(n, d);
                assert_eq!(types.len(), type_count(n, d));
                for (i, t) in types.iter().enumerate() {
                    assert_eq!(canonical_index(t, d), i, "d={d} n={n} t={t:?}");
                }
            }
        }
        // Norm-one types come in order of decreasing t1.
        assert_eq!(canonical_types(1, 4)[1..], [vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]);
    }

    #[test]
    fn identity_times_v() {
        let n = 3;
        let v = PermInvOperator::from_fn(n, |t| C64::new(t[0] as f64 + 0.5, t[1] as f64 - t[2] as f64));
        let p = multiply(&PermInvOperator::identity(n), &v).unwrap();
        assert_eq!(p, v);
        let q = multiply(&v, &PermInvOperator::identity(n)).unwrap();
        assert_eq!(q, v);
    }

    #[test]
    fn two_qubit_twist_table() {
        let th = 0.4;
        let t = gate_to_pinv(2, &Gate::twist(Axis::Z, th)).unwrap();
        for w in 0..=2 {
            let e = (2.0 - 2.0 * w as f64) * (2.0 - 2.0 * w as f64) / 4.0;
            assert!((t.get(0, 0, w) - C64::from_polar(1.0, -th * e)).norm() < 1e-15);
        }
        assert_eq!(t.get(1, 0, 0), C64::new(0.0, 0.0));
    }

    #[test]
    fn rz_composition() {
        let n = 4;
        let a = gate_to_pinv(n, &Gate::rotation(Axis::Z, 0.3)).unwrap();
        let b = gate_to_pinv(n, &Gate::rotation(Axis::Z, -1.1)).unwrap();
        let ab = multiply(&a, &b).unwrap();
        let c = gate_to_pinv(n, &Gate::rotation(Axis::Z, -0.8)).unwrap();
        for (x, y) in ab.coeffs.iter().zip(&c.coeffs) {
            assert!((x - y).norm() < 1e-14);
        }
    }

    #[test]
    fn product_multiplication_fast_path() {
        let n = 5;
        let op = PermInvOperator::from_fn(n, |t| {
            C64::new((t[0] * 3 + t[1]) as f64 * 0.1, (t[2] as f64).sin())
        });
        let u = su2(Axis::normalized(0.2, -0.7, 0.4).unwrap(), 0.9);
        let slow_l = multiply(&product_operator(n, &u), &op).unwrap();
        let slow_r = multiply(&op, &product_operator(n, &u)).unwrap();
        let fast_l = left_multiply_product(&u, &op);
        let fast_r = right_multiply_product(&op, &u);
        for i in 0..op.coeffs.len() {
            assert!((slow_l.coeffs[i] - fast_l.coeffs[i]).norm() < 1e-12);
            assert!((slow_r.coeffs[i] - fast_r.coeffs[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn trace_of_identity() {
        let id = PermInvOperator::identity(5);
        assert!((id.trace() - C64::new(32.0, 0.0)).norm() < 1e-12);
        let tp = id.trace_product(&PermInvOperator::jz2(5)).unwrap();
        assert!((tp.re - 5.0 * 32.0 / 4.0).abs() < 1e-10);
    }
}
