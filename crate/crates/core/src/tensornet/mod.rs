//! Exact matrix product states and operators.
//!
//! Site tensors are stored densely: MPS sites as `(left, phys, right)` and MPO
//! sites as `(left, out, in, right)`. The basis index of a string is
//! `sum_j x_j d^{N-1-j}`, so site 1 is the most significant digit. Nothing is
//! ever truncated; products multiply bond dimensions.

mod protocol;

pub use protocol::{
    simulate_protocol_noisy, DecodingPath, PreparedProtocol, TensorNetOptions,
};

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::collective::{jz_eigenvalue, Axis};
use crate::pinv::{pinv_to_mpo, su2, PermInvOperator};
use crate::{Error, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct Site3 {
    pub left: usize,
    pub phys: usize,
    pub right: usize,
    pub data: Vec<C64>,
}

impl Site3 {
    pub fn zeros(left: usize, phys: usize, right: usize) -> Self {
        Self {
            left,
            phys,
            right,
            data: vec![ZERO; left * phys * right],
        }
    }

    #[inline]
    pub fn get(&self, l: usize, p: usize, r: usize) -> C64 {
        self.data[(l * self.phys + p) * self.right + r]
    }

    #[inline]
    pub fn set(&mut self, l: usize, p: usize, r: usize, v: C64) {
        self.data[(l * self.phys + p) * self.right + r] = v;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Site4 {
    pub left: usize,
    pub out: usize,
    pub inp: usize,
    pub right: usize,
    pub data: Vec<C64>,
}

impl Site4 {
    pub fn zeros(left: usize, out: usize, inp: usize, right: usize) -> Self {
        Self {
            left,
            out,
            inp,
            right,
            data: vec![ZERO; left * out * inp * right],
        }
    }

    #[inline]
    fn offset(&self, l: usize, o: usize, i: usize, r: usize) -> usize {
        ((l * self.out + o) * self.inp + i) * self.right + r
    }

    #[inline]
    pub fn get(&self, l: usize, o: usize, i: usize, r: usize) -> C64 {
        self.data[self.offset(l, o, i, r)]
    }

    #[inline]
    pub fn set(&mut self, l: usize, o: usize, i: usize, r: usize, v: C64) {
        let k = self.offset(l, o, i, r);
        self.data[k] = v;
    }

    /// Bond-one site from a single-site matrix `m[out][in]`.
    fn local(m: [[C64; 2]; 2]) -> Self {
        let mut s = Site4::zeros(1, 2, 2, 1);
        for o in 0..2 {
            for i in 0..2 {
                s.set(0, o, i, 0, m[o][i]);
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mps {
    pub sites: Vec<Site3>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mpo {
    pub sites: Vec<Site4>,
}

/// An MPO holding a density operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMpo(pub Mpo);

impl Mps {
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites.iter().skip(1).map(|s| s.left).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.sites.iter().map(|s| s.left.max(s.right)).max().unwrap_or(1)
    }

    /// Dense state vector (small `N` only).
    pub fn to_dense(&self) -> DVector<C64> {
        // rows: partial basis index, cols: right bond
        let mut acc = DMatrix::<C64>::from_element(1, 1, ONE);
        for s in &self.sites {
            let rows = acc.nrows();
            let mut next = DMatrix::<C64>::zeros(rows * s.phys, s.right);
            for row in 0..rows {
                for l in 0..s.left {
                    let a = acc[(row, l)];
                    if a == ZERO {
                        continue;
                    }
                    for p in 0..s.phys {
                        for r in 0..s.right {
                            next[(row * s.phys + p, r)] += a * s.get(l, p, r);
                        }
                    }
                }
            }
            acc = next;
        }
        DVector::from_iterator(acc.nrows(), acc.column(0).iter().copied())
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Mps) -> Result<C64> {
        if self.len() != other.len() {
            return Err(Error::Dimension(format!(
                "MPS lengths {} and {}",
                self.len(),
                other.len()
            )));
        }
        let mut env = vec![ONE];
        let mut dims = (1usize, 1usize);
        for (a, b) in self.sites.iter().zip(&other.sites) {
            if a.phys != b.phys {
                return Err(Error::Dimension("physical dimensions differ".into()));
            }
            let mut next = vec![ZERO; a.right * b.right];
            for la in 0..dims.0 {
                for lb in 0..dims.1 {
                    let e = env[la * dims.1 + lb];
                    if e == ZERO {
                        continue;
                    }
                    for p in 0..a.phys {
                        for ra in 0..a.right {
                            let x = e * a.get(la, p, ra).conj();
                            if x == ZERO {
                                continue;
                            }
                            for rb in 0..b.right {
                                next[ra * b.right + rb] += x * b.get(lb, p, rb);
                            }
                        }
                    }
                }
            }
            env = next;
            dims = (a.right, b.right);
        }
        Ok(env[0])
    }
}

impl Mpo {
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites.iter().skip(1).map(|s| s.left).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.sites.iter().map(|s| s.left.max(s.right)).max().unwrap_or(1)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            sites: (0..n).map(|_| Site4::local([[ONE, ZERO], [ZERO, ONE]])).collect(),
        }
    }

    /// Dense operator (small `N` only).
    pub fn to_dense(&self) -> DMatrix<C64> {
        // acc[(row_out, row_in), bond] flattened as a matrix with rows
        // indexing (x, y) pairs.
        let mut acc: Vec<C64> = vec![ONE];
        let mut dim_x = 1usize;
        let mut dim_y = 1usize;
        let mut bond = 1usize;
        for s in &self.sites {
            let nx = dim_x * s.out;
            let ny = dim_y * s.inp;
            let mut next = vec![ZERO; nx * ny * s.right];
            for x in 0..dim_x {
                for y in 0..dim_y {
                    for l in 0..bond {
                        let a = acc[(x * dim_y + y) * bond + l];
                        if a == ZERO {
                            continue;
                        }
                        for o in 0..s.out {
                            for i in 0..s.inp {
                                let row = (x * s.out + o) * ny + (y * s.inp + i);
                                for r in 0..s.right {
                                    next[row * s.right + r] += a * s.get(l, o, i, r);
                                }
                            }
                        }
                    }
                }
            }
            acc = next;
            dim_x = nx;
            dim_y = ny;
            bond = s.right;
        }
        DMatrix::from_fn(dim_x, dim_y, |x, y| acc[x * dim_y + y])
    }

    pub fn adjoint(&self) -> Self {
        Self {
            sites: self
                .sites
                .iter()
                .map(|s| {
                    let mut t = Site4::zeros(s.left, s.inp, s.out, s.right);
                    for l in 0..s.left {
                        for o in 0..s.out {
                            for i in 0..s.inp {
                                for r in 0..s.right {
                                    t.set(l, i, o, r, s.get(l, o, i, r).conj());
                                }
                            }
                        }
                    }
                    t
                })
                .collect(),
        }
    }

    /// Elementwise (Hadamard) product in the computational basis.
    pub fn hadamard(&self, other: &Mpo) -> Result<Mpo> {
        check_len(self.len(), other.len())?;
        let sites = self
            .sites
            .iter()
            .zip(&other.sites)
            .map(|(a, b)| {
                let mut s = Site4::zeros(a.left * b.left, a.out, a.inp, a.right * b.right);
                for la in 0..a.left {
                    for lb in 0..b.left {
                        for o in 0..a.out {
                            for i in 0..a.inp {
                                for ra in 0..a.right {
                                    let x = a.get(la, o, i, ra);
                                    if x == ZERO {
                                        continue;
                                    }
                                    for rb in 0..b.right {
                                        s.set(
                                            la * b.left + lb,
                                            o,
                                            i,
                                            ra * b.right + rb,
                                            x * b.get(lb, o, i, rb),
                                        );
                                    }
                                }
                            }
                        }
                    }
                }
                s
            })
            .collect();
        Ok(Mpo { sites })
    }
}

fn check_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::QubitMismatch { left: a, right: b });
    }
    Ok(())
}

/// Left sites count the Hamming weight of the prefix, right sites that of the
/// suffix, and the center site at `ceil((N+1)/2)` carries the coefficients.
fn weight_chain(n: usize, center_value: impl Fn(usize, usize, usize) -> C64) -> Vec<Site3> {
    let center = (n + 2) / 2;
    let mut sites = Vec::with_capacity(n);
    for j in 1..=n {
        if j < center {
            let mut s = Site3::zeros(j, 2, j + 1);
            for m in 0..j {
                s.set(m, 0, m, ONE);
                s.set(m, 1, m + 1, ONE);
            }
            sites.push(s);
        } else if j == center {
            let left = center;
            let right = n - center + 1;
            let mut s = Site3::zeros(left, 2, right);
            for m in 0..left {
                for r in 0..right {
                    for p in 0..2 {
                        s.set(m, p, r, center_value(m, p, r));
                    }
                }
            }
            sites.push(s);
        } else {
            let k = n - j + 1;
            let mut s = Site3::zeros(k + 1, 2, k);
            for m in 0..k {
                s.set(m, 0, m, ONE);
                s.set(m + 1, 1, m, ONE);
            }
            sites.push(s);
        }
    }
    sites
}

/// MPS of `sum_x c_{|x|} |x>`.
pub fn mps_from_weight_coeffs(n: usize, c: &[C64]) -> Result<Mps> {
    if n == 0 || c.len() != n + 1 {
        return Err(Error::Dimension(format!(
            "{} weight coefficients for {} qubits",
            c.len(),
            n
        )));
    }
    Ok(Mps {
        sites: weight_chain(n, |m, p, r| c[m + p + r]),
    })
}

/// Diagonal MPO of `T_z(theta)`.
pub fn mpo_twist_z(n: usize, theta: f64) -> Mpo {
    let chain = weight_chain(n, |m, p, r| {
        let l = jz_eigenvalue(n, m + p + r);
        C64::from_polar(1.0, -theta * l * l)
    });
    Mpo {
        sites: chain.into_iter().map(diagonal_site).collect(),
    }
}

fn diagonal_site(s: Site3) -> Site4 {
    let mut t = Site4::zeros(s.left, 2, 2, s.right);
    for l in 0..s.left {
        for r in 0..s.right {
            for p in 0..2 {
                t.set(l, p, p, r, s.get(l, p, r));
            }
        }
    }
    t
}

/// Bond-one MPO of `exp(-i theta n.J)`.
pub fn mpo_rotation(n: usize, axis: Axis, theta: f64) -> Mpo {
    let u = su2(axis, theta);
    Mpo {
        sites: (0..n).map(|_| Site4::local(u)).collect(),
    }
}

/// Bond-two MPO of `J_z`.
pub fn mpo_jz(n: usize) -> Mpo {
    let mut sites = Vec::with_capacity(n);
    for j in 0..n {
        let left = if j == 0 { 1 } else { 2 };
        let right = if j + 1 == n { 1 } else { 2 };
        let mut s = Site4::zeros(left, 2, 2, right);
        for mu in 0..2 {
            let z = if mu == 0 { 0.5 } else { -0.5 };
            let full = [[1.0, z], [0.0, 1.0]];
            for l in 0..left {
                for r in 0..right {
                    let row = if j == 0 { 0 } else { l };
                    let col = if j + 1 == n { 1 } else { r };
                    s.set(l, mu, mu, r, C64::new(full[row][col], 0.0));
                }
            }
        }
        sites.push(s);
    }
    Mpo { sites }
}

/// Bond-three MPO of `J_z^2`.
///
/// Bulk matrices are `[[1, z/2, 1/4], [0, 1, z], [0, 0, 1]]` with
/// `z = (-1)^mu`; the boundaries are the first row and the last column.
pub fn mpo_jz2(n: usize) -> Mpo {
    let mut sites = Vec::with_capacity(n);
    for j in 0..n {
        let left = if j == 0 { 1 } else { 3 };
        let right = if j + 1 == n { 1 } else { 3 };
        let mut s = Site4::zeros(left, 2, 2, right);
        for mu in 0..2 {
            let z = if mu == 0 { 1.0 } else { -1.0 };
            let full = [[1.0, z / 2.0, 0.25], [0.0, 1.0, z], [0.0, 0.0, 1.0]];
            for l in 0..left {
                for r in 0..right {
                    let row = if j == 0 { 0 } else { l };
                    let col = if j + 1 == n { 2 } else { r };
                    s.set(l, mu, mu, r, C64::new(full[row][col], 0.0));
                }
            }
        }
        sites.push(s);
    }
    Mpo { sites }
}

/// Applies `mpo` to `mps`; bond dimensions multiply.
pub fn apply_mpo(mpo: &Mpo, mps: &Mps) -> Result<Mps> {
    check_len(mpo.len(), mps.len())?;
    let sites = mpo
        .sites
        .iter()
        .zip(&mps.sites)
        .map(|(b, a)| {
            let mut s = Site3::zeros(b.left * a.left, b.out, b.right * a.right);
            for lb in 0..b.left {
                for la in 0..a.left {
                    for o in 0..b.out {
                        for i in 0..b.inp {
                            for rb in 0..b.right {
                                let x = b.get(lb, o, i, rb);
                                if x == ZERO {
                                    continue;
                                }
                                for ra in 0..a.right {
                                    let k = ((lb * a.left + la) * b.out + o) * s.right
                                        + rb * a.right
                                        + ra;
                                    s.data[k] += x * a.get(la, i, ra);
                                }
                            }
                        }
                    }
                }
            }
            s
        })
        .collect();
    Ok(Mps { sites })
}

/// Operator product `a b` (`b` acts first); bond dimensions multiply.
pub fn mpo_product(a: &Mpo, b: &Mpo) -> Result<Mpo> {
    check_len(a.len(), b.len())?;
    let sites = a
        .sites
        .iter()
        .zip(&b.sites)
        .map(|(x, y)| {
            let mut s = Site4::zeros(x.left * y.left, x.out, y.inp, x.right * y.right);
            for lx in 0..x.left {
                for ly in 0..y.left {
                    for o in 0..x.out {
                        for m in 0..x.inp {
                            for rx in 0..x.right {
                                let v = x.get(lx, o, m, rx);
                                if v == ZERO {
                                    continue;
                                }
                                for i in 0..y.inp {
                                    for ry in 0..y.right {
                                        let w = y.get(ly, m, i, ry);
                                        let k = s.offset(
                                            lx * y.left + ly,
                                            o,
                                            i,
                                            rx * y.right + ry,
                                        );
                                        s.data[k] += v * w;
                                    }
                                }
                            }
                        }
                    }
                }
            }
            s
        })
        .collect();
    Ok(Mpo { sites })
}

/// `Tr(a b)` by a left-to-right sweep; never forms the product.
pub fn trace_product(a: &Mpo, b: &Mpo) -> Result<C64> {
    check_len(a.len(), b.len())?;
    let mut env = vec![ONE];
    let mut dims = (1usize, 1usize);
    for (x, y) in a.sites.iter().zip(&b.sites) {
        let mut next = vec![ZERO; x.right * y.right];
        for lx in 0..dims.0 {
            for ly in 0..dims.1 {
                let e = env[lx * dims.1 + ly];
                if e == ZERO {
                    continue;
                }
                for o in 0..x.out {
                    for i in 0..x.inp {
                        for rx in 0..x.right {
                            let v = x.get(lx, o, i, rx);
                            if v == ZERO {
                                continue;
                            }
                            let ev = e * v;
                            for ry in 0..y.right {
                                next[rx * y.right + ry] += ev * y.get(ly, i, o, ry);
                            }
                        }
                    }
                }
            }
        }
        env = next;
        dims = (x.right, y.right);
    }
    Ok(env[0])
}

impl DensityMpo {
    pub fn n_qubits(&self) -> usize {
        self.0.len()
    }

    pub fn trace(&self) -> C64 {
        trace_product(&Mpo::identity(self.0.len()), &self.0).unwrap_or(ZERO)
    }
}

/// Density MPO from a Dicke-basis density matrix.
pub fn density_from_dicke(rho: &DMatrix<C64>) -> Result<DensityMpo> {
    let d = rho.nrows();
    if d < 2 || rho.ncols() != d {
        return Err(Error::NotDensity("matrix must be square with N >= 1".into()));
    }
    let herm = (rho - rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if herm > 1e-10 {
        return Err(Error::NotDensity(format!("not Hermitian (defect {herm:e})")));
    }
    let tr = rho.trace();
    if (tr - ONE).norm() > 1e-10 {
        return Err(Error::NotDensity(format!("trace {tr}")));
    }
    let table = PermInvOperator::from_dicke(rho)?;
    Ok(DensityMpo(pinv_to_mpo(&table)?))
}

/// `U rho U^dagger`.
pub fn conjugate_by_unitary(rho: &DensityMpo, u: &Mpo) -> Result<DensityMpo> {
    let left = mpo_product(u, &rho.0)?;
    Ok(DensityMpo(mpo_product(&left, &u.adjoint())?))
}

/// `Tr(obs rho)`.
pub fn expectation_trace(obs: &Mpo, rho: &DensityMpo) -> Result<C64> {
    trace_product(obs, &rho.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collective::{spin_coherent_plus, CollectiveSpace};

    fn max_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn weight_mps_basis_state() {
        let c = [ONE, ZERO, ZERO];
        let v = mps_from_weight_coeffs(2, &c).unwrap().to_dense();
        assert_eq!(v[0], ONE);
        assert!(v.iter().skip(1).all(|z| *z == ZERO));
    }

    #[test]
    fn jz_mpos_dense() {
        for n in 1..=5 {
            let z = mpo_jz(n).to_dense();
            let z2 = mpo_jz2(n).to_dense();
            for x in 0..(1usize << n) {
                let l = jz_eigenvalue(n, x.count_ones() as usize);
                assert!((z[(x, x)].re - l).abs() < 1e-14, "n={n}");
                assert!((z2[(x, x)].re - l * l).abs() < 1e-14, "n={n}");
            }
            assert!((&z * &z - &z2).iter().all(|e| e.norm() < 1e-13));
        }
    }

    #[test]
    fn twist_mpo_dense() {
        let n = 4;
        let sp = CollectiveSpace::new(n);
        let t = mpo_twist_z(n, 0.3).to_dense();
        // Dicke-basis twist lifted to the full space acts only on the
        // symmetric subspace; the MPO is the full diagonal operator.
        let coll = sp.twist(Axis::Z, 0.3).matrix;
        for x in 0..16usize {
            let w = x.count_ones() as usize;
            assert!((t[(x, x)] - coll[(w, w)]).norm() < 1e-14);
        }
        assert_eq!(mpo_twist_z(6, 0.1).max_bond(), 4);
    }

    #[test]
    fn rotation_then_twist_on_plus() {
        let n = 4;
        let sp = CollectiveSpace::new(n);
        let plus = spin_coherent_plus(n);
        let coeffs: Vec<C64> = (0..=n).map(|_| C64::new(0.25, 0.0)).collect();
        let mps = mps_from_weight_coeffs(n, &coeffs).unwrap();
        let r = mpo_rotation(n, Axis::Y, 0.7);
        let t = mpo_twist_z(n, 0.4);
        let out = apply_mpo(&t, &apply_mpo(&r, &mps).unwrap()).unwrap().to_dense();
        let want = plus
            .apply(&sp.rotation(Axis::Y, 0.7))
            .unwrap()
            .apply(&sp.twist(Axis::Z, 0.4))
            .unwrap();
        for x in 0..16usize {
            let w = x.count_ones() as usize;
            let a = want.amplitudes[w] / crate::binomial(n, w).sqrt();
            assert!((out[x] - a).norm() < 1e-13);
        }
    }

    #[test]
    fn product_and_trace() {
        let n = 3;
        let a = mpo_product(&mpo_rotation(n, Axis::X, 0.2), &mpo_jz2(n)).unwrap();
        let dense = a.to_dense();
        let want = mpo_rotation(n, Axis::X, 0.2).to_dense() * mpo_jz2(n).to_dense();
        assert!(max_diff(&dense, &want) < 1e-14);
        let b = mpo_twist_z(n, 0.9);
        let tr = trace_product(&a, &b).unwrap();
        assert!((tr - (want * b.to_dense()).trace()).norm() < 1e-13);
    }
}
