//! Noiseless collective-spin dynamics in the symmetric subspace.
//!
//! Index `w` is the Hamming weight, so `J_z` has eigenvalue `(N - 2w)/2` on
//! the normalized Dicke state `|D_w>`.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_traits::Float;

use crate::combinatorics::{binomial, sqrt};
use crate::{Error, Result, C64};

const AXIS_TOL: f64 = 1e-12;

/// Unit vector selecting a rotation or twist axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis([f64; 3]);

impl Axis {
    pub const X: Axis = Axis([1.0, 0.0, 0.0]);
    pub const Y: Axis = Axis([0.0, 1.0, 0.0]);
    pub const Z: Axis = Axis([0.0, 0.0, 1.0]);

    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = sqrt(x * x + y * y + z * z);
        if !norm.is_finite() || (norm - 1.0).abs() > AXIS_TOL {
            return Err(Error::NonUnitAxis { norm });
        }
        Ok(Axis([x, y, z]))
    }

    /// Normalizes an arbitrary nonzero vector.
    pub fn normalized(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = sqrt(x * x + y * y + z * z);
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::NonUnitAxis { norm });
        }
        Ok(Axis([x / norm, y / norm, z / norm]))
    }

    pub fn components(&self) -> [f64; 3] {
        self.0
    }

    pub fn component(&self) -> Option<Component> {
        match self.0 {
            [1.0, 0.0, 0.0] => Some(Component::X),
            [0.0, 1.0, 0.0] => Some(Component::Y),
            [0.0, 0.0, 1.0] => Some(Component::Z),
            _ => None,
        }
    }

    /// Polar and azimuthal angles `(theta, phi)` of the axis.
    pub fn spherical(&self) -> (f64, f64) {
        let [x, y, z] = self.0;
        (Float::acos(z.clamp(-1.0, 1.0)), Float::atan2(y, x))
    }
}

impl From<Component> for Axis {
    fn from(c: Component) -> Self {
        match c {
            Component::X => Axis::X,
            Component::Y => Axis::Y,
            Component::Z => Axis::Z,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Component {
    X,
    Y,
    Z,
}

/// Pure state in the symmetric subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct DickeState {
    pub n_qubits: usize,
    pub amplitudes: DVector<C64>,
}

/// Operator on the symmetric subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct DickeOperator {
    pub n_qubits: usize,
    pub matrix: DMatrix<C64>,
}

impl DickeState {
    pub fn from_amplitudes(n_qubits: usize, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != n_qubits + 1 {
            return Err(Error::Dimension(alloc::format!(
                "{} amplitudes for {} qubits",
                amplitudes.len(),
                n_qubits
            )));
        }
        Ok(Self { n_qubits, amplitudes })
    }

    /// The state with every qubit in `|0>` (weight zero).
    pub fn all_zero(n_qubits: usize) -> Self {
        let mut amplitudes = DVector::zeros(n_qubits + 1);
        amplitudes[0] = C64::new(1.0, 0.0);
        Self { n_qubits, amplitudes }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn apply(&self, op: &DickeOperator) -> Result<Self> {
        check_n(self.n_qubits, op.n_qubits)?;
        Ok(Self {
            n_qubits: self.n_qubits,
            amplitudes: &op.matrix * &self.amplitudes,
        })
    }

    /// Density matrix `|psi><psi|` in the Dicke basis.
    pub fn density(&self) -> DMatrix<C64> {
        &self.amplitudes * self.amplitudes.adjoint()
    }
}

impl DickeOperator {
    pub fn identity(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            matrix: DMatrix::identity(n_qubits + 1, n_qubits + 1),
        }
    }

    pub fn dim(&self) -> usize {
        self.n_qubits + 1
    }

    /// Operator product `self * rhs` (rhs acts first).
    pub fn compose(&self, rhs: &DickeOperator) -> Result<Self> {
        check_n(self.n_qubits, rhs.n_qubits)?;
        Ok(Self {
            n_qubits: self.n_qubits,
            matrix: &self.matrix * &rhs.matrix,
        })
    }

    pub fn adjoint(&self) -> Self {
        Self {
            n_qubits: self.n_qubits,
            matrix: self.matrix.adjoint(),
        }
    }

    /// Largest entry of `|M^dagger M - I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let d = self.dim();
        let p = self.matrix.adjoint() * &self.matrix - DMatrix::<C64>::identity(d, d);
        p.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

fn check_n(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::QubitMismatch { left: a, right: b });
    }
    Ok(())
}

/// `|+>^N` in the Dicke basis.
pub fn spin_coherent_plus(n_qubits: usize) -> DickeState {
    let scale = Float::powf(2.0f64, -(n_qubits as f64) / 2.0);
    let amplitudes = DVector::from_fn(n_qubits + 1, |w, _| {
        C64::new(sqrt(binomial(n_qubits, w)) * scale, 0.0)
    });
    DickeState { n_qubits, amplitudes }
}

/// `J_z` eigenvalue on weight `w`.
#[inline]
pub fn jz_eigenvalue(n_qubits: usize, w: usize) -> f64 {
    (n_qubits as f64 - 2.0 * w as f64) / 2.0
}

/// Matrix element `<D_{w-1}| J_+ |D_w>`.
fn ladder(n_qubits: usize, w: usize) -> f64 {
    sqrt((w * (n_qubits + 1 - w)) as f64)
}

pub fn angular_momentum(n_qubits: usize, component: Component) -> DickeOperator {
    let d = n_qubits + 1;
    let mut m = DMatrix::<C64>::zeros(d, d);
    match component {
        Component::Z => {
            for w in 0..d {
                m[(w, w)] = C64::new(jz_eigenvalue(n_qubits, w), 0.0);
            }
        }
        Component::X | Component::Y => {
            for w in 1..d {
                let l = ladder(n_qubits, w);
                // J_+ lowers the weight, J_- raises it.
                let (up, down) = if component == Component::X {
                    (C64::new(l / 2.0, 0.0), C64::new(l / 2.0, 0.0))
                } else {
                    (C64::new(0.0, -l / 2.0), C64::new(0.0, l / 2.0))
                };
                m[(w - 1, w)] = up;
                m[(w, w - 1)] = down;
            }
        }
    }
    DickeOperator { n_qubits, matrix: m }
}

/// Cached spectral data for the symmetric subspace of `N` qubits.
///
/// `J_x` is real symmetric in the Dicke basis; its eigenvectors, ordered so
/// that column `w` has eigenvalue `(N - 2w)/2`, generate every other axis by
/// `z`-rotations.
#[derive(Debug, Clone)]
pub struct CollectiveSpace {
    n_qubits: usize,
    eigenvalues: Vec<f64>,
    vx: DMatrix<C64>,
    vx_t: DMatrix<C64>,
}

impl CollectiveSpace {
    pub fn new(n_qubits: usize) -> Self {
        let d = n_qubits + 1;
        let mut jx = DMatrix::<f64>::zeros(d, d);
        for w in 1..d {
            let l = ladder(n_qubits, w) / 2.0;
            jx[(w - 1, w)] = l;
            jx[(w, w - 1)] = l;
        }
        let eig = jx.symmetric_eigen();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let vx = DMatrix::from_fn(d, d, |r, c| C64::new(eig.eigenvectors[(r, order[c])], 0.0));
        let vx_t = vx.transpose();
        let eigenvalues = (0..d).map(|w| jz_eigenvalue(n_qubits, w)).collect();
        Self {
            n_qubits,
            eigenvalues,
            vx,
            vx_t,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.n_qubits + 1
    }

    /// Phases `e^{-i alpha lambda_w}` of a `z`-rotation.
    fn z_phases(&self, alpha: f64) -> Vec<C64> {
        self.eigenvalues
            .iter()
            .map(|&l| C64::from_polar(1.0, -alpha * l))
            .collect()
    }

    fn spectral(&self, kind: Generator, theta: f64) -> Vec<C64> {
        self.eigenvalues
            .iter()
            .map(|&l| {
                let g = match kind {
                    Generator::Linear => l,
                    Generator::Quadratic => l * l,
                };
                C64::from_polar(1.0, -theta * g)
            })
            .collect()
    }

    /// Unitary `W` with `W J_z W^dagger = n.J`.
    fn frame(&self, axis: Axis) -> DMatrix<C64> {
        let d = self.dim();
        match axis.component() {
            Some(Component::Z) => DMatrix::identity(d, d),
            Some(Component::X) => self.vx.clone(),
            Some(Component::Y) => {
                let mut w = self.vx.clone();
                scale_rows(&mut w, &self.z_phases(core::f64::consts::FRAC_PI_2));
                w
            }
            None => {
                let (polar, azimuth) = axis.spherical();
                let mut w = self
                    .exp_generator(Axis::Y, Generator::Linear, polar)
                    .matrix;
                scale_rows(&mut w, &self.z_phases(azimuth));
                w
            }
        }
    }

    fn exp_generator(&self, axis: Axis, kind: Generator, theta: f64) -> DickeOperator {
        let diag = self.spectral(kind, theta);
        let matrix = match axis.component() {
            Some(Component::Z) => DMatrix::from_diagonal(&DVector::from_vec(diag)),
            Some(Component::X) => {
                let mut inner = self.vx_t.clone();
                scale_rows(&mut inner, &diag);
                &self.vx * inner
            }
            _ => {
                let w = self.frame(axis);
                let mut inner = w.adjoint();
                scale_rows(&mut inner, &diag);
                w * inner
            }
        };
        DickeOperator {
            n_qubits: self.n_qubits,
            matrix,
        }
    }

    /// `exp(-i theta n.J)`.
    pub fn rotation(&self, axis: Axis, theta: f64) -> DickeOperator {
        self.exp_generator(axis, Generator::Linear, theta)
    }

    /// `exp(-i theta (n.J)^2)`.
    pub fn twist(&self, axis: Axis, theta: f64) -> DickeOperator {
        self.exp_generator(axis, Generator::Quadratic, theta)
    }

    /// Replaces `m` by `G m` for the axis-aligned gate `G`, avoiding a dense
    /// product for diagonal gates.
    pub fn left_apply(&self, axis: Component, twist: bool, theta: f64, m: &mut DMatrix<C64>) {
        let kind = if twist {
            Generator::Quadratic
        } else {
            Generator::Linear
        };
        let diag = self.spectral(kind, theta);
        match axis {
            Component::Z => scale_rows(m, &diag),
            Component::X => {
                let mut inner = &self.vx_t * &*m;
                scale_rows(&mut inner, &diag);
                *m = &self.vx * inner;
            }
            Component::Y => {
                let half = core::f64::consts::FRAC_PI_2;
                scale_rows(m, &self.z_phases(-half));
                let mut inner = &self.vx_t * &*m;
                scale_rows(&mut inner, &diag);
                *m = &self.vx * inner;
                scale_rows(m, &self.z_phases(half));
            }
        }
    }

    /// Amplitudes of `e^{-i phi J_z} |psi>`.
    pub fn free_evolution(&self, state: &DickeState, phi: f64) -> DickeState {
        let mut amplitudes = state.amplitudes.clone();
        for (a, p) in amplitudes.iter_mut().zip(self.z_phases(phi)) {
            *a *= p;
        }
        DickeState {
            n_qubits: state.n_qubits,
            amplitudes,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Generator {
    Linear,
    Quadratic,
}

pub(crate) fn scale_rows(m: &mut DMatrix<C64>, s: &[C64]) {
    for (r, &f) in s.iter().enumerate() {
        for c in 0..m.ncols() {
            m[(r, c)] *= f;
        }
    }
}

pub fn rotation(n_qubits: usize, axis: Axis, theta: f64) -> Result<DickeOperator> {
    let axis = Axis::new(axis.0[0], axis.0[1], axis.0[2])?;
    Ok(CollectiveSpace::new(n_qubits).rotation(axis, theta))
}

pub fn twist(n_qubits: usize, axis: Axis, theta: f64) -> Result<DickeOperator> {
    let axis = Axis::new(axis.0[0], axis.0[1], axis.0[2])?;
    Ok(CollectiveSpace::new(n_qubits).twist(axis, theta))
}

pub fn weight_distribution(state: &DickeState) -> Vec<f64> {
    state.amplitudes.iter().map(|a| a.norm_sqr()).collect()
}

/// First and second moments of `J_z`, computed from the weight distribution.
pub fn moments_jz(state: &DickeState) -> (f64, f64) {
    moments_from_weights(&weight_distribution(state))
}

pub fn moments_from_weights(p: &[f64]) -> (f64, f64) {
    let n = p.len() - 1;
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for (w, &pw) in p.iter().enumerate() {
        let l = jz_eigenvalue(n, w);
        m1 += pw * l;
        m2 += pw * l * l;
    }
    (m1, m2)
}

/// Projector onto Hamming weight `w`.
pub fn weight_projector(n_qubits: usize, w: usize) -> DickeOperator {
    let d = n_qubits + 1;
    let mut matrix = DMatrix::zeros(d, d);
    if w < d {
        matrix[(w, w)] = C64::new(1.0, 0.0);
    }
    DickeOperator { n_qubits, matrix }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn close(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn plus_state_small() {
        let s = spin_coherent_plus(2);
        assert!((s.amplitudes[0].re - 0.5).abs() < 1e-15);
        assert!((s.amplitudes[1].re - 0.5f64.sqrt()).abs() < 1e-15);
        for n in 1..40 {
            assert!((spin_coherent_plus(n).norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn plus_moments() {
        for n in 1..20 {
            let (m1, m2) = moments_jz(&spin_coherent_plus(n));
            assert!(m1.abs() < 1e-12);
            assert!((m2 - n as f64 / 4.0).abs() < 1e-12);
        }
        let (m1, m2) = moments_jz(&DickeState::all_zero(6));
        assert_eq!((m1, m2), (3.0, 9.0));
    }

    #[test]
    fn commutation_relations() {
        let n = 7;
        let x = angular_momentum(n, Component::X).matrix;
        let y = angular_momentum(n, Component::Y).matrix;
        let z = angular_momentum(n, Component::Z).matrix;
        let i = C64::new(0.0, 1.0);
        assert!(close(&(&x * &y - &y * &x), &(&z * i)) < 1e-12);
        assert!(close(&(&y * &z - &z * &y), &(&x * i)) < 1e-12);
        let casimir = &x * &x + &y * &y + &z * &z;
        let j = n as f64 / 2.0;
        let id = DMatrix::<C64>::identity(n + 1, n + 1) * C64::new(j * (j + 1.0), 0.0);
        assert!(close(&casimir, &id) < 1e-11);
    }

    #[test]
    fn y_rotation_maps_z_to_x() {
        let n = 5;
        let sp = CollectiveSpace::new(n);
        let r = sp.rotation(Axis::Y, PI / 2.0).matrix;
        let z = angular_momentum(n, Component::Z).matrix;
        let x = angular_momentum(n, Component::X).matrix;
        assert!(close(&(&r * z * r.adjoint()), &x) < 1e-12);
    }

    #[test]
    fn exponentials_match_generator_spectrum() {
        let n = 6;
        let sp = CollectiveSpace::new(n);
        let axis = Axis::normalized(0.3, -0.5, 0.8).unwrap();
        let [a, b, c] = axis.components();
        let g = angular_momentum(n, Component::X).matrix * C64::new(a, 0.0)
            + angular_momentum(n, Component::Y).matrix * C64::new(b, 0.0)
            + angular_momentum(n, Component::Z).matrix * C64::new(c, 0.0);
        // exp(-i t G) via a truncated series at a small angle.
        let t = 0.05;
        let mut term = DMatrix::<C64>::identity(n + 1, n + 1);
        let mut sum = term.clone();
        for k in 1..30 {
            term = &term * &g * C64::new(0.0, -t / k as f64);
            sum += &term;
        }
        assert!(close(&sp.rotation(axis, t).matrix, &sum) < 1e-12);
    }

    #[test]
    fn left_apply_matches_dense() {
        let n = 9;
        let sp = CollectiveSpace::new(n);
        for (comp, twist) in [
            (Component::X, false),
            (Component::Y, false),
            (Component::Z, true),
            (Component::X, true),
            (Component::Y, true),
        ] {
            let g = if twist {
                sp.twist(comp.into(), 0.37)
            } else {
                sp.rotation(comp.into(), 0.37)
            };
            let mut m = sp.rotation(Axis::normalized(1.0, 2.0, 3.0).unwrap(), 0.8).matrix;
            let want = &g.matrix * &m;
            sp.left_apply(comp, twist, 0.37, &mut m);
            assert!(close(&m, &want) < 1e-12);
        }
    }

    #[test]
    fn non_unit_axis_rejected() {
        assert!(matches!(
            rotation(3, Axis([1.0, 1.0, 0.0]), 0.1),
            Err(Error::NonUnitAxis { .. })
        ));
    }

    #[test]
    fn weight_projectors_resolve_identity() {
        let n = 4;
        let mut sum = DMatrix::<C64>::zeros(n + 1, n + 1);
        for w in 0..=n {
            sum += weight_projector(n, w).matrix;
        }
        assert!(close(&sum, &DMatrix::identity(n + 1, n + 1)) == 0.0);
    }
}
