//! Spatially correlated dephasing during free evolution and per-qubit
//! dephasing after each twist.
//!
//! With `s_j = ((-1)^{m_j} - (-1)^{n_j}) / 2`, correlated dephasing damps the
//! matrix element `rho_{m,n}` by `exp(-1/2 s^T C s)`, where `C` is the
//! tridiagonal covariance of the random phases.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_traits::Float;

use crate::pinv::TypeSpace;
use crate::tensornet::{DensityMpo, Mpo, Site4};
use crate::{Error, Result, C64};

const PSD_TOL: f64 = 1e-12;

/// Noise parameters: on-site variance `c1`, nearest-neighbour covariance
/// `c2` (radians squared) and twist dephasing strength `p`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseSpec {
    pub c1: f64,
    pub c2: f64,
    pub p: f64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn correlated(c1: f64, c2: f64) -> Self {
        Self { c1, c2, p: 0.0 }
    }

    pub fn gate(p: f64) -> Self {
        Self {
            c1: 0.0,
            c2: 0.0,
            p,
        }
    }

    pub fn has_free_evolution_noise(&self) -> bool {
        self.c1 != 0.0 || self.c2 != 0.0
    }

    pub fn has_gate_noise(&self) -> bool {
        self.p != 0.0
    }

    pub fn is_noiseless(&self) -> bool {
        !self.has_free_evolution_noise() && !self.has_gate_noise()
    }

    /// Checks the dephasing range and positive semidefiniteness of `C`.
    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        if !(0.0..=0.5).contains(&self.p) {
            return Err(Error::InvalidDephasing(self.p));
        }
        let min = min_eigenvalue(&correlation_matrix(n_qubits, self.c1, self.c2));
        if !(min >= -PSD_TOL) || !self.c1.is_finite() || !self.c2.is_finite() {
            return Err(Error::NotPositiveSemidefinite {
                min_eigenvalue: min,
            });
        }
        Ok(())
    }
}

pub fn correlation_matrix(n_qubits: usize, c1: f64, c2: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n_qubits, n_qubits, |j, k| {
        if j == k {
            c1
        } else if j.abs_diff(k) == 1 {
            c2
        } else {
            0.0
        }
    })
}

pub fn min_eigenvalue(c: &DMatrix<f64>) -> f64 {
    if c.nrows() == 0 {
        return 0.0;
    }
    c.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// `s` for ket letter `mu` and bra letter `nu`.
#[inline]
pub fn site_sign(mu: u8, nu: u8) -> i32 {
    match (mu, nu) {
        (0, 1) => 1,
        (1, 0) => -1,
        _ => 0,
    }
}

/// Damping factor of `rho_{m,n}` under correlated dephasing with covariance
/// `c`.
pub fn dephasing_weight(m: &[u8], n: &[u8], c: &DMatrix<f64>) -> Result<f64> {
    let len = m.len();
    if n.len() != len || c.nrows() != len || c.ncols() != len {
        return Err(Error::Dimension("bitstrings and covariance disagree".into()));
    }
    let min = min_eigenvalue(c);
    if min < -PSD_TOL {
        return Err(Error::NotPositiveSemidefinite {
            min_eigenvalue: min,
        });
    }
    let s: Vec<f64> = m
        .iter()
        .zip(n)
        .map(|(&a, &b)| site_sign(a, b) as f64)
        .collect();
    let mut q = 0.0;
    for j in 0..len {
        for k in 0..len {
            q += s[j] * c[(j, k)] * s[k];
        }
    }
    Ok(Float::exp(-0.5 * q))
}

/// Elementwise MPO `K` with `Lambda_phi(rho) = K o rho`: the phase
/// `e^{-i phi s_j}` of `e^{-i phi J_z}` conjugation times the correlated
/// damping. The bond carries the previous `s` (bond 3), or is trivial when
/// `c2 = 0`.
pub fn free_evolution_channel_mpo(n_qubits: usize, phi: f64, spec: &NoiseSpec) -> Result<Mpo> {
    NoiseSpec { p: 0.0, ..*spec }.validate(n_qubits)?;
    let local = |s: i32| -> C64 {
        let sf = s as f64;
        C64::from_polar(Float::exp(-0.5 * spec.c1 * sf * sf), -phi * sf)
    };
    let mut sites = Vec::with_capacity(n_qubits);
    if spec.c2 == 0.0 {
        for _ in 0..n_qubits {
            let mut site = Site4::zeros(1, 2, 2, 1);
            for mu in 0..2u8 {
                for nu in 0..2u8 {
                    site.set(0, mu as usize, nu as usize, 0, local(site_sign(mu, nu)));
                }
            }
            sites.push(site);
        }
        return Ok(Mpo { sites });
    }
    // Bond index b encodes s_prev = b - 1.
    for j in 0..n_qubits {
        let left = if j == 0 { 1 } else { 3 };
        let right = if j + 1 == n_qubits { 1 } else { 3 };
        let mut site = Site4::zeros(left, 2, 2, right);
        for l in 0..left {
            let s_prev = if j == 0 { 0 } else { l as i32 - 1 };
            for mu in 0..2u8 {
                for nu in 0..2u8 {
                    let s = site_sign(mu, nu);
                    let coupling = Float::exp(-spec.c2 * (s_prev * s) as f64);
                    let r = if right == 1 { 0 } else { (s + 1) as usize };
                    site.set(l, mu as usize, nu as usize, r, local(s) * coupling);
                }
            }
        }
        sites.push(site);
    }
    Ok(Mpo { sites })
}

/// Elementwise MPO of per-qubit dephasing with strength `p`.
pub fn gate_dephasing_mpo(n_qubits: usize, p: f64) -> Result<Mpo> {
    if !(0.0..=0.5).contains(&p) {
        return Err(Error::InvalidDephasing(p));
    }
    let mut site = Site4::zeros(1, 2, 2, 1);
    let off = C64::new(1.0 - 2.0 * p, 0.0);
    site.set(0, 0, 0, 0, C64::new(1.0, 0.0));
    site.set(0, 1, 1, 0, C64::new(1.0, 0.0));
    site.set(0, 0, 1, 0, off);
    site.set(0, 1, 0, 0, off);
    Ok(Mpo {
        sites: vec![site; n_qubits],
    })
}

/// `(1-p) rho + p Z rho Z` on every qubit.
pub fn gate_dephasing(rho: &DensityMpo, p: f64) -> Result<DensityMpo> {
    let k = gate_dephasing_mpo(rho.n_qubits(), p)?;
    Ok(DensityMpo(rho.0.hadamard(&k)?))
}

/// Total correlated damping per pair type: `Z(t) = sum` of the damping factor
/// over all `(m, n)` pairs of type `t`, in canonical type order. Without
/// noise this is the number of pairs of each type.
pub fn type_weights(n_qubits: usize, c1: f64, c2: f64) -> Vec<f64> {
    let ts = TypeSpace::new(n_qubits);
    let m = n_qubits + 1;
    let cells = m * m * m;
    // state: (t01, t10, t11) cube cell x previous sign (0: -1, 1: 0, 2: +1)
    let mut cur = vec![0.0f64; cells * 3];
    cur[1] = 1.0;
    let onsite = [Float::exp(-0.5 * c1), 1.0, Float::exp(-0.5 * c1)];
    let coupling = |a: i32, b: i32| Float::exp(-c2 * (a * b) as f64);
    let cell = |a: usize, b: usize, c: usize| (a * m + b) * m + c;
    for site in 0..n_qubits {
        let mut next = vec![0.0f64; cells * 3];
        for t01 in 0..=site {
            for t10 in 0..=site - t01 {
                for t11 in 0..=site - t01 - t10 {
                    let base = cell(t01, t10, t11);
                    for prev in 0..3 {
                        let w = cur[base * 3 + prev];
                        if w == 0.0 {
                            continue;
                        }
                        let sp = prev as i32 - 1;
                        // letters 00 and 11 (s = 0), 01 (s = +1), 10 (s = -1)
                        next[base * 3 + 1] += w;
                        next[cell(t01, t10, t11 + 1) * 3 + 1] += w;
                        next[cell(t01 + 1, t10, t11) * 3 + 2] += w * onsite[2] * coupling(sp, 1);
                        next[cell(t01, t10 + 1, t11) * 3] += w * onsite[0] * coupling(sp, -1);
                    }
                }
            }
        }
        cur = next;
    }
    ts.types
        .iter()
        .map(|t| {
            let b = cell(t[0], t[1], t[2]) * 3;
            cur[b] + cur[b + 1] + cur[b + 2]
        })
        .collect()
}
