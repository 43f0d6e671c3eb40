//! Dense reference simulators over the full 2^N Hilbert space.
//!
//! Everything here is deliberately naive: operators are built qubit by qubit
//! from Pauli matrices and exponentiated by Hermitian eigendecomposition.
//! Nothing depends on the symmetric-subspace or tensor-network code it is
//! used to check. Site 0 is the most significant bit of a basis index, and
//! `|0>` is the `+1` eigenstate of `Z`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::{rngs::StdRng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

pub type Dense = DMatrix<C64>;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

pub fn bit(x: usize, site: usize, n: usize) -> usize {
    (x >> (n - 1 - site)) & 1
}

pub fn weight(x: usize) -> usize {
    x.count_ones() as usize
}

pub fn pauli(axis: [f64; 3]) -> DMatrix<C64> {
    let [x, y, z] = axis;
    DMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(z, 0.0),
            C64::new(x, -y),
            C64::new(x, y),
            C64::new(-z, 0.0),
        ],
    )
}

/// `op` acting on `site` of `n` qubits.
pub fn embed(op: &DMatrix<C64>, site: usize, n: usize) -> Dense {
    let dim = 1 << n;
    let mut out = DMatrix::zeros(dim, dim);
    for x in 0..dim {
        for y in 0..dim {
            if (x ^ y) & !(1 << (n - 1 - site)) != 0 {
                continue;
            }
            out[(x, y)] = op[(bit(x, site, n), bit(y, site, n))];
        }
    }
    out
}

/// `(1/2) sum_j n . sigma_j`.
pub fn collective(axis: [f64; 3], n: usize) -> Dense {
    let p = pauli(axis);
    let mut out = DMatrix::zeros(1 << n, 1 << n);
    for j in 0..n {
        out += embed(&p, j, n);
    }
    out * C64::new(0.5, 0.0)
}

/// `exp(-i theta H)` for Hermitian `H`.
pub fn expm_hermitian(h: &Dense, theta: f64) -> Dense {
    let eig = h.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let phases = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|l| C64::from_polar(1.0, -theta * l)),
    );
    v * DMatrix::from_diagonal(&phases) * v.adjoint()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseGate {
    pub twist: bool,
    pub axis: [f64; 3],
    pub theta: f64,
}

impl DenseGate {
    pub fn rotation(axis: [f64; 3], theta: f64) -> Self {
        Self { twist: false, axis, theta }
    }
    pub fn twist(axis: [f64; 3], theta: f64) -> Self {
        Self { twist: true, axis, theta }
    }
}

pub fn gate_unitary(g: &DenseGate, n: usize) -> Dense {
    let j = collective(g.axis, n);
    let h = if g.twist { &j * &j } else { j };
    expm_hermitian(&h, g.theta)
}

/// Product of a time-ordered gate list (first gate acts first).
pub fn sequence_unitary(gates: &[DenseGate], n: usize) -> Dense {
    let mut u = DMatrix::identity(1 << n, 1 << n);
    for g in gates {
        u = gate_unitary(g, n) * u;
    }
    u
}

pub fn plus_state(n: usize) -> DVector<C64> {
    let dim = 1 << n;
    DVector::from_element(dim, C64::new((dim as f64).powf(-0.5), 0.0))
}

pub fn jz_diagonal(n: usize) -> Vec<f64> {
    (0..1usize << n)
        .map(|x| (n as f64 - 2.0 * weight(x) as f64) / 2.0)
        .collect()
}

/// Pure-state protocol: `<J_z>` and `<J_z^2>` after encoding, `e^{-i phi J_z}`
/// and decoding.
pub fn statevector_moments(n: usize, enc: &[DenseGate], dec: &[DenseGate], phi: f64) -> (f64, f64) {
    let mut psi = sequence_unitary(enc, n) * plus_state(n);
    let jz = jz_diagonal(n);
    for (a, l) in psi.iter_mut().zip(&jz) {
        *a *= C64::from_polar(1.0, -phi * l);
    }
    let psi = sequence_unitary(dec, n) * psi;
    moments_of_probabilities(&jz, psi.iter().map(|a| a.norm_sqr()))
}

fn moments_of_probabilities(jz: &[f64], probs: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for (p, l) in probs.zip(jz) {
        m1 += p * l;
        m2 += p * l * l;
    }
    (m1, m2)
}

pub fn density_moments(rho: &Dense) -> (f64, f64) {
    let n = rho.nrows().trailing_zeros() as usize;
    moments_of_probabilities(&jz_diagonal(n), (0..rho.nrows()).map(|i| rho[(i, i)].re))
}

pub fn conjugate(u: &Dense, rho: &Dense) -> Dense {
    u * rho * u.adjoint()
}

/// `(1-p) rho + p P rho P` on every site, with `P = n . sigma`.
pub fn pauli_dephasing(rho: &Dense, axis: [f64; 3], p: f64, n: usize) -> Dense {
    let mut out = rho.clone();
    let s = pauli(axis);
    for j in 0..n {
        let pj = embed(&s, j, n);
        out = out.clone() * C64::new(1.0 - p, 0.0) + (&pj * &out * &pj) * C64::new(p, 0.0);
    }
    out
}

pub fn tridiagonal(n: usize, c1: f64, c2: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            c1
        } else if i.abs_diff(j) == 1 {
            c2
        } else {
            0.0
        }
    })
}

/// Damping factor of `rho_{mn}` under Gaussian phase noise with covariance `c`,
/// evaluated directly from the quadratic form.
pub fn gaussian_damping(m: usize, k: usize, c: &DMatrix<f64>) -> f64 {
    let n = c.nrows();
    let delta: Vec<f64> = (0..n)
        .map(|j| sign(bit(m, j, n)) - sign(bit(k, j, n)))
        .collect();
    let mut q = 0.0;
    for a in 0..n {
        for b in 0..n {
            q += delta[a] * c[(a, b)] * delta[b];
        }
    }
    (-q / 8.0).exp()
}

fn sign(b: usize) -> f64 {
    if b == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `e^{-i phi J_z}` conjugation followed by correlated Gaussian dephasing.
pub fn free_evolution(rho: &Dense, phi: f64, c: &DMatrix<f64>) -> Dense {
    let n = c.nrows();
    let jz = jz_diagonal(n);
    DMatrix::from_fn(rho.nrows(), rho.ncols(), |m, k| {
        rho[(m, k)] * C64::from_polar(gaussian_damping(m, k, c), -phi * (jz[m] - jz[k]))
    })
}

/// Monte-Carlo estimate of the damping factor of `rho_{mk}`: average of
/// `exp(-i sum_j r_j (z_mj - z_kj)/2)` over `r ~ N(0, c)`. Returns the mean
/// real part and its standard error.
pub fn monte_carlo_damping(m: usize, k: usize, c: &DMatrix<f64>, samples: usize, seed: u64) -> (f64, f64) {
    let n = c.nrows();
    let l = c.clone().cholesky().expect("covariance must be positive definite").unpack();
    let mut rng = StdRng::seed_from_u64(seed);
    let delta: Vec<f64> = (0..n)
        .map(|j| (sign(bit(m, j, n)) - sign(bit(k, j, n))) / 2.0)
        .collect();
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    let mut z = vec![0.0; n];
    for _ in 0..samples {
        for v in z.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        let mut phase = 0.0;
        for a in 0..n {
            let r: f64 = (0..=a).map(|b| l[(a, b)] * z[b]).sum();
            phase += r * delta[a];
        }
        let v = phase.cos();
        sum += v;
        sum2 += v * v;
    }
    let mean = sum / samples as f64;
    let var = (sum2 / samples as f64 - mean * mean).max(0.0);
    (mean, (var / samples as f64).sqrt())
}

/// Noise model for [`density_protocol_moments`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DenseNoise {
    pub c1: f64,
    pub c2: f64,
    /// Dephasing after each twist, along the twist axis.
    pub p: f64,
}

fn apply_noisy(rho: Dense, gates: &[DenseGate], p: f64, n: usize) -> Dense {
    let mut rho = rho;
    for g in gates {
        rho = conjugate(&gate_unitary(g, n), &rho);
        if g.twist && p != 0.0 {
            rho = pauli_dephasing(&rho, g.axis, p, n);
        }
    }
    rho
}

pub fn density_protocol_moments(
    n: usize,
    enc: &[DenseGate],
    dec: &[DenseGate],
    phi: f64,
    noise: DenseNoise,
) -> (f64, f64) {
    let psi = plus_state(n);
    let rho = &psi * psi.adjoint();
    let rho = apply_noisy(rho, enc, noise.p, n);
    let rho = free_evolution(&rho, phi, &tridiagonal(n, noise.c1, noise.c2));
    let rho = apply_noisy(rho, dec, noise.p, n);
    density_moments(&rho)
}

/// `<x|O|y> = f(t01, t10, t11)` with `t_{ab}` counting sites where `x` has `a`
/// and `y` has `b`.
pub fn lift_types(n: usize, f: impl Fn(usize, usize, usize) -> C64) -> Dense {
    let dim = 1 << n;
    DMatrix::from_fn(dim, dim, |x, y| {
        let mut t = [0usize; 3];
        for j in 0..n {
            match (bit(x, j, n), bit(y, j, n)) {
                (0, 1) => t[0] += 1,
                (1, 0) => t[1] += 1,
                (1, 1) => t[2] += 1,
                _ => {}
            }
        }
        f(t[0], t[1], t[2])
    })
}

/// Dense `d^N` vector whose entry for a string equals `f(counts)`, where
/// `counts[k-1]` is the number of sites holding letter `k` (`k = 1..d-1`).
/// Site 0 is the most significant digit.
pub fn symmetrized_vector(d: usize, n: usize, f: impl Fn(&[usize]) -> C64) -> DVector<C64> {
    let dim = d.pow(n as u32);
    let mut counts = vec![0usize; d - 1];
    DVector::from_fn(dim, |s, _| {
        counts.iter_mut().for_each(|c| *c = 0);
        let mut rest = s;
        for _ in 0..n {
            let digit = rest % d;
            rest /= d;
            if digit > 0 {
                counts[digit - 1] += 1;
            }
        }
        f(&counts)
    })
}

/// Restriction of a `2^N` operator to the normalized Dicke basis, weight-indexed.
pub fn dicke_projection(op: &Dense, n: usize) -> DMatrix<C64> {
    let dim = 1 << n;
    let mut basis = DMatrix::<C64>::zeros(dim, n + 1);
    let mut counts = vec![0usize; n + 1];
    for x in 0..dim {
        counts[weight(x)] += 1;
    }
    for x in 0..dim {
        let w = weight(x);
        basis[(x, w)] = C64::new((counts[w] as f64).powf(-0.5), 0.0);
    }
    basis.adjoint() * op * basis
}

pub fn max_abs_diff(a: &Dense, b: &Dense) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn identity(n: usize) -> Dense {
    DMatrix::from_fn(1 << n, 1 << n, |i, j| if i == j { ONE } else { ZERO })
}
