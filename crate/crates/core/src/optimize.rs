//! Hybrid local optimizer: Nelder-Mead alternating with a quadratic-model
//! (Newton) refinement until consecutive stages agree.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_traits::Float;

use crate::circuits::AnsatzSpec;
use crate::{Error, Result};

/// Nelder-Mead reflection, expansion, contraction and shrink coefficients.
pub const NM_COEFFICIENTS: [f64; 4] = [1.0, 2.0, 0.5, 0.5];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    /// Simplex value spread that ends a Nelder-Mead stage.
    pub eps1: f64,
    /// Gap between consecutive quadratic-model minima that ends a refinement.
    pub eps2: f64,
    /// Gap between consecutive stage results that ends the alternation.
    pub eps3: f64,
    pub max_nm_iters: usize,
    pub max_qr_iters: usize,
    pub max_stages: usize,
    /// Initial simplex displacement per coordinate (radians).
    pub simplex_step: f64,
    /// Central-difference step for gradients.
    pub gradient_step: f64,
    /// Finite-difference step for the Hessian.
    pub hessian_step: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            eps1: 1e-13,
            eps2: 1e-13,
            eps3: 1e-13,
            max_nm_iters: 200_000,
            max_qr_iters: 200,
            max_stages: 40,
            simplex_step: 0.05,
            gradient_step: 1e-6,
            hessian_step: 1e-4,
        }
    }
}

impl OptimizerConfig {
    /// Same limits with all three tolerances set to `eps`.
    pub fn with_eps(eps: f64) -> Self {
        Self {
            eps1: eps,
            eps2: eps,
            eps3: eps,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    NelderMead,
    QuadraticRefine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIterations,
    LineSearchFailed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageRecord {
    pub algorithm: Algorithm,
    pub iterations: usize,
    pub evaluations: usize,
    pub value: f64,
    pub termination: Termination,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub params: Vec<f64>,
    pub value: f64,
    /// Objective at the start, then after every stage.
    pub history: Vec<f64>,
    pub stages: Vec<StageRecord>,
    /// Whether consecutive stages agreed within `eps3`.
    pub converged: bool,
}

struct Counted<'a, F> {
    f: &'a mut F,
    count: usize,
}

impl<F: FnMut(&[f64]) -> Result<f64>> Counted<'_, F> {
    fn call(&mut self, x: &[f64]) -> Result<f64> {
        self.count += 1;
        let v = (self.f)(x)?;
        if !v.is_finite() {
            return Err(Error::NonFinite {
                value: v,
                evaluation: self.count,
            });
        }
        Ok(v)
    }
}

/// Nelder-Mead from the simplex `x0, x0 + step e_1, ..., x0 + step e_k`.
pub fn nelder_mead<F>(
    mut f: F,
    x0: &[f64],
    eps1: f64,
    max_iters: usize,
    step: f64,
) -> Result<StageOutcome>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let [alpha, gamma, rho, sigma] = NM_COEFFICIENTS;
    let k = x0.len();
    let mut f = Counted { f: &mut f, count: 0 };
    if k == 0 {
        let v = f.call(x0)?;
        return Ok(StageOutcome {
            x: Vec::new(),
            value: v,
            iterations: 0,
            evaluations: 1,
            termination: Termination::Converged,
        });
    }
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(k + 1);
    simplex.push(x0.to_vec());
    for i in 0..k {
        let mut v = x0.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    let mut values = Vec::with_capacity(k + 1);
    for v in &simplex {
        values.push(f.call(v)?);
    }
    let mut order: Vec<usize> = (0..=k).collect();
    let mut iterations = 0;
    let termination = loop {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let best = order[0];
        let worst = order[k];
        let second = order[k - 1];
        if values[worst] - values[best] <= eps1 {
            break Termination::Converged;
        }
        if iterations >= max_iters {
            break Termination::MaxIterations;
        }
        iterations += 1;
        let mut centroid = vec![0.0; k];
        for &i in &order[..k] {
            for (c, x) in centroid.iter_mut().zip(&simplex[i]) {
                *c += x;
            }
        }
        for c in centroid.iter_mut() {
            *c /= k as f64;
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let xr = along(alpha);
        let fr = f.call(&xr)?;
        if fr < values[best] {
            let xe = along(gamma);
            let fe = f.call(&xe)?;
            if fe < fr {
                simplex[worst] = xe;
                values[worst] = fe;
            } else {
                simplex[worst] = xr;
                values[worst] = fr;
            }
            continue;
        }
        if fr < values[second] {
            simplex[worst] = xr;
            values[worst] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[worst] {
            let xc = along(alpha * rho);
            let fc = f.call(&xc)?;
            (xc, fc)
        } else {
            let xc = along(-rho);
            let fc = f.call(&xc)?;
            (xc, fc)
        };
        if fc < values[worst].min(fr) {
            simplex[worst] = xc;
            values[worst] = fc;
            continue;
        }
        let xb = simplex[best].clone();
        for &i in &order[1..] {
            let shrunk: Vec<f64> = simplex[i]
                .iter()
                .zip(&xb)
                .map(|(x, b)| b + sigma * (x - b))
                .collect();
            values[i] = f.call(&shrunk)?;
            simplex[i] = shrunk;
        }
    };
    let best = order[0];
    Ok(StageOutcome {
        x: simplex[best].clone(),
        value: values[best],
        iterations,
        evaluations: f.count,
        termination,
    })
}

/// Central-difference gradient.
pub fn finite_difference_gradient<F>(f: &mut F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64> + ?Sized,
{
    let mut g = vec![0.0; x.len()];
    let mut y = x.to_vec();
    for i in 0..x.len() {
        y[i] = x[i] + h;
        let fp = f(&y)?;
        y[i] = x[i] - h;
        let fm = f(&y)?;
        y[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    Ok(g)
}

fn finite_difference_hessian<F>(f: &mut F, x: &[f64], f0: f64, h: f64) -> Result<DMatrix<f64>>
where
    F: FnMut(&[f64]) -> Result<f64> + ?Sized,
{
    let k = x.len();
    let mut hess = DMatrix::zeros(k, k);
    let mut y = x.to_vec();
    let mut plus = vec![0.0; k];
    let mut minus = vec![0.0; k];
    for i in 0..k {
        y[i] = x[i] + h;
        plus[i] = f(&y)?;
        y[i] = x[i] - h;
        minus[i] = f(&y)?;
        y[i] = x[i];
        hess[(i, i)] = (plus[i] - 2.0 * f0 + minus[i]) / (h * h);
    }
    for i in 0..k {
        for j in (i + 1)..k {
            let mut corner = |si: f64, sj: f64| -> Result<f64> {
                y[i] = x[i] + si * h;
                y[j] = x[j] + sj * h;
                let v = f(&y)?;
                y[i] = x[i];
                y[j] = x[j];
                Ok(v)
            };
            let v = (corner(1.0, 1.0)? - corner(1.0, -1.0)? - corner(-1.0, 1.0)?
                + corner(-1.0, -1.0)?)
                / (4.0 * h * h);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    Ok(hess)
}

/// Newton iterations on a finite-difference quadratic model with Armijo
/// backtracking. The Hessian is made positive definite by reflecting and
/// flooring its eigenvalues.
pub fn quadratic_refine<F, G>(
    mut f: F,
    mut grad: G,
    x0: &[f64],
    eps2: f64,
    max_iters: usize,
    hessian_step: f64,
) -> Result<StageOutcome>
where
    F: FnMut(&[f64]) -> Result<f64>,
    G: FnMut(&mut dyn FnMut(&[f64]) -> Result<f64>, &[f64]) -> Result<Vec<f64>>,
{
    let mut f = Counted { f: &mut f, count: 0 };
    let mut x = x0.to_vec();
    let mut fx = f.call(&x)?;
    let k = x.len();
    let mut iterations = 0;
    let termination = loop {
        if iterations >= max_iters {
            break Termination::MaxIterations;
        }
        iterations += 1;
        let mut call = |y: &[f64]| f.call(y);
        let g = grad(&mut call, &x)?;
        if g.iter().all(|v| *v == 0.0) || k == 0 {
            break Termination::Converged;
        }
        let hess = finite_difference_hessian(&mut call, &x, fx, hessian_step)?;
        let eig = hess.symmetric_eigen();
        let scale = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let floor = (scale * 1e-8).max(1e-12);
        let gv = DVector::from_vec(g.clone());
        let coords = eig.eigenvectors.transpose() * &gv;
        let scaled = DVector::from_fn(k, |i, _| {
            -coords[i] / Float::abs(eig.eigenvalues[i]).max(floor)
        });
        let p = &eig.eigenvectors * scaled;
        let slope: f64 = gv.dot(&p);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let y: Vec<f64> = x.iter().zip(p.iter()).map(|(a, b)| a + t * b).collect();
            let fy = f.call(&y)?;
            if fy <= fx + 1e-4 * t * slope && fy <= fx {
                accepted = Some((y, fy));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((y, fy)) => {
                let gap = fx - fy;
                x = y;
                fx = fy;
                if gap <= eps2 {
                    break Termination::Converged;
                }
            }
            None => break Termination::LineSearchFailed,
        }
    };
    Ok(StageOutcome {
        x,
        value: fx,
        iterations,
        evaluations: f.count,
        termination,
    })
}

/// Alternates Nelder-Mead and quadratic refinement until two consecutive
/// stage results differ by at most `eps3`.
pub fn alternate<F>(mut f: F, x0: &[f64], config: &OptimizerConfig) -> Result<OptimizationResult>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let f0 = f(x0)?;
    if !f0.is_finite() {
        return Err(Error::NonFinite {
            value: f0,
            evaluation: 1,
        });
    }
    let mut x = x0.to_vec();
    let mut value = f0;
    let mut history = vec![f0];
    let mut stages = Vec::new();
    let mut converged = false;
    let h = config.gradient_step;
    for stage in 0..config.max_stages {
        let algorithm = if stage % 2 == 0 {
            Algorithm::NelderMead
        } else {
            Algorithm::QuadraticRefine
        };
        let out = match algorithm {
            Algorithm::NelderMead => {
                nelder_mead(&mut f, &x, config.eps1, config.max_nm_iters, config.simplex_step)?
            }
            Algorithm::QuadraticRefine => quadratic_refine(
                &mut f,
                |g: &mut dyn FnMut(&[f64]) -> Result<f64>, y: &[f64]| {
                    finite_difference_gradient(g, y, h)
                },
                &x,
                config.eps2,
                config.max_qr_iters,
                config.hessian_step,
            )?,
        };
        stages.push(StageRecord {
            algorithm,
            iterations: out.iterations,
            evaluations: out.evaluations,
            value: out.value,
            termination: out.termination,
        });
        let previous = value;
        if out.value <= value {
            x = out.x;
            value = out.value;
        }
        history.push(value);
        if Float::abs(previous - value) <= config.eps3 {
            converged = true;
            break;
        }
    }
    Ok(OptimizationResult {
        params: x,
        value,
        history,
        stages,
        converged,
    })
}

/// Initial parameters for `deeper` from an optimum of `shallower`: shared
/// slots are copied, new slots are zero so the added gates are identities.
pub fn sequential_init(
    shallower: &AnsatzSpec,
    shallower_params: &[f64],
    deeper: &AnsatzSpec,
) -> Result<Vec<f64>> {
    if shallower.family != deeper.family
        || shallower.n_qubits != deeper.n_qubits
        || shallower.n_en > deeper.n_en
        || shallower.n_de > deeper.n_de
    {
        return Err(Error::IncompatibleSpecs(alloc::format!(
            "{shallower} does not nest in {deeper}"
        )));
    }
    if shallower_params.len() != shallower.param_count() {
        return Err(Error::ParamLength {
            expected: shallower.param_count(),
            got: shallower_params.len(),
        });
    }
    let deep_slots = deeper.slots();
    let mut out = vec![0.0; deep_slots.len()];
    for (slot, &v) in shallower.slots().iter().zip(shallower_params) {
        let pos = deep_slots
            .iter()
            .position(|s| s == slot)
            .ok_or_else(|| Error::IncompatibleSpecs(alloc::format!("slot {slot:?} missing")))?;
        out[pos] = v;
    }
    Ok(out)
}
