//! Bayesian mean squared error of a protocol under a zero-mean Gaussian
//! prior, with the estimator `phi_est(w) = a (N - 2w)/2`.
//!
//! Prior averages use Gauss-Hermite quadrature with `phi = sqrt(2) dphi x`
//! and weight `1/sqrt(pi)`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_traits::Float;

use crate::circuits::{AnsatzSpec, GateSequence};
use crate::collective::{jz_eigenvalue, spin_coherent_plus, CollectiveSpace};
use crate::noisemodel::NoiseSpec;
use crate::tensornet::{PreparedProtocol, TensorNetOptions};
use crate::{Error, Result, C64};

const SQRT_PI: f64 = 1.772_453_850_905_516;
const DEGENERATE: f64 = 1e-14;

/// Zero-mean Gaussian prior on the phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prior {
    std_dev: f64,
}

impl Prior {
    pub fn new(std_dev: f64) -> Result<Self> {
        if !(std_dev > 0.0) || !std_dev.is_finite() {
            return Err(Error::InvalidPrior(std_dev));
        }
        Ok(Self { std_dev })
    }

    pub fn std_dev(&self) -> f64 {
        self.std_dev
    }

    pub fn variance(&self) -> f64 {
        self.std_dev * self.std_dev
    }

    /// Density at `phi`.
    pub fn density(&self, phi: f64) -> f64 {
        let z = phi / self.std_dev;
        Float::exp(-0.5 * z * z) / (self.std_dev * Float::sqrt(2.0 * core::f64::consts::PI))
    }
}

/// Gauss-Hermite rule for the weight `e^{-x^2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Normalized Hermite functions without their Gaussian factor:
/// returns `(psi_{n-1}, psi_n) * e^{x^2/2}`.
fn scaled_hermite_pair(n: usize, x: f64) -> (f64, f64) {
    let mut prev = 0.0;
    let mut cur = Float::powf(core::f64::consts::PI, -0.25);
    for k in 0..n {
        let kf = k as f64;
        let next = Float::sqrt(2.0 / (kf + 1.0)) * x * cur - Float::sqrt(kf / (kf + 1.0)) * prev;
        prev = cur;
        cur = next;
    }
    (prev, cur)
}

pub fn gauss_hermite(n: usize) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(Error::EmptyQuadrature);
    }
    // Eigenvalues of the Jacobi matrix give starting points.
    let jac = DMatrix::<f64>::from_fn(n, n, |i, j| {
        if i.abs_diff(j) == 1 {
            Float::sqrt(i.max(j) as f64 / 2.0)
        } else {
            0.0
        }
    });
    let mut nodes: Vec<f64> = jac.symmetric_eigen().eigenvalues.iter().copied().collect();
    nodes.sort_by(f64::total_cmp);
    let scale = Float::sqrt(2.0 * n as f64);
    for x in nodes.iter_mut() {
        for _ in 0..8 {
            let (pm1, p) = scaled_hermite_pair(n, *x);
            if pm1 == 0.0 {
                break;
            }
            let step = p / (scale * pm1);
            *x -= step;
            if Float::abs(step) <= 1e-16 * Float::abs(*x).max(1.0) {
                break;
            }
        }
    }
    // Enforce exact mirror symmetry of the rule.
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let m = 0.5 * (nodes[j] - nodes[i]);
        nodes[i] = -m;
        nodes[j] = m;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    let weights = nodes
        .iter()
        .map(|&x| {
            let (pm1, _) = scaled_hermite_pair(n, x);
            (1.0 / n as f64) / pm1 / pm1
        })
        .collect();
    Ok(QuadratureRule { nodes, weights })
}

impl QuadratureRule {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Phase values at which the prior average samples.
    pub fn phis(&self, prior: &Prior) -> Vec<f64> {
        let s = core::f64::consts::SQRT_2 * prior.std_dev;
        self.nodes.iter().map(|x| s * x).collect()
    }

    /// Prior average of values sampled at [`QuadratureRule::phis`].
    pub fn average(&self, values: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(values)
            .filter(|(w, _)| **w != 0.0)
            .map(|(w, v)| w * v)
            .sum::<f64>()
            / SQRT_PI
    }
}

/// `<J_z>` and `<J_z^2>` at each quadrature node.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentCurve {
    pub phis: Vec<f64>,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Engine {
    /// Symmetric-subspace simulation; noiseless only.
    #[default]
    Collective,
    TensorNet(TensorNetOptions),
}

/// Protocol ready for repeated evaluation at different phases.
pub enum Simulator {
    Collective {
        n_qubits: usize,
        probe: DVector<C64>,
        decoding: DMatrix<C64>,
        phases: Vec<f64>,
    },
    TensorNet(PreparedProtocol),
}

impl Simulator {
    pub fn new(
        n_qubits: usize,
        encoding: &GateSequence,
        decoding: &GateSequence,
        engine: &Engine,
        noise: Option<&NoiseSpec>,
    ) -> Result<Self> {
        let noise = noise.copied().unwrap_or_default();
        match engine {
            Engine::Collective => {
                if !noise.is_noiseless() {
                    return Err(Error::NoiseUnsupported);
                }
                let space = CollectiveSpace::new(n_qubits);
                Self::collective(&space, encoding, decoding)
            }
            Engine::TensorNet(opts) => Ok(Simulator::TensorNet(PreparedProtocol::new(
                n_qubits, encoding, decoding, &noise, opts,
            )?)),
        }
    }

    /// Collective simulator reusing cached spectral data.
    pub fn collective(
        space: &CollectiveSpace,
        encoding: &GateSequence,
        decoding: &GateSequence,
    ) -> Result<Self> {
        let n = space.n_qubits();
        let probe = spin_coherent_plus(n)
            .apply(&encoding.unitary(space))?
            .amplitudes;
        Ok(Simulator::Collective {
            n_qubits: n,
            probe,
            decoding: decoding.unitary(space).matrix,
            phases: (0..=n).map(|w| jz_eigenvalue(n, w)).collect(),
        })
    }

    pub fn moments(&self, phi: f64) -> Result<(f64, f64)> {
        match self {
            Simulator::Collective {
                n_qubits,
                probe,
                decoding,
                phases,
            } => {
                let d = n_qubits + 1;
                let evolved: Vec<C64> = probe
                    .iter()
                    .zip(phases)
                    .map(|(a, l)| a * C64::from_polar(1.0, -phi * l))
                    .collect();
                let mut m1 = 0.0;
                let mut m2 = 0.0;
                for w in 0..d {
                    let mut amp = C64::new(0.0, 0.0);
                    for (k, e) in evolved.iter().enumerate() {
                        amp += decoding[(w, k)] * e;
                    }
                    let p = amp.norm_sqr();
                    m1 += p * phases[w];
                    m2 += p * phases[w] * phases[w];
                }
                Ok((m1, m2))
            }
            Simulator::TensorNet(p) => p.moments(phi),
        }
    }

    pub fn curve(&self, prior: &Prior, rule: &QuadratureRule) -> Result<MomentCurve> {
        let phis = rule.phis(prior);
        let mut first = Vec::with_capacity(phis.len());
        let mut second = Vec::with_capacity(phis.len());
        for (phi, w) in phis.iter().zip(&rule.weights) {
            let (a, b) = if *w == 0.0 {
                (0.0, 0.0)
            } else {
                self.moments(*phi)?
            };
            first.push(a);
            second.push(b);
        }
        Ok(MomentCurve {
            phis,
            first,
            second,
        })
    }
}

/// Simulates probe, free evolution and decoding at every quadrature node.
/// Nodes whose weight underflows to zero are not simulated and hold zeros.
pub fn moment_curve(
    n_qubits: usize,
    encoding: &GateSequence,
    decoding: &GateSequence,
    prior: &Prior,
    rule: &QuadratureRule,
    engine: &Engine,
    noise: Option<&NoiseSpec>,
) -> Result<MomentCurve> {
    Simulator::new(n_qubits, encoding, decoding, engine, noise)?.curve(prior, rule)
}

/// Prior averages `((phi <J_z>)_avg, <J_z^2>_avg)`.
pub fn averages(curve: &MomentCurve, rule: &QuadratureRule) -> (f64, f64) {
    let cross: Vec<f64> = curve
        .phis
        .iter()
        .zip(&curve.first)
        .map(|(p, m)| p * m)
        .collect();
    (rule.average(&cross), rule.average(&curve.second))
}

/// Optimal estimator constant `a = (phi <J_z>)_avg / <J_z^2>_avg`.
pub fn a_opt(curve: &MomentCurve, _prior: &Prior, rule: &QuadratureRule) -> Result<f64> {
    let (cross, second) = averages(curve, rule);
    if !(second >= DEGENERATE) {
        return Err(Error::DegenerateSecondMoment(second));
    }
    Ok(cross / second)
}

/// `dphi^2 - 2a (phi <J_z>)_avg + a^2 <J_z^2>_avg`.
pub fn bmse(curve: &MomentCurve, prior: &Prior, rule: &QuadratureRule, a: f64) -> f64 {
    let (cross, second) = averages(curve, rule);
    prior.variance() - 2.0 * a * cross + a * a * second
}

/// BMSE with the optimal constant, as `(a_opt, bmse)`; a degenerate second
/// moment falls back to `a = 0`.
pub fn optimal_bmse(curve: &MomentCurve, prior: &Prior, rule: &QuadratureRule) -> (f64, f64) {
    let a = a_opt(curve, prior, rule).unwrap_or(0.0);
    (a, bmse(curve, prior, rule, a))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorPoint {
    pub phi: f64,
    pub mean: f64,
    pub variance: f64,
    pub bias: f64,
}

/// Outcome-averaged estimator statistics on a phase grid.
pub fn estimator_curves(
    n_qubits: usize,
    encoding: &GateSequence,
    decoding: &GateSequence,
    a: f64,
    phi_grid: &[f64],
    engine: &Engine,
    noise: Option<&NoiseSpec>,
) -> Result<Vec<EstimatorPoint>> {
    let sim = Simulator::new(n_qubits, encoding, decoding, engine, noise)?;
    phi_grid
        .iter()
        .map(|&phi| {
            let (m1, m2) = sim.moments(phi)?;
            Ok(EstimatorPoint {
                phi,
                mean: a * m1,
                variance: (a * a * (m2 - m1 * m1)).max(0.0),
                bias: a * m1 - phi,
            })
        })
        .collect()
}

/// Result of evaluating a parameterized protocol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub a_opt: f64,
    pub bmse: f64,
    /// `bmse / dphi^2`.
    pub ratio: f64,
}

/// BMSE of an ansatz as a function of its parameters.
pub struct Objective {
    pub spec: AnsatzSpec,
    pub prior: Prior,
    pub rule: QuadratureRule,
    pub engine: Engine,
    pub noise: Option<NoiseSpec>,
    space: CollectiveSpace,
}

impl Objective {
    pub fn new(
        spec: AnsatzSpec,
        prior: Prior,
        rule: QuadratureRule,
        engine: Engine,
        noise: Option<NoiseSpec>,
    ) -> Result<Self> {
        spec.validate()?;
        if let Some(n) = &noise {
            n.validate(spec.n_qubits)?;
            if engine == Engine::Collective && !n.is_noiseless() {
                return Err(Error::NoiseUnsupported);
            }
        }
        Ok(Self {
            space: CollectiveSpace::new(spec.n_qubits),
            spec,
            prior,
            rule,
            engine,
            noise,
        })
    }

    pub fn simulator(&self, params: &[f64]) -> Result<Simulator> {
        let (enc, dec) = self.spec.build(params)?;
        match self.engine {
            Engine::Collective => Simulator::collective(&self.space, &enc, &dec),
            e => Simulator::new(self.spec.n_qubits, &enc, &dec, &e, self.noise.as_ref()),
        }
    }

    pub fn curve(&self, params: &[f64]) -> Result<MomentCurve> {
        self.simulator(params)?.curve(&self.prior, &self.rule)
    }

    pub fn evaluate(&self, params: &[f64]) -> Result<Evaluation> {
        let curve = self.curve(params)?;
        let (a, b) = optimal_bmse(&curve, &self.prior, &self.rule);
        Ok(Evaluation {
            a_opt: a,
            bmse: b,
            ratio: b / self.prior.variance(),
        })
    }

    /// `bmse / dphi^2`, the quantity minimized by the optimizer.
    pub fn ratio(&self, params: &[f64]) -> Result<f64> {
        Ok(self.evaluate(params)?.ratio)
    }
}

/// Convenience: an all-zero parameter vector for `spec`.
pub fn zero_params(spec: &AnsatzSpec) -> Vec<f64> {
    vec![0.0; spec.param_count()]
}
