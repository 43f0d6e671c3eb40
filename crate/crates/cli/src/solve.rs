//! Noiseless optimization of ansatz chains at one prior width.

use std::collections::HashMap;

use anyhow::Result;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use vbqm_core::circuits::{AnsatzSpec, Family};
use vbqm_core::noisemodel::NoiseSpec;
use vbqm_core::objective::{gauss_hermite, zero_params, Engine, Objective, Prior, QuadratureRule};
use vbqm_core::optimize::{alternate, sequential_init, OptimizerConfig};

use crate::config::InitMode;

#[derive(Debug, Clone)]
pub struct Settings {
    pub n_qubits: usize,
    pub delta_phi: f64,
    pub rule: QuadratureRule,
    pub engine: Engine,
    pub noise: Option<NoiseSpec>,
    pub optimizer: OptimizerConfig,
    pub init: InitMode,
    pub restarts: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solved {
    pub params: Vec<f64>,
    /// `BMSE / dphi^2` at `params`.
    pub ratio: f64,
    pub a_opt: f64,
    /// Optimizer stages of the winning start.
    pub stages: usize,
    pub evaluations: usize,
}

/// Next-shallower member of the sequential chain: decoding depth is peeled
/// first, then encoding depth. A PAR circuit keeps at least one layer.
pub fn predecessor(spec: &AnsatzSpec) -> Option<AnsatzSpec> {
    let (step, floor) = match spec.family {
        Family::Aat => (1, 0),
        Family::Par => (2, 2),
    };
    if spec.n_de >= step {
        Some(AnsatzSpec { n_de: spec.n_de - step, ..*spec })
    } else if spec.n_en >= floor + step {
        Some(AnsatzSpec { n_en: spec.n_en - step, ..*spec })
    } else {
        None
    }
}

/// Memoizes optimized specs so a chain is walked once per prior width.
pub struct ChainSolver {
    settings: Settings,
    cache: HashMap<AnsatzSpec, Solved>,
}

impl ChainSolver {
    pub fn new(settings: Settings) -> Self {
        Self {
            settings,
            cache: HashMap::new(),
        }
    }

    pub fn settings(&self) -> &Settings {
        &self.settings
    }

    pub fn objective(&self, spec: AnsatzSpec) -> Result<Objective> {
        let s = &self.settings;
        Ok(Objective::new(
            spec.with_qubits(s.n_qubits),
            Prior::new(s.delta_phi)?,
            s.rule.clone(),
            s.engine,
            s.noise,
        )?)
    }

    pub fn solve(&mut self, spec: AnsatzSpec) -> Result<Solved> {
        let spec = spec.with_qubits(self.settings.n_qubits);
        if let Some(s) = self.cache.get(&spec) {
            return Ok(s.clone());
        }
        let x0 = match (self.settings.init, predecessor(&spec)) {
            (InitMode::Sequential, Some(prev)) => {
                let p = self.solve(prev)?;
                sequential_init(&prev, &p.params, &spec)?
            }
            _ => zero_params(&spec),
        };
        let solved = self.optimize_from(spec, &x0)?;
        self.cache.insert(spec, solved.clone());
        Ok(solved)
    }

    /// Local optimization from `x0`, plus seeded random restarts.
    pub fn optimize_from(&self, spec: AnsatzSpec, x0: &[f64]) -> Result<Solved> {
        let s = &self.settings;
        let obj = self.objective(spec)?;
        let run = |x: &[f64]| -> Result<(Vec<f64>, f64, usize, usize)> {
            let r = alternate(|p: &[f64]| obj.ratio(p), x, &s.optimizer)?;
            let evals = r.stages.iter().map(|st| st.evaluations).sum();
            Ok((r.params, r.value, r.stages.len(), evals))
        };
        let (mut best, mut value, mut stages, mut evaluations) = run(x0)?;
        if s.restarts > 0 {
            let mut rng = StdRng::seed_from_u64(restart_seed(s.seed, &spec, s.delta_phi));
            for _ in 0..s.restarts {
                let start: Vec<f64> = (0..x0.len())
                    .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
                    .collect();
                let (p, v, st, e) = run(&start)?;
                evaluations += e;
                if v < value {
                    best = p;
                    value = v;
                    stages = st;
                }
            }
        }
        let eval = obj.evaluate(&best)?;
        Ok(Solved {
            params: best,
            ratio: value,
            a_opt: eval.a_opt,
            stages,
            evaluations,
        })
    }
}

fn restart_seed(seed: u64, spec: &AnsatzSpec, delta_phi: f64) -> u64 {
    // FNV-1a over the spec label and prior width.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ seed;
    for b in spec.label().bytes().chain(delta_phi.to_bits().to_le_bytes()) {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn rule(nodes: usize) -> Result<QuadratureRule> {
    Ok(gauss_hermite(nodes)?)
}
