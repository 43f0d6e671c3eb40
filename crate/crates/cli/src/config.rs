//! Experiment configuration: built-in defaults per experiment, overridden by
//! an optional TOML file, overridden by command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use vbqm_core::circuits::AnsatzSpec;
use vbqm_core::objective::Engine;
use vbqm_core::optimize::OptimizerConfig;
use vbqm_core::tensornet::{DecodingPath, TensorNetOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Optimize,
    NoiseGrid,
    CircuitNoise,
    BiasVariance,
    HyperStudy,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Optimize => "optimize",
            Self::NoiseGrid => "noise-grid",
            Self::CircuitNoise => "circuit-noise",
            Self::BiasVariance => "bias-variance",
            Self::HyperStudy => "hyper-study",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum InitMode {
    Zeros,
    Sequential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum EngineKind {
    Collective,
    Tensornet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PathKind {
    PerGate,
    Compiled,
}

/// Hyperparameter matrix for the sensitivity study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperGrid {
    pub init: Vec<InitMode>,
    pub eps: Vec<f64>,
    pub quad_nodes: Vec<usize>,
}

impl Default for HyperGrid {
    fn default() -> Self {
        Self {
            init: vec![InitMode::Sequential, InitMode::Zeros],
            eps: vec![1e-13, 1e-8],
            quad_nodes: vec![500, 25],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub n_qubits: usize,
    pub ansatz: Vec<String>,
    pub delta_phi: Vec<f64>,
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
    pub p: Vec<f64>,
    /// Quadrature order used while optimizing.
    pub quad_nodes: usize,
    /// Quadrature order for noisy tensor-network evaluations.
    pub eval_quad_nodes: usize,
    pub eps: f64,
    pub max_nm_iters: usize,
    pub max_qr_iters: usize,
    pub max_stages: usize,
    pub init: InitMode,
    pub engine: EngineKind,
    pub decoding_path: PathKind,
    /// Seeds the extra random restarts; the optimizer itself is deterministic.
    pub seed: u64,
    pub restarts: usize,
    /// Re-optimize circuit parameters under noise instead of freezing them.
    pub reoptimize_noisy: bool,
    /// Saved parameters for the frozen-parameter studies.
    pub params: Option<PathBuf>,
    pub phi_grid: Vec<f64>,
    pub hyper: HyperGrid,
    pub threads: usize,
    pub out: PathBuf,
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

fn labels(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

impl ExperimentConfig {
    pub fn defaults(kind: ExperimentKind) -> Self {
        let mut cfg = Self {
            kind,
            n_qubits: 30,
            ansatz: labels(&["AAT_0_0", "AAT_1_0", "AAT_1_1", "AAT_1_2"]),
            delta_phi: vec![0.74],
            c1: vec![0.0],
            c2: vec![0.0],
            p: vec![0.0],
            quad_nodes: 500,
            eval_quad_nodes: 25,
            eps: 1e-13,
            max_nm_iters: 200_000,
            max_qr_iters: 200,
            max_stages: 40,
            init: InitMode::Sequential,
            engine: EngineKind::Collective,
            decoding_path: PathKind::PerGate,
            seed: 0,
            restarts: 0,
            reoptimize_noisy: false,
            params: None,
            phi_grid: linear_grid(-2.0, 2.0, 81),
            hyper: HyperGrid::default(),
            threads: 0,
            out: PathBuf::from(format!("runs/{}", kind.name())),
        };
        match kind {
            ExperimentKind::Optimize => {
                cfg.delta_phi = log_grid(0.05, 1.2, 16);
            }
            ExperimentKind::NoiseGrid => {
                cfg.ansatz = labels(&["AAT_1_1"]);
                cfg.c1 = vec![0.0, 0.05, 0.1, 0.15, 0.2];
                cfg.c2 = vec![-0.1, -0.05, 0.0, 0.05, 0.1];
            }
            ExperimentKind::CircuitNoise => {
                cfg.ansatz = labels(&[
                    "AAT_0_0", "AAT_1_1", "AAT_1_2", "AAT_1_3", "AAT_1_4", "AAT_1_5", "AAT_1_6",
                ]);
                cfg.p = vec![
                    0.0, 0.001, 0.0025, 0.005, 0.0075, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07,
                    0.08, 0.09, 0.1,
                ];
            }
            ExperimentKind::BiasVariance => {
                cfg.ansatz = labels(&["AAT_1_1", "AAT_1_2"]);
                cfg.delta_phi = vec![0.7];
            }
            ExperimentKind::HyperStudy => {
                cfg.ansatz = labels(&["PAR_2_6", "AAT_1_3"]);
                cfg.delta_phi = linear_grid(0.5, 0.9, 9);
            }
        }
        cfg
    }

    /// Defaults for `kind`, then the keys present in the TOML file.
    pub fn from_file(kind: ExperimentKind, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut table: toml::Table = text
            .parse()
            .with_context(|| format!("parsing config {}", path.display()))?;
        if let Some(k) = table.get("kind") {
            let k: ExperimentKind = k.clone().try_into().context("bad `kind`")?;
            if k != kind {
                bail!("config is for `{}`, not `{}`", k.name(), kind.name());
            }
        }
        let mut base = toml::Table::try_from(Self::defaults(kind))?;
        for (k, v) in std::mem::take(&mut table) {
            if !base.contains_key(&k) && k != "params" {
                bail!("unknown config key `{k}`");
            }
            base.insert(k, v);
        }
        Ok(toml::Value::Table(base).try_into()?)
    }

    pub fn specs(&self) -> Result<Vec<AnsatzSpec>> {
        self.ansatz
            .iter()
            .map(|s| {
                let spec: AnsatzSpec = s.parse()?;
                Ok(spec.with_qubits(self.n_qubits))
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 {
            bail!("n_qubits must be positive");
        }
        if self.ansatz.is_empty() {
            bail!("empty ansatz list");
        }
        self.specs()?;
        if self.delta_phi.is_empty() {
            bail!("empty delta_phi grid");
        }
        if let Some(d) = self.delta_phi.iter().find(|d| !(**d > 0.0) || !d.is_finite()) {
            bail!("delta_phi must be positive, got {d}");
        }
        for (name, grid) in [("c1", &self.c1), ("c2", &self.c2), ("p", &self.p)] {
            if grid.is_empty() {
                bail!("empty {name} grid");
            }
        }
        if self.quad_nodes == 0 || self.eval_quad_nodes == 0 {
            bail!("quadrature orders must be positive");
        }
        if !(self.eps > 0.0) {
            bail!("eps must be positive");
        }
        if self.kind == ExperimentKind::BiasVariance && self.phi_grid.is_empty() {
            bail!("empty phi grid");
        }
        if self.kind == ExperimentKind::HyperStudy
            && (self.hyper.init.is_empty() || self.hyper.eps.is_empty() || self.hyper.quad_nodes.is_empty())
        {
            bail!("empty hyperparameter matrix");
        }
        Ok(())
    }

    pub fn optimizer(&self) -> OptimizerConfig {
        OptimizerConfig {
            max_nm_iters: self.max_nm_iters,
            max_qr_iters: self.max_qr_iters,
            max_stages: self.max_stages,
            ..OptimizerConfig::with_eps(self.eps)
        }
    }

    pub fn tensornet(&self) -> Engine {
        Engine::TensorNet(TensorNetOptions {
            path: match self.decoding_path {
                PathKind::PerGate => DecodingPath::PerGate,
                PathKind::Compiled => DecodingPath::Compiled,
            },
            ..TensorNetOptions::default()
        })
    }

    /// Engine for noiseless optimization.
    pub fn noiseless_engine(&self) -> Engine {
        match self.engine {
            EngineKind::Collective => Engine::Collective,
            EngineKind::Tensornet => self.tensornet(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grids() {
        let cfg = ExperimentConfig::defaults(ExperimentKind::Optimize);
        assert_eq!(cfg.delta_phi.len(), 16);
        assert!((cfg.delta_phi[0] - 0.05).abs() < 1e-15 && (cfg.delta_phi[15] - 1.2).abs() < 1e-12);
        let h = ExperimentConfig::defaults(ExperimentKind::HyperStudy);
        assert_eq!(h.delta_phi.len(), 9);
        cfg.validate().unwrap();
    }

    #[test]
    fn file_overrides_defaults() {
        let dir = std::env::temp_dir().join(format!("vbqm-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.toml");
        std::fs::write(&path, "n_qubits = 6\ndelta_phi = [0.3]\n[hyper]\ninit = ['zeros']\neps = [1e-6]\nquad_nodes = [10]\n").unwrap();
        let cfg = ExperimentConfig::from_file(ExperimentKind::HyperStudy, &path).unwrap();
        assert_eq!(cfg.n_qubits, 6);
        assert_eq!(cfg.delta_phi, vec![0.3]);
        assert_eq!(cfg.hyper.init, vec![InitMode::Zeros]);
        assert_eq!(cfg.ansatz, vec!["PAR_2_6", "AAT_1_3"]);
        std::fs::write(&path, "bogus = 1\n").unwrap();
        assert!(ExperimentConfig::from_file(ExperimentKind::HyperStudy, &path).is_err());
        std::fs::write(&path, "kind = 'optimize'\n").unwrap();
        assert!(ExperimentConfig::from_file(ExperimentKind::HyperStudy, &path).is_err());
    }

    #[test]
    fn rejects_empty_grid() {
        let mut cfg = ExperimentConfig::defaults(ExperimentKind::Optimize);
        cfg.delta_phi.clear();
        assert!(cfg.validate().is_err());
    }
}
