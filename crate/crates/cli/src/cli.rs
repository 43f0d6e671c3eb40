//! Command-line parsing. Precedence: built-in defaults, then `--config`,
//! then explicit flags.

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use crate::config::{EngineKind, ExperimentConfig, ExperimentKind, InitMode, PathKind};
use crate::experiments;

#[derive(Debug, Parser)]
#[command(name = "vbqm", version, about = "Variational Bayesian phase estimation with one-axis twists")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimize ansatzes over a grid of prior widths (noiseless).
    Optimize(RunArgs),
    /// Frozen parameters under correlated dephasing during free evolution.
    NoiseGrid(RunArgs),
    /// Frozen parameters with dephasing after every twist.
    CircuitNoise(RunArgs),
    /// Estimator mean, variance and bias as a function of the phase.
    BiasVariance(RunArgs),
    /// Optimizer sensitivity to initialization, tolerance and quadrature order.
    HyperStudy(RunArgs),
}

impl Command {
    pub fn parts(&self) -> (ExperimentKind, &RunArgs) {
        match self {
            Command::Optimize(a) => (ExperimentKind::Optimize, a),
            Command::NoiseGrid(a) => (ExperimentKind::NoiseGrid, a),
            Command::CircuitNoise(a) => (ExperimentKind::CircuitNoise, a),
            Command::BiasVariance(a) => (ExperimentKind::BiasVariance, a),
            Command::HyperStudy(a) => (ExperimentKind::HyperStudy, a),
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML file with any subset of the configuration keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n_qubits: Option<usize>,
    /// Comma-separated labels such as AAT_1_2, PAR_2_6 or classical.
    #[arg(long, value_delimiter = ',')]
    pub ansatz: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub delta_phi: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub c1: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub c2: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub p: Option<Vec<f64>>,
    #[arg(long)]
    pub quad_nodes: Option<usize>,
    /// Quadrature order for tensor-network evaluations under noise.
    #[arg(long)]
    pub eval_quad_nodes: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, value_enum)]
    pub init: Option<InitMode>,
    #[arg(long, value_enum)]
    pub engine: Option<EngineKind>,
    #[arg(long, value_enum)]
    pub decoding_path: Option<PathKind>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Extra seeded random starts per optimization.
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Saved parameters (params.json from an optimize run).
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Worker threads; 0 uses all cores.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Re-optimize circuit parameters under noise.
    #[arg(long)]
    pub reoptimize_noisy: bool,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub phi_grid: Option<Vec<f64>>,
    /// Discard any previous run in the output directory.
    #[arg(long)]
    pub fresh: bool,
}

impl RunArgs {
    pub fn resolve(&self, kind: ExperimentKind) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(kind, path)?,
            None => ExperimentConfig::defaults(kind),
        };
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = &self.$field { cfg.$field = v.clone(); })*
            };
        }
        set!(
            n_qubits, ansatz, delta_phi, c1, c2, p, quad_nodes, eval_quad_nodes, eps, init,
            engine, decoding_path, seed, restarts, out, threads, phi_grid
        );
        if self.params.is_some() {
            cfg.params = self.params.clone();
        }
        if self.reoptimize_noisy {
            cfg.reoptimize_noisy = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn main() -> Result<()> {
    let cli = Cli::parse();
    let (kind, args) = cli.command.parts();
    let cfg = args.resolve(kind)?;
    let summary = experiments::run(&cfg, args.fresh)?;
    eprintln!(
        "{}: {} units ({} resumed), {} rows -> {}",
        kind.name(),
        summary.units,
        summary.resumed_units,
        summary.rows.len(),
        cfg.out.display()
    );
    Ok(())
}
