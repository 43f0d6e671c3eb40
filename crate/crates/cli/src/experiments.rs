//! The five experiments. Each expands its config into indexed units of work
//! that run on a thread pool and are flushed in index order.

use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use vbqm_core::circuits::AnsatzSpec;
use vbqm_core::noisemodel::NoiseSpec;
use vbqm_core::objective::{estimator_curves, EstimatorPoint};
use vbqm_core::Error as CoreError;

use crate::config::{ExperimentConfig, ExperimentKind, InitMode};
use crate::output::{
    prepare_out_dir, read_results, write_curve, write_results, Manifest, OrderedSink, ParamEntry,
    ParamStore, ResultRow, UnitOutput, CURVES, PARAMS, RESULTS,
};
use crate::solve::{rule, ChainSolver, Settings};

/// Hyper-study cells worse than the best by more than this are flagged.
pub const FLAG_THRESHOLD: f64 = 1e-3;
/// Low-bias interval: `|bias| <= LOW_BIAS_FRACTION * dphi`.
pub const LOW_BIAS_FRACTION: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub rows: Vec<ResultRow>,
    pub units: usize,
    pub resumed_units: usize,
}

#[derive(Debug, Clone)]
enum Unit {
    Chain { delta_phi: f64 },
    Noisy { spec: AnsatzSpec, delta_phi: f64, noise: NoiseSpec },
    Curve { spec: AnsatzSpec, delta_phi: f64 },
    Hyper { delta_phi: f64, init: InitMode, eps: f64, nodes: usize },
}

impl Unit {
    fn key(&self) -> String {
        match self {
            Unit::Chain { delta_phi } => format!("dphi={delta_phi}"),
            Unit::Noisy { spec, delta_phi, noise } => format!(
                "{spec} dphi={delta_phi} c1={} c2={} p={}",
                noise.c1, noise.c2, noise.p
            ),
            Unit::Curve { spec, delta_phi } => format!("{spec} dphi={delta_phi}"),
            Unit::Hyper { delta_phi, init, eps, nodes } => {
                format!("dphi={delta_phi} init={} eps={eps} nodes={nodes}", init_name(*init))
            }
        }
    }
}

fn init_name(init: InitMode) -> &'static str {
    match init {
        InitMode::Zeros => "zeros",
        InitMode::Sequential => "sequential",
    }
}

fn units(cfg: &ExperimentConfig) -> Result<Vec<Unit>> {
    let specs = cfg.specs()?;
    let mut v = Vec::new();
    match cfg.kind {
        ExperimentKind::Optimize => {
            v.extend(cfg.delta_phi.iter().map(|&d| Unit::Chain { delta_phi: d }));
        }
        ExperimentKind::NoiseGrid | ExperimentKind::CircuitNoise => {
            for &delta_phi in &cfg.delta_phi {
                for &spec in &specs {
                    for &c1 in &cfg.c1 {
                        for &c2 in &cfg.c2 {
                            for &p in &cfg.p {
                                let noise = NoiseSpec { c1, c2, p };
                                v.push(Unit::Noisy { spec, delta_phi, noise });
                            }
                        }
                    }
                }
            }
        }
        ExperimentKind::BiasVariance => {
            for &delta_phi in &cfg.delta_phi {
                v.extend(specs.iter().map(|&spec| Unit::Curve { spec, delta_phi }));
            }
        }
        ExperimentKind::HyperStudy => {
            for &delta_phi in &cfg.delta_phi {
                for &init in &cfg.hyper.init {
                    for &eps in &cfg.hyper.eps {
                        for &nodes in &cfg.hyper.quad_nodes {
                            v.push(Unit::Hyper { delta_phi, init, eps, nodes });
                        }
                    }
                }
            }
        }
    }
    Ok(v)
}

fn settings(cfg: &ExperimentConfig, delta_phi: f64) -> Result<Settings> {
    Ok(Settings {
        n_qubits: cfg.n_qubits,
        delta_phi,
        rule: rule(cfg.quad_nodes)?,
        engine: cfg.noiseless_engine(),
        noise: None,
        optimizer: cfg.optimizer(),
        init: cfg.init,
        restarts: cfg.restarts,
        seed: cfg.seed,
    })
}

fn base_row(cfg: &ExperimentConfig, spec: &AnsatzSpec, delta_phi: f64) -> ResultRow {
    ResultRow {
        experiment: cfg.kind.name().to_string(),
        ansatz: spec.label(),
        n_qubits: cfg.n_qubits,
        delta_phi,
        quad_nodes: cfg.quad_nodes,
        status: "ok".into(),
        ..Default::default()
    }
}

/// Runs the experiment described by `cfg`, resuming a matching partial run
/// in `cfg.out` unless `fresh`.
pub fn run(cfg: &ExperimentConfig, fresh: bool) -> Result<RunSummary> {
    cfg.validate()?;
    let out = cfg.out.as_path();
    let manifest = Manifest::new(cfg);
    let done = prepare_out_dir(out, &manifest, fresh)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .context("building thread pool")?;
    let units = units(cfg)?;

    pool.install(|| -> Result<()> {
        let store = match cfg.kind {
            ExperimentKind::Optimize | ExperimentKind::HyperStudy => None,
            _ => Some(noiseless_params(cfg, done > 0)?),
        };
        let sink = OrderedSink::open(out, done)?;
        units
            .par_iter()
            .enumerate()
            .skip(done)
            .try_for_each(|(i, unit)| -> Result<()> {
                let t = Instant::now();
                let rows = execute(cfg, unit, store.as_ref(), i)
                    .with_context(|| format!("unit {i} ({})", unit.key()))?;
                sink.submit(i, UnitOutput { key: unit.key(), rows, elapsed: t.elapsed() })
            })
    })?;

    finalize(cfg, units.len())?;
    Ok(RunSummary {
        rows: read_results(&out.join(RESULTS))?,
        units: units.len(),
        resumed_units: done,
    })
}

fn execute(
    cfg: &ExperimentConfig,
    unit: &Unit,
    store: Option<&ParamStore>,
    index: usize,
) -> Result<Vec<ResultRow>> {
    match *unit {
        Unit::Chain { delta_phi } => {
            let mut solver = ChainSolver::new(settings(cfg, delta_phi)?);
            let mut rows = Vec::new();
            let mut entries = Vec::new();
            for spec in cfg.specs()? {
                let s = solver.solve(spec)?;
                rows.push(ResultRow {
                    init: Some(init_name(cfg.init).into()),
                    eps: Some(cfg.eps),
                    a_opt: Some(s.a_opt),
                    bmse_ratio: Some(s.ratio.sqrt()),
                    stages: Some(s.stages),
                    evaluations: Some(s.evaluations),
                    ..base_row(cfg, &spec, delta_phi)
                });
                entries.push(ParamEntry {
                    ansatz: spec.label(),
                    delta_phi,
                    params: s.params,
                    bmse_ratio: s.ratio.sqrt(),
                });
            }
            let dir = cfg.out.join("params");
            fs::create_dir_all(&dir)?;
            let part = ParamStore { n_qubits: cfg.n_qubits, entries };
            part.write(&dir.join(format!("unit-{index:05}.json")))?;
            Ok(rows)
        }
        Unit::Noisy { spec, delta_phi, noise } => {
            let store = store.ok_or_else(|| anyhow!("missing parameters"))?;
            noisy_row(cfg, spec, delta_phi, noise, store).map(|r| vec![r])
        }
        Unit::Curve { spec, delta_phi } => {
            let store = store.ok_or_else(|| anyhow!("missing parameters"))?;
            curve_row(cfg, spec, delta_phi, store).map(|r| vec![r])
        }
        Unit::Hyper { delta_phi, init, eps, nodes } => {
            let mut s = settings(cfg, delta_phi)?;
            s.rule = rule(nodes)?;
            s.init = init;
            s.optimizer.eps1 = eps;
            s.optimizer.eps2 = eps;
            s.optimizer.eps3 = eps;
            let mut solver = ChainSolver::new(s);
            let reference = ChainSolver::new(settings(cfg, delta_phi)?);
            let mut rows = Vec::new();
            for spec in cfg.specs()? {
                let solved = solver.solve(spec)?;
                // Cells are compared on the reference quadrature.
                let eval = reference.objective(spec)?.evaluate(&solved.params)?;
                rows.push(ResultRow {
                    init: Some(init_name(init).into()),
                    eps: Some(eps),
                    quad_nodes: nodes,
                    a_opt: Some(eval.a_opt),
                    bmse_ratio: Some(eval.ratio.sqrt()),
                    stages: Some(solved.stages),
                    evaluations: Some(solved.evaluations),
                    ..base_row(cfg, &spec, delta_phi)
                });
            }
            Ok(rows)
        }
    }
}

fn lookup<'a>(store: &'a ParamStore, spec: &AnsatzSpec, delta_phi: f64) -> Result<&'a ParamEntry> {
    store.get(&spec.label(), delta_phi).ok_or_else(|| {
        anyhow!("no saved parameters for {spec} at delta_phi = {delta_phi}")
    })
}

fn noisy_row(
    cfg: &ExperimentConfig,
    spec: AnsatzSpec,
    delta_phi: f64,
    noise: NoiseSpec,
    store: &ParamStore,
) -> Result<ResultRow> {
    let mut row = ResultRow {
        c1: Some(noise.c1),
        c2: Some(noise.c2),
        p: Some(noise.p),
        quad_nodes: cfg.eval_quad_nodes,
        init: Some(if cfg.reoptimize_noisy { "reoptimized" } else { "frozen" }.into()),
        ..base_row(cfg, &spec, delta_phi)
    };
    match noise.validate(cfg.n_qubits) {
        Ok(()) => {}
        Err(CoreError::NotPositiveSemidefinite { .. }) => {
            row.status = "skipped: covariance not positive semidefinite".into();
            return Ok(row);
        }
        Err(e) => return Err(e.into()),
    }
    let frozen = &lookup(store, &spec, delta_phi)?.params;
    let solver = ChainSolver::new(Settings {
        rule: rule(cfg.eval_quad_nodes)?,
        engine: cfg.tensornet(),
        noise: Some(noise),
        ..settings(cfg, delta_phi)?
    });
    if cfg.reoptimize_noisy {
        let s = solver.optimize_from(spec, frozen)?;
        row.a_opt = Some(s.a_opt);
        row.bmse_ratio = Some(s.ratio.sqrt());
        row.stages = Some(s.stages);
        row.evaluations = Some(s.evaluations);
        row.eps = Some(cfg.eps);
    } else {
        let e = solver.objective(spec)?.evaluate(frozen)?;
        row.a_opt = Some(e.a_opt);
        row.bmse_ratio = Some(e.ratio.sqrt());
    }
    Ok(row)
}

/// Largest grid `|phi|` such that every grid point at most that far from
/// zero has `|bias| <= LOW_BIAS_FRACTION * dphi`.
pub fn low_bias_halfwidth(points: &[EstimatorPoint], delta_phi: f64) -> f64 {
    let mut sorted: Vec<&EstimatorPoint> = points.iter().collect();
    sorted.sort_by(|a, b| a.phi.abs().total_cmp(&b.phi.abs()));
    let mut width = 0.0;
    for p in sorted {
        if p.bias.abs() > LOW_BIAS_FRACTION * delta_phi {
            break;
        }
        width = p.phi.abs();
    }
    width
}

pub fn curve_file(out: &Path, spec: &AnsatzSpec, delta_phi: f64) -> std::path::PathBuf {
    out.join(CURVES)
        .join(format!("bias_variance_{}_dphi{}.csv", spec.label(), delta_phi))
}

fn curve_row(
    cfg: &ExperimentConfig,
    spec: AnsatzSpec,
    delta_phi: f64,
    store: &ParamStore,
) -> Result<ResultRow> {
    let params = &lookup(store, &spec, delta_phi)?.params;
    let solver = ChainSolver::new(settings(cfg, delta_phi)?);
    let eval = solver.objective(spec)?.evaluate(params)?;
    let (enc, dec) = spec.with_qubits(cfg.n_qubits).build(params)?;
    let engine = cfg.noiseless_engine();
    let points = estimator_curves(cfg.n_qubits, &enc, &dec, eval.a_opt, &cfg.phi_grid, &engine, None)?;
    let rows: Vec<Vec<f64>> = points
        .iter()
        .map(|p| vec![p.phi, p.mean, p.variance, p.bias])
        .collect();
    write_curve(
        &curve_file(&cfg.out, &spec, delta_phi),
        &["phi", "mean", "variance", "bias"],
        &rows,
    )?;
    Ok(ResultRow {
        a_opt: Some(eval.a_opt),
        bmse_ratio: Some(eval.ratio.sqrt()),
        low_bias_halfwidth: Some(low_bias_halfwidth(&points, delta_phi)),
        ..base_row(cfg, &spec, delta_phi)
    })
}

/// Parameters for the frozen-parameter studies: a user file, the cache of a
/// resumed run, or a fresh noiseless optimization.
fn noiseless_params(cfg: &ExperimentConfig, resuming: bool) -> Result<ParamStore> {
    let specs = cfg.specs()?;
    let check = |store: ParamStore| -> Result<ParamStore> {
        if store.n_qubits != cfg.n_qubits {
            bail!("saved parameters are for {} qubits, not {}", store.n_qubits, cfg.n_qubits);
        }
        for d in &cfg.delta_phi {
            for s in &specs {
                lookup(&store, s, *d)?;
            }
        }
        Ok(store)
    };
    if let Some(path) = &cfg.params {
        return check(ParamStore::read(path)?);
    }
    let cache = cfg.out.join(PARAMS);
    if resuming && cache.exists() {
        if let Ok(store) = ParamStore::read(&cache).and_then(check) {
            return Ok(store);
        }
    }
    let parts: Vec<Vec<ParamEntry>> = cfg
        .delta_phi
        .par_iter()
        .map(|&delta_phi| -> Result<Vec<ParamEntry>> {
            let mut solver = ChainSolver::new(settings(cfg, delta_phi)?);
            specs
                .iter()
                .map(|&spec| {
                    let s = solver.solve(spec)?;
                    Ok(ParamEntry {
                        ansatz: spec.label(),
                        delta_phi,
                        params: s.params,
                        bmse_ratio: s.ratio.sqrt(),
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let store = ParamStore {
        n_qubits: cfg.n_qubits,
        entries: parts.into_iter().flatten().collect(),
    };
    store.write(&cache)?;
    Ok(store)
}

fn finalize(cfg: &ExperimentConfig, n_units: usize) -> Result<()> {
    let out = cfg.out.as_path();
    let mut rows = read_results(&out.join(RESULTS))?;
    match cfg.kind {
        ExperimentKind::Optimize => {
            let dir = out.join("params");
            let mut store = ParamStore { n_qubits: cfg.n_qubits, entries: Vec::new() };
            for i in 0..n_units {
                let part = ParamStore::read(&dir.join(format!("unit-{i:05}.json")))?;
                store.entries.extend(part.entries);
            }
            store.write(&out.join(PARAMS))?;
            for spec in cfg.specs()? {
                let pts: Vec<Vec<f64>> = rows
                    .iter()
                    .filter(|r| r.ansatz == spec.label())
                    .filter_map(|r| Some(vec![r.delta_phi, r.bmse_ratio?]))
                    .collect();
                let path = out.join(CURVES).join(format!("optimize_{}.csv", spec.label()));
                write_curve(&path, &["delta_phi", "bmse_ratio"], &pts)?;
            }
        }
        ExperimentKind::NoiseGrid | ExperimentKind::CircuitNoise => {
            let (x, name): (fn(&ResultRow) -> Option<f64>, &str) = match cfg.kind {
                ExperimentKind::NoiseGrid => (|r| r.c2, "c2"),
                _ => (|r| r.p, "p"),
            };
            let mut groups: Vec<(String, f64, f64, f64, Vec<Vec<f64>>)> = Vec::new();
            for r in &rows {
                let Some(y) = r.bmse_ratio else { continue };
                let other = if name == "c2" { (r.c1.unwrap_or(0.0), r.p.unwrap_or(0.0)) } else { (r.c1.unwrap_or(0.0), r.c2.unwrap_or(0.0)) };
                let pos = groups.iter().position(|g| g.0 == r.ansatz && g.1 == r.delta_phi && (g.2, g.3) == other);
                let pt = vec![x(r).unwrap_or(0.0), y];
                match pos {
                    Some(i) => groups[i].4.push(pt),
                    None => groups.push((r.ansatz.clone(), r.delta_phi, other.0, other.1, vec![pt])),
                }
            }
            for (ansatz, d, a, b, pts) in groups {
                let tag = if name == "c2" { format!("c1{a}_p{b}") } else { format!("c1{a}_c2{b}") };
                let path = out
                    .join(CURVES)
                    .join(format!("{}_{ansatz}_dphi{d}_{tag}.csv", cfg.kind.name().replace('-', "_")));
                write_curve(&path, &[name, "bmse_ratio"], &pts)?;
            }
        }
        ExperimentKind::BiasVariance => {}
        ExperimentKind::HyperStudy => {
            let best = |r: &ResultRow| {
                rows.iter()
                    .filter(|o| o.ansatz == r.ansatz && o.delta_phi == r.delta_phi)
                    .filter_map(|o| o.bmse_ratio)
                    .fold(f64::INFINITY, f64::min)
            };
            let flags: Vec<Option<bool>> = rows
                .iter()
                .map(|r| r.bmse_ratio.map(|v| v > best(r) + FLAG_THRESHOLD))
                .collect();
            for (r, f) in rows.iter_mut().zip(flags) {
                r.flagged = f;
            }
            write_results(&out.join(RESULTS), &rows)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(phi: f64, bias: f64) -> EstimatorPoint {
        EstimatorPoint { phi, mean: phi + bias, variance: 0.0, bias }
    }

    #[test]
    fn low_bias_stops_at_first_violation() {
        let pts = [pt(-0.2, 0.0), pt(0.0, 0.0), pt(0.1, 0.001), pt(0.3, 0.1), pt(0.4, 0.0)];
        assert_eq!(low_bias_halfwidth(&pts, 1.0), 0.2);
    }

    #[test]
    fn unit_counts() {
        let mut cfg = ExperimentConfig::defaults(ExperimentKind::NoiseGrid);
        assert_eq!(units(&cfg).unwrap().len(), 25);
        cfg.kind = ExperimentKind::HyperStudy;
        assert_eq!(units(&cfg).unwrap().len(), 8);
    }
}
