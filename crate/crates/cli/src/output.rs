//! Result tables, run manifest and the resume log.
//!
//! Units of work finish in any order but are written in index order, one
//! flush per unit, so an interrupted run leaves a valid prefix of the table.
//! `timings.csv` records each flushed unit and doubles as the resume log.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use vbqm_core::optimize::NM_COEFFICIENTS;

use crate::config::ExperimentConfig;

pub const RESULTS: &str = "results.csv";
pub const MANIFEST: &str = "manifest.toml";
pub const TIMINGS: &str = "timings.csv";
pub const PARAMS: &str = "params.json";
pub const CURVES: &str = "curves";

/// One line of `results.csv`. Columns that do not apply to an experiment are
/// left empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ResultRow {
    pub experiment: String,
    pub ansatz: String,
    pub n_qubits: usize,
    pub delta_phi: f64,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub p: Option<f64>,
    pub init: Option<String>,
    pub eps: Option<f64>,
    pub quad_nodes: usize,
    pub a_opt: Option<f64>,
    /// `sqrt(BMSE) / dphi`.
    pub bmse_ratio: Option<f64>,
    pub stages: Option<usize>,
    /// Objective evaluations, all starts included.
    pub evaluations: Option<usize>,
    /// Half-width of the low-bias interval around zero (bias-variance only).
    pub low_bias_halfwidth: Option<f64>,
    /// Hyper-study cells more than 1e-3 above the best cell.
    pub flagged: Option<bool>,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub experiment: String,
    pub version: String,
    pub seed: u64,
    pub nm_coefficients: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub run: RunInfo,
    pub config: ExperimentConfig,
}

impl Manifest {
    pub fn new(config: &ExperimentConfig) -> Self {
        Self {
            run: RunInfo {
                experiment: config.kind.name().to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                seed: config.seed,
                nm_coefficients: NM_COEFFICIENTS.to_vec(),
            },
            config: config.clone(),
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, toml::to_string_pretty(self)?)?;
        Ok(())
    }

    /// Same computation, ignoring where it is written and how many threads.
    pub fn same_run(&self, other: &Manifest) -> bool {
        let strip = |m: &Manifest| {
            let mut m = m.clone();
            m.config.out = PathBuf::new();
            m.config.threads = 0;
            m
        };
        strip(self) == strip(other)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TimingRow {
    unit: usize,
    key: String,
    rows: usize,
    seconds: f64,
}

/// Prepares `out` and returns how many units are already complete.
///
/// A matching manifest resumes: the table is cut back to the rows of the
/// logged units. `fresh` discards any previous run.
pub fn prepare_out_dir(out: &Path, manifest: &Manifest, fresh: bool) -> Result<usize> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mpath = out.join(MANIFEST);
    let results = out.join(RESULTS);
    let timings = out.join(TIMINGS);
    if !fresh && mpath.exists() {
        let old = Manifest::read(&mpath)?;
        if !old.same_run(manifest) {
            bail!(
                "{} holds a different run; pass --fresh to overwrite it",
                out.display()
            );
        }
        let done = read_timings(&timings)?;
        let keep_rows: usize = done.iter().map(|t| t.rows).sum();
        truncate_lines(&results, keep_rows + 1)?;
        rewrite_timings(&timings, &done)?;
        manifest.write(&mpath)?;
        return Ok(done.len());
    }
    for f in [RESULTS, TIMINGS, PARAMS] {
        let p = out.join(f);
        if p.exists() {
            fs::remove_file(&p)?;
        }
    }
    let curves = out.join(CURVES);
    if curves.exists() {
        fs::remove_dir_all(&curves)?;
    }
    manifest.write(&mpath)?;
    Ok(0)
}

fn read_timings(path: &Path) -> Result<Vec<TimingRow>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut rdr = csv::Reader::from_path(path)?;
    let mut done = Vec::new();
    for r in rdr.deserialize::<TimingRow>() {
        // A torn last line from a crash ends the log.
        let Ok(r) = r else { break };
        if r.unit != done.len() {
            break;
        }
        done.push(r);
    }
    Ok(done)
}

fn rewrite_timings(path: &Path, rows: &[TimingRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if rows.is_empty() {
        w.write_record(["unit", "key", "rows", "seconds"])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn truncate_lines(path: &Path, lines: usize) -> Result<()> {
    if !path.exists() {
        return Ok(());
    }
    let reader = BufReader::new(File::open(path)?);
    let mut kept = String::new();
    for line in reader.lines().take(lines) {
        kept.push_str(&line?);
        kept.push('\n');
    }
    fs::write(path, kept)?;
    Ok(())
}

/// Output of one unit of work.
pub struct UnitOutput {
    pub key: String,
    pub rows: Vec<ResultRow>,
    pub elapsed: Duration,
}

struct SinkState {
    next: usize,
    pending: BTreeMap<usize, UnitOutput>,
    results: File,
    timings: File,
    header_written: bool,
}

/// Writes unit outputs in index order as soon as a contiguous prefix is
/// available.
pub struct OrderedSink {
    state: Mutex<SinkState>,
}

impl OrderedSink {
    pub fn open(out: &Path, first_unit: usize) -> Result<Self> {
        let rpath = out.join(RESULTS);
        let header_written = rpath.exists() && fs::metadata(&rpath)?.len() > 0;
        let results = OpenOptions::new().create(true).append(true).open(&rpath)?;
        let tpath = out.join(TIMINGS);
        let tnew = !tpath.exists() || fs::metadata(&tpath)?.len() == 0;
        let mut timings = OpenOptions::new().create(true).append(true).open(&tpath)?;
        if tnew {
            writeln!(timings, "unit,key,rows,seconds")?;
        }
        Ok(Self {
            state: Mutex::new(SinkState {
                next: first_unit,
                pending: BTreeMap::new(),
                results,
                timings,
                header_written,
            }),
        })
    }

    pub fn submit(&self, index: usize, output: UnitOutput) -> Result<()> {
        let mut st = self.state.lock().expect("sink poisoned");
        st.pending.insert(index, output);
        loop {
            let next = st.next;
            let Some(out) = st.pending.remove(&next) else {
                break;
            };
            let mut w = csv::WriterBuilder::new()
                .has_headers(!st.header_written)
                .from_writer(Vec::new());
            for r in &out.rows {
                w.serialize(r)?;
            }
            if out.rows.is_empty() && !st.header_written {
                w.write_record(RESULT_HEADER)?;
            }
            let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
            st.results.write_all(&bytes)?;
            st.results.sync_data()?;
            st.header_written = true;
            let mut t = csv::WriterBuilder::new()
                .has_headers(false)
                .from_writer(Vec::new());
            t.serialize(TimingRow {
                unit: next,
                key: out.key.clone(),
                rows: out.rows.len(),
                seconds: out.elapsed.as_secs_f64(),
            })?;
            let bytes = t.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
            st.timings.write_all(&bytes)?;
            st.timings.sync_data()?;
            st.next += 1;
        }
        Ok(())
    }
}

const RESULT_HEADER: [&str; 17] = [
    "experiment",
    "ansatz",
    "n_qubits",
    "delta_phi",
    "c1",
    "c2",
    "p",
    "init",
    "eps",
    "quad_nodes",
    "a_opt",
    "bmse_ratio",
    "stages",
    "evaluations",
    "low_bias_halfwidth",
    "flagged",
    "status",
];

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let mut rdr = csv::Reader::from_path(path)?;
    Ok(rdr.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Replaces `results.csv` atomically.
pub fn write_results(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let tmp = path.with_extension("csv.tmp");
    {
        let mut w = csv::Writer::from_path(&tmp)?;
        if rows.is_empty() {
            w.write_record(RESULT_HEADER)?;
        }
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// `(x, y[, y_err])` plot data.
pub fn write_curve(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Saved circuit parameters, keyed by ansatz label and prior width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ParamStore {
    pub n_qubits: usize,
    pub entries: Vec<ParamEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub ansatz: String,
    pub delta_phi: f64,
    pub params: Vec<f64>,
    pub bmse_ratio: f64,
}

impl ParamStore {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn get(&self, ansatz: &str, delta_phi: f64) -> Option<&ParamEntry> {
        self.entries
            .iter()
            .find(|e| e.ansatz == ansatz && (e.delta_phi - delta_phi).abs() <= 1e-12)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentKind;

    fn row(i: usize) -> ResultRow {
        ResultRow {
            experiment: "optimize".into(),
            ansatz: format!("AAT_{i}_0"),
            n_qubits: 3,
            delta_phi: 0.1 * i as f64,
            status: "ok".into(),
            bmse_ratio: Some(1.0 / 3.0),
            ..Default::default()
        }
    }

    #[test]
    fn sink_orders_units() {
        let dir = tempfile::tempdir().unwrap();
        let m = Manifest::new(&ExperimentConfig::defaults(ExperimentKind::Optimize));
        assert_eq!(prepare_out_dir(dir.path(), &m, false).unwrap(), 0);
        let sink = OrderedSink::open(dir.path(), 0).unwrap();
        for i in [2, 0, 1] {
            let out = UnitOutput { key: i.to_string(), rows: vec![row(i)], elapsed: Duration::ZERO };
            sink.submit(i, out).unwrap();
        }
        let rows = read_results(&dir.path().join(RESULTS)).unwrap();
        assert_eq!(rows, vec![row(0), row(1), row(2)]);
    }

    #[test]
    fn out_of_order_units_wait() {
        let dir = tempfile::tempdir().unwrap();
        let m = Manifest::new(&ExperimentConfig::defaults(ExperimentKind::Optimize));
        prepare_out_dir(dir.path(), &m, false).unwrap();
        let sink = OrderedSink::open(dir.path(), 0).unwrap();
        sink.submit(1, UnitOutput { key: "1".into(), rows: vec![row(1)], elapsed: Duration::ZERO }).unwrap();
        drop(sink);
        assert_eq!(prepare_out_dir(dir.path(), &m, false).unwrap(), 0);
    }

    #[test]
    fn manifest_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let m = Manifest::new(&ExperimentConfig::defaults(ExperimentKind::CircuitNoise));
        let p = dir.path().join(MANIFEST);
        m.write(&p).unwrap();
        assert_eq!(Manifest::read(&p).unwrap(), m);
    }
}
