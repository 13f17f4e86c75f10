//! On-disk layout of an experiment directory:
//!
//! ```text
//! <dir>/config.toml
//! <dir>/runs/<dataset>/<algorithm>/run_<r>.jsonl   summary line, then one line per evaluation
//! <dir>/report.json
//! <dir>/report.txt
//! ```

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::TraceRecord;

pub const CONFIG_FILE: &str = "config.toml";
pub const RUNS_DIR: &str = "runs";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TXT: &str = "report.txt";

/// Outcome of one (algorithm, dataset, run) cell of the matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algorithm: String,
    pub dataset: String,
    pub run: usize,
    pub seed: u64,
    pub fold_seed: u64,
    /// Final accuracy in percent; `None` when the run failed.
    pub accuracy: Option<f64>,
    pub selected: Option<usize>,
    /// Selected original feature indices.
    pub features: Vec<usize>,
    pub fes_used: usize,
    pub wall_time_s: f64,
    pub handoff_fes: Option<usize>,
    pub error: Option<String>,
}

impl RunRecord {
    pub fn is_ok(&self) -> bool {
        self.error.is_none() && self.accuracy.is_some()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Line {
    Summary(RunRecord),
    Step(TraceRecord),
}

#[derive(Clone, Debug, PartialEq)]
pub struct StoredRun {
    pub record: RunRecord,
    pub trace: Vec<TraceRecord>,
}

/// Keeps `[A-Za-z0-9._-]`, replaces everything else with `_`.
pub fn path_component(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub fn run_file(dir: &Path, dataset: &str, algorithm_stem: &str, run: usize) -> PathBuf {
    dir.join(RUNS_DIR)
        .join(path_component(dataset))
        .join(path_component(algorithm_stem))
        .join(format!("run_{run:03}.jsonl"))
}

pub fn write_run(path: &Path, record: &RunRecord, trace: &[TraceRecord]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    serde_json::to_writer(&mut w, &Line::Summary(record.clone()))?;
    w.write_all(b"\n").map_err(io)?;
    for r in trace {
        serde_json::to_writer(&mut w, &Line::Step(*r))?;
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_run(path: &Path) -> Result<StoredRun> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut record = None;
    let mut trace = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line)? {
            Line::Summary(r) => record = Some(r),
            Line::Step(s) => trace.push(s),
        }
    }
    let record =
        record.ok_or_else(|| Error::Config(format!("{} has no summary line", path.display())))?;
    Ok(StoredRun { record, trace })
}

/// Every stored run under `dir`, ordered by (dataset, algorithm, run).
pub fn read_runs(dir: &Path) -> Result<Vec<StoredRun>> {
    let root = dir.join(RUNS_DIR);
    let mut files = Vec::new();
    collect_jsonl(&root, &mut files)?;
    let mut runs = files
        .iter()
        .map(|p| read_run(p))
        .collect::<Result<Vec<_>>>()?;
    runs.sort_by(|a, b| {
        (&a.record.dataset, &a.record.algorithm, a.record.run).cmp(&(
            &b.record.dataset,
            &b.record.algorithm,
            b.record.run,
        ))
    });
    Ok(runs)
}

fn collect_jsonl(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    if !dir.is_dir() {
        return Ok(());
    }
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_dir() {
            collect_jsonl(&path, out)?;
        } else if path.extension().is_some_and(|e| e == "jsonl") {
            out.push(path);
        }
    }
    Ok(())
}
