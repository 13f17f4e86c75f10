use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::harness::store::{self, path_component};
use crate::trace::TraceRecord;

/// One row of a convergence file.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergencePoint {
    pub fes: usize,
    pub mean_best: f64,
    pub mean_selected: f64,
}

/// Averages several runs' traces evaluation by evaluation. Runs shorter than
/// the longest one hold their last record, since best-so-far cannot change
/// after a search stops.
pub fn convergence_series(traces: &[&[TraceRecord]]) -> Vec<ConvergencePoint> {
    let traces: Vec<&[TraceRecord]> = traces.iter().copied().filter(|t| !t.is_empty()).collect();
    let len = traces.iter().map(|t| t.len()).max().unwrap_or(0);
    let n = traces.len() as f64;
    (0..len)
        .map(|i| {
            let at = |t: &&[TraceRecord]| t[i.min(t.len() - 1)];
            ConvergencePoint {
                fes: i + 1,
                mean_best: traces.iter().map(|t| at(t).best.percent()).sum::<f64>() / n,
                mean_selected: traces.iter().map(|t| at(t).selected as f64).sum::<f64>() / n,
            }
        })
        .collect()
}

/// Writes `<out>/<dataset>__<algorithm>.csv` with columns
/// `fes,mean_best_accuracy,mean_selected` for every (algorithm, dataset)
/// pair that has at least one stored trace.
pub fn emit_convergence(experiment_dir: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    let runs = store::read_runs(experiment_dir)?;
    let mut groups: BTreeMap<(String, String), Vec<Vec<TraceRecord>>> = BTreeMap::new();
    for run in runs {
        if !run.trace.is_empty() {
            groups
                .entry((run.record.dataset.clone(), run.record.algorithm.clone()))
                .or_default()
                .push(run.trace);
        }
    }
    if groups.is_empty() {
        return Err(Error::Config(format!(
            "no traces stored under {}",
            experiment_dir.display()
        )));
    }
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut written = Vec::new();
    for ((dataset, algorithm), traces) in groups {
        let refs: Vec<&[TraceRecord]> = traces.iter().map(Vec::as_slice).collect();
        let path = out.join(format!(
            "{}__{}.csv",
            path_component(&dataset),
            path_component(&algorithm.replace(':', "-"))
        ));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["fes", "mean_best_accuracy", "mean_selected"])?;
        for p in convergence_series(&refs) {
            w.write_record([
                p.fes.to_string(),
                p.mean_best.to_string(),
                p.mean_selected.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
