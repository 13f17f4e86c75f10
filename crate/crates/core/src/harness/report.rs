use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::harness::store::RunRecord;
use crate::stats::{friedman_mean_ranks, wilcoxon_ranksum_with, ComparisonMark, PValueMethod};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub worst: f64,
    pub best: f64,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(Self {
            worst: values.iter().copied().fold(f64::INFINITY, f64::min),
            best: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean,
            std,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub algorithm: String,
    pub dataset: String,
    pub runs_ok: usize,
    pub runs_failed: usize,
    /// `None` when no run of this cell succeeded.
    pub accuracy: Option<Summary>,
    pub mean_selected: Option<f64>,
    pub mean_wall_time_s: Option<f64>,
}

/// Rank-sum comparison of the reference algorithm against `algorithm`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkEntry {
    pub dataset: String,
    pub algorithm: String,
    pub p_value: f64,
    pub mark: ComparisonMark,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub algorithm: String,
    pub dataset: String,
    pub run: usize,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub algorithms: Vec<String>,
    pub datasets: Vec<String>,
    pub reference: Option<String>,
    pub cells: Vec<CellStats>,
    pub marks: Vec<MarkEntry>,
    /// Mean Friedman rank per algorithm on mean accuracy, in `algorithms`
    /// order. Needs at least two datasets and two algorithms with no
    /// missing cell.
    pub friedman_accuracy: Option<Vec<f64>>,
    /// Same on mean selected-feature count (fewer is better).
    pub friedman_selected: Option<Vec<f64>>,
    pub failures: Vec<RunFailure>,
}

impl ExperimentReport {
    pub fn cell(&self, algorithm: &str, dataset: &str) -> Option<&CellStats> {
        self.cells
            .iter()
            .find(|c| c.algorithm == algorithm && c.dataset == dataset)
    }

    pub fn mark(&self, algorithm: &str, dataset: &str) -> Option<&MarkEntry> {
        self.marks
            .iter()
            .find(|m| m.algorithm == algorithm && m.dataset == dataset)
    }

    pub fn is_success(&self) -> bool {
        self.failures.is_empty()
    }

    /// The report with wall-time fields cleared, for reproducibility checks.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        for c in &mut r.cells {
            c.mean_wall_time_s = None;
        }
        r
    }

    /// Aligned text tables: accuracy with significance marks, selected
    /// features, running time.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "experiment: {}", self.name);
        if let Some(r) = &self.reference {
            let _ = writeln!(
                out,
                "reference: {r} (+/-/≈: reference better/worse/similar)"
            );
        }

        let acc = |c: &CellStats| match &c.accuracy {
            Some(s) => format!("{:.2}±{:.2}", s.mean, s.std),
            None => "missing".into(),
        };
        self.table(
            &mut out,
            "mean accuracy (%)",
            self.friedman_accuracy.as_deref(),
            |a, d| {
                let c = self.cell(a, d)?;
                let mut s = acc(c);
                if let Some(m) = self.mark(a, d) {
                    let _ = write!(s, " ({})", m.mark);
                }
                Some(s)
            },
        );
        self.table(
            &mut out,
            "mean selected features",
            self.friedman_selected.as_deref(),
            |a, d| self.cell(a, d)?.mean_selected.map(|v| format!("{v:.2}")),
        );
        self.table(&mut out, "mean wall time (s)", None, |a, d| {
            self.cell(a, d)?.mean_wall_time_s.map(|v| format!("{v:.3}"))
        });

        if !self.failures.is_empty() {
            let _ = writeln!(out, "\nfailed runs:");
            for f in &self.failures {
                let _ = writeln!(
                    out,
                    "  {} / {} / run {}: {}",
                    f.dataset, f.algorithm, f.run, f.error
                );
            }
        }
        out
    }

    fn table(
        &self,
        out: &mut String,
        title: &str,
        ranks: Option<&[f64]>,
        cell: impl Fn(&str, &str) -> Option<String>,
    ) {
        let mut rows: Vec<Vec<String>> = Vec::new();
        let mut header = vec!["dataset".to_string()];
        header.extend(self.algorithms.iter().cloned());
        rows.push(header);
        for d in &self.datasets {
            let mut row = vec![d.clone()];
            row.extend(
                self.algorithms
                    .iter()
                    .map(|a| cell(a, d).unwrap_or_else(|| "-".into())),
            );
            rows.push(row);
        }
        if let Some(ranks) = ranks {
            let mut row = vec!["friedman rank".to_string()];
            row.extend(ranks.iter().map(|r| format!("{r:.2}")));
            rows.push(row);
        }
        let widths: Vec<usize> = (0..rows[0].len())
            .map(|i| rows.iter().map(|r| r[i].chars().count()).max().unwrap_or(0))
            .collect();
        let _ = writeln!(out, "\n{title}");
        for row in rows {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(s, &w)| format!("{s:<w$}"))
                .collect();
            let _ = writeln!(out, "  {}", line.join("  ").trim_end());
        }
    }
}

/// Aggregates per-run records into a report. Cell order follows
/// `datasets` then `algorithms`.
pub fn aggregate(
    name: &str,
    algorithms: &[String],
    datasets: &[String],
    reference: Option<&str>,
    alpha: f64,
    records: &[RunRecord],
) -> Result<ExperimentReport> {
    let ok_values = |a: &str, d: &str, f: &dyn Fn(&RunRecord) -> Option<f64>| -> Vec<f64> {
        let mut rs: Vec<&RunRecord> = records
            .iter()
            .filter(|r| r.algorithm == a && r.dataset == d && r.is_ok())
            .collect();
        rs.sort_by_key(|r| r.run);
        rs.into_iter().filter_map(f).collect()
    };

    let mut cells = Vec::new();
    for d in datasets {
        for a in algorithms {
            let accuracies = ok_values(a, d, &|r| r.accuracy);
            let selected = ok_values(a, d, &|r| r.selected.map(|s| s as f64));
            let times = ok_values(a, d, &|r| Some(r.wall_time_s));
            let failed = records
                .iter()
                .filter(|r| &r.algorithm == a && &r.dataset == d && !r.is_ok())
                .count();
            let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
            cells.push(CellStats {
                algorithm: a.clone(),
                dataset: d.clone(),
                runs_ok: accuracies.len(),
                runs_failed: failed,
                accuracy: Summary::of(&accuracies),
                mean_selected: mean(&selected),
                mean_wall_time_s: mean(&times),
            });
        }
    }

    let mut marks = Vec::new();
    if let Some(reference) = reference.filter(|r| algorithms.iter().any(|a| a == r)) {
        for d in datasets {
            let ref_values = ok_values(reference, d, &|r| r.accuracy);
            for a in algorithms.iter().filter(|a| a.as_str() != reference) {
                let values = ok_values(a, d, &|r| r.accuracy);
                if ref_values.len() < 2 || values.len() < 2 {
                    continue;
                }
                let test =
                    wilcoxon_ranksum_with(&ref_values, &values, alpha, PValueMethod::Normal, true)?;
                marks.push(MarkEntry {
                    dataset: d.clone(),
                    algorithm: a.clone(),
                    p_value: test.p_value,
                    mark: test.mark,
                });
            }
        }
    }

    let table = |f: &dyn Fn(&CellStats) -> Option<f64>| -> Vec<Vec<Option<f64>>> {
        datasets
            .iter()
            .map(|d| {
                algorithms
                    .iter()
                    .map(|a| {
                        cells
                            .iter()
                            .find(|c| &c.algorithm == a && &c.dataset == d)
                            .and_then(f)
                    })
                    .collect()
            })
            .collect()
    };
    let friedman_accuracy = friedman_mean_ranks(&table(&|c| c.accuracy.map(|s| s.mean)), true).ok();
    let friedman_selected = friedman_mean_ranks(&table(&|c| c.mean_selected), false).ok();

    let mut failures: Vec<RunFailure> = records
        .iter()
        .filter(|r| !r.is_ok())
        .map(|r| RunFailure {
            algorithm: r.algorithm.clone(),
            dataset: r.dataset.clone(),
            run: r.run,
            error: r.error.clone().unwrap_or_else(|| "no result".into()),
        })
        .collect();
    failures
        .sort_by(|a, b| (&a.dataset, &a.algorithm, a.run).cmp(&(&b.dataset, &b.algorithm, b.run)));

    Ok(ExperimentReport {
        name: name.to_string(),
        algorithms: algorithms.to_vec(),
        datasets: datasets.to_vec(),
        reference: reference.map(str::to_string),
        cells,
        marks,
        friedman_accuracy,
        friedman_selected,
        failures,
    })
}
