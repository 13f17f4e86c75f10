use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use sfe_core::harness::{
    emit_convergence, report_experiment, run_experiment, AlgorithmSpec, DatasetSpec,
    ExperimentConfig, ExperimentReport,
};
use sfe_core::{LabelColumn, Scoring};

#[derive(Parser)]
#[command(name = "sfe", version, about = "Wrapper feature selection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment matrix and write its raw runs and report.
    Run(RunArgs),
    /// Recompute the report of an experiment directory from its raw runs.
    Report {
        /// Experiment directory written by `run`.
        dir: PathBuf,
    },
    /// Write mean convergence curves as CSV.
    Converge {
        /// Experiment directory written by `run`.
        dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment file. Flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Algorithms: sfe, bpso, sfe_pso, sfe_ec:{pso,identity,hillclimb}.
    #[arg(long = "algo", value_delimiter = ',')]
    algorithms: Vec<AlgorithmSpec>,
    /// CSV datasets; replaces the configured list.
    #[arg(long = "dataset")]
    datasets: Vec<PathBuf>,
    /// Label column for `--dataset` files: `last`, a zero-based index or a header name.
    #[arg(long)]
    label_col: Option<LabelColumn>,
    /// The `--dataset` files have no header row.
    #[arg(long)]
    no_header: bool,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    name: Option<String>,
    /// Experiment directory. Defaults to `<output root>/<name>`, where the
    /// output root comes from the config, then `$SFE_OUTPUT_ROOT`, then `results`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// One fold assignment per dataset instead of one per run index.
    #[arg(long)]
    fixed_folds: bool,
    /// Score as the mean of per-fold accuracies.
    #[arg(long)]
    fold_mean: bool,
    /// Memoise fitness by mask (budget is still charged).
    #[arg(long)]
    cache: bool,
}

impl RunArgs {
    fn into_config(self) -> Result<(ExperimentConfig, Option<PathBuf>)> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_file(p)
                .with_context(|| format!("reading {}", p.display()))?,
            None => ExperimentConfig::default(),
        };
        if !self.algorithms.is_empty() {
            cfg.algorithms = self.algorithms;
        }
        if !self.datasets.is_empty() {
            let label = self.label_col.unwrap_or_default();
            cfg.datasets = self
                .datasets
                .iter()
                .map(|p| {
                    let mut d = DatasetSpec::csv(p, label.clone());
                    d.header = !self.no_header;
                    d
                })
                .collect();
        } else if let Some(label) = self.label_col {
            for d in cfg.datasets.iter_mut().filter(|d| d.path.is_some()) {
                d.label_col = label.clone();
            }
        }
        if let Some(v) = self.runs {
            cfg.runs = v;
        }
        if let Some(v) = self.budget {
            cfg.budget = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.workers {
            cfg.workers = v;
        }
        if let Some(v) = self.name {
            cfg.name = v;
        }
        if self.fixed_folds {
            cfg.fixed_folds = true;
        }
        if self.fold_mean {
            cfg.scoring = Scoring::FoldMean;
        }
        if self.cache {
            cfg.cache = true;
        }
        if cfg.reference.is_some_and(|r| !cfg.algorithms.contains(&r)) {
            cfg.reference = None;
        }
        Ok((cfg, self.out))
    }
}

fn finish(report: &ExperimentReport) -> ExitCode {
    print!("{}", report.to_text());
    if report.is_success() {
        return ExitCode::SUCCESS;
    }
    eprintln!("{} run(s) failed:", report.failures.len());
    for f in &report.failures {
        eprintln!(
            "  {} / {} / run {}: {}",
            f.dataset, f.algorithm, f.run, f.error
        );
    }
    ExitCode::FAILURE
}

fn main() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => {
            let (cfg, out) = args.into_config()?;
            if cfg.datasets.is_empty() {
                bail!("no datasets: pass --dataset or list them in the config");
            }
            let dir = out.unwrap_or_else(|| cfg.experiment_dir());
            let report = run_experiment(&cfg, &dir)?;
            eprintln!("wrote {}", dir.display());
            Ok(finish(&report))
        }
        Command::Report { dir } => {
            let report =
                report_experiment(&dir).with_context(|| format!("reporting {}", dir.display()))?;
            Ok(finish(&report))
        }
        Command::Converge { dir, out } => {
            for path in emit_convergence(&dir, &out)? {
                println!("{}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_override_config_values() {
        let cli = Cli::try_parse_from([
            "sfe",
            "run",
            "--algo",
            "sfe,sfe_ec:identity",
            "--dataset",
            "a.csv",
            "--label-col",
            "0",
            "--runs",
            "3",
            "--budget",
            "50",
            "--fold-mean",
        ])
        .unwrap();
        let Command::Run(args) = cli.command else {
            panic!("expected run")
        };
        let (cfg, _) = args.into_config().unwrap();
        assert_eq!(cfg.algorithms.len(), 2);
        assert_eq!(cfg.runs, 3);
        assert_eq!(cfg.budget, 50);
        assert_eq!(cfg.scoring, Scoring::FoldMean);
        assert_eq!(cfg.datasets[0].label_col, LabelColumn::Index(0));
        assert_eq!(cfg.reference, None);
    }
}
