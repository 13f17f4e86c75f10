use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bpso::PsoParams;
use crate::dataset::{CsvOptions, LabelColumn};
use crate::error::{Error, Result};
use crate::fitness::Scoring;
use crate::hybrid::HybridParams;
use crate::sfe::SfeParams;
use crate::synthetic::PlantedSpec;

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "SFE_OUTPUT_ROOT";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EngineKind {
    Pso,
    Identity,
    HillClimb,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum AlgorithmSpec {
    Sfe,
    Bpso,
    SfePso,
    SfeEc(EngineKind),
}

impl AlgorithmSpec {
    /// Name safe to use as a path component.
    pub fn file_stem(&self) -> String {
        self.to_string().replace(':', "-")
    }
}

impl fmt::Display for AlgorithmSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlgorithmSpec::Sfe => f.write_str("sfe"),
            AlgorithmSpec::Bpso => f.write_str("bpso"),
            AlgorithmSpec::SfePso => f.write_str("sfe_pso"),
            AlgorithmSpec::SfeEc(e) => write!(
                f,
                "sfe_ec:{}",
                match e {
                    EngineKind::Pso => "pso",
                    EngineKind::Identity => "identity",
                    EngineKind::HillClimb => "hillclimb",
                }
            ),
        }
    }
}

impl FromStr for AlgorithmSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Ok(match s.as_str() {
            "sfe" => AlgorithmSpec::Sfe,
            "bpso" | "pso" => AlgorithmSpec::Bpso,
            "sfe_pso" | "sfe-pso" => AlgorithmSpec::SfePso,
            other => {
                let engine = other
                    .strip_prefix("sfe_ec:")
                    .or_else(|| other.strip_prefix("sfe_ec-"))
                    .ok_or_else(|| Error::Config(format!("unknown algorithm {other:?}")))?;
                AlgorithmSpec::SfeEc(match engine {
                    "pso" => EngineKind::Pso,
                    "identity" => EngineKind::Identity,
                    "hillclimb" | "hill_climb" => EngineKind::HillClimb,
                    e => return Err(Error::Config(format!("unknown continuation engine {e:?}"))),
                })
            }
        })
    }
}

impl TryFrom<String> for AlgorithmSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<AlgorithmSpec> for String {
    fn from(a: AlgorithmSpec) -> String {
        a.to_string()
    }
}

/// A CSV file or a generated planted-feature dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub label_col: LabelColumn,
    #[serde(default = "yes")]
    pub header: bool,
    #[serde(default)]
    pub planted: Option<PlantedSpec>,
}

fn yes() -> bool {
    true
}

impl DatasetSpec {
    pub fn csv(path: impl Into<PathBuf>, label_col: LabelColumn) -> Self {
        Self {
            name: None,
            path: Some(path.into()),
            label_col,
            header: true,
            planted: None,
        }
    }

    pub fn planted(name: impl Into<String>, spec: PlantedSpec) -> Self {
        Self {
            name: Some(name.into()),
            path: None,
            label_col: LabelColumn::Last,
            header: true,
            planted: Some(spec),
        }
    }

    /// Explicit name, else the file stem.
    pub fn display_name(&self) -> String {
        if let Some(n) = &self.name {
            return n.clone();
        }
        self.path
            .as_deref()
            .and_then(Path::file_stem)
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into())
    }

    pub fn csv_options(&self) -> CsvOptions {
        CsvOptions {
            has_header: self.header,
            label: self.label_col.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HybridSettings {
    pub warmup_fes: usize,
    pub stagnation_window: usize,
}

impl Default for HybridSettings {
    fn default() -> Self {
        let d = HybridParams::default();
        Self {
            warmup_fes: d.warmup_fes,
            stagnation_window: d.stagnation_window,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HillClimbSettings {
    pub patience: usize,
}

impl Default for HillClimbSettings {
    fn default() -> Self {
        Self { patience: 200 }
    }
}

/// Everything needed to reproduce an experiment matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub output_root: Option<PathBuf>,
    pub algorithms: Vec<AlgorithmSpec>,
    /// Algorithm every other one is compared against.
    pub reference: Option<AlgorithmSpec>,
    pub budget: usize,
    pub runs: usize,
    pub folds: usize,
    pub knn_k: usize,
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    /// Use one fold assignment per dataset instead of one per run index.
    pub fixed_folds: bool,
    pub scoring: Scoring,
    pub cache: bool,
    pub alpha: f64,
    #[serde(rename = "dataset")]
    pub datasets: Vec<DatasetSpec>,
    pub sfe: SfeParams,
    pub pso: PsoParams,
    pub hybrid: HybridSettings,
    pub hillclimb: HillClimbSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "experiment".into(),
            output_root: None,
            algorithms: vec![
                AlgorithmSpec::Sfe,
                AlgorithmSpec::Bpso,
                AlgorithmSpec::SfePso,
            ],
            reference: Some(AlgorithmSpec::SfePso),
            budget: 6000,
            runs: 30,
            folds: 5,
            knn_k: 1,
            seed: 0,
            workers: 0,
            fixed_folds: false,
            scoring: Scoring::Pooled,
            cache: false,
            alpha: 0.05,
            datasets: Vec::new(),
            sfe: SfeParams::default(),
            pso: PsoParams::default(),
            hybrid: HybridSettings::default(),
            hillclimb: HillClimbSettings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        // Relative dataset paths are relative to the config file.
        if let Some(dir) = path.parent() {
            for d in &mut cfg.datasets {
                if let Some(p) = &d.path {
                    if p.is_relative() && !p.exists() {
                        d.path = Some(dir.join(p));
                    }
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn hybrid_params(&self) -> HybridParams {
        HybridParams {
            warmup_fes: self.hybrid.warmup_fes,
            stagnation_window: self.hybrid.stagnation_window,
            sfe: self.sfe,
            pso: self.pso,
        }
    }

    /// Output root: config value, else `$SFE_OUTPUT_ROOT`, else `results`.
    pub fn resolved_output_root(&self) -> PathBuf {
        self.output_root
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("results"))
    }

    pub fn experiment_dir(&self) -> PathBuf {
        self.resolved_output_root().join(&self.name)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if self.budget == 0 {
            return Err(Error::Config("budget must be at least 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Config("no algorithms selected".into()));
        }
        if self.datasets.is_empty() {
            return Err(Error::Config("no datasets configured".into()));
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::Config(format!(
                "invalid experiment name {:?}",
                self.name
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config("alpha must lie in (0, 1)".into()));
        }
        let mut names = std::collections::HashSet::new();
        for d in &self.datasets {
            match (&d.path, &d.planted) {
                (Some(p), None) => {
                    if !p.is_file() {
                        return Err(Error::Config(format!(
                            "dataset file {} not found",
                            p.display()
                        )));
                    }
                }
                (None, Some(_)) => {}
                _ => {
                    return Err(Error::Config(
                        "each dataset needs exactly one of `path` or `planted`".into(),
                    ))
                }
            }
            if !names.insert(d.display_name()) {
                return Err(Error::Config(format!(
                    "duplicate dataset name {:?}",
                    d.display_name()
                )));
            }
        }
        self.sfe.validate()?;
        self.pso.validate()?;
        if self
            .algorithms
            .iter()
            .any(|a| matches!(a, AlgorithmSpec::SfePso | AlgorithmSpec::SfeEc(_)))
        {
            self.hybrid_params().validate()?;
        }
        Ok(())
    }
}
