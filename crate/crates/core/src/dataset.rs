//! Labeled tabular data, CSV ingestion, stratified fold assignment and
//! column subsetting.

use std::collections::HashMap;
use std::fs::File;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::FeatureMask;

/// Instance matrix (row-major `f64`) with integer-coded class labels.
///
/// `feature_ids` records the column index each feature had in the dataset it
/// was originally loaded from, so masks found on a reduced dataset can be
/// mapped back.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    values: Vec<f64>,
    labels: Vec<usize>,
    feature_ids: Vec<usize>,
    class_names: Vec<String>,
    n_instances: usize,
    n_features: usize,
}

impl Dataset {
    /// Builds a dataset from rows. Class names default to the label codes.
    pub fn from_rows(rows: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        let n_features = rows.first().map_or(0, Vec::len);
        let n_classes = labels.iter().max().map_or(0, |&m| m + 1);
        let class_names = (0..n_classes).map(|c| c.to_string()).collect();
        let mut values = Vec::with_capacity(rows.len() * n_features);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n_features {
                return Err(Error::InvalidDataset(format!(
                    "row {r} has {} values, expected {n_features}",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Self::new(
            values,
            labels,
            (0..n_features).collect(),
            class_names,
            n_features,
        )
    }

    fn new(
        values: Vec<f64>,
        labels: Vec<usize>,
        feature_ids: Vec<usize>,
        class_names: Vec<String>,
        n_features: usize,
    ) -> Result<Self> {
        let n_instances = labels.len();
        if n_instances == 0 {
            return Err(Error::InvalidDataset("no instances".into()));
        }
        if n_features == 0 {
            return Err(Error::InvalidDataset("no features".into()));
        }
        if values.len() != n_instances * n_features {
            return Err(Error::InvalidDataset(format!(
                "{} values for {n_instances} rows of {n_features} features",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parse {
                row: pos / n_features + 1,
                col: pos % n_features + 1,
                msg: "non-finite value".into(),
            });
        }
        if feature_ids.len() != n_features || feature_ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidDataset(
                "feature ids must be strictly increasing, one per column".into(),
            ));
        }
        if labels.iter().any(|&l| l >= class_names.len()) {
            return Err(Error::InvalidDataset(
                "label code without a class name".into(),
            ));
        }
        Ok(Self {
            values,
            labels,
            feature_ids,
            class_names,
            n_instances,
            n_features,
        })
    }

    pub fn n_instances(&self) -> usize {
        self.n_instances
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn feature_ids(&self) -> &[usize] {
        &self.feature_ids
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_features + col]
    }

    /// Instance indices grouped by class code.
    pub fn class_members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.n_classes()];
        for (i, &l) in self.labels.iter().enumerate() {
            members[l].push(i);
        }
        members
    }

    /// New dataset containing exactly the selected columns, in order.
    pub fn subset_columns(&self, mask: &FeatureMask) -> Result<Dataset> {
        if mask.len() != self.n_features {
            return Err(Error::MaskLength {
                expected: self.n_features,
                got: mask.len(),
            });
        }
        if mask.none_selected() {
            return Err(Error::EmptyMask);
        }
        let cols = mask.selected_indices();
        let mut values = Vec::with_capacity(self.n_instances * cols.len());
        for r in 0..self.n_instances {
            let row = self.row(r);
            values.extend(cols.iter().map(|&c| row[c]));
        }
        let feature_ids = cols.iter().map(|&c| self.feature_ids[c]).collect();
        Self::new(
            values,
            self.labels.clone(),
            feature_ids,
            self.class_names.clone(),
            cols.len(),
        )
    }

    /// Maps a mask over this dataset's columns to a mask over the original
    /// dataset with `original_len` features.
    pub fn lift_mask(&self, mask: &FeatureMask, original_len: usize) -> Result<FeatureMask> {
        if mask.len() != self.n_features {
            return Err(Error::MaskLength {
                expected: self.n_features,
                got: mask.len(),
            });
        }
        let ids: Vec<usize> = mask
            .selected_indices()
            .into_iter()
            .map(|c| self.feature_ids[c])
            .collect();
        FeatureMask::from_indices(original_len, &ids)
    }
}

/// Which CSV column holds the class label.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(into = "String", try_from = "String")]
pub enum LabelColumn {
    /// Zero-based column index.
    Index(usize),
    /// Header name; requires a header row.
    Name(String),
    #[default]
    Last,
}

impl FromStr for LabelColumn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::MissingLabelColumn("<empty>".into()));
        }
        if s.eq_ignore_ascii_case("last") {
            return Ok(LabelColumn::Last);
        }
        Ok(match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        })
    }
}

impl TryFrom<String> for LabelColumn {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<LabelColumn> for String {
    fn from(c: LabelColumn) -> String {
        match c {
            LabelColumn::Index(i) => i.to_string(),
            LabelColumn::Name(n) => n,
            LabelColumn::Last => "last".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CsvOptions {
    pub has_header: bool,
    pub label: LabelColumn,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            has_header: true,
            label: LabelColumn::Last,
        }
    }
}

/// Loads a comma-separated file. Labels are coded in order of first
/// appearance; every other column must parse as a finite number.
///
/// Error positions are 1-based data rows (header excluded) and 1-based
/// columns.
pub fn load_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, opts)
}

pub fn read_csv<R: std::io::Read>(reader: R, opts: &CsvOptions) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(opts.has_header)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let header: Option<Vec<String>> = if opts.has_header {
        Some(rdr.headers()?.iter().map(str::to_string).collect())
    } else {
        None
    };

    let mut label_col: Option<usize> = match (&opts.label, &header) {
        (LabelColumn::Index(i), _) => Some(*i),
        (LabelColumn::Name(name), Some(h)) => Some(
            h.iter()
                .position(|c| c == name)
                .ok_or_else(|| Error::MissingLabelColumn(name.clone()))?,
        ),
        (LabelColumn::Name(name), None) => {
            return Err(Error::MissingLabelColumn(format!(
                "{name} (named label column needs a header row)"
            )))
        }
        (LabelColumn::Last, Some(h)) => Some(h.len().saturating_sub(1)),
        (LabelColumn::Last, None) => None,
    };

    let mut width: Option<usize> = header.as_ref().map(Vec::len);
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut codes: HashMap<String, usize> = HashMap::new();
    let mut class_names = Vec::new();

    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row = r + 1;
        let w = *width.get_or_insert(record.len());
        if record.len() != w {
            return Err(Error::Parse {
                row,
                col: record.len().min(w) + 1,
                msg: format!("expected {w} fields, found {}", record.len()),
            });
        }
        let lc = *label_col.get_or_insert(w.saturating_sub(1));
        if lc >= w {
            return Err(Error::MissingLabelColumn(format!(
                "index {lc} (file has {w} columns)"
            )));
        }
        for (c, field) in record.iter().enumerate() {
            if c == lc {
                if field.is_empty() {
                    return Err(Error::Parse {
                        row,
                        col: c + 1,
                        msg: "empty label".into(),
                    });
                }
                let next = codes.len();
                let code = *codes.entry(field.to_string()).or_insert_with(|| {
                    class_names.push(field.to_string());
                    next
                });
                labels.push(code);
                continue;
            }
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                row,
                col: c + 1,
                msg: format!("non-numeric value {field:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    col: c + 1,
                    msg: format!("non-finite value {field:?}"),
                });
            }
            values.push(v);
        }
    }

    let n_features = width.unwrap_or(0).saturating_sub(1);
    if labels.is_empty() {
        return Err(Error::InvalidDataset("no data rows".into()));
    }
    Dataset::new(
        values,
        labels,
        (0..n_features).collect(),
        class_names,
        n_features,
    )
}

/// Fold index for every instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    fold_of_instance: Vec<usize>,
    k: usize,
}

impl FoldAssignment {
    pub fn from_vec(fold_of_instance: Vec<usize>, k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::Split(format!("k = {k}; need at least 2 folds")));
        }
        if fold_of_instance.iter().any(|&f| f >= k) {
            return Err(Error::Split("fold index out of range".into()));
        }
        Ok(Self {
            fold_of_instance,
            k,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn fold_of(&self, instance: usize) -> usize {
        self.fold_of_instance[instance]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.fold_of_instance
    }

    /// Instance indices in fold `f`, ascending.
    pub fn members(&self, f: usize) -> Vec<usize> {
        self.fold_of_instance
            .iter()
            .enumerate()
            .filter_map(|(i, &g)| (g == f).then_some(i))
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.fold_of_instance {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Stratified k-fold assignment.
///
/// Each class is shuffled with a seeded RNG and dealt round-robin over the
/// folds. The dealing position carries over from one class to the next, so
/// per class the fold sizes differ by at most one and the total fold sizes
/// stay balanced as well. Classes smaller than `k` simply leave some folds
/// without members of that class.
pub fn stratified_kfold(ds: &Dataset, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::Split(format!("k = {k}; need at least 2 folds")));
    }
    if k > ds.n_instances() {
        return Err(Error::Split(format!(
            "k = {k} exceeds {} instances",
            ds.n_instances()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![0; ds.n_instances()];
    let mut next = 0;
    for (class, mut members) in ds.class_members().into_iter().enumerate() {
        match members.len() {
            0 => continue,
            1 => {
                return Err(Error::Split(format!(
                    "class {:?} has a single instance",
                    ds.class_names()[class]
                )))
            }
            _ => {}
        }
        members.shuffle(&mut rng);
        for i in members {
            folds[i] = next;
            next = (next + 1) % k;
        }
    }
    FoldAssignment::from_vec(folds, k)
}
