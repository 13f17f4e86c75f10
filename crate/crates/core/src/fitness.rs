//! Wrapper fitness: k-nearest-neighbour accuracy under cross-validation,
//! metered by a fixed evaluation budget.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FoldAssignment};
use crate::error::{Error, Result};
use crate::mask::FeatureMask;

/// Classification accuracy in percent, always within `[0, 100]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct FitnessValue(f64);

impl FitnessValue {
    pub const MIN: FitnessValue = FitnessValue(0.0);

    pub fn new(accuracy_percent: f64) -> Result<Self> {
        if (0.0..=100.0).contains(&accuracy_percent) {
            Ok(Self(accuracy_percent))
        } else {
            Err(Error::InvalidParam(format!(
                "accuracy {accuracy_percent} outside [0, 100]"
            )))
        }
    }

    pub fn percent(self) -> f64 {
        self.0
    }
}

impl fmt::Display for FitnessValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2}", self.0)
    }
}

/// How per-fold predictions combine into one accuracy.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scoring {
    /// Correct predictions over all folds divided by the number of instances.
    #[default]
    Pooled,
    /// Mean of the per-fold accuracies.
    FoldMean,
}

/// Predicts the class of `query` from its `k` nearest rows of `train`.
///
/// Neighbours are ordered by Euclidean distance, equal distances by lower
/// row index. The majority class wins; a vote tie goes to the tied class
/// whose closest member ranks first in that order.
pub fn knn_predict(train: &Dataset, query: &[f64], k: usize) -> Result<usize> {
    if query.len() != train.n_features() {
        return Err(Error::InvalidParam(format!(
            "query has {} features, training set has {}",
            query.len(),
            train.n_features()
        )));
    }
    if k == 0 || k > train.n_instances() {
        return Err(Error::KTooLarge {
            k,
            n: train.n_instances(),
        });
    }
    let mut neighbours: Vec<(f64, usize)> = (0..train.n_instances())
        .map(|i| (squared_distance(train.row(i), query), i))
        .collect();
    Ok(vote(&mut neighbours, k, train.labels(), train.n_classes()))
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Majority vote over the `k` nearest entries of `(distance, row)` pairs.
/// Reorders `neighbours`.
fn vote(neighbours: &mut [(f64, usize)], k: usize, labels: &[usize], n_classes: usize) -> usize {
    let by_distance = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k == 1 {
        let best = neighbours
            .iter()
            .min_by(|a, b| by_distance(a, b))
            .expect("non-empty neighbour set");
        return labels[best.1];
    }
    if k < neighbours.len() {
        neighbours.select_nth_unstable_by(k - 1, by_distance);
    }
    let nearest = &mut neighbours[..k];
    nearest.sort_unstable_by(by_distance);

    let mut counts = vec![0usize; n_classes];
    let mut first_seen = vec![usize::MAX; n_classes];
    for (rank, &(_, row)) in nearest.iter().enumerate() {
        let c = labels[row];
        counts[c] += 1;
        first_seen[c] = first_seen[c].min(rank);
    }
    (0..n_classes)
        .filter(|&c| counts[c] > 0)
        .max_by(|&a, &b| {
            counts[a]
                .cmp(&counts[b])
                .then(first_seen[b].cmp(&first_seen[a]))
        })
        .expect("at least one vote")
}

/// Budgeted cross-validated KNN accuracy oracle.
///
/// Every [`evaluate`](Self::evaluate) call costs one unit of budget, even
/// when the optional cache answers it.
#[derive(Clone, Debug)]
pub struct FitnessEvaluator {
    data: Arc<Dataset>,
    folds: Arc<FoldAssignment>,
    knn_k: usize,
    scoring: Scoring,
    budget: usize,
    used: usize,
    cache: Option<HashMap<FeatureMask, FitnessValue>>,
}

impl FitnessEvaluator {
    pub fn new(
        data: Arc<Dataset>,
        folds: FoldAssignment,
        knn_k: usize,
        budget: usize,
    ) -> Result<Self> {
        if folds.as_slice().len() != data.n_instances() {
            return Err(Error::InvalidParam(format!(
                "fold assignment covers {} instances, dataset has {}",
                folds.as_slice().len(),
                data.n_instances()
            )));
        }
        let smallest_train = folds
            .fold_sizes()
            .iter()
            .map(|&s| data.n_instances() - s)
            .min()
            .unwrap_or(0);
        if knn_k == 0 || knn_k > smallest_train {
            return Err(Error::KTooLarge {
                k: knn_k,
                n: smallest_train,
            });
        }
        Ok(Self {
            data,
            folds: Arc::new(folds),
            knn_k,
            scoring: Scoring::Pooled,
            budget,
            used: 0,
            cache: None,
        })
    }

    pub fn with_scoring(mut self, scoring: Scoring) -> Self {
        self.scoring = scoring;
        self
    }

    /// Memoise fitness by mask. Budget is still charged on hits.
    pub fn with_cache(mut self, enabled: bool) -> Self {
        self.cache = enabled.then(HashMap::new);
        self
    }

    pub fn dataset(&self) -> &Dataset {
        &self.data
    }

    pub fn folds(&self) -> &FoldAssignment {
        &self.folds
    }

    pub fn knn_k(&self) -> usize {
        self.knn_k
    }

    pub fn scoring(&self) -> Scoring {
        self.scoring
    }

    pub fn n_features(&self) -> usize {
        self.data.n_features()
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn used(&self) -> usize {
        self.used
    }

    pub fn remaining_budget(&self) -> usize {
        self.budget - self.used
    }

    pub fn is_exhausted(&self) -> bool {
        self.used >= self.budget
    }

    /// Charges one evaluation and returns the accuracy of `mask`.
    pub fn evaluate(&mut self, mask: &FeatureMask) -> Result<FitnessValue> {
        self.check_mask(mask)?;
        if self.is_exhausted() {
            return Err(Error::BudgetExhausted {
                budget: self.budget,
            });
        }
        self.used += 1;
        if let Some(hit) = self.cache.as_ref().and_then(|c| c.get(mask)) {
            return Ok(*hit);
        }
        let value = self.compute(mask);
        if let Some(cache) = self.cache.as_mut() {
            cache.insert(mask.clone(), value);
        }
        Ok(value)
    }

    /// Accuracy of `mask` without touching the budget.
    pub fn score(&self, mask: &FeatureMask) -> Result<FitnessValue> {
        self.check_mask(mask)?;
        Ok(self.compute(mask))
    }

    fn check_mask(&self, mask: &FeatureMask) -> Result<()> {
        if mask.len() != self.data.n_features() {
            return Err(Error::MaskLength {
                expected: self.data.n_features(),
                got: mask.len(),
            });
        }
        if mask.none_selected() {
            return Err(Error::EmptyMask);
        }
        Ok(())
    }

    /// Evaluator over the columns selected by `mask`, sharing the folds and
    /// holding whatever budget is left here. Charge its usage back with
    /// [`absorb`](Self::absorb).
    pub fn reduced(&self, mask: &FeatureMask) -> Result<FitnessEvaluator> {
        Ok(FitnessEvaluator {
            data: Arc::new(self.data.subset_columns(mask)?),
            folds: Arc::clone(&self.folds),
            knn_k: self.knn_k,
            scoring: self.scoring,
            budget: self.remaining_budget(),
            used: 0,
            cache: self.cache.as_ref().map(|_| HashMap::new()),
        })
    }

    /// Adds the evaluations consumed by a [`reduced`](Self::reduced) child.
    pub fn absorb(&mut self, child: &FitnessEvaluator) -> Result<()> {
        if child.used > self.remaining_budget() {
            return Err(Error::BudgetExhausted {
                budget: self.budget,
            });
        }
        self.used += child.used;
        Ok(())
    }

    fn compute(&self, mask: &FeatureMask) -> FitnessValue {
        let cols = mask.selected_indices();
        let n = self.data.n_instances();
        let folds = self.folds.as_slice();

        // Only cross-fold pairs are ever compared.
        let mut dist = vec![0.0f64; n * n];
        for i in 0..n {
            let ri = self.data.row(i);
            for j in (i + 1)..n {
                if folds[i] == folds[j] {
                    continue;
                }
                let rj = self.data.row(j);
                let d: f64 = cols
                    .iter()
                    .map(|&c| {
                        let t = ri[c] - rj[c];
                        t * t
                    })
                    .sum();
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }

        let labels = self.data.labels();
        let k = self.folds.k();
        let mut correct = vec![0usize; k];
        let mut total = vec![0usize; k];
        let mut neighbours = Vec::with_capacity(n);
        for q in 0..n {
            neighbours.clear();
            neighbours.extend(
                (0..n)
                    .filter(|&j| folds[j] != folds[q])
                    .map(|j| (dist[q * n + j], j)),
            );
            let predicted = vote(&mut neighbours, self.knn_k, labels, self.data.n_classes());
            total[folds[q]] += 1;
            if predicted == labels[q] {
                correct[folds[q]] += 1;
            }
        }

        let accuracy = match self.scoring {
            Scoring::Pooled => {
                100.0 * correct.iter().sum::<usize>() as f64 / total.iter().sum::<usize>() as f64
            }
            Scoring::FoldMean => {
                let per_fold: Vec<f64> = correct
                    .iter()
                    .zip(&total)
                    .filter(|(_, &t)| t > 0)
                    .map(|(&c, &t)| 100.0 * c as f64 / t as f64)
                    .collect();
                per_fold.iter().sum::<f64>() / per_fold.len() as f64
            }
        };
        FitnessValue(accuracy.clamp(0.0, 100.0))
    }
}
