use serde::{Deserialize, Serialize};

use crate::fitness::FitnessValue;
use crate::mask::FeatureMask;

/// State of a search after one fitness evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// Cumulative evaluations, starting at 1.
    pub fes: usize,
    /// Best fitness seen so far.
    pub best: FitnessValue,
    /// Selected-feature count of the incumbent holding `best`.
    pub selected: usize,
}

/// Convergence record of one search: one entry per fitness evaluation plus
/// the final incumbent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    records: Vec<TraceRecord>,
    final_mask: FeatureMask,
    final_fitness: FitnessValue,
}

impl SearchTrace {
    /// A trace with no evaluations whose result is `mask`.
    pub fn empty(mask: FeatureMask) -> Self {
        Self {
            records: Vec::new(),
            final_mask: mask,
            final_fitness: FitnessValue::MIN,
        }
    }

    pub fn from_parts(
        records: Vec<TraceRecord>,
        final_mask: FeatureMask,
        final_fitness: FitnessValue,
    ) -> Self {
        Self {
            records,
            final_mask,
            final_fitness,
        }
    }

    /// Appends the state after the next evaluation and makes `incumbent`
    /// the result.
    pub fn push(&mut self, best: FitnessValue, incumbent: &FeatureMask) {
        let fes = self.records.last().map_or(1, |r| r.fes + 1);
        self.records.push(TraceRecord {
            fes,
            best,
            selected: incumbent.selected_count(),
        });
        if self.final_mask != *incumbent {
            self.final_mask = incumbent.clone();
        }
        self.final_fitness = best;
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn final_mask(&self) -> &FeatureMask {
        &self.final_mask
    }

    pub fn final_fitness(&self) -> FitnessValue {
        self.final_fitness
    }

    /// Best fitness after `fes` evaluations (1-based).
    pub fn best_at(&self, fes: usize) -> Option<FitnessValue> {
        fes.checked_sub(1)
            .and_then(|i| self.records.get(i))
            .map(|r| r.best)
    }

    pub fn is_monotone(&self) -> bool {
        self.records.windows(2).all(|w| w[0].best <= w[1].best)
    }

    pub(crate) fn set_result(&mut self, mask: FeatureMask, fitness: FitnessValue) {
        self.final_mask = mask;
        self.final_fitness = fitness;
    }

    pub(crate) fn records_mut(&mut self) -> &mut Vec<TraceRecord> {
        &mut self.records
    }
}
