//! Binary inclusion state over a feature set.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One bit per feature; `true` means the feature is selected.
///
/// The selected count is cached and kept in sync by every mutator, so
/// `selected_count` is O(1).
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureMask {
    bits: Vec<bool>,
    selected: usize,
}

impl FeatureMask {
    /// All features unselected.
    pub fn zeros(len: usize) -> Self {
        Self {
            bits: vec![false; len],
            selected: 0,
        }
    }

    /// All features selected.
    pub fn ones(len: usize) -> Self {
        Self {
            bits: vec![true; len],
            selected: len,
        }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        let selected = bits.iter().filter(|&&b| b).count();
        Self { bits, selected }
    }

    /// Builds a mask of `len` bits with the given positions selected.
    pub fn from_indices(len: usize, indices: &[usize]) -> Result<Self> {
        let mut mask = Self::zeros(len);
        for &i in indices {
            if i >= len {
                return Err(Error::InvalidParam(format!(
                    "feature index {i} out of range for mask of length {len}"
                )));
            }
            mask.set(i, true);
        }
        Ok(mask)
    }

    /// Each bit is an independent fair coin. An all-zero draw is redrawn.
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        assert!(len > 0, "cannot draw a non-empty mask over zero features");
        loop {
            let mask = Self::from_bits((0..len).map(|_| rng.gen_bool(0.5)).collect());
            if mask.selected > 0 {
                return mask;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn set(&mut self, i: usize, on: bool) {
        if self.bits[i] != on {
            self.bits[i] = on;
            if on {
                self.selected += 1;
            } else {
                self.selected -= 1;
            }
        }
    }

    pub fn selected_count(&self) -> usize {
        self.selected
    }

    pub fn unselected_count(&self) -> usize {
        self.bits.len() - self.selected
    }

    pub fn none_selected(&self) -> bool {
        self.selected == 0
    }

    pub fn all_selected(&self) -> bool {
        self.selected == self.bits.len()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Ascending positions of the selected features.
    pub fn selected_indices(&self) -> Vec<usize> {
        self.positions(true)
    }

    /// Ascending positions of the unselected features.
    pub fn unselected_indices(&self) -> Vec<usize> {
        self.positions(false)
    }

    fn positions(&self, state: bool) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| (b == state).then_some(i))
            .collect()
    }

    /// True if every feature selected here is also selected in `other`.
    pub fn is_subset_of(&self, other: &FeatureMask) -> bool {
        self.len() == other.len() && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }
}

impl fmt::Debug for FeatureMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self
            .bits
            .iter()
            .map(|&b| if b { '1' } else { '0' })
            .collect();
        write!(f, "FeatureMask({}/{} {s})", self.selected, self.bits.len())
    }
}
