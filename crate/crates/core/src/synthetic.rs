//! Planted-feature datasets for desk-scale checks.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Noise features are `U[0, 1)`. Each informative feature is centred at
/// `2 * separation * class` with `U[-1, 1)` jitter, so a single informative
/// column already separates the classes when `separation` is large.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantedSpec {
    pub instances: usize,
    pub features: usize,
    pub informative: usize,
    #[serde(default = "default_classes")]
    pub classes: usize,
    #[serde(default = "default_separation")]
    pub separation: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_classes() -> usize {
    2
}

fn default_separation() -> f64 {
    10.0
}

impl PlantedSpec {
    pub fn new(instances: usize, features: usize, informative: usize, seed: u64) -> Self {
        Self {
            instances,
            features,
            informative,
            classes: default_classes(),
            separation: default_separation(),
            seed,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Planted {
    pub dataset: Dataset,
    /// Ascending column indices of the informative features.
    pub informative: Vec<usize>,
}

pub fn planted_dataset(spec: &PlantedSpec) -> Result<Planted> {
    if spec.classes < 1 || spec.instances < spec.classes {
        return Err(Error::InvalidParam(format!(
            "{} instances cannot cover {} classes",
            spec.instances, spec.classes
        )));
    }
    if spec.informative > spec.features || spec.features == 0 {
        return Err(Error::InvalidParam(format!(
            "{} informative features out of {}",
            spec.informative, spec.features
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut informative: Vec<usize> = sample(&mut rng, spec.features, spec.informative).into_vec();
    informative.sort_unstable();
    let mut is_informative = vec![false; spec.features];
    for &j in &informative {
        is_informative[j] = true;
    }

    let labels: Vec<usize> = (0..spec.instances).map(|i| i % spec.classes).collect();
    let rows = labels
        .iter()
        .map(|&c| {
            (0..spec.features)
                .map(|j| {
                    if is_informative[j] {
                        2.0 * spec.separation * c as f64 + rng.gen_range(-1.0..1.0)
                    } else {
                        rng.gen::<f64>()
                    }
                })
                .collect()
        })
        .collect();
    Ok(Planted {
        dataset: Dataset::from_rows(rows, labels)?,
        informative,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_determinism() {
        let spec = PlantedSpec::new(30, 50, 4, 9);
        let a = planted_dataset(&spec).unwrap();
        let b = planted_dataset(&spec).unwrap();
        assert_eq!(a.dataset, b.dataset);
        assert_eq!(a.informative, b.informative);
        assert_eq!(a.dataset.n_instances(), 30);
        assert_eq!(a.dataset.n_features(), 50);
        assert_eq!(a.informative.len(), 4);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(planted_dataset(&PlantedSpec::new(10, 5, 6, 0)).is_err());
        assert!(planted_dataset(&PlantedSpec::new(1, 5, 1, 0)).is_err());
    }
}
