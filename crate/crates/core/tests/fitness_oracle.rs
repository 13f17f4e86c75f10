mod common;

use std::sync::Arc;

use common::{knn_cv_counts, noise_dataset, pooled_accuracy, Lcg};
use proptest::prelude::*;
use sfe_core::{stratified_kfold, Dataset, FeatureMask, FitnessEvaluator, Scoring};

fn random_mask(rng: &mut Lcg, d: usize) -> FeatureMask {
    loop {
        let m = FeatureMask::from_bits((0..d).map(|_| rng.next_f64() < 0.5).collect());
        if !m.none_selected() {
            return m;
        }
    }
}

/// Integer-valued features so distance ties are common.
fn gridded_dataset(rng: &mut Lcg, n: usize, d: usize, classes: usize) -> Dataset {
    let labels = (0..n).map(|i| i % classes).collect();
    let rows = (0..n)
        .map(|_| (0..d).map(|_| rng.below(3) as f64).collect())
        .collect();
    Dataset::from_rows(rows, labels).unwrap()
}

#[test]
fn pooled_accuracy_matches_brute_force_knn() {
    let mut rng = Lcg(11);
    for case in 0..40 {
        let classes = 2 + case % 3;
        let n = 15 + rng.below(25);
        let d = 1 + rng.below(8);
        let k = [1, 1, 3, 5][case % 4];
        let ds = if case % 2 == 0 {
            gridded_dataset(&mut rng, n, d, classes)
        } else {
            noise_dataset(&mut rng, n, d, classes)
        };
        let folds = stratified_kfold(&ds, 3, case as u64).unwrap();
        let ds = Arc::new(ds);
        let ev = FitnessEvaluator::new(Arc::clone(&ds), folds.clone(), k, 1).unwrap();
        let mask = random_mask(&mut rng, d);
        let expected = pooled_accuracy(&knn_cv_counts(&ds, &folds, &mask, k));
        let got = ev.score(&mask).unwrap().percent();
        assert!(
            (got - expected).abs() < 1e-9,
            "case {case}: {got} vs {expected}"
        );
    }
}

#[test]
fn fold_mean_scoring_matches_brute_force() {
    let mut rng = Lcg(5);
    let ds = noise_dataset(&mut rng, 23, 6, 2);
    let folds = stratified_kfold(&ds, 5, 9).unwrap();
    let ds = Arc::new(ds);
    let ev = FitnessEvaluator::new(Arc::clone(&ds), folds.clone(), 1, 1)
        .unwrap()
        .with_scoring(Scoring::FoldMean);
    let mask = FeatureMask::ones(6);
    let counts = knn_cv_counts(&ds, &folds, &mask, 1);
    let expected = counts
        .iter()
        .map(|&(c, t)| 100.0 * c as f64 / t as f64)
        .sum::<f64>()
        / 5.0;
    assert!((ev.score(&mask).unwrap().percent() - expected).abs() < 1e-9);
}

#[test]
fn cache_hits_still_charge_budget() {
    let mut rng = Lcg(3);
    let ds = Arc::new(noise_dataset(&mut rng, 20, 4, 2));
    let folds = stratified_kfold(&ds, 5, 1).unwrap();
    let mut ev = FitnessEvaluator::new(ds, folds, 1, 3)
        .unwrap()
        .with_cache(true);
    let m = FeatureMask::ones(4);
    let a = ev.evaluate(&m).unwrap();
    let b = ev.evaluate(&m).unwrap();
    assert_eq!(a, b);
    assert_eq!(ev.used(), 2);
    ev.evaluate(&m).unwrap();
    assert!(ev.evaluate(&m).is_err());
    assert_eq!(ev.used(), 3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn score_is_a_valid_percentage_and_deterministic(seed in 0u64..10_000, d in 1usize..6) {
        let mut rng = Lcg(seed);
        let ds = Arc::new(gridded_dataset(&mut rng, 18, d, 3));
        let folds = stratified_kfold(&ds, 3, seed).unwrap();
        let ev = FitnessEvaluator::new(ds, folds, 1, 1).unwrap();
        let mask = random_mask(&mut rng, d);
        let a = ev.score(&mask).unwrap().percent();
        prop_assert!((0.0..=100.0).contains(&a));
        prop_assert_eq!(a, ev.score(&mask).unwrap().percent());
    }

    #[test]
    fn reduced_evaluator_agrees_with_parent(seed in 0u64..10_000) {
        let mut rng = Lcg(seed);
        let d = 8;
        let ds = Arc::new(noise_dataset(&mut rng, 20, d, 2));
        let folds = stratified_kfold(&ds, 4, seed).unwrap();
        let ev = FitnessEvaluator::new(ds, folds, 1, 10).unwrap();
        let keep = random_mask(&mut rng, d);
        let child = ev.reduced(&keep).unwrap();
        let inner = random_mask(&mut rng, keep.selected_count());
        let lifted = child.dataset().lift_mask(&inner, d).unwrap();
        prop_assert_eq!(child.score(&inner).unwrap(), ev.score(&lifted).unwrap());
        prop_assert!(lifted.is_subset_of(&keep));
    }
}
