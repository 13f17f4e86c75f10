//! Test-only reference implementations, written independently of the
//! library's code paths.
#![allow(dead_code)]

use sfe_core::{Dataset, FeatureMask, FoldAssignment};

/// Straightforward k-NN cross-validation: for every held-out row, sort all
/// training rows by (squared Euclidean distance, row index), take `k`, vote, and
/// resolve vote ties by the class appearing first in that order. Returns
/// (correct, total) per fold.
pub fn knn_cv_counts(
    ds: &Dataset,
    folds: &FoldAssignment,
    mask: &FeatureMask,
    k: usize,
) -> Vec<(usize, usize)> {
    let cols = mask.selected_indices();
    let mut per_fold = vec![(0, 0); folds.k()];
    for (f, fold) in per_fold.iter_mut().enumerate() {
        let test: Vec<usize> = (0..ds.n_instances())
            .filter(|&i| folds.fold_of(i) == f)
            .collect();
        let train: Vec<usize> = (0..ds.n_instances())
            .filter(|&i| folds.fold_of(i) != f)
            .collect();
        for &q in &test {
            let mut cand: Vec<(f64, usize)> = train
                .iter()
                .map(|&t| {
                    let d = cols
                        .iter()
                        .map(|&c| (ds.value(q, c) - ds.value(t, c)).powi(2))
                        .sum::<f64>();
                    (d, t)
                })
                .collect();
            cand.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let top = &cand[..k];
            let mut best_class = None;
            let mut best_votes = 0;
            for (pos, &(_, t)) in top.iter().enumerate() {
                let c = ds.labels()[t];
                // Only the first occurrence of a class can claim the lead.
                if top[..pos].iter().any(|&(_, u)| ds.labels()[u] == c) {
                    continue;
                }
                let votes = top.iter().filter(|&&(_, u)| ds.labels()[u] == c).count();
                if votes > best_votes {
                    best_votes = votes;
                    best_class = Some(c);
                }
            }
            fold.1 += 1;
            if best_class == Some(ds.labels()[q]) {
                fold.0 += 1;
            }
        }
    }
    per_fold
}

pub fn pooled_accuracy(counts: &[(usize, usize)]) -> f64 {
    let correct: usize = counts.iter().map(|c| c.0).sum();
    let total: usize = counts.iter().map(|c| c.1).sum();
    100.0 * correct as f64 / total as f64
}

/// Midranks by brute force: average position of equal values.
pub fn brute_midranks(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .map(|&v| {
            let below = values.iter().filter(|&&u| u < v).count() as f64;
            let equal = values.iter().filter(|&&u| u == v).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Every size-`r` subset of `0..n`.
pub fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, r, &mut Vec::new(), &mut out);
    out
}

/// Exact two-sided rank-sum p-value by enumerating every assignment of the
/// pooled midranks to the first group.
pub fn enumerated_ranksum_p(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = brute_midranks(&pooled);
    let n1 = a.len();
    let expected = n1 as f64 * (pooled.len() as f64 + 1.0) / 2.0;
    let observed: f64 = ranks[..n1].iter().sum();
    let dev = (observed - expected).abs();
    let combos = combinations(pooled.len(), n1);
    let extreme = combos
        .iter()
        .filter(|c| {
            let s: f64 = c.iter().map(|&i| ranks[i]).sum();
            (s - expected).abs() >= dev - 1e-9
        })
        .count();
    extreme as f64 / combos.len() as f64
}

/// Standard normal upper tail by composite Simpson integration of the
/// density from `z` to 12.
pub fn normal_sf_by_quadrature(z: f64) -> f64 {
    let upper = 12.0;
    if z >= upper {
        return 0.0;
    }
    let n = 20_000;
    let h = (upper - z) / n as f64;
    let pdf = |x: f64| (-x * x / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = pdf(z) + pdf(upper);
    for i in 1..n {
        let x = z + i as f64 * h;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * pdf(x);
    }
    s * h / 3.0
}

/// Normal-approximation rank-sum p-value written out from the textbook
/// formula with tie and continuity corrections.
pub fn normal_ranksum_p(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = brute_midranks(&pooled);
    let n1 = a.len() as f64;
    let n2 = b.len() as f64;
    let n = n1 + n2;
    let w: f64 = ranks[..a.len()].iter().sum();
    let mu = n1 * (n + 1.0) / 2.0;
    let mut distinct: Vec<f64> = pooled.clone();
    distinct.sort_by(|x, y| x.partial_cmp(y).unwrap());
    distinct.dedup();
    let ties: f64 = distinct
        .iter()
        .map(|&v| {
            let t = pooled.iter().filter(|&&u| u == v).count() as f64;
            t.powi(3) - t
        })
        .sum();
    let sigma = (n1 * n2 / 12.0 * (n + 1.0 - ties / (n * (n - 1.0)))).sqrt();
    let z = (((w - mu).abs() - 0.5).max(0.0)) / sigma;
    (2.0 * normal_sf_by_quadrature(z)).min(1.0)
}

/// A small deterministic LCG for building test data without touching the
/// library's RNG choices.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_f64(&mut self) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn below(&mut self, n: usize) -> usize {
        ((self.next_f64() * n as f64) as usize).min(n - 1)
    }
}

/// Dataset where column `key` equals the class times 100 and every other
/// column is the same constant.
pub fn key_feature_dataset(instances: usize, features: usize, key: usize) -> Dataset {
    let labels: Vec<usize> = (0..instances).map(|i| i % 2).collect();
    let rows = labels
        .iter()
        .map(|&c| {
            (0..features)
                .map(|j| if j == key { 100.0 * c as f64 } else { 1.0 })
                .collect()
        })
        .collect();
    Dataset::from_rows(rows, labels).unwrap()
}

/// Every column constant: all masks score the same.
pub fn flat_dataset(instances: usize, features: usize) -> Dataset {
    let labels: Vec<usize> = (0..instances).map(|i| i % 2).collect();
    Dataset::from_rows(vec![vec![3.0; features]; instances], labels).unwrap()
}

/// Uniform noise, random class labels.
pub fn noise_dataset(rng: &mut Lcg, instances: usize, features: usize, classes: usize) -> Dataset {
    let labels: Vec<usize> = (0..instances).map(|i| i % classes).collect();
    let rows = (0..instances)
        .map(|_| (0..features).map(|_| rng.next_f64()).collect())
        .collect();
    Dataset::from_rows(rows, labels).unwrap()
}
