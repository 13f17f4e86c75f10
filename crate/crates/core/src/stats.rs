//! Nonparametric comparison of per-run result samples.

use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Outcome of comparing a reference algorithm against another one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonMark {
    /// Reference significantly better.
    Plus,
    /// Reference significantly worse.
    Minus,
    /// No significant difference.
    Approx,
}

impl fmt::Display for ComparisonMark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ComparisonMark::Plus => "+",
            ComparisonMark::Minus => "-",
            ComparisonMark::Approx => "≈",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultSample {
    pub algorithm: String,
    pub dataset: String,
    pub values: Vec<f64>,
}

impl ResultSample {
    pub fn new(
        algorithm: impl Into<String>,
        dataset: impl Into<String>,
        values: Vec<f64>,
    ) -> Result<Self> {
        validate_sample(&values)?;
        Ok(Self {
            algorithm: algorithm.into(),
            dataset: dataset.into(),
            values,
        })
    }
}

fn validate_sample(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Stats("empty sample".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Stats("non-finite value in sample".into()));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PValueMethod {
    /// Normal approximation with tie and continuity corrections.
    #[default]
    Normal,
    /// Exact permutation distribution of the rank sum (midranks on ties).
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankSumResult {
    /// Rank sum of the first sample.
    pub statistic: f64,
    pub p_value: f64,
    pub mark: ComparisonMark,
}

/// Midranks (1-based) of `values`, averaging over ties.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Two-sided Wilcoxon rank-sum test, normal approximation, higher values
/// better. `a` is the reference sample.
pub fn wilcoxon_ranksum(a: &[f64], b: &[f64], alpha: f64) -> Result<RankSumResult> {
    wilcoxon_ranksum_with(a, b, alpha, PValueMethod::Normal, true)
}

/// Rank-sum test with an explicit p-value method and direction.
///
/// The mark is `Approx` when `p >= alpha`; otherwise `Plus` if `a` ranks on
/// the favoured side (above the null expectation when `higher_better`).
pub fn wilcoxon_ranksum_with(
    a: &[f64],
    b: &[f64],
    alpha: f64,
    method: PValueMethod,
    higher_better: bool,
) -> Result<RankSumResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Stats("each sample needs at least two values".into()));
    }
    validate_sample(a)?;
    validate_sample(b)?;
    let n1 = a.len();
    let n = n1 + b.len();
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pooled);
    let w: f64 = ranks[..n1].iter().sum();
    let expected = n1 as f64 * (n as f64 + 1.0) / 2.0;

    let all_equal = pooled.iter().all(|&v| v == pooled[0]);
    let p_value = if all_equal {
        1.0
    } else {
        match method {
            PValueMethod::Normal => normal_p(&pooled, n1, w, expected),
            PValueMethod::Exact => exact_p(&ranks, n1),
        }
    };

    let mark = if p_value >= alpha {
        ComparisonMark::Approx
    } else if (w > expected) == higher_better {
        ComparisonMark::Plus
    } else {
        ComparisonMark::Minus
    };
    Ok(RankSumResult {
        statistic: w,
        p_value,
        mark,
    })
}

fn normal_p(pooled: &[f64], n1: usize, w: f64, expected: f64) -> f64 {
    let n = pooled.len() as f64;
    let n1f = n1 as f64;
    let n2f = n - n1f;

    let mut sorted = pooled.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|&&v| v == sorted[i]).count();
        let t = j as f64;
        tie_term += t * t * t - t;
        i += j;
    }
    let variance = n1f * n2f / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if variance <= 0.0 {
        return 1.0;
    }
    let z = ((w - expected).abs() - 0.5).max(0.0) / variance.sqrt();
    let std_normal = Normal::new(0.0, 1.0).expect("valid standard normal");
    (2.0 * std_normal.sf(z)).min(1.0)
}

/// Exact two-sided p-value by counting subsets of size `n1` of the pooled
/// midranks whose sum deviates from the expectation at least as much as
/// the observed one. Works on doubled ranks, which are integers.
fn exact_p(ranks: &[f64], n1: usize) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let max_sum: usize = doubled.iter().sum();
    let observed: i64 = doubled[..n1].iter().sum::<usize>() as i64;
    let n = ranks.len();
    let expected2 = (n1 * (n + 1)) as i64;

    // counts[j][s]: subsets of size j with doubled-rank sum s.
    let mut counts = vec![vec![0u128; max_sum + 1]; n1 + 1];
    counts[0][0] = 1;
    for &r in &doubled {
        for j in (1..=n1).rev() {
            for s in (r..=max_sum).rev() {
                let prev = counts[j - 1][s - r];
                if prev != 0 {
                    counts[j][s] += prev;
                }
            }
        }
    }
    let dev = (observed - expected2).abs();
    let mut total = 0u128;
    let mut extreme = 0u128;
    for (s, &c) in counts[n1].iter().enumerate() {
        total += c;
        if (s as i64 - expected2).abs() >= dev {
            extreme += c;
        }
    }
    (extreme as f64 / total as f64).min(1.0)
}

/// Mean within-dataset rank of each algorithm.
///
/// `table[d][a]` is the value of algorithm `a` on dataset `d`; `None` marks
/// a missing cell. Rank 1 is best; ties share midranks.
pub fn friedman_mean_ranks(table: &[Vec<Option<f64>>], higher_better: bool) -> Result<Vec<f64>> {
    if table.len() < 2 {
        return Err(Error::Stats("need at least two datasets".into()));
    }
    let m = table[0].len();
    if m < 2 {
        return Err(Error::Stats("need at least two algorithms".into()));
    }
    let mut sums = vec![0.0; m];
    for (d, row) in table.iter().enumerate() {
        if row.len() != m {
            return Err(Error::Stats(format!(
                "dataset row {d} has {} cells, expected {m}",
                row.len()
            )));
        }
        let values: Vec<f64> = row
            .iter()
            .enumerate()
            .map(|(a, v)| {
                v.filter(|x| x.is_finite()).ok_or_else(|| {
                    Error::Stats(format!("missing cell at dataset {d}, algorithm {a}"))
                })
            })
            .collect::<Result<_>>()?;
        let keyed: Vec<f64> = if higher_better {
            values.iter().map(|v| -v).collect()
        } else {
            values
        };
        for (s, r) in sums.iter_mut().zip(midranks(&keyed)) {
            *s += r;
        }
    }
    Ok(sums.into_iter().map(|s| s / table.len() as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midranks_average_ties() {
        assert_eq!(midranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn identical_samples_are_similar() {
        let a = [90.0, 91.0, 92.0, 93.0];
        let r = wilcoxon_ranksum(&a, &a, 0.05).unwrap();
        assert!(r.p_value > 0.99);
        assert_eq!(r.mark, ComparisonMark::Approx);
        let flat = [5.0, 5.0, 5.0];
        let r = wilcoxon_ranksum(&flat, &flat, 0.05).unwrap();
        assert_eq!((r.p_value, r.mark), (1.0, ComparisonMark::Approx));
    }

    #[test]
    fn three_vs_three_is_not_significant() {
        let r = wilcoxon_ranksum_with(
            &[1.0, 2.0, 3.0],
            &[10.0, 11.0, 12.0],
            0.05,
            PValueMethod::Exact,
            true,
        )
        .unwrap();
        assert_eq!(r.statistic, 6.0);
        assert!((r.p_value - 0.1).abs() < 1e-12);
        assert_eq!(r.mark, ComparisonMark::Approx);
    }

    #[test]
    fn direction_of_mark() {
        let hi: Vec<f64> = (0..10).map(|i| 100.0 + i as f64).collect();
        let lo: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert_eq!(
            wilcoxon_ranksum(&hi, &lo, 0.05).unwrap().mark,
            ComparisonMark::Plus
        );
        assert_eq!(
            wilcoxon_ranksum(&lo, &hi, 0.05).unwrap().mark,
            ComparisonMark::Minus
        );
        let r = wilcoxon_ranksum_with(&lo, &hi, 0.05, PValueMethod::Normal, false).unwrap();
        assert_eq!(r.mark, ComparisonMark::Plus);
    }

    #[test]
    fn small_samples_rejected() {
        assert!(wilcoxon_ranksum(&[1.0], &[2.0, 3.0], 0.05).is_err());
        assert!(wilcoxon_ranksum(&[1.0, f64::NAN], &[2.0, 3.0], 0.05).is_err());
    }

    #[test]
    fn friedman_dominance_and_ties() {
        let table = vec![
            vec![Some(90.0), Some(80.0), Some(70.0)],
            vec![Some(95.0), Some(60.0), Some(61.0)],
        ];
        let ranks = friedman_mean_ranks(&table, true).unwrap();
        assert_eq!(ranks[0], 1.0);
        let tied = vec![vec![Some(1.0), Some(1.0)], vec![Some(2.0), Some(2.0)]];
        assert_eq!(friedman_mean_ranks(&tied, true).unwrap(), vec![1.5, 1.5]);
        let lower = friedman_mean_ranks(&table, false).unwrap();
        assert_eq!(lower[0], 3.0);
    }

    #[test]
    fn friedman_missing_cell() {
        let table = vec![vec![Some(1.0), None], vec![Some(2.0), Some(2.0)]];
        assert!(friedman_mean_ranks(&table, true).is_err());
        assert!(friedman_mean_ranks(&table[..1], true).is_err());
    }
}
