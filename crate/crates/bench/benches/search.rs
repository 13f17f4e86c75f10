use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use sfe_core::synthetic::{planted_dataset, PlantedSpec};
use sfe_core::{
    pso_search, sfe_search, stratified_kfold, wilcoxon_ranksum, FeatureMask, FitnessEvaluator,
    PsoParams, SfeParams,
};

/// Same shape as the Colon microarray set: 62 instances, 2000 features.
fn colon_sized(budget: usize) -> FitnessEvaluator {
    let planted = planted_dataset(&PlantedSpec::new(62, 2000, 10, 1)).unwrap();
    let folds = stratified_kfold(&planted.dataset, 5, 1).unwrap();
    FitnessEvaluator::new(Arc::new(planted.dataset), folds, 1, budget).unwrap()
}

fn fitness(c: &mut Criterion) {
    let ev = colon_sized(1);
    let full = FeatureMask::ones(2000);
    let small = FeatureMask::from_indices(2000, &(0..20).collect::<Vec<_>>()).unwrap();
    c.bench_function("score 62x2000 all features", |b| {
        b.iter(|| ev.score(black_box(&full)))
    });
    c.bench_function("score 62x2000 20 features", |b| {
        b.iter(|| ev.score(black_box(&small)))
    });
}

fn searches(c: &mut Criterion) {
    let mut g = c.benchmark_group("search 62x2000 budget 200");
    g.sample_size(10);
    g.bench_function("sfe", |b| {
        b.iter_batched(
            || colon_sized(200),
            |mut ev| sfe_search(&mut ev, &SfeParams::default(), 7).unwrap(),
            BatchSize::LargeInput,
        )
    });
    g.bench_function("bpso", |b| {
        b.iter_batched(
            || colon_sized(200),
            |mut ev| pso_search(&mut ev, &PsoParams::default(), None, 7).unwrap(),
            BatchSize::LargeInput,
        )
    });
    g.finish();
}

fn ranksum(c: &mut Criterion) {
    let a: Vec<f64> = (0..30).map(|i| 90.0 + (i * 7 % 11) as f64).collect();
    let b: Vec<f64> = (0..30).map(|i| 85.0 + (i * 5 % 13) as f64).collect();
    c.bench_function("rank-sum 30 vs 30", |bch| {
        bch.iter(|| wilcoxon_ranksum(black_box(&a), black_box(&b), 0.05))
    });
}

criterion_group!(benches, fitness, searches, ranksum);
criterion_main!(benches);
