//! Throughput benchmarks for the data-parallel hot paths. Run with the
//! default `parallel` feature and again with `--no-default-features` to
//! compare the rayon and sequential code paths:
//!
//! ```text
//! cargo bench -p rtheta-core
//! cargo bench -p rtheta-core --no-default-features
//! ```

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rtheta::classify::{train_forest, train_multilabel, BaseLearner, ForestParams, MultiLabelParams};
use rtheta::fitter::{select_best, Sample};

fn quadratic_series(rng: &mut ChaCha8Rng) -> Vec<Sample> {
    let r = rng.gen_range(0.5..5.0);
    let x = rng.gen_range(0.0..50.0);
    (1..=40u64)
        .map(|k| {
            let n = 50 * k;
            let noise = 1.0 + rng.gen_range(-0.01..0.01);
            Sample::new(n, (r * (n as f64).powi(2) + x) * noise)
        })
        .collect()
}

fn bench_select_best(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let series: Vec<Vec<Sample>> = (0..64).map(|_| quadratic_series(&mut rng)).collect();
    c.bench_function("select_best_64_series", |b| {
        b.iter(|| {
            for s in &series {
                std::hint::black_box(select_best(s).unwrap());
            }
        })
    });
}

fn toy_dataset(n: usize, d: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<u8>, Vec<u32>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let base = if i % 2 == 0 { 0.0 } else { 3.0 };
            (0..d).map(|_| base + rng.gen_range(-1.0..1.0)).collect()
        })
        .collect();
    let y: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
    let masks: Vec<u32> = (0..n).map(|i| 1u32 << (i % 4)).collect();
    (x, y, masks)
}

fn bench_forest(c: &mut Criterion) {
    let (x, y, _) = toy_dataset(200, 36, 11);
    let params = ForestParams { n_trees: 50, seed: 3, ..Default::default() };
    c.bench_function("forest_50_trees_200x36", |b| {
        b.iter_batched(
            || (),
            |_| std::hint::black_box(train_forest(&x, &y, &params)),
            BatchSize::SmallInput,
        )
    });
}

fn bench_multilabel(c: &mut Criterion) {
    let (x, _, masks) = toy_dataset(160, 36, 13);
    let params = MultiLabelParams::with_base(BaseLearner::Tree);
    c.bench_function("multilabel_tree_4_classes", |b| {
        b.iter(|| std::hint::black_box(train_multilabel(&x, &masks, 4, &params)))
    });
}

criterion_group!(benches, bench_select_best, bench_forest, bench_multilabel);
criterion_main!(benches);
