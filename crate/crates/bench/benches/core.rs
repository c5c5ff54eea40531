use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dusvgd_bench::{bnn, logreg, mixture, particles};
use dusvgd_core::trainer::{mmd, mmd_kernel};
use dusvgd_core::{median_bandwidth, stein_direction, Matrix, ScoreModel};
use std::hint::black_box;

fn bench_stein(c: &mut Criterion) {
    let mut g = c.benchmark_group("stein_direction");
    let mix = mixture();
    for m in [50, 100, 200] {
        let p = particles(&mix, m);
        g.bench_with_input(BenchmarkId::new("mixture", m), &p, |b, p| {
            b.iter(|| stein_direction(black_box(p), &mix, None).unwrap())
        });
    }
    let lr = logreg(2000);
    let p = particles(&lr, 100);
    let batch: Vec<usize> = (0..256).collect();
    g.bench_function("logreg_m100_batch256", |b| {
        b.iter(|| stein_direction(black_box(&p), &lr, Some(&batch)).unwrap())
    });
    g.finish();
}

fn bench_bandwidth(c: &mut Criterion) {
    let mix = mixture();
    let p = particles(&mix, 100);
    c.bench_function("median_bandwidth_m100", |b| b.iter(|| median_bandwidth(black_box(&p)).unwrap()));
}

fn bench_mmd(c: &mut Criterion) {
    let mix = mixture();
    let x = particles(&mix, 100);
    let x = Matrix::from_flat(100, 1, x.as_slice().to_vec()).unwrap();
    let y = Matrix::from_flat(100, 1, (0..100).map(|i| i as f64 * 0.05 - 2.5).collect()).unwrap();
    let k = mmd_kernel();
    c.bench_function("mmd_100x100", |b| b.iter(|| mmd(black_box(&x), &y, &k).unwrap()));
}

fn bench_bnn_score(c: &mut Criterion) {
    let mut g = c.benchmark_group("bnn_score");
    let batch: Vec<usize> = (0..256).collect();
    for inputs in [1, 13] {
        let model = bnn(450, inputs);
        let p = particles(&model, 1);
        let mut out = vec![0.0; model.dim()];
        g.bench_function(BenchmarkId::new("batch256", inputs), |b| {
            b.iter(|| model.score(black_box(p.row(0)), Some(&batch), &mut out).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, bench_stein, bench_bandwidth, bench_mmd, bench_bnn_score);
criterion_main!(benches);
