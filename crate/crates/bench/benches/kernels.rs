use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use finsler_core::geodesics::DEFAULT_TOL;
use finsler_core::verify::identity_suite;
use finsler_core::{evaluate_all, evaluate_jet, integrate_geodesic, sample_set, MetricSpec, PointTangent};

fn randers3() -> MetricSpec {
    MetricSpec::randers(
        vec![0.15, -0.1, 0.05],
        vec![0.1, 0.05, 0.0, -0.05, 0.1, 0.02, 0.0, -0.03, 0.05],
    )
}

fn point3() -> PointTangent {
    PointTangent::new(vec![0.2, -0.1, 0.3], vec![0.6, 0.7, -0.2])
}

fn jets(c: &mut Criterion) {
    let mut g = c.benchmark_group("jet");
    let funk = MetricSpec::funk(3);
    let randers = randers3();
    let p = point3();
    for (ox, oy) in [(0, 2), (1, 3), (2, 4)] {
        g.bench_function(format!("funk3 ({ox},{oy})"), |b| {
            b.iter(|| evaluate_jet(&funk, black_box(&p), ox, oy).unwrap())
        });
    }
    g.bench_function("randers3 (2,4)", |b| {
        b.iter(|| evaluate_jet(&randers, black_box(&p), 2, 4).unwrap())
    });
    g.finish();
}

fn frames(c: &mut Criterion) {
    let mut g = c.benchmark_group("evaluate_all");
    let p2 = PointTangent::new(vec![0.2, -0.1], vec![0.6, 0.8]);
    g.bench_function("sphere2", |b| {
        let m = MetricSpec::sphere(2, 1.0);
        b.iter(|| evaluate_all(&m, black_box(&p2)).unwrap())
    });
    g.bench_function("funk3", |b| {
        let m = MetricSpec::funk(3);
        b.iter(|| evaluate_all(&m, black_box(&point3())).unwrap())
    });
    g.finish();
}

fn geodesics(c: &mut Criterion) {
    let mut g = c.benchmark_group("geodesic");
    g.sample_size(20);
    let sphere = MetricSpec::sphere(2, 1.0);
    let p = PointTangent::new(vec![0.0, 0.0], vec![1.0, 0.0]);
    g.bench_function("sphere2 t=3", |b| {
        b.iter(|| integrate_geodesic(&sphere, black_box(&p), 3.0, DEFAULT_TOL).unwrap())
    });
    let randers = randers3();
    g.bench_function("randers3 t=1", |b| {
        b.iter(|| integrate_geodesic(&randers, black_box(&point3()), 1.0, DEFAULT_TOL).unwrap())
    });
    g.finish();
}

fn identities(c: &mut Criterion) {
    let mut g = c.benchmark_group("identity_suite");
    g.sample_size(10);
    let m = randers3();
    let samples = sample_set(&m, 4, 1, 0.5, 1);
    g.bench_function("randers3 x4", |b| {
        b.iter(|| identity_suite(&m, black_box(&samples)).unwrap())
    });
    g.finish();
}

criterion_group!(benches, jets, frames, geodesics, identities);
criterion_main!(benches);
