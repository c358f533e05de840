use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use infogeo::{
    delta, fisher_cometric, fisher_info, pullback, pushforward, random_channel, sample_interior,
    Model, RandomVariable, SampleSpace, TangentVector,
};
use std::hint::black_box;

fn cometric(c: &mut Criterion) {
    let mut group = c.benchmark_group("cometric");
    for n in [4, 16, 64] {
        let space = SampleSpace::new(n).unwrap();
        let p = sample_interior(space, 1, 0.1 / n as f64).unwrap();
        let a = RandomVariable::new((0..n).map(|i| (i as f64).sin()).collect());
        let b = RandomVariable::new((0..n).map(|i| (i as f64).cos()).collect());
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |bench, _| {
            bench.iter(|| {
                let (da, db) = (delta(&p, &a).unwrap(), delta(&p, &b).unwrap());
                black_box(fisher_cometric(&da, &db).unwrap())
            })
        });
    }
    group.finish();
}

fn fisher(c: &mut Criterion) {
    let mut group = c.benchmark_group("fisher_info_categorical");
    for n in [3, 8, 16] {
        let model = Model::categorical(n).unwrap();
        let xi = vec![1.0 / n as f64; n - 1];
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |bench, _| {
            bench.iter(|| black_box(fisher_info(&model, &xi).unwrap()))
        });
    }
    group.finish();
}

fn channels(c: &mut Criterion) {
    let mut group = c.benchmark_group("push_pull");
    for n in [4, 16, 64] {
        let w = random_channel(n, n, 7).unwrap();
        let space = SampleSpace::new(n).unwrap();
        let p = sample_interior(space, 2, 0.1 / n as f64).unwrap();
        let x = TangentVector::projected(p.clone(), (0..n).map(|i| (i as f64).sin()).collect())
            .unwrap();
        let q = infogeo::apply(&w, &p).unwrap();
        let alpha = delta(&q, &RandomVariable::new((0..n).map(|i| i as f64).collect())).unwrap();
        group.bench_with_input(BenchmarkId::new("push", n), &n, |bench, _| {
            bench.iter(|| black_box(pushforward(&w, &p, &x).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("pull", n), &n, |bench, _| {
            bench.iter(|| black_box(pullback(&w, &p, &alpha).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, cometric, fisher, channels);
criterion_main!(benches);
