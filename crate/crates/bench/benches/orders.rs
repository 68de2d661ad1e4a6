use criterion::{criterion_group, criterion_main, Criterion};
use entrograph::growth::{classify, compare, parse_sequence, sup, Bands, GrowthSeries, ParseOptions};

fn orders(c: &mut Criterion) {
    let a = GrowthSeries::from_fn(512, |n| 3.0 * n * n.ln().max(1.0)).unwrap();
    let b = GrowthSeries::from_fn(512, |n| n.powf(1.5)).unwrap();
    c.bench_function("compare_512", |bn| bn.iter(|| compare(&a, &b, 128).unwrap()));
    c.bench_function("classify_512", |bn| bn.iter(|| classify(&a, &Bands::default()).unwrap()));
    let list: Vec<GrowthSeries> = (1..=8).map(|k| GrowthSeries::from_fn(512, move |n| n.powf(k as f64 / 4.0)).unwrap()).collect();
    c.bench_function("sup_8x512", |bn| bn.iter(|| sup(&list).unwrap()));
    c.bench_function("parse_512", |bn| {
        bn.iter(|| parse_sequence("max(2*n + 5, n*ln(n)) + exp(n/64)", 512, ParseOptions::default()).unwrap())
    });
}

criterion_group!(benches, orders);
criterion_main!(benches);
