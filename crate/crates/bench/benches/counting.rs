use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use entrograph::coding::{codings_count, CodingFamily};
use entrograph::entropy::{separated_counts, sandwich_check};
use entrograph::systems::{build, CatalogOptions};
use entrograph::{Member, Shape};

fn options(grid: usize, horizon: usize) -> CatalogOptions {
    CatalogOptions { grid: Some(grid), horizon: Some(horizon), ..Default::default() }
}

fn separated(c: &mut Criterion) {
    let mut g = c.benchmark_group("separated_counts");
    g.sample_size(10);
    for name in ["rotation", "north-south-interval", "parabolic-disk", "double-arrow"] {
        let s = build(name, &options(2000, 128)).unwrap();
        g.bench_with_input(BenchmarkId::new(name, "k6_n128"), &s, |b, s| {
            b.iter(|| separated_counts(s, s.default_compact(), 6, 128).unwrap())
        });
    }
    g.finish();
}

fn sandwich(c: &mut Criterion) {
    let s = build("translation-line", &options(2000, 64)).unwrap();
    c.bench_function("sandwich_translation_k4_n64", |b| {
        b.iter(|| sandwich_check(&s, s.default_compact(), 4, 64).unwrap())
    });
}

fn codings(c: &mut Criterion) {
    let mut g = c.benchmark_group("codings_count");
    g.sample_size(10);
    let t = build("translation-line", &options(2000, 256)).unwrap();
    let single = CodingFamily::new(vec![Member::new("Y", Shape::interval(0.0, 0.5).unwrap())]).unwrap();
    g.bench_function("translation_exact_n256", |b| {
        b.iter(|| codings_count(&t, &single, 256, t.default_compact()).unwrap())
    });
    let br = build("brouwer-sphere", &options(1000, 128)).unwrap();
    let pair = CodingFamily::new(vec![
        Member::new("square", Shape::rect(0.75, 1.25, 0.75, 1.25).unwrap()),
        Member::new("foot", Shape::rect(-0.25, 0.25, 0.0, 0.5).unwrap()),
    ])
    .unwrap();
    let u = pair.augmented_universe(&br, br.default_compact()).unwrap();
    g.bench_function("brouwer_sampled_n128", |b| b.iter(|| codings_count(&br, &pair, 128, &u).unwrap()));
    g.finish();
}

criterion_group!(benches, separated, sandwich, codings);
criterion_main!(benches);
