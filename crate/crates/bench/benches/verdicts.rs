use certjulia::presets;
use certjulia::render::{render_certified, render_escape_time, Region};
use certjulia::Decider;
use certjulia_bench::near_circle;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn subprogram(c: &mut Criterion) {
    let p = presets::circle().expect("circle preset");
    let d = Decider::new(&p.cert, &p.map);
    let pts = near_circle(64, 1e-3);
    let mut g = c.benchmark_group("decide_near_circle");
    for n in [8u32, 12, 16, 20, 24] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            let mut k = 0;
            b.iter(|| {
                k = (k + 1) % pts.len();
                d.decide(n, &pts[k]).expect("verdict")
            })
        });
    }
    g.finish();
}

fn pixels(c: &mut Criterion) {
    let p = presets::circle().expect("circle preset");
    let d = Decider::new(&p.cert, &p.map);
    let region = Region::parse("0.70,0.70,0.72,0.72").expect("region");
    let mut g = c.benchmark_group("render_patch");
    g.sample_size(10);
    g.bench_function("certified_n8", |b| b.iter(|| render_certified(&d, &region, 8, 1)));
    g.bench_function("escape_n8", |b| b.iter(|| render_escape_time(&p.map, &region, 8, 200, 1).expect("polynomial")));
    g.finish();
}

criterion_group!(benches, subprogram, pixels);
criterion_main!(benches);
