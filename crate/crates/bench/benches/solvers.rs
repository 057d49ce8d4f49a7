use chemorelax::diagnostics::trudinger_moser_gap;
use chemorelax::field::solve_helmholtz;
use chemorelax::harness::initial::random_smooth;
use chemorelax::harness::{make_initial_data, IcKind, RunConfig};
use chemorelax::picard::{linear_step, PicardFrame};
use chemorelax::{
    limit_stable_dt, limit_step, stable_dt, step, ConstantState, LimitState, ScalingVariant,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn config(variant: ScalingVariant, n: usize) -> RunConfig {
    let mut c = RunConfig::default();
    c.variant = variant;
    c.n = n;
    c.ic.kind = IcKind::TwoMode;
    c
}

fn hyperbolic_step(c: &mut Criterion) {
    let mut g = c.benchmark_group("hyperbolic_step");
    for n in [32, 64, 128] {
        for variant in ScalingVariant::ALL {
            let cfg = config(variant, n);
            let (s, _) = make_initial_data(&cfg, 0.1).unwrap();
            let p = cfg.params(0.1).unwrap();
            let dt = stable_dt(&s, &p, 0.4).unwrap();
            g.bench_with_input(BenchmarkId::new(variant.name(), n), &s, |b, s| {
                b.iter(|| step(black_box(s), &p, dt).unwrap())
            });
        }
    }
    g.finish();
}

fn limit(c: &mut Criterion) {
    let mut g = c.benchmark_group("limit_step");
    for n in [32, 64, 128] {
        let cfg = config(ScalingVariant::First, n);
        let (s, _) = make_initial_data(&cfg, 0.1).unwrap();
        let p = cfg.params(0.1).unwrap();
        let l = LimitState::from_density(s.rho, &p).unwrap();
        let dt = limit_stable_dt(&l, &p, 0.4).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &l, |b, l| {
            b.iter(|| limit_step(black_box(l), &p, dt).unwrap())
        });
    }
    g.finish();
}

fn kernels(c: &mut Criterion) {
    let h = random_smooth(64, 1).unwrap();
    c.bench_function("helmholtz_64", |b| {
        b.iter(|| solve_helmholtz(black_box(&h), 1.0, 1.0).unwrap())
    });
    let h32 = random_smooth(32, 1).unwrap();
    c.bench_function("trudinger_moser_gap_32", |b| {
        b.iter(|| trudinger_moser_gap(black_box(&h32)).unwrap())
    });

    let cfg = config(ScalingVariant::First, 32);
    let p = cfg.params(0.5).unwrap();
    let base = ConstantState::new(&p, 1.0).unwrap();
    let frame = PicardFrame {
        rho: &random_smooth(32, 2).unwrap() * 1e-4,
        ..PicardFrame::zeros(32)
    };
    c.bench_function("picard_linear_step_32", |b| {
        b.iter(|| linear_step(&frame, &frame, black_box(&frame), &base, &p, 1e-3).unwrap())
    });
}

criterion_group!(benches, hyperbolic_step, limit, kernels);
criterion_main!(benches);
