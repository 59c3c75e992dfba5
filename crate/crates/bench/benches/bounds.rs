use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use lasserre_core::needles::integrate_against;
use lasserre_core::{
    assemble, needle_density, series_with_oracle, solve, DomainSpec, MeasureSpec, MomentOracle, NeedleRegime,
    Polynomial, SchedulePolicy,
};

fn booth() -> Polynomial {
    let p = |terms: &[(&[u32], f64)]| Polynomial::from_terms(2, terms.iter().map(|(e, c)| (e.to_vec(), *c))).unwrap();
    let a = p(&[(&[1, 0], 10.0), (&[0, 1], 20.0), (&[0, 0], -7.0)]);
    let b = p(&[(&[1, 0], 20.0), (&[0, 1], 10.0), (&[0, 0], -5.0)]);
    &(&a * &a) + &(&b * &b)
}

fn oracle(d: DomainSpec) -> MomentOracle {
    MomentOracle::new(d, MeasureSpec::Lebesgue, 256).unwrap()
}

fn moments(c: &mut Criterion) {
    let mut g = c.benchmark_group("moment_table");
    for (name, d) in [("box2", DomainSpec::unit_box(2)), ("ball2", DomainSpec::unit_ball(2)), ("octagon", DomainSpec::octagon())] {
        // a fresh oracle each time so the cache does not hide the work
        g.bench_function(BenchmarkId::new(name, 24), |b| b.iter(|| oracle(d.clone()).table(black_box(24)).unwrap()));
    }
    g.finish();
}

fn eigen(c: &mut Criterion) {
    let f = booth();
    let o = oracle(DomainSpec::unit_box(2));
    let mut g = c.benchmark_group("eigen");
    g.sample_size(10);
    for r in [5usize, 10, 15] {
        g.bench_with_input(BenchmarkId::new("assemble", r), &r, |b, &r| b.iter(|| assemble(&f, &o, r).unwrap()));
        let pair = assemble(&f, &o, r).unwrap();
        g.bench_with_input(BenchmarkId::new("solve", r), &pair, |b, p| b.iter(|| solve(p).unwrap()));
    }
    g.bench_function("series_r20", |b| b.iter(|| series_with_oracle(&f, &o, 1, 20, 0.0).unwrap()));
    g.finish();
}

fn needles(c: &mut Criterion) {
    let f = &Polynomial::var(2, 0) + &Polynomial::constant(2, 1.0);
    let rc = lasserre_core::estimators::recentre(&f, &DomainSpec::unit_box(2), &[-1.0, -1.0]).unwrap();
    let o = oracle(rc.domain.clone());
    let mut g = c.benchmark_group("needle_bound");
    for r in [5u32, 10, 20] {
        let (q, _, _) = needle_density(&rc.f, &rc.domain, r, NeedleRegime::ConvexBody, SchedulePolicy::Clamp).unwrap();
        g.bench_with_input(BenchmarkId::new("convex_body", r), &q, |b, q| b.iter(|| integrate_against(q, &rc.f, &o).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, moments, eigen, needles);
criterion_main!(benches);
