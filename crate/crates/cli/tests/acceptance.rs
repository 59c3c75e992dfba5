//! Acceptance harness: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p lasserre-cli --test acceptance --release`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use lasserre_cli::experiment::{rate_report, ratio_report, RunOutput};
use lasserre_cli::registry;
use lasserre_cli::{run, Engine, EstimatorChoice, ExperimentConfig, MeasureConfig};
use lasserre_core::needles::{chebyshev, lambda_lower, needle_eval};
use lasserre_core::quadrature::gauss_legendre;
use lasserre_core::{
    assemble, estimators::recentre, needle_bound, normalization_constant, reduce_ball_to_interval,
    series_with_oracle, solve, DomainSpec, MeasureSpec, MomentOracle, NeedleRegime, NeedleSpec, Polynomial,
    SchedulePolicy,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

/// The (domain, measure) cells shared by the sandwich, rate, ratio and timing criteria.
const CELLS: [(&str, &str); 4] = [("box2", "lebesgue"), ("box2", "chebyshev"), ("ball2", "lebesgue"), ("octagon", "lebesgue")];
const R_MAX: usize = 20;

struct Matrix {
    runs: HashMap<(String, String, String), RunOutput>,
    elapsed: Duration,
}

impl Matrix {
    fn compute() -> Result<Self, String> {
        let t0 = Instant::now();
        let mut runs = HashMap::new();
        for f in registry::TABLE2 {
            for (d, m) in CELLS {
                let mut c = ExperimentConfig::named(f, d, R_MAX).with_measure(MeasureConfig::new(m, None));
                c.omit_timing = true;
                let out = run(&c).map_err(|e| format!("{f}/{d}/{m}: {e}"))?;
                runs.insert((f.to_string(), d.to_string(), m.to_string()), out);
            }
        }
        Ok(Self {
            runs,
            elapsed: t0.elapsed(),
        })
    }

    fn get(&self, f: &str, d: &str, m: &str) -> &RunOutput {
        &self.runs[&(f.to_string(), d.to_string(), m.to_string())]
    }
}

fn c1() -> Check {
    let t0 = Instant::now();
    let x = Polynomial::var(1, 0);
    let o = ok(MomentOracle::new(DomainSpec::unit_box(1), MeasureSpec::Lebesgue, 256))?;
    // hand pair: M = [[0, 2/3], [2/3, 0]], B = diag(2, 2/3) gives lambda = ±1/sqrt(3)
    let hand = -1.0 / 3f64.sqrt();
    let r1 = ok(solve(&ok(assemble(&x, &o, 1))?))?.value;
    let r0 = ok(solve(&ok(assemble(&x, &o, 0))?))?.value;
    let secs = t0.elapsed().as_secs_f64();
    ensure((r1 - hand).abs() <= 1e-9, || format!("f^(1) = {r1}, expected {hand}"))?;
    ensure(r0.abs() <= 1e-12, || format!("f^(0) = {r0}"))?;
    ensure(secs < 1.0, || format!("took {secs:.3} s"))?;
    Ok(format!("f^(1) = {r1:.15}, f^(0) = {r0:e}, {secs:.3} s"))
}

fn c2() -> Check {
    let cells = [
        ("box2", "lebesgue", None),
        ("box2", "chebyshev", None),
        ("box2", "box_jacobi", Some(1.0)),
        ("ball2", "lebesgue", None),
        ("ball2", "ball_jacobi", Some(1.5)),
        ("simplex2", "lebesgue", None),
        ("octagon", "lebesgue", None),
    ];
    let mut worst = 0f64;
    for (d, m, lambda) in cells {
        let c = ExperimentConfig::named("constant5", d, 5).with_measure(MeasureConfig::new(m, lambda));
        let out = ok(run(&c))?;
        for row in &out.series {
            let b = row.bound.ok_or("missing bound")?;
            worst = worst.max((b - 5.0).abs());
            ensure((b - 5.0).abs() <= 1e-10, || format!("{d}/{m} r={}: {b}", row.r))?;
        }
    }
    Ok(format!("{} cells, max |f^(r) - 5| = {worst:.1e}", cells.len()))
}

/// Mean of `f` under the Lebesgue or Chebyshev product measure on the square,
/// by 40-point Gauss–Legendre or Gauss–Chebyshev rules.
fn product_mean(f: &Polynomial, chebyshev_weight: bool) -> f64 {
    const K: usize = 40;
    let rule: Vec<(f64, f64)> = if chebyshev_weight {
        (1..=K).map(|k| (((2 * k - 1) as f64 * PI / (2 * K) as f64).cos(), PI / K as f64)).collect()
    } else {
        gauss_legendre(K)
    };
    let (mut num, mut mass) = (0.0, 0.0);
    for &(x, wx) in &rule {
        for &(y, wy) in &rule {
            num += wx * wy * f.eval(&[x, y]);
            mass += wx * wy;
        }
    }
    num / mass
}

fn c3() -> Check {
    let mut worst = 0f64;
    for (m, cheb) in [(MeasureSpec::Lebesgue, false), (MeasureSpec::chebyshev(), true)] {
        let o = ok(MomentOracle::new(DomainSpec::unit_box(2), m, 256))?;
        for name in registry::TABLE2 {
            let f = registry::function(name, 2).ok_or("registry")?.f;
            let r0 = ok(solve(&ok(assemble(&f, &o, 0))?))?.value;
            let mean = product_mean(&f, cheb);
            let err = (r0 - mean).abs();
            worst = worst.max(err);
            ensure(err <= 1e-10, || format!("{name} ({}) f^(0) = {r0}, mean = {mean}", m.name()))?;
        }
    }
    Ok(format!("12 cells, max |f^(0) - mean| = {worst:.1e}"))
}

fn c4(mx: &Matrix) -> Check {
    let (mut below, mut rise) = (f64::INFINITY, f64::NEG_INFINITY);
    for ((f, d, m), out) in &mx.runs {
        let mut prev = f64::INFINITY;
        for row in &out.series {
            let e = row.error.ok_or_else(|| format!("{f}/{d}/{m}: no f_min"))?;
            let b = row.bound.unwrap();
            below = below.min(e);
            rise = rise.max(b - prev);
            ensure(e >= -1e-8, || format!("{f}/{d}/{m} r={}: below f_min by {e}", row.r))?;
            ensure(b <= prev + 1e-9, || format!("{f}/{d}/{m} r={}: increased by {}", row.r, b - prev))?;
            prev = b;
        }
    }
    let secs = mx.elapsed.as_secs_f64();
    ensure(secs < 600.0, || format!("matrix took {secs:.0} s"))?;
    Ok(format!(
        "{} cells r<=20, min error {below:.1e}, max step {rise:.1e}, {secs:.1} s",
        mx.runs.len()
    ))
}

fn c5(mx: &Matrix) -> Check {
    let mut parts = Vec::new();
    for m in ["chebyshev", "lebesgue"] {
        let out = mx.get("linear", "box2", m);
        let rep = ok(rate_report(out, (10, 20), -0.75))?;
        let slope = rep.slope.ok_or("no slope")?;
        let scaled: Vec<f64> = out.errors().iter().filter(|(r, _)| (10..=20).contains(r)).map(|(r, e)| e * (r * r) as f64).collect();
        let (lo, hi) = scaled.iter().fold((f64::INFINITY, 0f64), |(a, b), &v| (a.min(v), b.max(v)));
        let spread = hi / lo - 1.0;
        ensure((-2.3..=-1.6).contains(&slope), || format!("{m}: slope {slope}"))?;
        ensure(spread < 0.35, || format!("{m}: E r^2 varies by {:.0}%", 100.0 * spread))?;
        parts.push(format!("{m} slope {slope:.3}, E r^2 spread {:.1}%", 100.0 * spread));
    }
    Ok(parts.join("; "))
}

fn c6(mx: &Matrix) -> Check {
    let pairs = [
        ("ball/box", ("ball2", "lebesgue"), ("box2", "lebesgue")),
        ("oct/box", ("octagon", "lebesgue"), ("box2", "lebesgue")),
        ("cheb/leb", ("box2", "chebyshev"), ("box2", "lebesgue")),
    ];
    let mut worst = (0f64, String::new());
    let mut failures = Vec::new();
    for f in registry::TABLE2 {
        for (label, a, b) in pairs {
            let rep = ok(ratio_report(mx.get(f, a.0, a.1), mx.get(f, b.0, b.1)))?;
            let cv = rep.tail_cv();
            if !(cv.is_finite() && cv < 0.25 && rep.tail_mean > 0.0) {
                failures.push(format!("{f} {label} cv {cv:.3}"));
            }
            if cv > worst.0 || !cv.is_finite() {
                worst = (cv, format!("{f} {label}"));
            }
        }
    }
    ensure(failures.is_empty(), || failures.join(", "))?;
    Ok(format!("18 ratios, worst tail cv {:.3} ({})", worst.0, worst.1))
}

fn c7() -> Check {
    let t0 = Instant::now();
    const GRID: usize = 4000;
    let grid = |lo: f64, hi: f64| (0..=GRID).map(move |i| lo + (hi - lo) * i as f64 / GRID as f64);
    let mut evals = 0usize;
    for r in 1..=40u32 {
        for h in [0.05, 0.1, 0.3] {
            let nu = NeedleSpec::needle(r, h);
            let kappa = NeedleSpec::half_needle(r, h);
            let nu_tail = 4.0 * (-(r as f64) * h / 2.0).exp();
            let kappa_tail = 4.0 * (-(r as f64) * h.sqrt() / 2.0).exp();
            ensure((needle_eval(&nu, 0.0) - 1.0).abs() < 1e-12 && (needle_eval(&kappa, 0.0) - 1.0).abs() < 1e-12, || {
                format!("peak r={r} h={h}")
            })?;
            for t in grid(-1.0, 1.0) {
                let v = needle_eval(&nu, t);
                ensure((0.0..=1.0 + 1e-12).contains(&v), || format!("nu r={r} h={h} t={t}: {v}"))?;
                ensure(t.abs() < h || v <= nu_tail + 1e-12, || format!("nu tail r={r} h={h} t={t}"))?;
                ensure(lambda_lower(4 * r, t.abs()) <= v + 1e-12, || format!("Lambda > nu r={r} h={h} t={t}"))?;
                if t >= 0.0 {
                    let k = needle_eval(&kappa, t);
                    ensure((0.0..=1.0 + 1e-12).contains(&k), || format!("kappa r={r} h={h} t={t}: {k}"))?;
                    ensure(t < h || k <= kappa_tail + 1e-12, || format!("kappa tail r={r} h={h} t={t}"))?;
                    ensure(lambda_lower(4 * r, t) <= k + 1e-12, || format!("Lambda > kappa r={r} h={h} t={t}"))?;
                }
                evals += 2;
            }
        }
        let c = (1.0 + 2f64.sqrt()).ln();
        for k in 1..=99 {
            let t = k as f64 / 100.0;
            let lower = 0.5 * (r as f64 * t.sqrt() * c).exp();
            ensure(chebyshev(r, 1.0 + t) >= lower * (1.0 - 1e-12), || format!("T_r(1+t) r={r} t={t}"))?;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..50 {
        let d = rng.gen_range(1..=10u32);
        let mut terms: Vec<(Vec<u32>, f64)> = (0..d).map(|k| (vec![k], rng.gen_range(-1.0..1.0))).collect();
        terms.push((vec![d], rng.gen_range(0.1..1.0)));
        let p = ok(Polynomial::from_terms(1, terms))?;
        let dp = p.derivative(0);
        let deg = d as f64;
        for (lo, hi, factor) in [(-1.0, 1.0, deg * deg), (0.0, 1.0, 2.0 * deg * deg)] {
            let max_p = grid(lo, hi).map(|t| p.eval(&[t]).abs()).fold(0.0, f64::max);
            let max_dp = grid(lo, hi).map(|t| dp.eval(&[t]).abs()).fold(0.0, f64::max);
            ensure(max_dp <= factor * max_p + 1e-9, || format!("Markov fails for {p}"))?;
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    ensure(secs < 30.0, || format!("took {secs:.1} s"))?;
    Ok(format!("{evals} needle evaluations, 50 Markov polynomials, {secs:.2} s"))
}

fn exponents(n: usize, max_deg: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|e: Vec<u32>| {
                (0..=max_deg).map(move |k| {
                    let mut e = e.clone();
                    e.push(k);
                    e
                })
            })
            .collect();
    }
    out.retain(|e| e.iter().sum::<u32>() <= max_deg);
    out
}

/// Largest deviation of the oracle from a seeded Monte-Carlo estimate, in standard errors.
fn monte_carlo_sigma(o: &MomentOracle, scale: f64, mut draw: impl FnMut(&mut ChaCha8Rng) -> (Vec<f64>, f64)) -> f64 {
    const SAMPLES: usize = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let alphas = exponents(o.n_vars(), 4);
    let mut sum = vec![0.0; alphas.len()];
    let mut sum_sq = vec![0.0; alphas.len()];
    for _ in 0..SAMPLES {
        let (x, w) = draw(&mut rng);
        for (i, a) in alphas.iter().enumerate() {
            let v = w * x.iter().zip(a).map(|(xi, &k)| xi.powi(k as i32)).product::<f64>();
            sum[i] += v;
            sum_sq[i] += v * v;
        }
    }
    let n = SAMPLES as f64;
    let mut worst = 0f64;
    for (i, a) in alphas.iter().enumerate() {
        let mean = sum[i] / n;
        let se = scale * ((sum_sq[i] / n - mean * mean).max(0.0) / n).sqrt();
        let dev = (o.moment(a).unwrap() - scale * mean).abs();
        if dev > 1e-12 {
            worst = worst.max(dev / se);
        }
    }
    worst
}

fn c8() -> Check {
    let odd_cases = [
        (DomainSpec::unit_box(2), MeasureSpec::Lebesgue),
        (DomainSpec::unit_box(2), MeasureSpec::chebyshev()),
        (DomainSpec::unit_ball(2), MeasureSpec::Lebesgue),
        (DomainSpec::unit_ball(3), MeasureSpec::BallJacobi { lambda: 0.7 }),
    ];
    for (d, m) in odd_cases {
        let o = ok(MomentOracle::new(d.clone(), m, 256))?;
        for a in exponents(d.n_vars(), 9).into_iter().filter(|a| a.iter().any(|k| k % 2 == 1)) {
            let v = ok(o.moment(&a))?;
            ensure(v == 0.0, || format!("{} {a:?} = {v}", d.kind_name()))?;
        }
    }
    let mut worst_red = 0f64;
    for n in [2, 3] {
        for lambda in [0.0, 1.0, 2.5] {
            for k in 0..=8 {
                let (lhs, rhs) = ok(reduce_ball_to_interval(n, lambda, k))?;
                let err = (lhs - rhs).abs();
                worst_red = worst_red.max(err);
                ensure(err <= 1e-10, || format!("n={n} lambda={lambda} k={k}: {lhs} vs {rhs}"))?;
            }
        }
    }
    let c20 = ok(normalization_constant(2, 0.0))?.value;
    ensure((c20 - PI).abs() <= 1e-12, || format!("C_2,0 = {c20}"))?;

    let mut worst_sigma = 0f64;
    let lebesgue = [DomainSpec::unit_box(2), DomainSpec::unit_ball(2), DomainSpec::standard_simplex(2), DomainSpec::octagon()];
    let weighted = [
        (DomainSpec::unit_box(2), MeasureSpec::BoxJacobi { lambda: 1.0 }),
        (DomainSpec::unit_ball(2), MeasureSpec::BallJacobi { lambda: 1.5 }),
    ];
    for (d, m) in lebesgue.into_iter().map(|d| (d, MeasureSpec::Lebesgue)).chain(weighted) {
        let o = ok(MomentOracle::new(d.clone(), m, 256))?;
        let s = monte_carlo_sigma(&o, d.volume(), |rng| {
            let x = d.sample_uniform(rng);
            let w = m.weight(&d, &x);
            (x, w)
        });
        ensure(s <= 4.0, || format!("{} {}: {s:.2} sigma", d.kind_name(), m.name()))?;
        worst_sigma = worst_sigma.max(s);
    }
    // arcsine sampling for the Chebyshev weight
    let o = ok(MomentOracle::new(DomainSpec::unit_box(2), MeasureSpec::chebyshev(), 256))?;
    let s = monte_carlo_sigma(&o, PI * PI, |rng| (vec![rng.gen_range(0.0..PI).cos(), rng.gen_range(0.0..PI).cos()], 1.0));
    ensure(s <= 4.0, || format!("chebyshev: {s:.2} sigma"))?;
    worst_sigma = worst_sigma.max(s);
    Ok(format!(
        "odd zeros exact, reduction err {worst_red:.1e}, C_2,0 err {:.1e}, worst Monte-Carlo deviation {worst_sigma:.2} sigma",
        (c20 - PI).abs()
    ))
}

fn c9() -> Check {
    // f = x1 + 1 on [-1, 1]^2, minimized along x1 = -1; anchor at the vertex
    let f = &Polynomial::var(2, 0) + &Polynomial::constant(2, 1.0);
    let rc = ok(recentre(&f, &DomainSpec::unit_box(2), &[-1.0, -1.0]))?;
    let slope = rc.f.coefficient(&[1, 0]);
    ensure(rc.f.terms().count() == 1 && slope > 0.0, || format!("unexpected recentred f {}", rc.f))?;
    let (lo, hi) = rc.domain.bounding_box();
    // f depends on y1 alone and the box is a product, so the bound equals the
    // bound of the univariate problem on the first side: a univariate square
    // is a feasible density and every density's marginal is a univariate sum of squares
    let g = ok(Polynomial::from_terms(1, [(vec![1], slope)]))?;
    let side = ok(DomainSpec::axis_box(vec![lo[0]], vec![hi[0]]))?;
    let check_2d = ok(series_with_oracle(&rc.f, &ok(MomentOracle::new(rc.domain.clone(), MeasureSpec::Lebesgue, 256))?, 1, 6, 0.0))?;
    let check_1d = ok(series_with_oracle(&g, &ok(MomentOracle::new(side.clone(), MeasureSpec::Lebesgue, 256))?, 1, 6, 0.0))?;
    for (a, b) in check_2d.values().iter().zip(check_1d.values()) {
        ensure((a - b).abs() <= 1e-10 * a.abs().max(1e-3), || format!("reduction mismatch {a} vs {b}"))?;
    }
    let o = ok(MomentOracle::new(side, MeasureSpec::Lebesgue, 1024))?;
    let mut parts = Vec::new();
    let mut needles: Vec<(f64, bool)> = Vec::new();
    for r in [10u32, 20, 40] {
        let nb = ok(needle_bound(&rc.f, &rc.domain, r, NeedleRegime::ConvexBody, SchedulePolicy::Clamp))?;
        let order = nb.density_degree / 2;
        let eig = ok(solve(&ok(assemble(&g, &o, order))?))?;
        ensure(nb.value >= eig.value - 1e-12, || format!("r={r}: needle {} < eigen {}", nb.value, eig.value))?;
        parts.push(format!(
            "r={r}: needle {:.4e} >= eigen(order {order}) {:.4e}{}",
            nb.value,
            eig.value,
            if nb.out_of_regime { " [h clamped]" } else { "" }
        ));
        needles.push((nb.value, nb.out_of_regime));
    }
    let in_regime: Vec<f64> = needles.iter().filter(|(_, out)| !out).map(|(v, _)| *v).collect();
    ensure(in_regime.windows(2).all(|w| w[1] <= w[0] + 1e-12), || "needle bounds increase in regime".into())?;
    let all_non_increasing = needles.windows(2).all(|w| w[1].0 <= w[0].0 + 1e-12);
    ensure(all_non_increasing, || "needle bounds increase".into())?;
    parts.push(format!("{} of 3 orders in regime; non-increasing", in_regime.len()));
    Ok(parts.join("; "))
}

fn c10() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let box2 = DomainSpec::unit_box(2);
    let o = ok(MomentOracle::new(box2.clone(), MeasureSpec::Lebesgue, 256))?;
    let mut worst = 0f64;
    for _ in 0..3 {
        let u = loop {
            let u = DMatrix::<f64>::from_fn(2, 2, |_, _| rng.gen_range(-1.5..1.5));
            if u.determinant().abs() > 0.3 {
                break u;
            }
        };
        let c = vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let image = ok(box2.affine_map(&u, &c))?;
        let ui = u.clone().try_inverse().ok_or("singular map")?;
        let back: Vec<f64> = (-(&ui * DVector::from_vec(c.clone()))).iter().copied().collect();
        let oi = ok(MomentOracle::new(image, MeasureSpec::Lebesgue, 256))?;
        for name in ["quadratic", "matyas", "booth"] {
            let f = registry::function(name, 2).ok_or("registry")?.f;
            let g = ok(f.compose_affine(&ui, &back))?;
            let a = ok(series_with_oracle(&f, &o, 1, 8, 0.0))?;
            let b = ok(series_with_oracle(&g, &oi, 1, 8, 0.0))?;
            for (x, y) in a.values().iter().zip(b.values()) {
                let rel = (x - y).abs() / x.abs().max(1.0);
                worst = worst.max(rel);
                ensure(rel <= 1e-8, || format!("{name}: {x} vs {y}"))?;
            }
        }
    }
    let mut est = Vec::new();
    for (kind, domain, engine) in [
        (EstimatorChoice::Quadratic, "box2", Engine::Eigen),
        (EstimatorChoice::LinearOnBall, "ball2", Engine::Eigen),
        (EstimatorChoice::Lipschitz, "box2", Engine::Needle),
    ] {
        let mut c = ExperimentConfig::named("quadratic", domain, 8);
        c.engine = engine;
        c.estimator = Some(kind);
        c.omit_timing = true;
        let out = ok(run(&c))?;
        for row in &out.series {
            let (b, g) = (row.bound.unwrap(), row.estimator_bound.ok_or("no estimator bound")?);
            ensure(b <= g + 1e-8, || format!("{kind:?} r={}: {b} > {g}", row.r))?;
        }
        est.push(format!("{kind:?}"));
    }
    Ok(format!("9 map/function pairs r<=8, max rel diff {worst:.1e}; dominance holds for {}", est.join(", ")))
}

fn c11() -> Check {
    let mut c = ExperimentConfig::named("quartic", "interval01", 20);
    c.recentre = true;
    let out = ok(run(&c))?;
    let rep = ok(rate_report(&out, (10, 20), -2.5))?;
    let slope = rep.slope.ok_or("no slope")?;
    ensure(slope <= -2.5, || format!("slope {slope}"))?;
    Ok(format!("slope {slope:.3} ± {:.3}", rep.stderr.unwrap_or(f64::NAN)))
}

fn c12() -> Check {
    let t0 = Instant::now();
    let c = ExperimentConfig::named("camel", "octagon", 20);
    let out = ok(run(&c))?;
    let secs = t0.elapsed().as_secs_f64();
    let csv = ok(lasserre_cli::output::series_csv(&out))?;
    let header = csv.lines().next().unwrap_or_default();
    ensure(header.contains("assemble_ms") && header.contains("solve_ms"), || format!("header {header}"))?;
    ensure(out.series.iter().all(|r| r.assemble_ms.is_some() && r.solve_ms.is_some()), || "missing timings".into())?;
    ensure(secs < 60.0, || format!("took {secs:.1} s"))?;
    let (asm, sol): (f64, f64) = out
        .series
        .iter()
        .fold((0.0, 0.0), |(a, s), r| (a + r.assemble_ms.unwrap(), s + r.solve_ms.unwrap()));
    Ok(format!("camel/octagon r<=20 in {secs:.2} s (assemble {asm:.0} ms, solve {sol:.0} ms)"))
}

fn report(id: usize, name: &str, f: impl FnOnce() -> Check) -> bool {
    let t0 = Instant::now();
    let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panic: {msg}"))
    });
    let secs = t0.elapsed().as_secs_f64();
    match res {
        Ok(detail) => {
            println!("PASS criterion {id:>2} {name}: {detail} [{secs:.1} s]");
            true
        }
        Err(detail) => {
            println!("FAIL criterion {id:>2} {name}: {detail} [{secs:.1} s]");
            false
        }
    }
}

fn main() -> ExitCode {
    // cargo passes harness flags such as --list or filters; only --list needs an answer
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let mut pass = true;
    pass &= report(1, "closed-form eigen check", c1);
    pass &= report(2, "constant closure", c2);
    pass &= report(3, "mean closure", c3);
    let matrix = Matrix::compute();
    let with_matrix = |f: fn(&Matrix) -> Check| -> Check {
        match &matrix {
            Ok(m) => f(m),
            Err(e) => Err(format!("series matrix failed: {e}")),
        }
    };
    pass &= report(4, "sandwich and monotonicity", || with_matrix(c4));
    pass &= report(5, "rate on the box", || with_matrix(c5));
    pass &= report(6, "ratio stability", || with_matrix(c6));
    pass &= report(7, "needle properties", c7);
    pass &= report(8, "moment oracle", c8);
    pass &= report(9, "cross-engine dominance", c9);
    pass &= report(10, "invariance and estimator dominance", c10);
    pass &= report(11, "accelerated rate", c11);
    pass &= report(12, "performance", c12);
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
