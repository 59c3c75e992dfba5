//! Chebyshev polynomials, needle polynomials and their integrals.
//!
//! `nu_r^h(t) = T_r(1 + h^2 - t^2)^2 / T_r(1 + h^2)^2` is a degree-`4r` square
//! peaked at `t = 0`; the half-needle
//! `kappa_r^h(t) = T_2r((2 + h - 2t)/(2 - h))^2 / T_2r((2 + h)/(2 - h))^2` is its
//! one-sided analogue on `[0, 1]`. The denominators grow like `e^(c r h)`, so
//! for `r > 25` ratios are formed from logarithms of `|T_r|`.

use std::collections::HashSet;
use std::sync::Mutex;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::domains::{ConeConstants, DomainSpec};
use crate::error::{Error, Result};
use crate::moments::MomentOracle;
use crate::poly::Polynomial;
use crate::quadrature::{self, Rule};

/// Above this order needle ratios are evaluated in the log domain.
pub const DIRECT_MAX_ORDER: u32 = 25;

/// `T_r(t)`: `cos(r acos t)` on `[-1, 1]`, `cosh(r acosh |t|)` (with sign `(-1)^r` for `t < -1`) outside.
pub fn chebyshev(r: u32, t: f64) -> f64 {
    match r {
        0 => return 1.0,
        1 => return t,
        _ => {}
    }
    if t.abs() <= 1.0 {
        (r as f64 * t.acos()).cos()
    } else {
        let v = (r as f64 * t.abs().acosh()).cosh();
        if t < 0.0 && r % 2 == 1 {
            -v
        } else {
            v
        }
    }
}

/// `T_r(t)` by `T_{k+1} = 2 t T_k - T_{k-1}`.
pub fn chebyshev_recurrence(r: u32, t: f64) -> f64 {
    let (mut a, mut b) = (1.0, t);
    if r == 0 {
        return a;
    }
    for _ in 1..r {
        let c = 2.0 * t * b - a;
        a = b;
        b = c;
    }
    b
}

/// `ln |T_r(t)|`, finite for every `|t| >= 1` without overflow.
pub fn ln_abs_chebyshev(r: u32, t: f64) -> f64 {
    if t.abs() <= 1.0 {
        return chebyshev(r, t).abs().ln();
    }
    // ln cosh x = x + ln((1 + e^(-2x)) / 2)
    let x = r as f64 * t.abs().acosh();
    x + (0.5 * (1.0 + (-2.0 * x).exp())).ln()
}

/// `T_r(a)^2 / T_r(b)^2` with `b >= 1`.
fn chebyshev_ratio_sq(r: u32, a: f64, b: f64) -> f64 {
    if r <= DIRECT_MAX_ORDER {
        let q = chebyshev(r, a) / chebyshev(r, b);
        return q * q;
    }
    chebyshev_ratio_sq_log(r, a, b)
}

fn chebyshev_ratio_sq_log(r: u32, a: f64, b: f64) -> f64 {
    (2.0 * (ln_abs_chebyshev(r, a) - ln_abs_chebyshev(r, b))).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NeedleVariant {
    Needle,
    HalfNeedle,
}

/// Univariate needle of order `r` and width `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeedleSpec {
    pub r: u32,
    pub h: f64,
    pub variant: NeedleVariant,
}

impl NeedleSpec {
    pub fn needle(r: u32, h: f64) -> Self {
        Self {
            r,
            h,
            variant: NeedleVariant::Needle,
        }
    }

    pub fn half_needle(r: u32, h: f64) -> Self {
        Self {
            r,
            h,
            variant: NeedleVariant::HalfNeedle,
        }
    }

    /// Degree of the induced polynomial, `4r`.
    pub fn degree(&self) -> usize {
        4 * self.r as usize
    }

    pub fn eval(&self, t: f64) -> f64 {
        needle_eval(self, t)
    }
}

/// Pointwise value of a needle or half-needle.
pub fn needle_eval(s: &NeedleSpec, t: f64) -> f64 {
    let h = s.h;
    match s.variant {
        NeedleVariant::Needle => chebyshev_ratio_sq(s.r, 1.0 + h * h - t * t, 1.0 + h * h),
        NeedleVariant::HalfNeedle => {
            chebyshev_ratio_sq(2 * s.r, (2.0 + h - 2.0 * t) / (2.0 - h), (2.0 + h) / (2.0 - h))
        }
    }
}

/// Same as [`needle_eval`] but always through logarithms of `|T_r|`.
pub fn needle_eval_log(s: &NeedleSpec, t: f64) -> f64 {
    let h = s.h;
    match s.variant {
        NeedleVariant::Needle => chebyshev_ratio_sq_log(s.r, 1.0 + h * h - t * t, 1.0 + h * h),
        NeedleVariant::HalfNeedle => {
            chebyshev_ratio_sq_log(2 * s.r, (2.0 + h - 2.0 * t) / (2.0 - h), (2.0 + h) / (2.0 - h))
        }
    }
}

/// `Lambda(r, t) = max(1 - 2 r^2 t, 0)` for `t >= 0`.
pub fn lambda_lower(r: u32, t: f64) -> f64 {
    (1.0 - 2.0 * (r as f64).powi(2) * t).max(0.0)
}

/// `sigma_r^h(x) = kappa_r^(h^2)(<x, v>) prod_j nu_r^h(<x, w_j>)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiNeedleSpec {
    pub r: u32,
    pub h: f64,
    pub v: Vec<f64>,
    pub w: Vec<Vec<f64>>,
}

impl MultiNeedleSpec {
    /// Normalizes `v` and completes it to an orthonormal frame with a
    /// Householder reflection.
    pub fn new(r: u32, h: f64, v: &[f64]) -> Result<Self> {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if v.is_empty() || !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidParameter("direction vector must be non-zero".into()));
        }
        let v: Vec<f64> = v.iter().map(|x| x / norm).collect();
        let w = householder_complement(&v);
        Ok(Self { r, h, v, w })
    }

    pub fn n_vars(&self) -> usize {
        self.v.len()
    }

    /// Degree of the induced polynomial, `4 n r`.
    pub fn degree(&self) -> usize {
        4 * self.n_vars() * self.r as usize
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        multineedle_eval(self, x)
    }
}

pub fn multineedle_eval(m: &MultiNeedleSpec, x: &[f64]) -> f64 {
    let dot = |u: &[f64]| u.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    let mut value = needle_eval(&NeedleSpec::half_needle(m.r, m.h * m.h), dot(&m.v));
    let nu = NeedleSpec::needle(m.r, m.h);
    for w in &m.w {
        value *= needle_eval(&nu, dot(w));
    }
    value
}

/// Columns `2..n` of the Householder reflection sending `e_1` to `±v`.
fn householder_complement(v: &[f64]) -> Vec<Vec<f64>> {
    let n = v.len();
    let s = if v[0] >= 0.0 { 1.0 } else { -1.0 };
    let mut u = v.to_vec();
    u[0] += s;
    let uu: f64 = u.iter().map(|x| x * x).sum();
    (1..n)
        .map(|j| {
            (0..n)
                .map(|i| {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    delta - 2.0 * u[i] * u[j] / uu
                })
                .collect()
        })
        .collect()
}

/// Width schedules `h(r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ScheduleKind {
    /// `2 (2n + beta) log r / r`.
    InteriorCone { beta: f64 },
    /// `(8 log r / r)^2`.
    ConvexUnivariate,
    /// `(8n + 4) log r / r`.
    ConvexMultivariate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    /// Value to use, clamped when cone constants were supplied.
    pub h: f64,
    /// Formula value before clamping.
    pub raw: f64,
    /// The formula exceeds `epsilon_K` (or 1 without cone constants).
    pub out_of_regime: bool,
}

/// `h(r)` for the given schedule; with cone constants the value is clamped to
/// `[1/(64 r^2), epsilon_K]`.
pub fn h_schedule(kind: ScheduleKind, n: usize, r: f64, cone: Option<ConeConstants>) -> Result<Schedule> {
    if !(r >= 2.0) {
        return Err(Error::InvalidParameter(format!("schedule needs r >= 2, got {r}")));
    }
    let l = r.ln() / r;
    let raw = match kind {
        ScheduleKind::InteriorCone { beta } => 2.0 * (2.0 * n as f64 + beta) * l,
        ScheduleKind::ConvexUnivariate => (8.0 * l).powi(2),
        ScheduleKind::ConvexMultivariate => (8.0 * n as f64 + 4.0) * l,
    };
    Ok(match cone {
        Some(c) => Schedule {
            h: raw.clamp(1.0 / (64.0 * r * r), c.epsilon),
            raw,
            out_of_regime: raw > c.epsilon,
        },
        None => Schedule {
            h: raw,
            raw,
            out_of_regime: raw > 1.0,
        },
    })
}

/// Non-negative polynomial densities that can be integrated against `f`.
#[derive(Debug, Clone, PartialEq)]
pub enum NeedleDensity {
    /// `q = 1`.
    Constant,
    /// `q(x) = nu_r^h(|x|)` (a polynomial since `nu` is even).
    Radial(NeedleSpec),
    /// `q(x) = s(x_1)` on a one-dimensional domain.
    Univariate(NeedleSpec),
    /// `q = sigma_r^h`.
    Multi(MultiNeedleSpec),
}

impl NeedleDensity {
    pub fn degree(&self) -> usize {
        match self {
            NeedleDensity::Constant => 0,
            NeedleDensity::Radial(s) | NeedleDensity::Univariate(s) => s.degree(),
            NeedleDensity::Multi(m) => m.degree(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            NeedleDensity::Constant => 1.0,
            NeedleDensity::Radial(s) => s.eval(x.iter().map(|v| v * v).sum::<f64>().sqrt()),
            NeedleDensity::Univariate(s) => s.eval(x[0]),
            NeedleDensity::Multi(m) => m.eval(x),
        }
    }
}

static CERTIFIED: Mutex<Option<HashSet<(String, usize)>>> = Mutex::new(None);

/// `(∫ q f dx, ∫ q dx)` over the oracle's domain by a cubature rule exact for
/// the total degree `deg q + deg f` (Lebesgue measure only).
///
/// Rules on triangles are certified once per `(domain, degree)` against 20
/// random monomials of the full degree from the moment oracle.
pub fn integrate_against(q: &NeedleDensity, f: &Polynomial, o: &MomentOracle) -> Result<(f64, f64)> {
    if !o.measure().is_lebesgue() {
        return Err(Error::IncompatibleMeasure {
            measure: o.measure().name(),
            domain: format!("{} (needle integrals use Lebesgue measure)", o.domain().kind_name()),
        });
    }
    let n = o.n_vars();
    if f.n_vars() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: f.n_vars(),
        });
    }
    if let NeedleDensity::Multi(m) = q {
        if m.n_vars() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: m.n_vars(),
            });
        }
    }
    let degree = q.degree() + f.degree();
    let rule = quadrature::rule_for(o.domain(), degree)?;
    if matches!(o.domain(), DomainSpec::Simplex { .. } | DomainSpec::Polygon { .. }) {
        certify(&rule, o, degree)?;
    }
    let mut num = 0.0;
    let mut mass = 0.0;
    for (x, w) in rule.points.iter().zip(&rule.weights) {
        let qx = w * q.eval(x);
        num += qx * f.eval(x);
        mass += qx;
    }
    Ok((num, mass))
}

/// Checks `rule` on 20 random monomials of total degree `degree`; the error is
/// measured relative to `∫ |x^alpha|` so that near-cancelling moments do not
/// produce spurious failures.
pub fn certify(rule: &Rule, o: &MomentOracle, degree: usize) -> Result<()> {
    let key = (format!("{:?}", o.domain()), degree);
    {
        let guard = CERTIFIED.lock().unwrap();
        if guard.as_ref().is_some_and(|s| s.contains(&key)) {
            return Ok(());
        }
    }
    let n = o.n_vars();
    let mut rng = StdRng::seed_from_u64(0x5eed ^ degree as u64);
    for _ in 0..20 {
        let mut alpha = vec![0u32; n];
        for _ in 0..degree {
            alpha[rng.gen_range(0..n)] += 1;
        }
        let mono = |x: &[f64]| x.iter().zip(&alpha).map(|(v, &k)| v.powi(k as i32)).product::<f64>();
        let approx = rule.integrate(mono);
        let scale = rule.integrate(|x| mono(x).abs()).max(f64::MIN_POSITIVE);
        let exact = o.moment(&alpha)?;
        let error = (approx - exact).abs() / scale;
        if !(error <= 1e-9) {
            return Err(Error::QuadratureCertification { error, exponent: alpha });
        }
    }
    CERTIFIED
        .lock()
        .unwrap()
        .get_or_insert_with(HashSet::new)
        .insert(key);
    Ok(())
}
