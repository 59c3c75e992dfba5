//! Closed-form moments `∫_K x^alpha dmu` in extended precision.
//!
//! * boxes: products of one-dimensional Beta integrals, shifted binomially
//!   for boxes other than `[-1, 1]^n`;
//! * balls: the even-multi-index Gamma formula, shifted for off-center balls;
//! * simplices: the barycentric (Dirichlet) expansion, a convolution of
//!   per-vertex tables;
//! * polygons: the sum over the fan triangulation.
//!
//! Single high-degree planar moments go through Green's theorem instead, at
//! a precision that grows with the degree.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rug::ops::Pow;
use rug::Float;

use crate::domains::{DomainSpec, MeasureSpec};
use crate::error::{Error, Result};
use crate::poly::MonomialBasis;
use crate::xprec::{self, xf, zero};

/// All moments of total degree `<= max_degree`, in extended precision.
#[derive(Debug, Clone)]
pub struct MomentTable {
    basis: MonomialBasis,
    index: HashMap<Vec<u32>, usize>,
    values: Vec<Float>,
}

impl MomentTable {
    fn from_fn(basis: MonomialBasis, mut f: impl FnMut(&[u32]) -> Float) -> Self {
        let values = basis.exponents().iter().map(|a| f(a)).collect();
        Self::new(basis, values)
    }

    fn new(basis: MonomialBasis, values: Vec<Float>) -> Self {
        let index = basis
            .exponents()
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i))
            .collect();
        Self { basis, index, values }
    }

    pub fn max_degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn get(&self, alpha: &[u32]) -> Option<&Float> {
        self.index.get(alpha).map(|&i| &self.values[i])
    }

    pub fn basis(&self) -> &MonomialBasis {
        &self.basis
    }

    pub fn values(&self) -> &[Float] {
        &self.values
    }
}

/// Moment oracle for a compatible `(domain, measure)` pair.
///
/// The memoized table sits behind a mutex and is only ever replaced by a
/// larger table of identical values, so lookups behave as if uncached.
#[derive(Debug)]
pub struct MomentOracle {
    domain: DomainSpec,
    measure: MeasureSpec,
    precision: u32,
    cache: Mutex<Option<Arc<MomentTable>>>,
}

impl Clone for MomentOracle {
    fn clone(&self) -> Self {
        Self {
            domain: self.domain.clone(),
            measure: self.measure,
            precision: self.precision,
            cache: Mutex::new(self.cache.lock().unwrap().clone()),
        }
    }
}

impl MomentOracle {
    pub fn new(domain: DomainSpec, measure: MeasureSpec, precision: u32) -> Result<Self> {
        measure.check_compatible(&domain)?;
        if precision < 53 {
            return Err(Error::InvalidParameter(format!(
                "precision must be at least 53 bits, got {precision}"
            )));
        }
        Ok(Self {
            domain,
            measure,
            precision,
            cache: Mutex::new(None),
        })
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn measure(&self) -> MeasureSpec {
        self.measure
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn n_vars(&self) -> usize {
        self.domain.n_vars()
    }

    /// `∫ x^alpha dmu`, rounded to `f64`.
    pub fn moment(&self, alpha: &[u32]) -> Result<f64> {
        Ok(self.moment_ext(alpha)?.to_f64())
    }

    /// `∫ x^alpha dmu` at the oracle's precision.
    pub fn moment_ext(&self, alpha: &[u32]) -> Result<Float> {
        if alpha.len() != self.n_vars() {
            return Err(Error::DimensionMismatch {
                expected: self.n_vars(),
                got: alpha.len(),
            });
        }
        if let Some(t) = self.cache.lock().unwrap().as_ref() {
            if let Some(v) = t.get(alpha) {
                return Ok(v.clone());
            }
        }
        let degree: usize = alpha.iter().map(|&a| a as usize).sum();
        match &self.domain {
            DomainSpec::Polygon { vertices } => {
                let v: Vec<[f64; 2]> = vertices.clone();
                Ok(Float::with_val(self.precision, green_moment(&v, alpha, self.precision)))
            }
            DomainSpec::Simplex { vertices } if vertices.len() == 3 => {
                let mut v: Vec<[f64; 2]> = vertices.iter().map(|p| [p[0], p[1]]).collect();
                let signed = (v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[1][1] - v[0][1]) * (v[2][0] - v[0][0]);
                if signed < 0.0 {
                    v.reverse();
                }
                Ok(Float::with_val(self.precision, green_moment(&v, alpha, self.precision)))
            }
            DomainSpec::Simplex { .. } => Ok(self.table(degree)?.get(alpha).unwrap().clone()),
            _ => Ok(self.single_closed_form(alpha)),
        }
    }

    /// All moments of degree `<= max_degree`; cached and shared.
    pub fn table(&self, max_degree: usize) -> Result<Arc<MomentTable>> {
        if let Some(t) = self.cache.lock().unwrap().as_ref() {
            if t.max_degree() >= max_degree {
                return Ok(Arc::clone(t));
            }
        }
        let table = Arc::new(self.build_table(max_degree));
        let mut slot = self.cache.lock().unwrap();
        match slot.as_ref() {
            Some(t) if t.max_degree() >= max_degree => Ok(Arc::clone(t)),
            _ => {
                *slot = Some(Arc::clone(&table));
                Ok(table)
            }
        }
    }

    fn build_table(&self, d: usize) -> MomentTable {
        let prec = self.precision;
        let n = self.n_vars();
        let basis = MonomialBasis::new(n, d);
        let lambda = self.measure.lambda();
        match &self.domain {
            DomainSpec::Box { lower, upper } => {
                let axes: Vec<Vec<Float>> = lower
                    .iter()
                    .zip(upper)
                    .map(|(&lo, &hi)| interval_moments(prec, lambda, lo, hi, d))
                    .collect();
                MomentTable::from_fn(basis, |a| {
                    let mut v = xf(prec, 1.0);
                    for (i, &k) in a.iter().enumerate() {
                        v *= &axes[i][k as usize];
                    }
                    v
                })
            }
            DomainSpec::Ball { center, radius } => {
                let unit = MomentTable::from_fn(basis.clone(), |a| unit_ball_moment(prec, lambda, a));
                if center.iter().all(|&c| c == 0.0) {
                    let rho = xf(prec, *radius);
                    return MomentTable::from_fn(basis, |a| {
                        let k: u32 = a.iter().sum();
                        let mut v = unit.get(a).unwrap().clone();
                        v *= Float::with_val(prec, (&rho).pow(k + n as u32));
                        v
                    });
                }
                let binom = xprec::binomials(prec, d);
                let rho_pows = xprec::powers(&xf(prec, *radius), d + n);
                let c_pows: Vec<Vec<Float>> = center.iter().map(|&c| xprec::powers(&xf(prec, c), d)).collect();
                MomentTable::from_fn(basis, |a| {
                    // (c + rho t)^alpha expanded over beta <= alpha
                    let mut total = zero(prec);
                    for_each_below(a, |b| {
                        let m = unit.get(b).unwrap();
                        if m.is_zero() {
                            return;
                        }
                        let mut term = m.clone();
                        for i in 0..n {
                            let (ai, bi) = (a[i] as usize, b[i] as usize);
                            term *= &binom[ai][bi];
                            term *= &c_pows[i][ai - bi];
                            term *= &rho_pows[bi];
                        }
                        total += term;
                    });
                    total * &rho_pows[n]
                })
            }
            DomainSpec::Simplex { vertices } => simplex_table(prec, vertices, basis),
            DomainSpec::Polygon { .. } => {
                let mut values = vec![zero(prec); basis.len()];
                for tri in self.domain.triangulate().expect("validated polygon") {
                    let DomainSpec::Simplex { vertices } = tri else { unreachable!() };
                    let part = simplex_table(prec, &vertices, basis.clone());
                    for (acc, v) in values.iter_mut().zip(part.values) {
                        *acc += v;
                    }
                }
                MomentTable::new(basis, values)
            }
        }
    }

    fn single_closed_form(&self, alpha: &[u32]) -> Float {
        let prec = self.precision;
        let lambda = self.measure.lambda();
        match &self.domain {
            DomainSpec::Box { lower, upper } => {
                let mut v = xf(prec, 1.0);
                for (i, &k) in alpha.iter().enumerate() {
                    let axis = interval_moments(prec, lambda, lower[i], upper[i], k as usize);
                    v *= &axis[k as usize];
                }
                v
            }
            DomainSpec::Ball { center, radius } if center.iter().all(|&c| c == 0.0) => {
                let k: u32 = alpha.iter().sum();
                let rho = Float::with_val(prec, xf(prec, *radius).pow(k + alpha.len() as u32));
                unit_ball_moment(prec, lambda, alpha) * rho
            }
            _ => {
                let d: usize = alpha.iter().map(|&a| a as usize).sum();
                self.table(d).unwrap().get(alpha).unwrap().clone()
            }
        }
    }
}

/// `∫_{-1}^{1} t^k (1 - t^2)^lambda dt`: zero for odd `k`, else
/// `Gamma((k+1)/2) Gamma(lambda+1) / Gamma((k+1)/2 + lambda + 1)`.
pub fn unit_interval_moment(prec: u32, lambda: f64, k: usize) -> Float {
    if k % 2 == 1 {
        return zero(prec);
    }
    let a = (k as f64 + 1.0) / 2.0;
    xprec::gamma(prec, a) * xprec::gamma(prec, lambda + 1.0) / xprec::gamma(prec, a + lambda + 1.0)
}

/// `∫_{B^n} t^beta (1 - |t|^2)^lambda dt`: zero unless every `beta_i` is even, else
/// `Gamma(lambda+1) prod Gamma((beta_i+1)/2) / Gamma(lambda + 1 + (|beta| + n)/2)`.
pub fn unit_ball_moment(prec: u32, lambda: f64, beta: &[u32]) -> Float {
    if beta.iter().any(|b| b % 2 == 1) {
        return zero(prec);
    }
    let mut v = xprec::gamma(prec, lambda + 1.0);
    for &b in beta {
        v *= xprec::gamma(prec, (b as f64 + 1.0) / 2.0);
    }
    let total: u32 = beta.iter().sum();
    v / xprec::gamma(prec, lambda + 1.0 + (total as f64 + beta.len() as f64) / 2.0)
}

/// Moments `0..=d` of `x^k` on `[lo, hi]` with the Jacobi weight of the
/// interval's reference coordinate.
fn interval_moments(prec: u32, lambda: f64, lo: f64, hi: f64, d: usize) -> Vec<Float> {
    if lambda == 0.0 {
        // (hi^(k+1) - lo^(k+1)) / (k+1), free of binomial cancellation
        let hp = xprec::powers(&xf(prec, hi), d + 1);
        let lp = xprec::powers(&xf(prec, lo), d + 1);
        return (0..=d)
            .map(|k| Float::with_val(prec, &hp[k + 1] - &lp[k + 1]) / (k as u32 + 1))
            .collect();
    }
    let unit: Vec<Float> = (0..=d).map(|k| unit_interval_moment(prec, lambda, k)).collect();
    if lo == -1.0 && hi == 1.0 {
        return unit;
    }
    let c = xf(prec, 0.5 * (lo + hi));
    let s = xf(prec, 0.5 * (hi - lo));
    let cp = xprec::powers(&c, d);
    let sp = xprec::powers(&s, d + 1);
    let binom = xprec::binomials(prec, d);
    (0..=d)
        .map(|k| {
            let mut acc = zero(prec);
            for j in (0..=k).step_by(2) {
                acc += Float::with_val(prec, &binom[k][j] * &cp[k - j]) * &sp[j] * &unit[j];
            }
            acc * &sp[1]
        })
        .collect()
}

/// Calls `f` for every multi-index `beta <= alpha` componentwise.
fn for_each_below(alpha: &[u32], mut f: impl FnMut(&[u32])) {
    let n = alpha.len();
    let mut b = vec![0u32; n];
    loop {
        f(&b);
        let mut i = 0;
        loop {
            if i == n {
                return;
            }
            if b[i] < alpha[i] {
                b[i] += 1;
                break;
            }
            b[i] = 0;
            i += 1;
        }
    }
}

fn multi_factorial(fact: &[Float], a: &[u32]) -> Float {
    let mut v = fact[0].clone();
    for &k in a {
        v *= &fact[k as usize];
    }
    v
}

/// `∫_S x^alpha dx = |det E| alpha! / (|alpha| + n)! * (c_0 * ... * c_n)(alpha)` with
/// `c_j(beta) = |beta|! v_j^beta / beta!` and `*` the multi-index convolution.
fn simplex_table(prec: u32, vertices: &[Vec<f64>], basis: MonomialBasis) -> MomentTable {
    let n = vertices.len() - 1;
    let d = basis.degree();
    let fact = xprec::factorials(prec, d + n);
    let exps: Vec<Vec<u32>> = basis.exponents().to_vec();
    let index: HashMap<Vec<u32>, usize> = exps.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();

    let vertex_table = |v: &[f64]| -> Vec<Float> {
        let pows: Vec<Vec<Float>> = v.iter().map(|&x| xprec::powers(&xf(prec, x), d)).collect();
        exps.iter()
            .map(|b| {
                let k: u32 = b.iter().sum();
                let mut t = fact[k as usize].clone();
                for (i, &bi) in b.iter().enumerate() {
                    t *= &pows[i][bi as usize];
                    t /= &fact[bi as usize];
                }
                t
            })
            .collect()
    };

    let mut conv = vertex_table(&vertices[0]);
    for v in &vertices[1..] {
        let c = vertex_table(v);
        let next: Vec<Float> = exps
            .iter()
            .map(|a| {
                let mut acc = zero(prec);
                let mut rest = vec![0u32; n];
                for_each_below(a, |b| {
                    for i in 0..n {
                        rest[i] = a[i] - b[i];
                    }
                    acc += Float::with_val(prec, &conv[index[b]] * &c[index[&rest]]);
                });
                acc
            })
            .collect();
        conv = next;
    }

    let det = xdeterminant(prec, vertices).abs();
    let values = exps
        .iter()
        .zip(conv)
        .map(|(a, s)| {
            let k: u32 = a.iter().sum();
            s * multi_factorial(&fact, a) * &det / &fact[k as usize + n]
        })
        .collect();
    MomentTable::new(basis, values)
}

/// `det [v_1 - v_0, ..., v_n - v_0]` by Gaussian elimination in extended precision.
fn xdeterminant(prec: u32, vertices: &[Vec<f64>]) -> Float {
    let n = vertices.len() - 1;
    let mut a: Vec<Vec<Float>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| Float::with_val(prec, xf(prec, vertices[j + 1][i]) - vertices[0][i]))
                .collect()
        })
        .collect();
    let mut det = xf(prec, 1.0);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| a[x][col].clone().abs().partial_cmp(&a[y][col].clone().abs()).unwrap())
            .unwrap();
        if a[piv][col].is_zero() {
            return zero(prec);
        }
        if piv != col {
            a.swap(piv, col);
            det = -det;
        }
        det *= &a[col][col];
        for r in col + 1..n {
            let factor = Float::with_val(prec, &a[r][col] / &a[col][col]);
            for c in col..n {
                let sub = Float::with_val(prec, &factor * &a[col][c]);
                a[r][c] -= sub;
            }
        }
    }
    det
}

/// `∫_P x^a y^b dA` for a counterclockwise polygon by Green's theorem,
/// `(1/(a+1)) ∮ x^(a+1) y^b dy`, with each edge expanded exactly.
///
/// Evaluated at `prec + 4 (a + b)` bits so that the alternating binomial sums
/// keep the requested precision.
pub fn green_moment(vertices: &[[f64; 2]], alpha: &[u32], prec: u32) -> Float {
    let (a, b) = (alpha[0] as usize, alpha[1] as usize);
    let work = prec + 4 * (a + b) as u32 + 16;
    let binom = xprec::binomials(work, a + b + 1);
    let m = vertices.len();
    let mut total = zero(work);
    for e in 0..m {
        let p = vertices[e];
        let q = vertices[(e + 1) % m];
        let dy = q[1] - p[1];
        if dy == 0.0 {
            continue;
        }
        let px = xprec::powers(&xf(work, p[0]), a + 1);
        let dx = xprec::powers(&Float::with_val(work, xf(work, q[0]) - p[0]), a + 1);
        let py = xprec::powers(&xf(work, p[1]), b);
        let dyp = xprec::powers(&Float::with_val(work, xf(work, q[1]) - p[1]), b + 1);
        let xs: Vec<Float> = (0..=a + 1)
            .map(|i| Float::with_val(work, &binom[a + 1][i] * &px[a + 1 - i]) * &dx[i])
            .collect();
        let ys: Vec<Float> = (0..=b)
            .map(|j| Float::with_val(work, &binom[b][j] * &py[b - j]) * &dyp[j])
            .collect();
        let mut edge = zero(work);
        for (i, xi) in xs.iter().enumerate() {
            for (j, yj) in ys.iter().enumerate() {
                edge += Float::with_val(work, xi * yj) / (i + j + 1) as u32;
            }
        }
        total += edge * &dyp[1];
    }
    Float::with_val(prec, total / (a as u32 + 1))
}

/// `C_{n,lambda} = ∫_{B^n} (1 - |x|^2)^lambda dx = pi^(n/2) Gamma(lambda+1) / Gamma(lambda+1+n/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationConstant {
    pub n: usize,
    pub lambda: f64,
    pub value: f64,
}

pub fn normalization_constant(n: usize, lambda: f64) -> Result<NormalizationConstant> {
    Ok(NormalizationConstant {
        n,
        lambda,
        value: normalization_constant_ext(n, lambda, xprec::DEFAULT_PRECISION)?.to_f64(),
    })
}

pub fn normalization_constant_ext(n: usize, lambda: f64, prec: u32) -> Result<Float> {
    if n == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    if !(lambda > -1.0) {
        return Err(Error::InvalidParameter(format!("lambda = {lambda} must exceed -1")));
    }
    let half_n = n as f64 / 2.0;
    let pi_pow = Float::with_val(prec, xprec::pi(prec).pow(half_n));
    Ok(pi_pow * xprec::gamma(prec, lambda + 1.0) / xprec::gamma(prec, lambda + 1.0 + half_n))
}

/// Both sides of `∫_{B^n} x_1^k w_lambda(x) dx = C_{n-1,lambda} ∫_{-1}^{1} t^k w_{lambda+(n-1)/2}(t) dt`,
/// each from its own oracle.
pub fn reduce_ball_to_interval(n: usize, lambda: f64, k: u32) -> Result<(f64, f64)> {
    if n < 2 {
        return Err(Error::InvalidParameter("the reduction needs n >= 2".into()));
    }
    let prec = xprec::DEFAULT_PRECISION;
    let ball = MomentOracle::new(DomainSpec::unit_ball(n), MeasureSpec::BallJacobi { lambda }, prec)?;
    let mut alpha = vec![0u32; n];
    alpha[0] = k;
    let lhs = ball.moment_ext(&alpha)?;
    let interval = MomentOracle::new(
        DomainSpec::unit_box(1),
        MeasureSpec::BoxJacobi {
            lambda: lambda + (n as f64 - 1.0) / 2.0,
        },
        prec,
    )?;
    let rhs = normalization_constant_ext(n - 1, lambda, prec)? * interval.moment_ext(&[k])?;
    Ok((lhs.to_f64(), rhs.to_f64()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, SQRT_2};

    fn oracle(d: DomainSpec, m: MeasureSpec) -> MomentOracle {
        MomentOracle::new(d, m, 256).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn table_values() {
        let box1 = oracle(DomainSpec::unit_box(1), MeasureSpec::Lebesgue);
        assert!(close(box1.moment(&[2]).unwrap(), 2.0 / 3.0, 1e-15));
        let ball2 = oracle(DomainSpec::unit_ball(2), MeasureSpec::Lebesgue);
        assert!(close(ball2.moment(&[0, 0]).unwrap(), PI, 1e-15));
        let cheb = oracle(DomainSpec::unit_box(1), MeasureSpec::chebyshev());
        assert!(close(cheb.moment(&[2]).unwrap(), PI / 2.0, 1e-15));
        let simplex = oracle(DomainSpec::standard_simplex(2), MeasureSpec::Lebesgue);
        assert!(close(simplex.moment(&[1, 0]).unwrap(), 1.0 / 6.0, 1e-15));
        let oct = oracle(DomainSpec::octagon(), MeasureSpec::Lebesgue);
        assert!(close(oct.moment(&[0, 0]).unwrap(), 2.0 * SQRT_2, 1e-15));
    }

    #[test]
    fn table_and_single_paths_agree() {
        let domains = [
            (DomainSpec::octagon(), MeasureSpec::Lebesgue),
            (DomainSpec::simplex(vec![vec![0.3, -0.2], vec![1.1, 0.4], vec![-0.5, 0.9]]).unwrap(), MeasureSpec::Lebesgue),
            (DomainSpec::ball(vec![0.25, -0.5], 0.75).unwrap(), MeasureSpec::BallJacobi { lambda: 1.5 }),
            (DomainSpec::axis_box(vec![0.0, -0.5], vec![0.5, 2.0]).unwrap(), MeasureSpec::BoxJacobi { lambda: -0.5 }),
            (DomainSpec::standard_simplex(3), MeasureSpec::Lebesgue),
        ];
        for (d, m) in domains {
            let o = oracle(d.clone(), m);
            let fresh = oracle(d, m);
            let t = o.table(12).unwrap();
            for (a, v) in t.basis().exponents().iter().zip(t.values()) {
                let s = fresh.moment_ext(a).unwrap();
                let diff = Float::with_val(256, v - &s).to_f64().abs();
                assert!(diff <= 1e-60 * s.to_f64().abs().max(1.0), "{a:?}: {v} vs {s}");
            }
        }
    }

    #[test]
    fn normalization() {
        assert!(close(normalization_constant(2, 0.0).unwrap().value, PI, 1e-15));
        assert!(close(normalization_constant(1, 0.0).unwrap().value, 2.0, 1e-15));
        assert!(normalization_constant(2, -1.0).is_err());
    }

    #[test]
    fn reduction_examples() {
        let (l, r) = reduce_ball_to_interval(2, 0.0, 0).unwrap();
        assert!(close(l, PI, 1e-15) && close(r, PI, 1e-15));
        let (l, r) = reduce_ball_to_interval(2, 0.0, 2).unwrap();
        assert!(close(l, PI / 4.0, 1e-15) && close(r, PI / 4.0, 1e-15));
        let (l, r) = reduce_ball_to_interval(3, 1.0, 4).unwrap();
        assert!(close(l, r, 1e-14));
    }

    #[test]
    fn incompatible_pair_rejected() {
        assert!(MomentOracle::new(DomainSpec::octagon(), MeasureSpec::chebyshev(), 256).is_err());
        assert!(MomentOracle::new(DomainSpec::unit_box(1), MeasureSpec::Lebesgue, 32).is_err());
    }
}
