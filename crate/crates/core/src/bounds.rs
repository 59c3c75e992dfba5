//! Moment-matrix upper bounds `f^(r)` and needle-density bounds.
//!
//! `f^(r)` is the smallest generalized eigenvalue of `M_{r,f} v = lambda B_r v`
//! in the graded monomial basis. Both matrices are assembled from extended
//! precision moments; `B_r = L L^T` is factored and `C = L^-1 M L^-T` formed at
//! the same precision, then `C`'s smallest eigenpair is found in `f64` and
//! polished by shifted inverse iteration in extended precision.

use std::time::Instant;

use nalgebra::SymmetricEigen;
use rug::{Assign, Float};
use serde::{Deserialize, Serialize};

use crate::domains::{DomainSpec, MeasureSpec};
use crate::error::{Error, Result};
use crate::moments::MomentOracle;
use crate::needles::{self, MultiNeedleSpec, NeedleDensity, NeedleSpec, Schedule, ScheduleKind};
use crate::poly::{basis_size, MonomialBasis, Polynomial};
use crate::xprec::{self, GradedCongruence, XMatrix};

/// Largest accepted eigen residual `|M v - lambda B v| / |v|`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-6;

/// `M_{r,f}` and `B_r` in the graded monomial basis of degree `r`.
#[derive(Debug, Clone)]
pub struct MomentMatrixPair {
    pub m: XMatrix,
    pub b: XMatrix,
    pub basis: MonomialBasis,
    pub r: usize,
    pub precision: u32,
}

impl MomentMatrixPair {
    pub fn m_f64(&self) -> nalgebra::DMatrix<f64> {
        self.m.block_f64(self.m.size())
    }

    pub fn b_f64(&self) -> nalgebra::DMatrix<f64> {
        self.b.block_f64(self.b.size())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub r: usize,
    /// `f^(r)`.
    pub value: f64,
    /// Coefficients `v` of `q = (sum v_alpha x^alpha)^2`, normalized to `∫ q dmu = 1`.
    pub density_coeffs: Vec<f64>,
    pub residual: f64,
    /// Time spent assembling the new rows of this order.
    pub assemble_ms: f64,
    /// Time spent on factorization, eigensolve and refinement for this order.
    pub solve_ms: f64,
}

impl BoundResult {
    pub fn wall_ms(&self) -> f64 {
        self.assemble_ms + self.solve_ms
    }

    /// Evaluates the extracted density `q(x)`.
    pub fn density(&self, basis: &MonomialBasis, x: &[f64]) -> f64 {
        let p: f64 = basis
            .exponents()
            .iter()
            .zip(&self.density_coeffs)
            .map(|(e, c)| c * e.iter().zip(x).map(|(&k, v)| v.powi(k as i32)).product::<f64>())
            .sum();
        p * p
    }
}

/// Bounds for `r = r_min..=r_max` with the known minimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSeries {
    pub f_min: f64,
    pub results: Vec<BoundResult>,
}

impl BoundSeries {
    /// `E^(r) = f^(r) - f_min`.
    pub fn errors(&self) -> Vec<(usize, f64)> {
        self.results.iter().map(|b| (b.r, b.value - self.f_min)).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.results.iter().map(|b| b.value).collect()
    }

    pub fn get(&self, r: usize) -> Option<&BoundResult> {
        self.results.iter().find(|b| b.r == r)
    }

    /// Largest increase `f^(r+1) - f^(r)` (non-positive for a monotone series).
    pub fn max_increase(&self) -> f64 {
        self.results
            .windows(2)
            .map(|w| w[1].value - w[0].value)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `M[i][j] = ∫ f x^(a_i + a_j) dmu`, `B[i][j] = ∫ x^(a_i + a_j) dmu`.
pub fn assemble(f: &Polynomial, o: &MomentOracle, r: usize) -> Result<MomentMatrixPair> {
    let mut builder = Assembler::new(f, o, r)?;
    builder.fill(basis_size(o.n_vars(), r));
    Ok(builder.finish())
}

struct Assembler<'a> {
    f_terms: Vec<(Vec<u32>, Float)>,
    table: std::sync::Arc<crate::moments::MomentTable>,
    basis: MonomialBasis,
    m: XMatrix,
    b: XMatrix,
    filled: usize,
    r: usize,
    prec: u32,
    _oracle: &'a MomentOracle,
}

impl<'a> Assembler<'a> {
    fn new(f: &Polynomial, o: &'a MomentOracle, r: usize) -> Result<Self> {
        let n = o.n_vars();
        if f.n_vars() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: f.n_vars(),
            });
        }
        let prec = o.precision();
        let table = o.table(2 * r + f.degree())?;
        let basis = MonomialBasis::new(n, r);
        let size = basis.len();
        Ok(Self {
            f_terms: f.terms().map(|(e, c)| (e.to_vec(), xprec::xf(prec, c))).collect(),
            table,
            basis,
            m: XMatrix::zeros(prec, size),
            b: XMatrix::zeros(prec, size),
            filled: 0,
            r,
            prec,
            _oracle: o,
        })
    }

    /// Fills every entry with `max(i, j) < s`.
    fn fill(&mut self, s: usize) {
        let n = self.basis.n_vars();
        let exps = self.basis.exponents();
        let mut key = vec![0u32; n];
        let mut acc = xprec::zero(self.prec);
        for i in self.filled..s {
            for j in 0..=i {
                for k in 0..n {
                    key[k] = exps[i][k] + exps[j][k];
                }
                let bij = self.table.get(&key).expect("moment table covers the basis").clone();
                acc.assign(0);
                let mut shifted = key.clone();
                for (e, c) in &self.f_terms {
                    for k in 0..n {
                        shifted[k] = key[k] + e[k];
                    }
                    acc += Float::with_val(self.prec, c * self.table.get(&shifted).unwrap());
                }
                self.m.get_mut(i, j).assign(&acc);
                self.m.get_mut(j, i).assign(&acc);
                self.b.get_mut(i, j).assign(&bij);
                *self.b.get_mut(j, i) = bij;
            }
        }
        self.filled = self.filled.max(s);
    }

    fn finish(self) -> MomentMatrixPair {
        MomentMatrixPair {
            m: self.m,
            b: self.b,
            basis: self.basis,
            r: self.r,
            precision: self.prec,
        }
    }
}

/// Smallest generalized eigenpair of a moment-matrix pair.
pub fn solve(pair: &MomentMatrixPair) -> Result<BoundResult> {
    let start = Instant::now();
    let mut gc = GradedCongruence::new(pair.m.clone(), pair.b.clone(), pair.precision);
    let s = pair.basis.len();
    gc.extend_to(s)?;
    let mut out = solve_leading(&gc, s, pair.r)?;
    out.solve_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(out)
}

fn solve_leading(gc: &GradedCongruence, s: usize, r: usize) -> Result<BoundResult> {
    let prec = gc.precision();
    let c64 = gc.c_block_f64(s);
    let eig = SymmetricEigen::new(c64);
    let (imin, lambda0) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    let u0: Vec<Float> = eig.eigenvectors.column(imin).iter().map(|&x| xprec::xf(prec, x)).collect();
    let c = gc.c_block(s);
    let (lambda, u) = refine(&c, lambda0, u0);

    // v = L^-T u has unit mass v^T B v = u^T u
    let uu = xprec::dot(&u, &u);
    let norm = Float::with_val(prec, uu.sqrt_ref());
    let u: Vec<Float> = u.into_iter().map(|x| x / &norm).collect();
    let v = gc.back_transform(&u);

    let mv = xprec::mat_vec(gc.m(), &v);
    let bv = xprec::mat_vec(gc.b(), &v);
    let mut res2 = xprec::zero(prec);
    for (a, b) in mv.iter().zip(&bv) {
        let d = Float::with_val(prec, a - Float::with_val(prec, &lambda * b));
        res2 += Float::with_val(prec, d.square_ref());
    }
    let vnorm = xprec::dot(&v, &v).sqrt();
    let residual = (res2.sqrt() / vnorm).to_f64();
    if !(residual <= RESIDUAL_TOLERANCE) {
        return Err(Error::Residual {
            residual,
            tolerance: RESIDUAL_TOLERANCE,
        });
    }
    Ok(BoundResult {
        r,
        value: lambda.to_f64(),
        density_coeffs: v.iter().map(|x| x.to_f64()).collect(),
        residual,
        assemble_ms: 0.0,
        solve_ms: 0.0,
    })
}

/// Shifted inverse iteration `(C - sigma I) y = u` just below the double
/// precision eigenvalue, followed by a Rayleigh quotient.
fn refine(c: &XMatrix, lambda0: f64, u0: Vec<Float>) -> (Float, Vec<Float>) {
    let s = c.size();
    let prec = c.get(0, 0).prec();
    let scale = (0..s).map(|i| c.get(i, i).to_f64().abs()).fold(1.0f64, f64::max);
    let mut delta = 1e-9 * scale;
    for _ in 0..6 {
        let sigma = xprec::xf(prec, lambda0 - delta);
        let mut shifted = c.clone();
        for i in 0..s {
            *shifted.get_mut(i, i) -= &sigma;
        }
        if let Some(l) = xprec::cholesky(&shifted) {
            let mut u = u0.clone();
            for _ in 0..3 {
                let y = xprec::cholesky_solve(&l, &u);
                let norm = xprec::dot(&y, &y).sqrt();
                u = y.into_iter().map(|x| x / &norm).collect();
            }
            let cu = xprec::mat_vec(c, &u);
            let lambda = xprec::dot(&u, &cu) / xprec::dot(&u, &u);
            return (lambda, u);
        }
        delta *= 16.0;
    }
    // fall back to the double precision pair
    let cu = xprec::mat_vec(c, &u0);
    let lambda = xprec::dot(&u0, &cu) / xprec::dot(&u0, &u0);
    (lambda, u0)
}

/// `f^(r)` for `r = 1..=r_max` on `(d, m)`; see [`series_with_oracle`].
pub fn upper_bound_series(
    f: &Polynomial,
    d: &DomainSpec,
    m: MeasureSpec,
    r_max: usize,
    f_min: f64,
    precision: u32,
) -> Result<BoundSeries> {
    let o = MomentOracle::new(d.clone(), m, precision)?;
    series_with_oracle(f, &o, 1, r_max, f_min)
}

/// `f^(r)` for `r = r_min..=r_max`.
///
/// The order-`r` problem is the leading block of the order-`r_max` one, so
/// matrices are assembled and factored incrementally; per-order timings cover
/// only the new work.
pub fn series_with_oracle(
    f: &Polynomial,
    o: &MomentOracle,
    r_min: usize,
    r_max: usize,
    f_min: f64,
) -> Result<BoundSeries> {
    if r_max < r_min.max(1) && r_min != 0 {
        return Err(Error::InvalidParameter(format!("empty order range {r_min}..={r_max}")));
    }
    let n = o.n_vars();
    let start = Instant::now();
    let mut asm = Assembler::new(f, o, r_max)?;
    let table_ms = start.elapsed().as_secs_f64() * 1e3;
    let mut results = Vec::with_capacity(r_max + 1);
    let mut gc: Option<GradedCongruence> = None;
    let mut pending_assembly = table_ms;
    for r in 0..=r_max {
        let s = basis_size(n, r);
        let t0 = Instant::now();
        asm.fill(s);
        pending_assembly += t0.elapsed().as_secs_f64() * 1e3;
        if r < r_min {
            continue;
        }
        let t1 = Instant::now();
        let g = match gc.as_mut() {
            Some(g) => {
                sync_rows(g, &asm, s);
                g
            }
            None => gc.insert(GradedCongruence::new(asm.m.clone(), asm.b.clone(), asm.prec)),
        };
        g.extend_to(s)?;
        let mut res = solve_leading(g, s, r)?;
        res.solve_ms = t1.elapsed().as_secs_f64() * 1e3;
        res.assemble_ms = pending_assembly;
        pending_assembly = 0.0;
        results.push(res);
    }
    Ok(BoundSeries { f_min, results })
}

/// Copies newly assembled rows into the congruence's matrices.
fn sync_rows(g: &mut GradedCongruence, asm: &Assembler<'_>, s: usize) {
    let s0 = g.done();
    g.update_rows(s0, s, &asm.m, &asm.b);
}

/// Needle density families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NeedleRegime {
    /// Radial needle `nu_r^h(|x|)` with `h = 2(2n + beta) log r / r`.
    InteriorCone { beta: f64 },
    /// `sigma_r^h` along the gradient at the minimizer with `h = (8n + 4) log r / r`.
    ConvexBody,
}

/// What to do when the schedule's `h(r)` exceeds `epsilon_K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SchedulePolicy {
    /// Refuse with [`Error::OutOfRegime`].
    Strict,
    /// Use `h` clamped to `epsilon_K` and report the flag.
    Clamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeedleBound {
    pub r: u32,
    pub value: f64,
    pub h: f64,
    pub out_of_regime: bool,
    /// Degree of the density, `2 r_eigen` for the matching eigen order.
    pub density_degree: usize,
    pub regime: NeedleRegime,
}

/// The needle density of order `r` for a recentred problem, with its schedule.
///
/// The problem must already be recentred: `0 in K`, `K ⊆ B^n`, `f(0) = 0` and
/// the minimizer at the origin. A vanishing gradient turns the convex-body
/// regime into the interior-cone regime with `beta = 2`.
pub fn needle_density(
    f: &Polynomial,
    d: &DomainSpec,
    r: u32,
    regime: NeedleRegime,
    policy: SchedulePolicy,
) -> Result<(NeedleDensity, Schedule, NeedleRegime)> {
    let n = d.n_vars();
    if f.n_vars() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: f.n_vars(),
        });
    }
    let origin = vec![0.0; n];
    if !d.contains(&origin, 1e-12) || d.farthest_distance(&origin) > 1.0 + 1e-12 {
        return Err(Error::Precondition("domain must contain the origin and lie in the unit ball".into()));
    }
    if f.eval(&origin).abs() > 1e-9 {
        return Err(Error::Precondition("f must vanish at the origin".into()));
    }
    let cone = d.cone_constants()?;
    let grad: Vec<f64> = f.gradient().iter().map(|g| g.eval(&origin)).collect();
    let regime = match regime {
        NeedleRegime::ConvexBody if grad.iter().all(|&g| g == 0.0) => NeedleRegime::InteriorCone { beta: 2.0 },
        other => other,
    };
    let kind = match regime {
        NeedleRegime::InteriorCone { beta } => ScheduleKind::InteriorCone { beta },
        NeedleRegime::ConvexBody => ScheduleKind::ConvexMultivariate,
    };
    let sched = needles::h_schedule(kind, n, r as f64, Some(cone))?;
    if sched.out_of_regime && policy == SchedulePolicy::Strict {
        return Err(Error::OutOfRegime {
            h: sched.raw,
            limit: cone.epsilon,
        });
    }
    let q = match regime {
        NeedleRegime::InteriorCone { .. } => NeedleDensity::Radial(NeedleSpec::needle(r, sched.h)),
        NeedleRegime::ConvexBody => NeedleDensity::Multi(MultiNeedleSpec::new(r, sched.h, &grad)?),
    };
    Ok((q, sched, regime))
}

/// `∫ q_r f dx / ∫ q_r dx` for the needle density of [`needle_density`].
pub fn needle_bound(
    f: &Polynomial,
    d: &DomainSpec,
    r: u32,
    regime: NeedleRegime,
    policy: SchedulePolicy,
) -> Result<NeedleBound> {
    let (q, sched, regime) = needle_density(f, d, r, regime, policy)?;
    let o = MomentOracle::new(d.clone(), MeasureSpec::Lebesgue, xprec::DEFAULT_PRECISION)?;
    let (num, mass) = needles::integrate_against(&q, f, &o)?;
    Ok(NeedleBound {
        r,
        value: num / mass,
        h: sched.h,
        out_of_regime: sched.out_of_regime,
        density_degree: q.degree(),
        regime,
    })
}

/// Least-squares slope of `log E` against `log r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub stderr: f64,
    pub points: usize,
}

pub fn rate_fit(series: &BoundSeries, window: (usize, usize)) -> Result<RateFit> {
    let pts: Vec<(f64, f64)> = series
        .errors()
        .into_iter()
        .filter(|(r, _)| *r >= window.0 && *r <= window.1)
        .map(|(r, e)| (r as f64, e))
        .collect();
    rate_fit_points(&pts)
}

/// Fit on explicit `(r, E)` pairs.
pub fn rate_fit_points(pts: &[(f64, f64)]) -> Result<RateFit> {
    if pts.len() < 2 {
        return Err(Error::InvalidParameter("rate fit needs at least two points".into()));
    }
    if let Some((r, _)) = pts.iter().find(|(_, e)| !(*e > 0.0)) {
        return Err(Error::ConvergedExactly { r: *r as usize });
    }
    let xs: Vec<f64> = pts.iter().map(|(r, _)| r.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|(_, e)| e.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let icept = my - slope * mx;
    let ssr: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - icept - slope * x).powi(2)).sum();
    let stderr = if pts.len() > 2 {
        (ssr / (k - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(RateFit {
        slope,
        stderr,
        points: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oracle(d: DomainSpec, m: MeasureSpec) -> MomentOracle {
        MomentOracle::new(d, m, 256).unwrap()
    }

    #[test]
    fn assemble_examples() {
        let o = oracle(DomainSpec::unit_box(1), MeasureSpec::Lebesgue);
        let x = Polynomial::var(1, 0);
        let p = assemble(&x, &o, 1).unwrap();
        let (m, b) = (p.m_f64(), p.b_f64());
        assert_eq!((m[(0, 0)], m[(1, 1)]), (0.0, 0.0));
        assert!((m[(0, 1)] - 2.0 / 3.0).abs() < 1e-16 && (m[(1, 0)] - 2.0 / 3.0).abs() < 1e-16);
        assert!((b[(0, 0)] - 2.0).abs() < 1e-16 && (b[(1, 1)] - 2.0 / 3.0).abs() < 1e-16 && b[(0, 1)] == 0.0);

        let one = Polynomial::constant(1, 1.0);
        let p = assemble(&one, &o, 3).unwrap();
        assert_eq!(p.m, p.b);

        let x2 = Polynomial::monomial(1, vec![2], 1.0);
        let p = assemble(&x2, &o, 0).unwrap();
        assert!((p.m_f64()[(0, 0)] - 2.0 / 3.0).abs() < 1e-16 && p.b_f64()[(0, 0)] == 2.0);
    }

    #[test]
    fn solve_examples() {
        let o = oracle(DomainSpec::unit_box(1), MeasureSpec::Lebesgue);
        let x = Polynomial::var(1, 0);
        let b = solve(&assemble(&x, &o, 1).unwrap()).unwrap();
        assert!((b.value + 1.0 / 3f64.sqrt()).abs() < 1e-14);
        let x2 = Polynomial::monomial(1, vec![2], 1.0);
        let b = solve(&assemble(&x2, &o, 0).unwrap()).unwrap();
        assert!((b.value - 1.0 / 3.0).abs() < 1e-15);
        let c = Polynomial::constant(2, -2.5);
        let ball = oracle(DomainSpec::unit_ball(2), MeasureSpec::Lebesgue);
        for r in 0..4 {
            let b = solve(&assemble(&c, &ball, r).unwrap()).unwrap();
            assert!((b.value + 2.5).abs() < 1e-13);
        }
    }

    #[test]
    fn series_matches_one_shot_solves() {
        let f = Polynomial::from_terms(2, [(vec![1, 0], 1.0), (vec![0, 2], 1.0)]).unwrap();
        let o = oracle(DomainSpec::unit_box(2), MeasureSpec::Lebesgue);
        let s = series_with_oracle(&f, &o, 0, 6, -1.0).unwrap();
        assert_eq!(s.results.len(), 7);
        for res in &s.results {
            let direct = solve(&assemble(&f, &o, res.r).unwrap()).unwrap();
            assert!((res.value - direct.value).abs() < 1e-13, "r={}", res.r);
        }
        assert!(s.max_increase() <= 1e-12);
        let basis = MonomialBasis::new(2, 6);
        let q = s.get(6).unwrap();
        assert!(basis.len() == q.density_coeffs.len() && q.density(&basis, &[0.2, 0.1]) >= 0.0);
    }

    #[test]
    fn rate_fit_examples() {
        let pts: Vec<(f64, f64)> = (10..=20).map(|r| (r as f64, 1.0 / (r * r) as f64)).collect();
        let fit = rate_fit_points(&pts).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-9);
        let flat: Vec<(f64, f64)> = (10..=20).map(|r| (r as f64, 0.3)).collect();
        assert!(rate_fit_points(&flat).unwrap().slope.abs() < 1e-12);
        let lr: Vec<(f64, f64)> = (10..=40).map(|r| (r as f64, (r as f64).ln() / r as f64)).collect();
        // local slope is 1/log r - 1, so the window fit sits well above -1
        let s = rate_fit_points(&lr).unwrap().slope;
        assert!((s + 0.668058).abs() < 1e-6, "{s}");
        assert_eq!(
            rate_fit_points(&[(1.0, 0.5), (2.0, 0.0)]),
            Err(Error::ConvergedExactly { r: 2 })
        );
    }

    #[test]
    fn needle_bound_trivial() {
        let zero = Polynomial::zero(2);
        let d = DomainSpec::axis_box(vec![0.0, 0.0], vec![0.5, 0.5]).unwrap();
        let b = needle_bound(&zero, &d, 10, NeedleRegime::InteriorCone { beta: 1.0 }, SchedulePolicy::Clamp).unwrap();
        assert_eq!(b.value, 0.0);
        let bad = DomainSpec::unit_box(2);
        assert!(matches!(
            needle_bound(&zero, &bad, 10, NeedleRegime::ConvexBody, SchedulePolicy::Clamp),
            Err(Error::Precondition(_))
        ));
    }
}
