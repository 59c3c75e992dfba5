//! Upper estimators exact at a point, and the recentring map that places a
//! minimizer at the origin inside the unit ball.

use nalgebra::DMatrix;
use rand::rngs::StdRng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::domains::DomainSpec;
use crate::error::{Error, Result};
use crate::poly::Polynomial;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    QuadraticTaylor,
    LinearOnBall,
    Lipschitz,
}

/// A polynomial upper estimator `g` of `f` with `g(anchor) = f(anchor)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorReport {
    pub g: Polynomial,
    pub anchor: Vec<f64>,
    pub kind: EstimatorKind,
    pub certified_on: DomainSpec,
}

/// `g(x) = f(a) + <grad f(a), x - a> + gamma |x - a|^2`.
///
/// An upper estimator on `domain` whenever `gamma` dominates half the Hessian norm there.
pub fn quadratic_estimator(f: &Polynomial, a: &[f64], gamma: f64, domain: &DomainSpec) -> Result<EstimatorReport> {
    let n = f.n_vars();
    check_point(n, a)?;
    if !(gamma >= 0.0) {
        return Err(Error::InvalidParameter(format!("gamma = {gamma} must be non-negative")));
    }
    let grad: Vec<f64> = f.gradient().iter().map(|g| g.eval(a)).collect();
    let mut g = Polynomial::constant(n, f.eval(a));
    for i in 0..n {
        let shifted = &Polynomial::var(n, i) - &Polynomial::constant(n, a[i]);
        g = &g + &shifted.scale(grad[i]);
        g = &g + &(&shifted * &shifted).scale(gamma);
    }
    Ok(EstimatorReport {
        g,
        anchor: a.to_vec(),
        kind: EstimatorKind::QuadraticTaylor,
        certified_on: domain.clone(),
    })
}

/// The multiplier `lambda` with `grad f(a) = lambda (c - a)` for a boundary
/// point `a` of the ball `B_rho(c)`, or a precondition error.
pub fn normal_multiplier(f: &Polynomial, a: &[f64], center: &[f64]) -> Result<f64> {
    let grad: Vec<f64> = f.gradient().iter().map(|g| g.eval(a)).collect();
    let inward: Vec<f64> = center.iter().zip(a).map(|(c, x)| c - x).collect();
    let nn: f64 = inward.iter().map(|v| v * v).sum();
    let lambda = grad.iter().zip(&inward).map(|(g, v)| g * v).sum::<f64>() / nn;
    let misfit = grad
        .iter()
        .zip(&inward)
        .map(|(g, v)| (g - lambda * v).powi(2))
        .sum::<f64>()
        .sqrt();
    if misfit > 1e-8 || lambda < -1e-8 {
        return Err(Error::Precondition(format!(
            "gradient {grad:?} is not a non-negative multiple of the inward normal {inward:?}"
        )));
    }
    Ok(lambda.max(0.0))
}

/// `h(x) = f(a) + (lambda + 2 gamma)(rho^2 + <x - c, c - a>)` for `a` on the
/// boundary of `B_rho(c)` with `grad f(a) = lambda (c - a)`.
pub fn linear_estimator_on_ball(
    f: &Polynomial,
    a: &[f64],
    center: &[f64],
    radius: f64,
    gamma: f64,
    lambda: f64,
) -> Result<EstimatorReport> {
    let n = f.n_vars();
    check_point(n, a)?;
    check_point(n, center)?;
    let dist = a.iter().zip(center).map(|(x, c)| (x - c).powi(2)).sum::<f64>().sqrt();
    if (dist - radius).abs() > 1e-9 * radius.max(1.0) {
        return Err(Error::Precondition(format!(
            "anchor is at distance {dist} from the center, not on the sphere of radius {radius}"
        )));
    }
    let grad: Vec<f64> = f.gradient().iter().map(|g| g.eval(a)).collect();
    let misfit = grad
        .iter()
        .zip(center.iter().zip(a))
        .map(|(g, (c, x))| (g - lambda * (c - x)).powi(2))
        .sum::<f64>()
        .sqrt();
    if misfit > 1e-8 {
        return Err(Error::Precondition(format!(
            "gradient {grad:?} is not lambda = {lambda} times the inward normal"
        )));
    }
    let k = lambda + 2.0 * gamma;
    // rho^2 + <x - c, c - a> = rho^2 - <c, c - a> + <x, c - a>
    let cc: f64 = center.iter().zip(a).map(|(c, x)| c * (c - x)).sum();
    let mut h = Polynomial::constant(n, f.eval(a) + k * (radius * radius - cc));
    for i in 0..n {
        h = &h + &Polynomial::var(n, i).scale(k * (center[i] - a[i]));
    }
    Ok(EstimatorReport {
        g: h,
        anchor: a.to_vec(),
        kind: EstimatorKind::LinearOnBall,
        certified_on: DomainSpec::ball(center.to_vec(), radius)?,
    })
}

/// `x -> f(a) + beta |x - a|`; not a polynomial, so only used with needle densities.
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzEstimator {
    pub anchor: Vec<f64>,
    pub value_at_anchor: f64,
    pub beta: f64,
}

impl LipschitzEstimator {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let d = x.iter().zip(&self.anchor).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        self.value_at_anchor + self.beta * d
    }
}

pub fn lipschitz_estimator(f: &Polynomial, a: &[f64], beta: f64) -> Result<LipschitzEstimator> {
    check_point(f.n_vars(), a)?;
    if !(beta >= 0.0) {
        return Err(Error::InvalidParameter(format!("beta = {beta} must be non-negative")));
    }
    Ok(LipschitzEstimator {
        anchor: a.to_vec(),
        value_at_anchor: f.eval(a),
        beta,
    })
}

/// Largest violation `max(f - g)` over the domain's grid at `grid_density`
/// plus `samples` seeded uniform points (negative or zero when `g >= f`).
pub fn max_violation(
    f: &Polynomial,
    g: impl Fn(&[f64]) -> f64,
    domain: &DomainSpec,
    grid_density: usize,
    samples: usize,
    seed: u64,
) -> f64 {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    let grid = domain.grid_points(grid_density);
    for x in grid.iter().cloned().chain((0..samples).map(|_| domain.sample_uniform(&mut rng))) {
        worst = worst.max(f.eval(&x) - g(&x));
    }
    worst
}

/// Checks `g(a) = f(a)` within `1e-9` and `g >= f - 1e-7` on a grid plus samples.
pub fn certify(report: &EstimatorReport, f: &Polynomial, seed: u64) -> Result<()> {
    let at_anchor = (report.g.eval(&report.anchor) - f.eval(&report.anchor)).abs();
    if at_anchor > 1e-9 {
        return Err(Error::Precondition(format!("estimator misses f at the anchor by {at_anchor:e}")));
    }
    let density = if f.n_vars() == 1 { 5000 } else { 71 };
    let worst = max_violation(f, |x| report.g.eval(x), &report.certified_on, density, 5000, seed);
    if worst > 1e-7 {
        return Err(Error::Precondition(format!("estimator falls below f by {worst:e}")));
    }
    Ok(())
}

/// Result of [`recentre`]: `f_tilde(y) = f(a + y / scale) - f(a)` on
/// `domain = {scale (x - a) : x in K}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Recentred {
    pub f: Polynomial,
    pub domain: DomainSpec,
    pub scale: f64,
    pub anchor: Vec<f64>,
    pub offset: f64,
}

impl Recentred {
    /// `x = a + y / scale`.
    pub fn to_original(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(&self.anchor).map(|(v, a)| a + v / self.scale).collect()
    }

    pub fn to_recentred(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.anchor).map(|(v, a)| self.scale * (v - a)).collect()
    }
}

/// Sends `a` to the origin and shrinks by `1 / (1 + max_{x in K} |x - a|)`,
/// so the image lies strictly inside the unit ball.
pub fn recentre(f: &Polynomial, d: &DomainSpec, a: &[f64]) -> Result<Recentred> {
    let n = d.n_vars();
    check_point(n, a)?;
    if f.n_vars() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: f.n_vars(),
        });
    }
    if !d.contains(a, 1e-12) {
        return Err(Error::OutsideDomain);
    }
    let scale = 1.0 / (1.0 + d.farthest_distance(a));
    let u = DMatrix::identity(n, n) * scale;
    let c: Vec<f64> = a.iter().map(|v| -scale * v).collect();
    let domain = d.affine_map(&u, &c)?;
    let inv = DMatrix::identity(n, n) / scale;
    let offset = f.eval(a);
    let g = &f.compose_affine(&inv, a)? - &Polynomial::constant(n, offset);
    Ok(Recentred {
        f: g,
        domain,
        scale,
        anchor: a.to_vec(),
        offset,
    })
}

fn check_point(n: usize, a: &[f64]) -> Result<()> {
    if a.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: a.len() });
    }
    Ok(())
}
