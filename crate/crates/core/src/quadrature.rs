//! Polynomial-exact cubature on the supported domains (Lebesgue measure).

use std::f64::consts::PI;

use crate::domains::DomainSpec;
use crate::error::{Error, Result};

/// Largest total degree a rule may be asked to integrate exactly.
pub const DEGREE_BUDGET: usize = 400;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, exact through degree `2k - 1`.
pub fn gauss_legendre(k: usize) -> Vec<(f64, f64)> {
    assert!(k >= 1);
    let mut out = vec![(0.0, 0.0); k];
    for i in 0..(k + 1) / 2 {
        // Tricomi initial guess, then Newton on P_k
        let mut x = (PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(k, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(k, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out[i] = (-x, w);
        out[k - 1 - i] = (x, w);
    }
    if k % 2 == 1 {
        out[k / 2].0 = 0.0;
    }
    out
}

fn legendre_with_derivative(k: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for j in 2..=k {
        let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
        p0 = p1;
        p1 = p2;
    }
    if k == 0 {
        return (1.0, 0.0);
    }
    let d = k as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(k: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (c, s) = (0.5 * (a + b), 0.5 * (b - a));
    gauss_legendre(k).into_iter().map(|(x, w)| (c + s * x, s * w)).collect()
}

/// Cubature rule: points with positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integrate<F: FnMut(&[f64]) -> f64>(&self, mut g: F) -> f64 {
        self.points.iter().zip(&self.weights).map(|(x, w)| w * g(x)).sum()
    }
}

/// A rule exact for polynomials of total degree `degree` on `domain`.
///
/// Boxes use tensor Gauss–Legendre; the disk uses polar coordinates with a
/// radial Gauss–Legendre rule that absorbs the Jacobian and `degree + 1`
/// equispaced angles; triangles use the Duffy collapse of the square.
pub fn rule_for(domain: &DomainSpec, degree: usize) -> Result<Rule> {
    if degree > DEGREE_BUDGET {
        return Err(Error::DegreeOverflow {
            degree,
            budget: DEGREE_BUDGET,
        });
    }
    let n = domain.n_vars();
    match domain {
        DomainSpec::Box { lower, upper } => {
            if n > 3 {
                return Err(Error::InvalidParameter(format!("box cubature supports n <= 3, got {n}")));
            }
            let k = degree / 2 + 1;
            let axes: Vec<Vec<(f64, f64)>> = lower
                .iter()
                .zip(upper)
                .map(|(&a, &b)| gauss_legendre_on(k, a, b))
                .collect();
            Ok(tensor(&axes))
        }
        DomainSpec::Ball { center, radius } => match n {
            1 => Ok(tensor(&[gauss_legendre_on(degree / 2 + 1, center[0] - radius, center[0] + radius)])),
            2 => {
                // integrand rho^(k+1), k <= degree
                let radial = gauss_legendre_on((degree + 1) / 2 + 1, 0.0, *radius);
                let m = degree + 1;
                let dtheta = 2.0 * PI / m as f64;
                let mut points = Vec::with_capacity(radial.len() * m);
                let mut weights = Vec::with_capacity(radial.len() * m);
                for &(rho, w) in &radial {
                    for j in 0..m {
                        let t = j as f64 * dtheta;
                        points.push(vec![center[0] + rho * t.cos(), center[1] + rho * t.sin()]);
                        weights.push(w * rho * dtheta);
                    }
                }
                Ok(Rule { points, weights })
            }
            _ => Err(Error::InvalidParameter(format!("ball cubature supports n <= 2, got {n}"))),
        },
        DomainSpec::Simplex { vertices } => match n {
            1 => {
                let (a, b) = (vertices[0][0].min(vertices[1][0]), vertices[0][0].max(vertices[1][0]));
                Ok(tensor(&[gauss_legendre_on(degree / 2 + 1, a, b)]))
            }
            2 => Ok(duffy_triangle(&vertices[0], &vertices[1], &vertices[2], degree)),
            _ => Err(Error::InvalidParameter(format!("simplex cubature supports n <= 2, got {n}"))),
        },
        DomainSpec::Polygon { .. } => {
            let mut rule = Rule {
                points: Vec::new(),
                weights: Vec::new(),
            };
            for tri in domain.triangulate()? {
                let DomainSpec::Simplex { vertices } = tri else { unreachable!() };
                let part = duffy_triangle(&vertices[0], &vertices[1], &vertices[2], degree);
                rule.points.extend(part.points);
                rule.weights.extend(part.weights);
            }
            Ok(rule)
        }
    }
}

fn tensor(axes: &[Vec<(f64, f64)>]) -> Rule {
    let mut points = vec![Vec::new()];
    let mut weights = vec![1.0];
    for axis in axes {
        let mut np = Vec::with_capacity(points.len() * axis.len());
        let mut nw = Vec::with_capacity(points.len() * axis.len());
        for (p, w) in points.iter().zip(&weights) {
            for &(x, wx) in axis {
                let mut q = p.clone();
                q.push(x);
                np.push(q);
                nw.push(w * wx);
            }
        }
        points = np;
        weights = nw;
    }
    Rule { points, weights }
}

/// `x = v0 + u (v1 - v0) + u w (v2 - v1)`, `(u, w) in [0, 1]^2`, Jacobian `2 A u`.
fn duffy_triangle(v0: &[f64], v1: &[f64], v2: &[f64], degree: usize) -> Rule {
    let e1 = [v1[0] - v0[0], v1[1] - v0[1]];
    let e2 = [v2[0] - v1[0], v2[1] - v1[1]];
    let jac = (e1[0] * e2[1] - e1[1] * e2[0]).abs();
    let ru = gauss_legendre_on((degree + 1) / 2 + 1, 0.0, 1.0);
    let rw = gauss_legendre_on(degree / 2 + 1, 0.0, 1.0);
    let mut points = Vec::with_capacity(ru.len() * rw.len());
    let mut weights = Vec::with_capacity(ru.len() * rw.len());
    for &(u, wu) in &ru {
        for &(w, ww) in &rw {
            points.push(vec![
                v0[0] + u * e1[0] + u * w * e2[0],
                v0[1] + u * e1[1] + u * w * e2[1],
            ]);
            weights.push(wu * ww * jac * u);
        }
    }
    Rule { points, weights }
}
