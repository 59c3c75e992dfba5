//! Compact domains, reference measures, affine transport and triangulation.
//!
//! Boxes are axis-aligned and balls are Euclidean; Jacobi-type weights are
//! always expressed in the domain's own reference coordinates, so they are
//! carried along by [`DomainSpec::affine_map`].

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::quadrature::gauss_legendre;

/// A supported compact set with non-empty interior.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainSpec {
    /// `prod [lower_i, upper_i]`; the unit box is `[-1, 1]^n`.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// Euclidean ball; the unit ball has center 0 and radius 1.
    Ball { center: Vec<f64>, radius: f64 },
    /// Convex hull of `n + 1` affinely independent points in `R^n`.
    Simplex { vertices: Vec<Vec<f64>> },
    /// Convex polygon in `R^2`, counterclockwise.
    Polygon { vertices: Vec<[f64; 2]> },
}

/// Constants `(epsilon_K, eta_K)` of the interior cone condition
/// `vol(B_delta(x) ∩ K) >= eta_K delta^n vol(B^n)` for `0 < delta <= epsilon_K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeConstants {
    pub epsilon: f64,
    pub eta: f64,
}

/// Reference measure on a domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureSpec {
    Lebesgue,
    /// `prod (1 - t_i^2)^lambda` in the box's reference coordinates `t in [-1, 1]^n`.
    BoxJacobi { lambda: f64 },
    /// `(1 - |t|^2)^lambda` in the ball's reference coordinates `t in B^n`.
    BallJacobi { lambda: f64 },
}

impl MeasureSpec {
    /// Product Chebyshev measure `prod (1 - x_i^2)^(-1/2)` on a box.
    pub fn chebyshev() -> Self {
        MeasureSpec::BoxJacobi { lambda: -0.5 }
    }

    pub fn lambda(&self) -> f64 {
        match self {
            MeasureSpec::Lebesgue => 0.0,
            MeasureSpec::BoxJacobi { lambda } | MeasureSpec::BallJacobi { lambda } => *lambda,
        }
    }

    pub fn is_lebesgue(&self) -> bool {
        matches!(self, MeasureSpec::Lebesgue)
    }

    pub fn name(&self) -> String {
        match self {
            MeasureSpec::Lebesgue => "lebesgue".into(),
            MeasureSpec::BoxJacobi { lambda } if *lambda == -0.5 => "chebyshev".into(),
            MeasureSpec::BoxJacobi { lambda } => format!("box-jacobi({lambda})"),
            MeasureSpec::BallJacobi { lambda } => format!("ball-jacobi({lambda})"),
        }
    }

    /// Checks `lambda > -1` and the domain pairing.
    pub fn check_compatible(&self, domain: &DomainSpec) -> Result<()> {
        let lambda = self.lambda();
        if !(lambda > -1.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("measure exponent lambda = {lambda} must exceed -1")));
        }
        let ok = match self {
            MeasureSpec::Lebesgue => true,
            MeasureSpec::BoxJacobi { .. } => matches!(domain, DomainSpec::Box { .. }),
            MeasureSpec::BallJacobi { .. } => matches!(domain, DomainSpec::Ball { .. }),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::IncompatibleMeasure {
                measure: self.name(),
                domain: domain.kind_name().into(),
            })
        }
    }

    /// Density of the measure with respect to Lebesgue measure at `x`.
    pub fn weight(&self, domain: &DomainSpec, x: &[f64]) -> f64 {
        match (self, domain) {
            (MeasureSpec::Lebesgue, _) => 1.0,
            (MeasureSpec::BoxJacobi { lambda }, DomainSpec::Box { lower, upper }) => x
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(&xi, (&lo, &hi))| {
                    let t = (2.0 * xi - lo - hi) / (hi - lo);
                    (1.0 - t * t).max(0.0).powf(*lambda)
                })
                .product(),
            (MeasureSpec::BallJacobi { lambda }, DomainSpec::Ball { center, radius }) => {
                let t2: f64 = x
                    .iter()
                    .zip(center)
                    .map(|(a, c)| ((a - c) / radius).powi(2))
                    .sum();
                (1.0 - t2).max(0.0).powf(*lambda)
            }
            _ => f64::NAN,
        }
    }
}

impl DomainSpec {
    pub fn unit_box(n: usize) -> Self {
        assert!(n >= 1);
        DomainSpec::Box {
            lower: vec![-1.0; n],
            upper: vec![1.0; n],
        }
    }

    pub fn unit_ball(n: usize) -> Self {
        assert!(n >= 1);
        DomainSpec::Ball {
            center: vec![0.0; n],
            radius: 1.0,
        }
    }

    pub fn axis_box(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::InvalidDomain("box bounds must be non-empty and of equal length".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(u > l) || !l.is_finite() || !u.is_finite()) {
            return Err(Error::InvalidDomain("box must have lower < upper on every axis".into()));
        }
        Ok(DomainSpec::Box { lower, upper })
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() || !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidDomain("ball needs a center and a positive radius".into()));
        }
        Ok(DomainSpec::Ball { center, radius })
    }

    /// Simplex from `n + 1` vertices; rejects `|det| <= 1e-10`.
    pub fn simplex(vertices: Vec<Vec<f64>>) -> Result<Self> {
        let n = vertices.len().saturating_sub(1);
        if n == 0 || vertices.iter().any(|v| v.len() != n) {
            return Err(Error::InvalidDomain(
                "a simplex in R^n needs n + 1 vertices of length n".into(),
            ));
        }
        let d = linalg::determinant(&edge_matrix(&vertices));
        if d.abs() <= 1e-10 {
            return Err(Error::InvalidDomain(format!(
                "simplex vertices are affinely dependent (det = {d:e})"
            )));
        }
        Ok(DomainSpec::Simplex { vertices })
    }

    /// The standard simplex `{x >= 0, sum x <= 1}`.
    pub fn standard_simplex(n: usize) -> Self {
        let mut vertices = vec![vec![0.0; n]];
        for i in 0..n {
            let mut v = vec![0.0; n];
            v[i] = 1.0;
            vertices.push(v);
        }
        DomainSpec::Simplex { vertices }
    }

    /// Convex counterclockwise polygon with at least three vertices and no
    /// collinear consecutive triples.
    pub fn polygon(vertices: Vec<[f64; 2]>) -> Result<Self> {
        let m = vertices.len();
        if m < 3 {
            return Err(Error::InvalidDomain("a polygon needs at least 3 vertices".into()));
        }
        let scale = vertices
            .iter()
            .flat_map(|v| v.iter())
            .fold(0.0f64, |a, b| a.max(b.abs()))
            .max(1e-300);
        for i in 0..m {
            let a = vertices[i];
            let b = vertices[(i + 1) % m];
            let c = vertices[(i + 2) % m];
            let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
            if cross <= 1e-12 * scale * scale {
                return Err(Error::InvalidDomain(format!(
                    "polygon is not strictly convex and counterclockwise at vertex {}",
                    (i + 1) % m
                )));
            }
        }
        // a strictly convex turn sequence can still wind twice
        let winding: f64 = (0..m)
            .map(|i| {
                let a = vertices[i];
                let b = vertices[(i + 1) % m];
                let c = vertices[(i + 2) % m];
                let e1 = (b[0] - a[0], b[1] - a[1]);
                let e2 = (c[0] - b[0], c[1] - b[1]);
                (e1.0 * e2.1 - e1.1 * e2.0).atan2(e1.0 * e2.0 + e1.1 * e2.1)
            })
            .sum();
        if (winding - 2.0 * PI).abs() > 1e-6 {
            return Err(Error::InvalidDomain("polygon boundary is self-intersecting".into()));
        }
        Ok(DomainSpec::Polygon { vertices })
    }

    /// Regular octagon `conv{(±1, 0), (0, ±1), (±√2/2, ±√2/2)}`.
    pub fn octagon() -> Self {
        let h = FRAC_1_SQRT_2;
        DomainSpec::Polygon {
            vertices: vec![
                [1.0, 0.0],
                [h, h],
                [0.0, 1.0],
                [-h, h],
                [-1.0, 0.0],
                [-h, -h],
                [0.0, -1.0],
                [h, -h],
            ],
        }
    }

    pub fn n_vars(&self) -> usize {
        match self {
            DomainSpec::Box { lower, .. } => lower.len(),
            DomainSpec::Ball { center, .. } => center.len(),
            DomainSpec::Simplex { vertices } => vertices.len() - 1,
            DomainSpec::Polygon { .. } => 2,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            DomainSpec::Box { .. } => "box",
            DomainSpec::Ball { .. } => "ball",
            DomainSpec::Simplex { .. } => "simplex",
            DomainSpec::Polygon { .. } => "polygon",
        }
    }

    /// Membership with an absolute boundary tolerance.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.n_vars() {
            return false;
        }
        match self {
            DomainSpec::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(&xi, (&lo, &hi))| xi >= lo - tol && xi <= hi + tol),
            DomainSpec::Ball { center, radius } => {
                let d2: f64 = x.iter().zip(center).map(|(a, c)| (a - c).powi(2)).sum();
                d2.sqrt() <= radius + tol
            }
            DomainSpec::Simplex { vertices } => {
                barycentric(vertices, x).iter().all(|&l| l >= -tol)
            }
            DomainSpec::Polygon { vertices } => {
                let m = vertices.len();
                (0..m).all(|i| {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % m];
                    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
                    let cross = (b[0] - a[0]) * (x[1] - a[1]) - (b[1] - a[1]) * (x[0] - a[0]);
                    cross / len >= -tol
                })
            }
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            DomainSpec::Box { lower, upper } => lower.iter().zip(upper).map(|(l, u)| u - l).product(),
            DomainSpec::Ball { center, radius } => {
                unit_ball_volume(center.len()) * radius.powi(center.len() as i32)
            }
            DomainSpec::Simplex { vertices } => {
                let n = vertices.len() - 1;
                linalg::determinant(&edge_matrix(vertices)).abs() / factorial(n)
            }
            DomainSpec::Polygon { vertices } => shoelace_area(vertices),
        }
    }

    /// Axis-aligned bounding box `(lower, upper)`.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            DomainSpec::Box { lower, upper } => (lower.clone(), upper.clone()),
            DomainSpec::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
            _ => {
                let pts = self.vertices();
                let n = self.n_vars();
                let lo = (0..n)
                    .map(|i| pts.iter().map(|p| p[i]).fold(f64::INFINITY, f64::min))
                    .collect();
                let hi = (0..n)
                    .map(|i| pts.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max))
                    .collect();
                (lo, hi)
            }
        }
    }

    /// Extreme points for polytopes (box corners, simplex and polygon vertices);
    /// empty for balls.
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        match self {
            DomainSpec::Box { lower, upper } => {
                let n = lower.len();
                (0..1usize << n)
                    .map(|mask| {
                        (0..n)
                            .map(|i| if mask >> i & 1 == 1 { upper[i] } else { lower[i] })
                            .collect()
                    })
                    .collect()
            }
            DomainSpec::Ball { .. } => Vec::new(),
            DomainSpec::Simplex { vertices } => vertices.clone(),
            DomainSpec::Polygon { vertices } => vertices.iter().map(|v| v.to_vec()).collect(),
        }
    }

    /// `max_{x in K} |x - a|`.
    pub fn farthest_distance(&self, a: &[f64]) -> f64 {
        match self {
            DomainSpec::Ball { center, radius } => {
                let d: f64 = a.iter().zip(center).map(|(x, c)| (x - c).powi(2)).sum();
                d.sqrt() + radius
            }
            _ => self
                .vertices()
                .iter()
                .map(|v| v.iter().zip(a).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt())
                .fold(0.0, f64::max),
        }
    }

    /// Image `{U x + c : x in K}`.
    ///
    /// Boxes stay boxes under diagonal maps and become polygons in the plane;
    /// balls stay balls under scaled orthogonal maps. Any other image of a box
    /// or ball is not representable.
    pub fn affine_map(&self, u: &DMatrix<f64>, c: &[f64]) -> Result<DomainSpec> {
        let n = self.n_vars();
        if u.nrows() != n || u.ncols() != n || c.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: if c.len() != n { c.len() } else { u.nrows() },
            });
        }
        linalg::check_invertible(u)?;
        let apply = |x: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|i| (0..n).map(|j| u[(i, j)] * x[j]).sum::<f64>() + c[i])
                .collect()
        };
        let det = linalg::determinant(u);
        match self {
            DomainSpec::Simplex { vertices } => {
                DomainSpec::simplex(vertices.iter().map(|v| apply(v)).collect())
            }
            DomainSpec::Polygon { vertices } => {
                let mut mapped: Vec<[f64; 2]> = vertices
                    .iter()
                    .map(|v| {
                        let w = apply(v);
                        [w[0], w[1]]
                    })
                    .collect();
                if det < 0.0 {
                    mapped.reverse();
                }
                DomainSpec::polygon(mapped)
            }
            DomainSpec::Box { lower, upper } => {
                let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || u[(i, j)] == 0.0));
                if diagonal {
                    let a = apply(lower);
                    let b = apply(upper);
                    DomainSpec::axis_box(
                        a.iter().zip(&b).map(|(x, y)| x.min(*y)).collect(),
                        a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect(),
                    )
                } else if n == 2 {
                    let corners = [
                        [lower[0], lower[1]],
                        [upper[0], lower[1]],
                        [upper[0], upper[1]],
                        [lower[0], upper[1]],
                    ];
                    let mut mapped: Vec<[f64; 2]> = corners
                        .iter()
                        .map(|v| {
                            let w = apply(v);
                            [w[0], w[1]]
                        })
                        .collect();
                    if det < 0.0 {
                        mapped.reverse();
                    }
                    DomainSpec::polygon(mapped)
                } else {
                    Err(Error::UnsupportedImage(format!(
                        "non-diagonal image of a box in R^{n}"
                    )))
                }
            }
            DomainSpec::Ball { center, radius } => {
                let utu = u.transpose() * u;
                let s2 = utu[(0, 0)];
                let conformal = (0..n).all(|i| {
                    (0..n).all(|j| {
                        let want = if i == j { s2 } else { 0.0 };
                        (utu[(i, j)] - want).abs() <= 1e-12 * s2
                    })
                });
                if !conformal {
                    return Err(Error::UnsupportedImage("ellipsoidal image of a ball".into()));
                }
                DomainSpec::ball(apply(center), radius * s2.sqrt())
            }
        }
    }

    /// Fan triangulation from vertex 0 (polygons); a planar simplex is returned as is.
    pub fn triangulate(&self) -> Result<Vec<DomainSpec>> {
        match self {
            DomainSpec::Polygon { vertices } => {
                let total = shoelace_area(vertices);
                let mut out = Vec::with_capacity(vertices.len() - 2);
                for i in 1..vertices.len() - 1 {
                    let tri = [vertices[0], vertices[i], vertices[i + 1]];
                    if shoelace_area(&tri) <= 1e-14 * total {
                        return Err(Error::DegenerateTriangle(i - 1));
                    }
                    out.push(DomainSpec::Simplex {
                        vertices: tri.iter().map(|v| v.to_vec()).collect(),
                    });
                }
                Ok(out)
            }
            DomainSpec::Simplex { .. } if self.n_vars() == 2 => Ok(vec![self.clone()]),
            _ => Err(Error::InvalidDomain(format!(
                "triangulation needs a planar polygon, got a {}",
                self.kind_name()
            ))),
        }
    }

    /// Radius of the largest inscribed ball.
    pub fn inradius(&self) -> f64 {
        match self {
            DomainSpec::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| 0.5 * (u - l))
                .fold(f64::INFINITY, f64::min),
            DomainSpec::Ball { radius, .. } => *radius,
            DomainSpec::Polygon { vertices } => polygon_inradius(vertices),
            DomainSpec::Simplex { vertices } => match vertices.len() - 1 {
                1 => 0.5 * (vertices[1][0] - vertices[0][0]).abs(),
                2 => polygon_inradius(&ccw_triangle(vertices)),
                n => {
                    // r = n V / (total facet area)
                    let vol = self.volume();
                    let facets: f64 = (0..=n)
                        .map(|skip| {
                            let pts: Vec<&Vec<f64>> =
                                vertices.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, v)| v).collect();
                            facet_area(&pts)
                        })
                        .sum();
                    n as f64 * vol / facets
                }
            },
        }
    }

    /// Valid `(epsilon_K, eta_K)` for the interior cone condition.
    ///
    /// `epsilon_K` is capped at 1; `eta_K` comes from the worst corner
    /// (boxes: `2^-n`; polytopes: smallest solid-angle fraction) or, for
    /// balls, from the lens `B_rho(x) ∩ B_rho(c)` at a boundary point.
    pub fn cone_constants(&self) -> Result<ConeConstants> {
        let n = self.n_vars();
        let (epsilon, eta) = match self {
            DomainSpec::Box { .. } => (self.inradius(), 0.5f64.powi(n as i32)),
            DomainSpec::Ball { radius, .. } => (*radius, ball_lens_fraction(n)),
            DomainSpec::Polygon { vertices } => {
                let min_edge = min_edge_length(vertices);
                let min_angle = polygon_angles(vertices).into_iter().fold(PI, f64::min);
                (self.inradius().min(min_edge), min_angle / (2.0 * PI))
            }
            DomainSpec::Simplex { vertices } => match n {
                1 => (self.inradius(), 0.5),
                2 => {
                    let tri = ccw_triangle(vertices);
                    let min_angle = polygon_angles(&tri).into_iter().fold(PI, f64::min);
                    (self.inradius().min(min_edge_length(&tri)), min_angle / (2.0 * PI))
                }
                3 => {
                    let min_edge = (0..4)
                        .flat_map(|i| (i + 1..4).map(move |j| (i, j)))
                        .map(|(i, j)| dist(&vertices[i], &vertices[j]))
                        .fold(f64::INFINITY, f64::min);
                    let min_frac = (0..4)
                        .map(|i| {
                            let others: Vec<Vec<f64>> = (0..4)
                                .filter(|&j| j != i)
                                .map(|j| (0..3).map(|k| vertices[j][k] - vertices[i][k]).collect())
                                .collect();
                            trihedral_solid_angle(&others[0], &others[1], &others[2]) / (4.0 * PI)
                        })
                        .fold(1.0, f64::min);
                    (self.inradius().min(min_edge), min_frac)
                }
                _ => {
                    return Err(Error::InvalidDomain(format!(
                        "cone constants are implemented for simplices up to R^3, got R^{n}"
                    )))
                }
            },
        };
        Ok(ConeConstants {
            epsilon: epsilon.min(1.0),
            eta,
        })
    }

    /// Deterministic sample set at `density`: a `density^n` grid over the
    /// bounding box restricted to the domain, plus boundary points.
    pub fn grid_points(&self, density: usize) -> Vec<Vec<f64>> {
        let density = density.max(2);
        let n = self.n_vars();
        let (lo, hi) = self.bounding_box();
        let mut out = Vec::new();
        let total = density.pow(n as u32);
        for idx in 0..total {
            let mut rem = idx;
            let x: Vec<f64> = (0..n)
                .map(|i| {
                    let k = rem % density;
                    rem /= density;
                    lo[i] + (hi[i] - lo[i]) * k as f64 / (density - 1) as f64
                })
                .collect();
            if self.contains(&x, 1e-12) {
                out.push(x);
            }
        }
        out.extend(self.boundary_points(density));
        out
    }

    /// Deterministic points on the boundary (`4 * density` on a circle, `density`
    /// per polygon edge, vertices for polytopes).
    pub fn boundary_points(&self, density: usize) -> Vec<Vec<f64>> {
        let n = self.n_vars();
        match self {
            DomainSpec::Ball { center, radius } => match n {
                1 => vec![vec![center[0] - radius], vec![center[0] + radius]],
                2 => (0..4 * density)
                    .map(|k| {
                        let t = 2.0 * PI * k as f64 / (4 * density) as f64;
                        vec![center[0] + radius * t.cos(), center[1] + radius * t.sin()]
                    })
                    .collect(),
                _ => (0..n)
                    .flat_map(|i| {
                        [-1.0, 1.0].into_iter().map(move |s| {
                            let mut p = center.clone();
                            p[i] += s * radius;
                            p
                        })
                    })
                    .collect(),
            },
            DomainSpec::Polygon { vertices } => {
                let m = vertices.len();
                let mut out = Vec::new();
                for i in 0..m {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % m];
                    for k in 0..density {
                        let t = k as f64 / density as f64;
                        out.push(vec![a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
                    }
                }
                out
            }
            DomainSpec::Simplex { vertices } if n == 2 => {
                DomainSpec::Polygon {
                    vertices: ccw_triangle(vertices),
                }
                .boundary_points(density)
            }
            _ => self.vertices(),
        }
    }

    /// Uniform sample by rejection from the bounding box.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let (lo, hi) = self.bounding_box();
        loop {
            let x: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| rng.gen_range(*l..*h)).collect();
            if self.contains(&x, 0.0) {
                return x;
            }
        }
    }

    /// A uniformly distributed boundary point (by arc length on polygons and
    /// circles; uniform over facets' vertices otherwise).
    pub fn sample_boundary<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            DomainSpec::Ball { center, radius } => {
                let mut d: Vec<f64> = (0..center.len()).map(|_| standard_normal(rng)).collect();
                let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
                for (di, ci) in d.iter_mut().zip(center) {
                    *di = ci + radius * *di / norm;
                }
                d
            }
            DomainSpec::Box { lower, upper } => {
                let n = lower.len();
                let mut x: Vec<f64> = lower.iter().zip(upper).map(|(l, h)| rng.gen_range(*l..*h)).collect();
                let axis = rng.gen_range(0..n);
                x[axis] = if rng.gen_bool(0.5) { lower[axis] } else { upper[axis] };
                x
            }
            DomainSpec::Polygon { vertices } => {
                let m = vertices.len();
                let lens: Vec<f64> = (0..m).map(|i| dist(&vertices[i], &vertices[(i + 1) % m])).collect();
                let total: f64 = lens.iter().sum();
                let mut t = rng.gen_range(0.0..total);
                for i in 0..m {
                    if t <= lens[i] || i == m - 1 {
                        let s = (t / lens[i]).min(1.0);
                        let a = vertices[i];
                        let b = vertices[(i + 1) % m];
                        return vec![a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
                    }
                    t -= lens[i];
                }
                unreachable!()
            }
            DomainSpec::Simplex { vertices } if vertices.len() == 3 => DomainSpec::Polygon {
                vertices: ccw_triangle(vertices),
            }
            .sample_boundary(rng),
            DomainSpec::Simplex { vertices } => {
                // random point on a random facet
                let n = vertices.len() - 1;
                let skip = rng.gen_range(0..=n);
                let mut w: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
                let s: f64 = w.iter().sum();
                w.iter_mut().for_each(|v| *v /= s);
                let pts: Vec<&Vec<f64>> =
                    vertices.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, v)| v).collect();
                (0..n).map(|k| pts.iter().zip(&w).map(|(p, wi)| p[k] * wi).sum()).collect()
            }
        }
    }
}

fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(1e-300);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// Columns `v_i - v_0`.
pub(crate) fn edge_matrix(vertices: &[Vec<f64>]) -> DMatrix<f64> {
    let n = vertices.len() - 1;
    DMatrix::from_fn(n, n, |i, j| vertices[j + 1][i] - vertices[0][i])
}

fn barycentric(vertices: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    let n = vertices.len() - 1;
    let e = edge_matrix(vertices);
    let rhs = nalgebra::DVector::from_fn(n, |i, _| x[i] - vertices[0][i]);
    match e.lu().solve(&rhs) {
        Some(l) => {
            let mut out = vec![1.0 - l.sum()];
            out.extend(l.iter());
            out
        }
        None => vec![-1.0],
    }
}

fn ccw_triangle(vertices: &[Vec<f64>]) -> Vec<[f64; 2]> {
    let mut tri: Vec<[f64; 2]> = vertices.iter().map(|v| [v[0], v[1]]).collect();
    if signed_area(&tri) < 0.0 {
        tri.reverse();
    }
    tri
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn signed_area(v: &[[f64; 2]]) -> f64 {
    let m = v.len();
    0.5 * (0..m)
        .map(|i| {
            let a = v[i];
            let b = v[(i + 1) % m];
            a[0] * b[1] - a[1] * b[0]
        })
        .sum::<f64>()
}

/// Shoelace area of a simple polygon.
pub fn shoelace_area(v: &[[f64; 2]]) -> f64 {
    signed_area(v).abs()
}

/// Volume of the unit ball `pi^(n/2) / Gamma(n/2 + 1)`.
pub fn unit_ball_volume(n: usize) -> f64 {
    // V_0 = 1, V_1 = 2, V_n = 2 pi / n V_{n-2}
    let mut v = [1.0, 2.0];
    if n < 2 {
        return v[n];
    }
    for k in 2..=n {
        v[k % 2] = 2.0 * PI / k as f64 * v[k % 2];
    }
    v[n % 2]
}

/// Fraction of `B^n` covered by `B^n ∩ B_1(x)` for `|x| = 1` (two caps of height 1/2).
pub fn ball_lens_fraction(n: usize) -> f64 {
    // cap fraction = V_{n-1}/V_n * int_0^{pi/3} sin^n(t) dt
    let rule = gauss_legendre(48);
    let half = PI / 6.0;
    let integral: f64 = rule
        .iter()
        .map(|(x, w)| w * half * (half * (x + 1.0)).sin().powi(n as i32))
        .sum();
    2.0 * unit_ball_volume(n - 1) / unit_ball_volume(n) * integral
}

fn polygon_angles(v: &[[f64; 2]]) -> Vec<f64> {
    let m = v.len();
    (0..m)
        .map(|i| {
            let p = v[(i + m - 1) % m];
            let q = v[i];
            let r = v[(i + 1) % m];
            let a = (p[0] - q[0], p[1] - q[1]);
            let b = (r[0] - q[0], r[1] - q[1]);
            let cos = (a.0 * b.0 + a.1 * b.1) / ((a.0.hypot(a.1)) * (b.0.hypot(b.1)));
            cos.clamp(-1.0, 1.0).acos()
        })
        .collect()
}

fn min_edge_length(v: &[[f64; 2]]) -> f64 {
    let m = v.len();
    (0..m).map(|i| dist(&v[i], &v[(i + 1) % m])).fold(f64::INFINITY, f64::min)
}

/// Largest inscribed circle of a convex polygon: the optimum of the
/// Chebyshev-center LP is fixed by three active edges, so enumerate triples.
fn polygon_inradius(v: &[[f64; 2]]) -> f64 {
    let m = v.len();
    // edge i: n_i . x <= c_i with unit outward normal n_i
    let edges: Vec<([f64; 2], f64)> = (0..m)
        .map(|i| {
            let a = v[i];
            let b = v[(i + 1) % m];
            let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
            let len = dx.hypot(dy);
            let nrm = [dy / len, -dx / len];
            (nrm, nrm[0] * a[0] + nrm[1] * a[1])
        })
        .collect();
    let mut best = 0.0f64;
    for i in 0..m {
        for j in i + 1..m {
            for k in j + 1..m {
                // n . x + r = c for the three edges
                let rows = [edges[i], edges[j], edges[k]];
                let a = DMatrix::from_fn(3, 3, |r, c| if c < 2 { rows[r].0[c] } else { 1.0 });
                let b = nalgebra::DVector::from_fn(3, |r, _| rows[r].1);
                if let Some(sol) = a.lu().solve(&b) {
                    let (x, y, r) = (sol[0], sol[1], sol[2]);
                    if r > best
                        && r.is_finite()
                        && edges.iter().all(|(nrm, c)| nrm[0] * x + nrm[1] * y + r <= c + 1e-12)
                    {
                        best = r;
                    }
                }
            }
        }
    }
    best
}

fn facet_area(pts: &[&Vec<f64>]) -> f64 {
    // (n-1)-volume of the simplex spanned by n points in R^n via the Gram determinant
    let k = pts.len() - 1;
    let edges: Vec<Vec<f64>> = (1..=k)
        .map(|i| pts[i].iter().zip(pts[0].iter()).map(|(a, b)| a - b).collect())
        .collect();
    let gram = DMatrix::from_fn(k, k, |i, j| edges[i].iter().zip(&edges[j]).map(|(a, b)| a * b).sum());
    linalg::determinant(&gram).max(0.0).sqrt() / factorial(k)
}

/// Solid angle of the cone spanned by three vectors (Van Oosterom–Strackee).
fn trihedral_solid_angle(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let dotp = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(x, y)| x * y).sum::<f64>();
    let (na, nb, nc) = (norm(a), norm(b), norm(c));
    let triple = a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0]);
    let denom = na * nb * nc + dotp(a, b) * nc + dotp(a, c) * nb + dotp(b, c) * na;
    let mut omega = 2.0 * triple.abs().atan2(denom);
    if omega < 0.0 {
        omega += 2.0 * PI;
    }
    omega
}

/// JSON domain literal, e.g. `{"kind": "polygon", "vertices": [[1, 0], ...]}`,
/// `{"kind": "box", "n": 2}` or `{"kind": "octagon"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainLiteral {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<Vec<f64>>>,
}

impl TryFrom<DomainLiteral> for DomainSpec {
    type Error = Error;

    fn try_from(lit: DomainLiteral) -> Result<Self> {
        let missing = |what: &str| Error::InvalidDomain(format!("{} literal needs `{what}`", lit.kind));
        match lit.kind.as_str() {
            "box" => match (lit.lower.clone(), lit.upper.clone()) {
                (Some(l), Some(u)) => DomainSpec::axis_box(l, u),
                _ => Ok(DomainSpec::unit_box(lit.n.filter(|&n| n > 0).ok_or_else(|| missing("n"))?)),
            },
            "ball" => {
                let center = match (lit.center.clone(), lit.n) {
                    (Some(c), _) => c,
                    (None, Some(n)) if n > 0 => vec![0.0; n],
                    _ => return Err(missing("n")),
                };
                DomainSpec::ball(center, lit.radius.unwrap_or(1.0))
            }
            "simplex" => match (lit.vertices.clone(), lit.n) {
                (Some(v), _) => DomainSpec::simplex(v),
                (None, Some(n)) if n > 0 => Ok(DomainSpec::standard_simplex(n)),
                _ => Err(missing("vertices")),
            },
            "polygon" => {
                let v = lit.vertices.clone().ok_or_else(|| missing("vertices"))?;
                if v.iter().any(|p| p.len() != 2) {
                    return Err(Error::InvalidDomain("polygon vertices must be 2-D".into()));
                }
                DomainSpec::polygon(v.into_iter().map(|p| [p[0], p[1]]).collect())
            }
            "octagon" => Ok(DomainSpec::octagon()),
            other => Err(Error::InvalidDomain(format!("unknown domain kind `{other}`"))),
        }
    }
}

impl From<&DomainSpec> for DomainLiteral {
    fn from(d: &DomainSpec) -> Self {
        let mut lit = DomainLiteral {
            kind: d.kind_name().into(),
            n: None,
            lower: None,
            upper: None,
            center: None,
            radius: None,
            vertices: None,
        };
        match d {
            DomainSpec::Box { lower, upper } => {
                lit.lower = Some(lower.clone());
                lit.upper = Some(upper.clone());
            }
            DomainSpec::Ball { center, radius } => {
                lit.center = Some(center.clone());
                lit.radius = Some(*radius);
            }
            DomainSpec::Simplex { .. } | DomainSpec::Polygon { .. } => {
                lit.vertices = Some(d.vertices());
            }
        }
        lit
    }
}

impl Serialize for DomainSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DomainLiteral::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for DomainSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        DomainSpec::try_from(DomainLiteral::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;
    use std::f64::consts::SQRT_2;

    #[test]
    fn simplex_maps() {
        let s = DomainSpec::standard_simplex(2);
        let id = DMatrix::identity(2, 2);
        assert_eq!(s.affine_map(&id, &[0.0, 0.0]).unwrap(), s);
        let two = DMatrix::identity(2, 2) * 2.0;
        assert_eq!(
            s.affine_map(&two, &[0.0, 0.0]).unwrap().vertices(),
            vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![0.0, 2.0]]
        );
    }

    #[test]
    fn octagon_scaled() {
        let half = DMatrix::identity(2, 2) * 0.5;
        let o = DomainSpec::octagon().affine_map(&half, &[0.0, 0.0]).unwrap();
        let DomainSpec::Polygon { vertices } = &o else { panic!() };
        assert_eq!(vertices[0], [0.5, 0.0]);
        assert!((shoelace_area(vertices) - 2.0 * SQRT_2 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn unsupported_images() {
        let rot = DMatrix::from_row_slice(3, 3, &[0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            DomainSpec::unit_box(3).affine_map(&rot, &[0.0; 3]),
            Err(Error::UnsupportedImage(_))
        ));
        let shear = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(matches!(
            DomainSpec::unit_ball(2).affine_map(&shear, &[0.0; 2]),
            Err(Error::UnsupportedImage(_))
        ));
        let singular = DMatrix::zeros(2, 2);
        assert!(matches!(
            DomainSpec::unit_box(2).affine_map(&singular, &[0.0; 2]),
            Err(Error::SingularMatrix { .. })
        ));
        // a planar box under a rotation is a polygon
        let rot2 = DMatrix::from_row_slice(2, 2, &[0.6, -0.8, 0.8, 0.6]);
        let p = DomainSpec::unit_box(2).affine_map(&rot2, &[1.0, 0.0]).unwrap();
        assert_eq!(p.kind_name(), "polygon");
        assert!((p.volume() - 4.0).abs() < 1e-12);
        let b = DomainSpec::unit_ball(2).affine_map(&(rot2 * 3.0), &[1.0, 2.0]).unwrap();
        assert_eq!(b, DomainSpec::Ball { center: vec![1.0, 2.0], radius: 3.0 });
    }

    #[test]
    fn triangulations() {
        let square = DomainSpec::polygon(vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]]).unwrap();
        let t = square.triangulate().unwrap();
        assert_eq!(t.len(), 2);
        assert!((t.iter().map(|s| s.volume()).sum::<f64>() - 4.0).abs() < 1e-12);

        let oct = DomainSpec::octagon().triangulate().unwrap();
        assert_eq!(oct.len(), 6);
        let area: f64 = oct.iter().map(|s| s.volume()).sum();
        let formula = 0.5 * 8.0 * (PI / 4.0).sin();
        assert!((area - formula).abs() < 1e-12 * formula);
        assert!((area - 2.0 * SQRT_2).abs() < 1e-12);
        assert!(oct.iter().all(|s| s.volume() > 0.0));

        let tri = DomainSpec::polygon(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let t = tri.triangulate().unwrap();
        assert_eq!(t, vec![DomainSpec::standard_simplex(2)]);
    }

    #[test]
    fn polygon_validation() {
        assert!(DomainSpec::polygon(vec![[0.0, 0.0], [1.0, 0.0]]).is_err());
        // clockwise
        assert!(DomainSpec::polygon(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]).is_err());
        // collinear vertex
        assert!(DomainSpec::polygon(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [0.0, 1.0]]).is_err());
        // non-convex
        assert!(DomainSpec::polygon(vec![[0.0, 0.0], [2.0, 0.0], [1.0, 0.5], [2.0, 2.0], [0.0, 2.0]]).is_err());
        assert!(DomainSpec::simplex(vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]]).is_err());
    }

    #[test]
    fn cone_constant_examples() {
        let b = DomainSpec::unit_ball(2).cone_constants().unwrap();
        assert_eq!(b.epsilon, 1.0);
        let lens = 2.0 / 3.0 - 3f64.sqrt() / (2.0 * PI);
        assert!((b.eta - lens).abs() < 1e-14);
        assert!((DomainSpec::unit_ball(1).cone_constants().unwrap().eta - 0.5).abs() < 1e-14);
        assert!((ball_lens_fraction(3) - 5.0 / 16.0).abs() < 1e-14);

        let s = 1.0 / 2f64.sqrt();
        let sq = DomainSpec::axis_box(vec![-s, -s], vec![s, s]).unwrap().cone_constants().unwrap();
        assert_eq!(sq.eta, 0.25);
        assert!((sq.epsilon - s).abs() < 1e-15);

        let o = DomainSpec::octagon().cone_constants().unwrap();
        assert!((o.eta - 3.0 / 8.0).abs() < 1e-14);
        assert!((o.epsilon - 2.0 * (PI / 8.0).sin()).abs() < 1e-12);
        assert!((DomainSpec::octagon().inradius() - (PI / 8.0).cos()).abs() < 1e-12);
    }

    #[test]
    fn membership_and_volume() {
        let mut rng = StdRng::seed_from_u64(3);
        let domains = [
            DomainSpec::unit_box(2),
            DomainSpec::unit_ball(2),
            DomainSpec::standard_simplex(2),
            DomainSpec::octagon(),
            DomainSpec::standard_simplex(3),
        ];
        for d in &domains {
            for _ in 0..200 {
                let x = d.sample_uniform(&mut rng);
                assert!(d.contains(&x, 0.0));
                let y = d.sample_boundary(&mut rng);
                assert!(d.contains(&y, 1e-9), "{d:?} {y:?}");
            }
        }
        assert!((DomainSpec::standard_simplex(3).volume() - 1.0 / 6.0).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
    }

    #[test]
    fn literal_parsing() {
        let d: DomainSpec = serde_json::from_str(r#"{"kind": "octagon"}"#).unwrap();
        assert_eq!(d, DomainSpec::octagon());
        let p: DomainSpec =
            serde_json::from_str(r#"{"kind": "polygon", "vertices": [[1,0],[0,1],[-1,0]]}"#).unwrap();
        assert_eq!(p.n_vars(), 2);
        let b: DomainSpec = serde_json::from_str(r#"{"kind": "box", "n": 3}"#).unwrap();
        assert_eq!(b, DomainSpec::unit_box(3));
        let back: DomainSpec = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<DomainSpec>(r#"{"kind": "torus"}"#).is_err());
    }

    #[test]
    fn measure_compatibility() {
        let cheb = MeasureSpec::chebyshev();
        assert!(cheb.check_compatible(&DomainSpec::unit_box(2)).is_ok());
        assert!(cheb.check_compatible(&DomainSpec::unit_ball(2)).is_err());
        assert!(MeasureSpec::BallJacobi { lambda: 1.0 }
            .check_compatible(&DomainSpec::octagon())
            .is_err());
        assert!(MeasureSpec::BoxJacobi { lambda: -1.0 }
            .check_compatible(&DomainSpec::unit_box(1))
            .is_err());
        assert!(MeasureSpec::Lebesgue.check_compatible(&DomainSpec::octagon()).is_ok());
    }
}
