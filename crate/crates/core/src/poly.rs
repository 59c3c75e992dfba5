//! Sparse multivariate polynomials with dense exponent vectors.
//!
//! Coefficients are `f64`; the moment assembly in [`crate::bounds`] lifts
//! them into extended precision before any ill-conditioned arithmetic.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::domains::DomainSpec;
use crate::error::{Error, Result};
use crate::linalg;

/// Maximum number of variables supported by [`Polynomial`].
pub const MAX_VARS: usize = 8;

/// A real polynomial in `n_vars` variables stored as `exponent -> coefficient`.
///
/// No stored coefficient is exactly zero and every exponent vector has length
/// `n_vars`.
#[derive(Clone, PartialEq)]
pub struct Polynomial {
    n_vars: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl Polynomial {
    pub fn zero(n_vars: usize) -> Self {
        assert!((1..=MAX_VARS).contains(&n_vars), "n_vars must be in 1..={MAX_VARS}");
        Self {
            n_vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n_vars: usize, c: f64) -> Self {
        Self::monomial(n_vars, vec![0; n_vars], c)
    }

    /// The coordinate function `x_i` (zero-based).
    pub fn var(n_vars: usize, i: usize) -> Self {
        assert!(i < n_vars);
        let mut e = vec![0; n_vars];
        e[i] = 1;
        Self::monomial(n_vars, e, 1.0)
    }

    pub fn monomial(n_vars: usize, exponent: Vec<u32>, coef: f64) -> Self {
        let mut p = Self::zero(n_vars);
        assert_eq!(exponent.len(), n_vars);
        p.add_term(exponent, coef);
        p
    }

    /// Builds a polynomial from `(exponent, coefficient)` pairs, summing repeats.
    pub fn from_terms<I>(n_vars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, f64)>,
    {
        if n_vars == 0 || n_vars > MAX_VARS {
            return Err(Error::InvalidParameter(format!(
                "polynomials need between 1 and {MAX_VARS} variables, got {n_vars}"
            )));
        }
        let mut p = Self::zero(n_vars);
        for (e, c) in terms {
            if e.len() != n_vars {
                return Err(Error::DimensionMismatch {
                    expected: n_vars,
                    got: e.len(),
                });
            }
            if !c.is_finite() {
                return Err(Error::InvalidParameter(format!("non-finite coefficient {c}")));
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    fn add_term(&mut self, exponent: Vec<u32>, coef: f64) {
        if coef == 0.0 {
            return;
        }
        match self.terms.entry(exponent) {
            Entry::Vacant(v) => {
                v.insert(coef);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += coef;
                if *o.get() == 0.0 {
                    o.remove();
                }
            }
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Maximum total degree over stored terms, 0 for the zero polynomial.
    pub fn degree(&self) -> usize {
        self.terms
            .keys()
            .map(|e| e.iter().map(|&k| k as usize).sum())
            .max()
            .unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], f64)> + '_ {
        self.terms.iter().map(|(e, &c)| (e.as_slice(), c))
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, exponent: &[u32]) -> f64 {
        self.terms.get(exponent).copied().unwrap_or(0.0)
    }

    /// Evaluates `sum c_a x^a`.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_vars {
            return Err(Error::DimensionMismatch {
                expected: self.n_vars,
                got: x.len(),
            });
        }
        Ok(self.eval(x))
    }

    /// Evaluation without the dimension check; panics on short input.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                e.iter()
                    .zip(x)
                    .fold(*c, |acc, (&k, &xi)| acc * xi.powi(k as i32))
            })
            .sum()
    }

    /// Formal partial derivative with respect to `x_i`.
    pub fn derivative(&self, i: usize) -> Self {
        let mut out = Self::zero(self.n_vars);
        for (e, &c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut d = e.clone();
            d[i] -= 1;
            out.add_term(d, c * e[i] as f64);
        }
        out
    }

    pub fn gradient(&self) -> Vec<Self> {
        (0..self.n_vars).map(|i| self.derivative(i)).collect()
    }

    pub fn hessian(&self) -> Vec<Vec<Self>> {
        let g = self.gradient();
        g.iter()
            .map(|gi| (0..self.n_vars).map(|j| gi.derivative(j)).collect())
            .collect()
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = Self::zero(self.n_vars);
        for (e, &c) in &self.terms {
            out.add_term(e.clone(), c * s);
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::constant(self.n_vars, 1.0);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Returns `q` with `q(x) = p(Ux + c)`.
    ///
    /// `U` must be invertible; singularity is detected by partial-pivot LU with
    /// a pivot tolerance of `1e-12`.
    pub fn compose_affine(&self, u: &DMatrix<f64>, c: &[f64]) -> Result<Self> {
        let n = self.n_vars;
        if u.nrows() != n || u.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: u.nrows().max(u.ncols()),
            });
        }
        if c.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: c.len(),
            });
        }
        linalg::check_invertible(u)?;

        // y_i = sum_j U_ij x_j + c_i
        let images: Vec<Self> = (0..n)
            .map(|i| {
                let mut y = Self::constant(n, c[i]);
                for j in 0..n {
                    y = &y + &Self::var(n, j).scale(u[(i, j)]);
                }
                y
            })
            .collect();

        let mut powers: Vec<Vec<Self>> = images
            .iter()
            .map(|y| vec![Self::constant(n, 1.0), y.clone()])
            .collect();
        let mut out = Self::zero(n);
        for (e, &coef) in &self.terms {
            let mut term = Self::constant(n, coef);
            for (i, &k) in e.iter().enumerate() {
                let k = k as usize;
                while powers[i].len() <= k {
                    let next = powers[i].last().unwrap() * &images[i];
                    powers[i].push(next);
                }
                term = &term * &powers[i][k];
            }
            out = &out + &term;
        }
        Ok(out)
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in self.terms.iter().rev() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            for (i, &k) in e.iter().enumerate() {
                match k {
                    0 => {}
                    1 => write!(f, "*x{}", i + 1)?,
                    _ => write!(f, "*x{}^{}", i + 1, k)?,
                }
            }
        }
        Ok(())
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;

    fn add(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.n_vars, rhs.n_vars);
        let mut out = self.clone();
        for (e, &c) in &rhs.terms {
            out.add_term(e.clone(), c);
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;

    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &(-rhs)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;

    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;

    fn mul(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.n_vars, rhs.n_vars);
        let mut acc: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (ea, &ca) in &self.terms {
            for (eb, &cb) in &rhs.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                *acc.entry(e).or_insert(0.0) += ca * cb;
            }
        }
        acc.retain(|_, c| *c != 0.0);
        Polynomial {
            n_vars: self.n_vars,
            terms: acc,
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Polynomial {
            type Output = Polynomial;
            fn $m(self, rhs: Polynomial) -> Polynomial {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

/// JSON literal `{"n": 2, "terms": [{"exp": [4, 2], "coef": 64.0}, ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialLiteral {
    pub n: usize,
    pub terms: Vec<TermLiteral>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermLiteral {
    pub exp: Vec<u32>,
    pub coef: f64,
}

impl TryFrom<PolynomialLiteral> for Polynomial {
    type Error = Error;

    fn try_from(lit: PolynomialLiteral) -> Result<Self> {
        Polynomial::from_terms(lit.n, lit.terms.into_iter().map(|t| (t.exp, t.coef)))
    }
}

impl From<&Polynomial> for PolynomialLiteral {
    fn from(p: &Polynomial) -> Self {
        PolynomialLiteral {
            n: p.n_vars,
            terms: p
                .terms
                .iter()
                .map(|(e, &c)| TermLiteral {
                    exp: e.clone(),
                    coef: c,
                })
                .collect(),
        }
    }
}

impl Serialize for Polynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolynomialLiteral::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let lit = PolynomialLiteral::deserialize(d)?;
        Polynomial::try_from(lit).map_err(serde::de::Error::custom)
    }
}

/// Graded monomial basis of `R[x]_d`: ordered by total degree, then
/// lexicographically descending within a degree (`x1` before `x2`).
///
/// With this order the basis of degree `r` is a prefix of the basis of any
/// higher degree, so moment matrices of order `r` are leading blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct MonomialBasis {
    n_vars: usize,
    degree: usize,
    exponents: Vec<Vec<u32>>,
}

impl MonomialBasis {
    pub fn new(n_vars: usize, degree: usize) -> Self {
        let mut exponents = Vec::new();
        for d in 0..=degree {
            push_exponents_of_degree(n_vars, d, &mut Vec::with_capacity(n_vars), &mut exponents);
        }
        Self {
            n_vars,
            degree,
            exponents,
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn exponents(&self) -> &[Vec<u32>] {
        &self.exponents
    }

    /// Position of `exponent` in the graded order.
    pub fn index_of(&self, exponent: &[u32]) -> Option<usize> {
        let d: usize = exponent.iter().map(|&k| k as usize).sum();
        if exponent.len() != self.n_vars || d > self.degree {
            return None;
        }
        let start = if d == 0 { 0 } else { basis_size(self.n_vars, d - 1) };
        let end = basis_size(self.n_vars, d);
        self.exponents[start..end]
            .iter()
            .position(|e| e == exponent)
            .map(|p| p + start)
    }
}

/// Dimension of `R[x_1..x_n]_d`, i.e. `C(n + d, n)`.
pub fn basis_size(n_vars: usize, degree: usize) -> usize {
    let mut num: u128 = 1;
    for i in 1..=n_vars as u128 {
        num = num * (degree as u128 + i) / i;
    }
    num as usize
}

fn push_exponents_of_degree(n: usize, d: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if prefix.len() + 1 == n {
        prefix.push(d as u32);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for k in (0..=d).rev() {
        prefix.push(k as u32);
        push_exponents_of_degree(n, d - k, prefix, out);
        prefix.pop();
    }
}

/// `beta = max ||grad f||`, `gamma = max ||hess f||_2 / 2`, both over a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessConstants {
    pub beta: f64,
    pub gamma: f64,
}

/// Grid estimate of the gradient and Hessian constants of `p` over `domain`.
///
/// The point set for density `g` is the union of the deterministic sample sets
/// for every density `2..=g`, so the estimate never decreases as `g` grows. It
/// is a lower approximation of the true maxima.
pub fn smoothness_constants(p: &Polynomial, domain: &DomainSpec, grid_density: usize) -> SmoothnessConstants {
    let grad = p.gradient();
    let hess = p.hessian();
    let n = p.n_vars();
    let mut beta: f64 = 0.0;
    let mut gamma: f64 = 0.0;
    let hess_const = hess.iter().flatten().all(|h| h.degree() == 0);
    for density in 2..=grid_density.max(2) {
        for x in domain.grid_points(density) {
            let g2: f64 = grad.iter().map(|g| g.eval(&x).powi(2)).sum();
            beta = beta.max(g2.sqrt());
            if hess_const && gamma > 0.0 {
                continue;
            }
            let h = DMatrix::from_fn(n, n, |i, j| hess[i][j].eval(&x));
            let norm = SymmetricEigen::new(h)
                .eigenvalues
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()));
            gamma = gamma.max(0.5 * norm);
        }
    }
    SmoothnessConstants { beta, gamma }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand::rngs::StdRng;

    fn qu() -> Polynomial {
        Polynomial::from_terms(2, [(vec![1, 0], 1.0), (vec![0, 2], 1.0)]).unwrap()
    }

    fn motzkin() -> Polynomial {
        Polynomial::from_terms(
            2,
            [
                (vec![4, 2], 64.0),
                (vec![2, 4], 64.0),
                (vec![2, 2], -48.0),
                (vec![0, 0], 1.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn table_values() {
        assert_eq!(qu().evaluate(&[-1.0, 0.0]).unwrap(), -1.0);
        assert_eq!(Polynomial::zero(3).evaluate(&[0.3, 2.0, -1.0]).unwrap(), 0.0);
        assert!(motzkin().evaluate(&[0.5, 0.5]).unwrap().abs() < 1e-15);
        assert!(motzkin().evaluate(&[-0.5, 0.5]).unwrap().abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            qu().evaluate(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn zero_terms_are_dropped() {
        let p = Polynomial::var(2, 0);
        let q = &p - &p;
        assert!(q.is_zero());
        assert_eq!(q.degree(), 0);
        let r = Polynomial::from_terms(1, [(vec![2], 1.0), (vec![2], -1.0), (vec![1], 3.0)]).unwrap();
        assert_eq!(r.n_terms(), 1);
    }

    #[test]
    fn derivatives() {
        let x2 = Polynomial::monomial(1, vec![2], 1.0);
        assert_eq!(x2.gradient()[0], Polynomial::monomial(1, vec![1], 2.0));
        let xy = Polynomial::monomial(2, vec![1, 1], 1.0);
        let h = xy.hessian();
        assert_eq!(h[0][1], Polynomial::constant(2, 1.0));
        assert_eq!(h[1][0], Polynomial::constant(2, 1.0));
        assert!(h[0][0].is_zero());
        let g = Polynomial::var(2, 0).gradient();
        assert_eq!(g[0], Polynomial::constant(2, 1.0));
        assert!(g[1].is_zero());
    }

    #[test]
    fn compose_examples() {
        let x = Polynomial::var(1, 0);
        let u = DMatrix::from_element(1, 1, 2.0);
        let q = x.compose_affine(&u, &[1.0]).unwrap();
        assert_eq!(q, Polynomial::from_terms(1, [(vec![1], 2.0), (vec![0], 1.0)]).unwrap());

        let x2 = Polynomial::monomial(1, vec![2], 1.0);
        let id = DMatrix::identity(1, 1);
        assert_eq!(x2.compose_affine(&id, &[0.0]).unwrap(), x2);

        // rotation by 90 degrees: (x1, x2) -> (-x2, x1)
        let p = &Polynomial::var(2, 0) + &Polynomial::var(2, 1);
        let rot = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let q = p.compose_affine(&rot, &[0.0, 0.0]).unwrap();
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..5 {
            let x = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let expected = p.eval(&[-x[1], x[0]]);
            assert!((q.eval(&x) - expected).abs() < 1e-14);
        }
        assert_eq!(q.degree(), 1);
    }

    #[test]
    fn compose_rejects_singular() {
        let p = Polynomial::var(2, 0);
        let u = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(
            p.compose_affine(&u, &[0.0, 0.0]),
            Err(Error::SingularMatrix { .. })
        ));
    }

    #[test]
    fn basis_is_graded_prefix() {
        let b2 = MonomialBasis::new(2, 2);
        assert_eq!(
            b2.exponents(),
            &[
                vec![0, 0],
                vec![1, 0],
                vec![0, 1],
                vec![2, 0],
                vec![1, 1],
                vec![0, 2]
            ]
        );
        let b5 = MonomialBasis::new(3, 5);
        assert_eq!(b5.len(), basis_size(3, 5));
        let b3 = MonomialBasis::new(3, 3);
        assert_eq!(&b5.exponents()[..b3.len()], b3.exponents());
        for (i, e) in b5.exponents().iter().enumerate() {
            assert_eq!(b5.index_of(e), Some(i));
        }
        assert_eq!(basis_size(2, 20), 231);
    }

    #[test]
    fn smoothness_simple() {
        let d = DomainSpec::unit_box(1);
        let s = smoothness_constants(&Polynomial::var(1, 0), &d, 5);
        assert!((s.beta - 1.0).abs() < 1e-15);
        assert_eq!(s.gamma, 0.0);
        let s = smoothness_constants(&Polynomial::monomial(1, vec![2], 1.0), &d, 5);
        assert!((s.gamma - 1.0).abs() < 1e-15);
    }

    #[test]
    fn json_literal_roundtrip() {
        let json = r#"{"n": 2, "terms": [{"exp": [4,2], "coef": 64.0}, {"exp": [0,0], "coef": 1.0}]}"#;
        let p: Polynomial = serde_json::from_str(json).unwrap();
        assert_eq!(p.coefficient(&[4, 2]), 64.0);
        let back: Polynomial = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(p, back);
        let bad = r#"{"n": 2, "terms": [{"exp": [4], "coef": 1.0}]}"#;
        assert!(serde_json::from_str::<Polynomial>(bad).is_err());
    }
}
