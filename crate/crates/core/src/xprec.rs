//! Extended-precision dense linear algebra on MPFR floats.
//!
//! The monomial Gram matrix `B_r` is Hilbert-like, so its Cholesky factor and
//! the congruence `L^-1 M L^-T` are formed here at a configurable precision
//! (256 bits by default) and only the well-conditioned result is rounded to
//! `f64`.

use nalgebra::DMatrix;
use rug::ops::Pow;
use rug::{Assign, Float};

use crate::error::{Error, Result};

/// Default working precision in bits.
pub const DEFAULT_PRECISION: u32 = 256;

#[inline]
pub fn xf(prec: u32, v: f64) -> Float {
    Float::with_val(prec, v)
}

#[inline]
pub fn zero(prec: u32) -> Float {
    Float::new(prec)
}

/// `n!` for `0..=n_max`.
pub fn factorials(prec: u32, n_max: usize) -> Vec<Float> {
    let mut out = Vec::with_capacity(n_max + 1);
    let mut acc = xf(prec, 1.0);
    out.push(acc.clone());
    for k in 1..=n_max {
        acc *= k as u32;
        out.push(acc.clone());
    }
    out
}

/// Pascal triangle `C(n, k)` for `n <= n_max`.
pub fn binomials(prec: u32, n_max: usize) -> Vec<Vec<Float>> {
    let mut rows: Vec<Vec<Float>> = Vec::with_capacity(n_max + 1);
    rows.push(vec![xf(prec, 1.0)]);
    for n in 1..=n_max {
        let prev = &rows[n - 1];
        let mut row = Vec::with_capacity(n + 1);
        row.push(xf(prec, 1.0));
        for k in 1..n {
            row.push(Float::with_val(prec, &prev[k - 1] + &prev[k]));
        }
        row.push(xf(prec, 1.0));
        rows.push(row);
    }
    rows
}

/// Powers `x^0..=x^k_max`.
pub fn powers(x: &Float, k_max: usize) -> Vec<Float> {
    let prec = x.prec();
    let mut out = Vec::with_capacity(k_max + 1);
    out.push(xf(prec, 1.0));
    for k in 1..=k_max {
        let next = Float::with_val(prec, &out[k - 1] * x);
        out.push(next);
    }
    out
}

/// `Gamma(x)` in extended precision.
pub fn gamma(prec: u32, x: f64) -> Float {
    xf(prec, x).gamma()
}

pub fn pi(prec: u32) -> Float {
    Float::with_val(prec, rug::float::Constant::Pi)
}

pub fn pow_f64(base: &Float, e: f64) -> Float {
    Float::with_val(base.prec(), base.pow(e))
}

/// Dense row-major square matrix of extended floats.
#[derive(Debug, Clone, PartialEq)]
pub struct XMatrix {
    n: usize,
    data: Vec<Float>,
}

impl XMatrix {
    pub fn zeros(prec: u32, n: usize) -> Self {
        Self {
            n,
            data: vec![zero(prec); n * n],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &Float {
        &self.data[i * self.n + j]
    }

    #[inline]
    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut Float {
        &mut self.data[i * self.n + j]
    }

    /// Leading `s x s` block rounded to `f64`.
    pub fn block_f64(&self, s: usize) -> DMatrix<f64> {
        DMatrix::from_fn(s, s, |i, j| self.get(i, j).to_f64())
    }

    /// Largest relative asymmetry `|a_ij - a_ji| / max|a|` over the matrix.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.to_f64().abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in 0..i {
                let d = Float::with_val(53, self.get(i, j) - self.get(j, i));
                worst = worst.max(d.to_f64().abs() / scale);
            }
        }
        worst
    }
}

/// Incremental congruence `C = L^-1 M L^-T` with `B = L L^T`, for a pair of
/// symmetric matrices whose graded leading blocks are the order-`r` problems.
///
/// Extending from side `s0` to `s` only computes the new rows, so a whole
/// series `r = 1..r_max` costs one factorization of the largest block.
#[derive(Debug, Clone)]
pub struct GradedCongruence {
    prec: u32,
    m: XMatrix,
    b: XMatrix,
    /// Cholesky factor rows, `l[i].len() == i + 1`.
    l: Vec<Vec<Float>>,
    /// `W = L^-1 M`, filled on the leading `done x done` block.
    w: XMatrix,
    /// Lower triangle of `C`, `c[i].len() == i + 1`.
    c: Vec<Vec<Float>>,
    done: usize,
}

impl GradedCongruence {
    pub fn new(m: XMatrix, b: XMatrix, prec: u32) -> Self {
        let n = m.size();
        assert_eq!(n, b.size());
        Self {
            prec,
            w: XMatrix::zeros(prec, n),
            m,
            b,
            l: Vec::with_capacity(n),
            c: Vec::with_capacity(n),
            done: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.m.size()
    }

    pub fn done(&self) -> usize {
        self.done
    }

    pub fn m(&self) -> &XMatrix {
        &self.m
    }

    pub fn b(&self) -> &XMatrix {
        &self.b
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    /// Overwrites entries with `s0 <= max(i, j) < s` of both matrices; only
    /// rows not yet factored may change.
    pub fn update_rows(&mut self, s0: usize, s: usize, m: &XMatrix, b: &XMatrix) {
        assert!(s0 >= self.done);
        for i in s0..s {
            for j in 0..=i {
                self.m.get_mut(i, j).assign(m.get(i, j));
                self.m.get_mut(j, i).assign(m.get(j, i));
                self.b.get_mut(i, j).assign(b.get(i, j));
                self.b.get_mut(j, i).assign(b.get(j, i));
            }
        }
    }

    /// Extends the factorization to the leading `s x s` block.
    pub fn extend_to(&mut self, s: usize) -> Result<()> {
        assert!(s <= self.capacity());
        let s0 = self.done;
        if s <= s0 {
            return Ok(());
        }
        let prec = self.prec;
        let mut acc = zero(prec);

        for i in s0..s {
            let mut row: Vec<Float> = Vec::with_capacity(i + 1);
            for j in 0..=i {
                acc.assign(self.b.get(i, j));
                let lj = if j < i { &self.l[j][..] } else { &row[..] };
                for k in 0..j {
                    acc -= &row[k] * &lj[k];
                }
                if j == i {
                    if acc.is_sign_negative() || acc.is_zero() || !acc.is_finite() {
                        return Err(Error::Cholesky { row: i });
                    }
                    row.push(Float::with_val(prec, acc.sqrt_ref()));
                } else {
                    acc /= &self.l[j][j];
                    row.push(acc.clone());
                }
            }
            self.l.push(row);
        }

        // W = L^-1 M on the new rows and columns
        for i in 0..s {
            let cols = if i < s0 { s0..s } else { 0..s };
            for j in cols {
                acc.assign(self.m.get(i, j));
                for k in 0..i {
                    acc -= &self.l[i][k] * self.w.get(k, j);
                }
                acc /= &self.l[i][i];
                self.w.get_mut(i, j).assign(&acc);
            }
        }

        // C = L^-1 W^T, lower triangle
        for i in s0..s {
            let mut row: Vec<Float> = Vec::with_capacity(i + 1);
            for j in 0..=i {
                acc.assign(self.w.get(j, i));
                for k in 0..i {
                    let ckj = if k >= j {
                        &self.c[k][j]
                    } else if j < i {
                        &self.c[j][k]
                    } else {
                        &row[k]
                    };
                    acc -= &self.l[i][k] * ckj;
                }
                acc /= &self.l[i][i];
                row.push(acc.clone());
            }
            self.c.push(row);
        }
        self.done = s;
        Ok(())
    }

    /// Symmetric `C` block in extended precision (full storage).
    pub fn c_block(&self, s: usize) -> XMatrix {
        assert!(s <= self.done);
        let mut out = XMatrix::zeros(self.prec, s);
        for i in 0..s {
            for j in 0..=i {
                out.get_mut(i, j).assign(&self.c[i][j]);
                out.get_mut(j, i).assign(&self.c[i][j]);
            }
        }
        out
    }

    pub fn c_block_f64(&self, s: usize) -> DMatrix<f64> {
        assert!(s <= self.done);
        DMatrix::from_fn(s, s, |i, j| {
            if i >= j {
                self.c[i][j].to_f64()
            } else {
                self.c[j][i].to_f64()
            }
        })
    }

    /// Solves `L^T v = u` on the leading block of size `u.len()`.
    pub fn back_transform(&self, u: &[Float]) -> Vec<Float> {
        let s = u.len();
        assert!(s <= self.done);
        let mut v: Vec<Float> = vec![zero(self.prec); s];
        let mut acc = zero(self.prec);
        for i in (0..s).rev() {
            acc.assign(&u[i]);
            for k in i + 1..s {
                acc -= &self.l[k][i] * &v[k];
            }
            acc /= &self.l[i][i];
            v[i].assign(&acc);
        }
        v
    }
}

/// Cholesky factor (lower rows) of a symmetric matrix, `None` if not positive definite.
pub fn cholesky(a: &XMatrix) -> Option<Vec<Vec<Float>>> {
    let n = a.size();
    let prec = a.get(0, 0).prec();
    let mut l: Vec<Vec<Float>> = Vec::with_capacity(n);
    let mut acc = zero(prec);
    for i in 0..n {
        let mut row: Vec<Float> = Vec::with_capacity(i + 1);
        for j in 0..=i {
            acc.assign(a.get(i, j));
            let lj = if j < i { &l[j][..] } else { &row[..] };
            for k in 0..j {
                acc -= &row[k] * &lj[k];
            }
            if j == i {
                if acc.is_sign_negative() || acc.is_zero() || !acc.is_finite() {
                    return None;
                }
                row.push(Float::with_val(prec, acc.sqrt_ref()));
            } else {
                acc /= &l[j][j];
                row.push(acc.clone());
            }
        }
        l.push(row);
    }
    Some(l)
}

/// Solves `L L^T x = b` given the lower Cholesky rows.
pub fn cholesky_solve(l: &[Vec<Float>], b: &[Float]) -> Vec<Float> {
    let n = b.len();
    let prec = b[0].prec();
    let mut y: Vec<Float> = vec![zero(prec); n];
    let mut acc = zero(prec);
    for i in 0..n {
        acc.assign(&b[i]);
        for k in 0..i {
            acc -= &l[i][k] * &y[k];
        }
        acc /= &l[i][i];
        y[i].assign(&acc);
    }
    let mut x: Vec<Float> = vec![zero(prec); n];
    for i in (0..n).rev() {
        acc.assign(&y[i]);
        for k in i + 1..n {
            acc -= &l[k][i] * &x[k];
        }
        acc /= &l[i][i];
        x[i].assign(&acc);
    }
    x
}

pub fn dot(a: &[Float], b: &[Float]) -> Float {
    let prec = a.first().map(|v| v.prec()).unwrap_or(53);
    let mut acc = zero(prec);
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// `A x` for the leading `x.len()` block of `a`.
pub fn mat_vec(a: &XMatrix, x: &[Float]) -> Vec<Float> {
    let s = x.len();
    let prec = a.get(0, 0).prec();
    (0..s)
        .map(|i| {
            let mut acc = zero(prec);
            for (j, xj) in x.iter().enumerate() {
                acc += a.get(i, j) * xj;
            }
            acc
        })
        .collect()
}
