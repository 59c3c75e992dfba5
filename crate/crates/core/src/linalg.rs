//! Small dense double-precision helpers.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Pivot magnitude below which a matrix is treated as singular.
pub const PIVOT_TOL: f64 = 1e-12;

/// Partial-pivot LU; fails if any pivot is below [`PIVOT_TOL`].
pub fn check_invertible(u: &DMatrix<f64>) -> Result<()> {
    let n = u.nrows();
    let mut a = u.clone();
    for k in 0..n {
        let (p, pivot) = (k..n)
            .map(|i| (i, a[(i, k)].abs()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pivot < PIVOT_TOL {
            return Err(Error::SingularMatrix { pivot });
        }
        a.swap_rows(k, p);
        for i in k + 1..n {
            let m = a[(i, k)] / a[(k, k)];
            for j in k..n {
                a[(i, j)] -= m * a[(k, j)];
            }
        }
    }
    Ok(())
}

/// Inverse of an invertible matrix, after the pivot check.
pub fn inverse(u: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_invertible(u)?;
    u.clone()
        .try_inverse()
        .ok_or(Error::SingularMatrix { pivot: 0.0 })
}

/// Determinant by LU (no pivot tolerance).
pub fn determinant(u: &DMatrix<f64>) -> f64 {
    u.clone().lu().determinant()
}
