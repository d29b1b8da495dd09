//! Dense Cholesky helpers. nalgebra's own factorisation does not report the
//! failing pivot, which the error contract needs.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Lower Cholesky factor of a symmetric matrix. On failure returns the 0-based
/// pivot where a non-positive diagonal appeared.
pub fn cholesky_lower(a: &DMatrix<f64>) -> std::result::Result<DMatrix<f64>, usize> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "cholesky of non-square matrix");
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(j);
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        // column-major friendly: fill column j below the diagonal
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Cholesky with one retry after adding `1e-10 * trace / p` to the diagonal.
pub fn cholesky_jitter(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    match cholesky_lower(a) {
        Ok(l) => Ok(l),
        Err(_) => {
            let n = a.nrows();
            let jitter = 1e-10 * a.trace().abs().max(f64::MIN_POSITIVE) / n as f64;
            let mut b = a.clone();
            for i in 0..n {
                b[(i, i)] += jitter;
            }
            cholesky_lower(&b).map_err(|pivot| Error::NotPositiveDefinite { pivot })
        }
    }
}

/// Solve L x = b for lower-triangular L.
pub fn solve_lower(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = l.nrows();
    let mut x = b.clone();
    for i in 0..n {
        let mut s = x[i];
        for k in 0..i {
            s -= l[(i, k)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Solve L' x = b for lower-triangular L.
pub fn solve_upper_t(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = l.nrows();
    let mut x = b.clone();
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Solve (L L') x = b.
pub fn chol_solve(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    solve_upper_t(l, &solve_lower(l, b))
}

/// Inverse of L L'.
pub fn chol_inverse(l: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    let mut inv = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut e = DVector::<f64>::zeros(n);
        e[j] = 1.0;
        inv.set_column(j, &chol_solve(l, &e));
    }
    // symmetrise away round-off
    let t = inv.transpose();
    (inv + t) * 0.5
}

/// log |L L'|.
pub fn chol_logdet(l: &DMatrix<f64>) -> f64 {
    2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn factor_and_solve() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 2.0, 0.6, 2.0, 5.0, 1.0, 0.6, 1.0, 3.0]);
        let l = cholesky_lower(&a).unwrap();
        assert_relative_eq!(&l * l.transpose(), a.clone(), epsilon = 1e-12);
        let b = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let x = chol_solve(&l, &b);
        assert_relative_eq!(&a * x, b, epsilon = 1e-12);
        let inv = chol_inverse(&l);
        assert_relative_eq!(&a * inv, DMatrix::identity(3, 3), epsilon = 1e-12);
        assert_relative_eq!(chol_logdet(&l), a.determinant().ln(), epsilon = 1e-12);
    }

    #[test]
    fn reports_pivot() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 2.0, 0.0, 2.0, 1.0]);
        assert_eq!(cholesky_lower(&a).unwrap_err(), 2);
        match cholesky_jitter(&a) {
            Err(Error::NotPositiveDefinite { pivot }) => assert_eq!(pivot, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn jitter_rescues_semidefinite() {
        // rank-one PSD matrix: exact zero pivot, rescued by jitter
        let v = DVector::from_vec(vec![1.0, 2.0]);
        let a = &v * v.transpose();
        assert!(cholesky_lower(&a).is_err());
        assert!(cholesky_jitter(&a).is_ok());
    }
}
