//! Small dense helpers shared by the spectral and sampling code.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Lower Cholesky factor of a symmetric matrix.
///
/// Unlike `nalgebra::Cholesky`, a failure reports the (1-based) leading
/// minor that stopped being positive.
pub fn cholesky_lower(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::parameter(
            "matrix",
            format!("{}x{}", a.nrows(), a.ncols()),
            "must be square",
        ));
    }
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { minor: j + 1 });
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Solves `L Lᵀ x = b` given the lower factor `L`.
pub fn cholesky_solve(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = l.nrows();
    let mut y = b.clone();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    y
}

/// Solves `Lᵀ x = b` for lower-triangular `L`.
pub fn solve_upper_transposed(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
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

/// Householder reflector `H = I - 2wwᵀ/wᵀw` with `H u = ±‖u‖ e₁`.
///
/// `H` is symmetric and orthogonal; its first column is parallel to `u`
/// and the remaining columns span the orthogonal complement of `u`.
pub fn householder_to_e1(u: &DVector<f64>) -> DMatrix<f64> {
    let n = u.len();
    let norm = u.norm();
    let mut h = DMatrix::<f64>::identity(n, n);
    if n == 0 || norm == 0.0 {
        return h;
    }
    let mut w = u.clone();
    let sign = if u[0] >= 0.0 { 1.0 } else { -1.0 };
    w[0] += sign * norm;
    let ww = w.dot(&w);
    if ww == 0.0 {
        return h;
    }
    h -= (&w * w.transpose()) * (2.0 / ww);
    h
}

/// Orthonormal basis (as columns) of the complement of `u`.
pub fn complement_basis(u: &DVector<f64>) -> DMatrix<f64> {
    let h = householder_to_e1(u);
    let n = u.len();
    h.columns(1, n.saturating_sub(1)).into_owned()
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_matches_product() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 2.0, 0.6, 2.0, 5.0, 1.0, 0.6, 1.0, 3.0]);
        let l = cholesky_lower(&a).unwrap();
        assert!(max_abs(&(&l * l.transpose() - &a)) < 1e-14);
        let b = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let x = cholesky_solve(&l, &b);
        assert!((&a * x - b).norm() < 1e-13);
    }

    #[test]
    fn cholesky_reports_failing_minor() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        match cholesky_lower(&a) {
            Err(Error::NotPositiveDefinite { minor }) => assert_eq!(minor, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn householder_complement_is_orthonormal() {
        let u = DVector::from_vec(vec![0.3, -0.5, 0.2, 0.9]);
        let q = complement_basis(&u);
        assert_eq!(q.ncols(), 3);
        assert!((q.transpose() * &u).norm() < 1e-14);
        let gram = q.transpose() * &q;
        assert!(max_abs(&(gram - DMatrix::identity(3, 3))) < 1e-14);
    }
}
