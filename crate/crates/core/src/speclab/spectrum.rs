use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::kernel::{build_da_kernel, Kernel};
use super::table::JointTable;
use crate::linalg::{complement_basis, max_abs};
use crate::{Error, Result};

/// Two values closer than this count as tied; values below it count as zero.
pub const TIE_TOLERANCE: f64 = 1e-10;
/// Largest tolerated asymmetry of the √π-similarity transform of a kernel.
pub const SYMMETRY_TOLERANCE: f64 = 1e-8;
pub const POSITIVITY_TOLERANCE: f64 = 1e-10;
pub const SVD_IDENTITY_TOLERANCE: f64 = 1e-9;

/// Singular system of the density ratio `f(x,y) / (f_X(x) f_Y(y))`.
///
/// Column `i` of `g` (resp. `h`) is the function `g_i` on `X` (resp. `h_i`
/// on `Y`); column 0 is the constant function and `beta[0] = 1`. There are
/// `min(|X|, |Y|)` columns.
#[derive(Debug, Clone)]
pub struct SvdBasis {
    pub beta: Vec<f64>,
    pub g: DMatrix<f64>,
    pub h: DMatrix<f64>,
}

impl SvdBasis {
    /// Number of nonconstant pairs, `min(|X|, |Y|) − 1`.
    pub fn nonconstant(&self) -> usize {
        self.beta.len() - 1
    }
}

fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx
}

/// Singular value decomposition of the density ratio.
///
/// Computed as the SVD of `A = D_X^{-1/2} f D_Y^{-1/2}` restricted to the
/// orthogonal complements of `√f_X` and `√f_Y`, so the constant pair is
/// split off exactly even when `β = 1` is repeated.
pub fn svd_ratio(table: &JointTable) -> SvdBasis {
    let sx = table.marginal_x().map(f64::sqrt);
    let sy = table.marginal_y().map(f64::sqrt);
    let a = DMatrix::from_fn(table.nx(), table.ny(), |i, j| {
        table.probabilities()[(i, j)] / (sx[i] * sy[j])
    });
    let k = table.nx().min(table.ny());
    let mut beta = vec![1.0];
    let mut g = DMatrix::from_element(table.nx(), k, 1.0);
    let mut h = DMatrix::from_element(table.ny(), k, 1.0);
    if k > 1 {
        let qx = complement_basis(&sx);
        let qy = complement_basis(&sy);
        let b = qx.transpose() * &a * &qy;
        let svd = b.svd(true, true);
        let u = svd.u.expect("requested U");
        let v = svd.v_t.expect("requested Vᵀ").transpose();
        let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
        for (col, &i) in descending_order(&sv).iter().take(k - 1).enumerate() {
            let mut gi = &qx * u.column(i);
            let mut hi = &qy * v.column(i);
            for r in 0..gi.len() {
                gi[r] /= sx[r];
            }
            for r in 0..hi.len() {
                hi[r] /= sy[r];
            }
            // Fix the sign so the largest-magnitude entry of g_i is positive.
            let pivot = gi.iter().copied().fold(0.0_f64, |m, v| if v.abs() > m.abs() { v } else { m });
            if pivot < 0.0 {
                gi.neg_mut();
                hi.neg_mut();
            }
            beta.push(sv[i]);
            g.set_column(col + 1, &gi);
            h.set_column(col + 1, &hi);
        }
    }
    SvdBasis { beta, g, h }
}

/// Spectrum of a reversible kernel on the mean-zero subspace `L²₀(π)`.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Descending eigenvalues; `n − 1` of them for an `n`-state kernel.
    pub values: Vec<f64>,
    /// Eigenfunctions as columns, orthonormal in `L²(π)`.
    pub functions: DMatrix<f64>,
}

/// Eigenvalues (and eigenfunctions) of `K` on the mean-zero functions.
///
/// `S = D_π^{1/2} K D_π^{-1/2}` is symmetric for a reversible kernel; the
/// constant eigenfunction is removed by restricting `S` to the complement
/// of `√π` before the symmetric eigensolve.
pub fn eigenvalues_mean_zero(kernel: &Kernel) -> Result<Spectrum> {
    let n = kernel.len();
    let sp = kernel.stationary().map(f64::sqrt);
    let s = DMatrix::from_fn(n, n, |i, j| sp[i] * kernel.matrix()[(i, j)] / sp[j]);
    let residual = max_abs(&(&s - s.transpose()));
    if residual > SYMMETRY_TOLERANCE {
        return Err(Error::Reversibility {
            residual,
            tolerance: SYMMETRY_TOLERANCE,
        });
    }
    if n < 2 {
        return Ok(Spectrum {
            values: Vec::new(),
            functions: DMatrix::zeros(n, 0),
        });
    }
    let s = (&s + s.transpose()) * 0.5;
    let q = complement_basis(&sp);
    let restricted = q.transpose() * &s * &q;
    let restricted = (&restricted + restricted.transpose()) * 0.5;
    let eig = SymmetricEigen::new(restricted);
    let vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let order = descending_order(&vals);
    let mut functions = DMatrix::zeros(n, n - 1);
    let mut values = Vec::with_capacity(n - 1);
    for (col, &i) in order.iter().enumerate() {
        let mut e = &q * eig.eigenvectors.column(i);
        for r in 0..n {
            e[r] /= sp[r];
        }
        functions.set_column(col, &e);
        values.push(vals[i]);
    }
    Ok(Spectrum { values, functions })
}

/// χ²-distance of the `n`-step law from `x0` to `f_X`, by the spectral sum
/// `Σ_i α_i^{2n} e_i(x0)²` over the DA kernel's mean-zero spectrum.
pub fn chi_square_distance(table: &JointTable, x0: usize, n: u32) -> Result<f64> {
    if x0 >= table.nx() {
        return Err(Error::parameter("x0", x0, format!("must be below |X| = {}", table.nx())));
    }
    let k = build_da_kernel(table)?;
    let spec = eigenvalues_mean_zero(&k)?;
    if let Some(&neg) = spec.values.iter().find(|&&v| v < -POSITIVITY_TOLERANCE) {
        return Err(Error::Positivity {
            eigenvalue: neg,
            tolerance: POSITIVITY_TOLERANCE,
        });
    }
    Ok(spec
        .values
        .iter()
        .enumerate()
        .map(|(i, &a)| a.max(0.0).powi(2 * n as i32) * spec.functions[(x0, i)].powi(2))
        .sum())
}

/// Residuals of `P_X h_i = β_i g_i`, `P_Y g_i = β_i h_i` and `λ_i = β_i²`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdIdentityReport {
    pub max_px_residual: f64,
    pub max_py_residual: f64,
    pub max_eigen_residual: f64,
    pub passed: bool,
}

impl SvdIdentityReport {
    pub fn max_residual(&self) -> f64 {
        self.max_px_residual.max(self.max_py_residual).max(self.max_eigen_residual)
    }
}

pub fn verify_svd_identities(table: &JointTable) -> Result<SvdIdentityReport> {
    let basis = svd_ratio(table);
    let px = table.y_given_x();
    let py = table.x_given_y();
    let mut max_px: f64 = 0.0;
    let mut max_py: f64 = 0.0;
    for i in 1..basis.beta.len() {
        let b = basis.beta[i];
        let lhs = &px * basis.h.column(i);
        max_px = max_px.max((lhs - basis.g.column(i) * b).amax());
        let lhs = &py * basis.g.column(i);
        max_py = max_py.max((lhs - basis.h.column(i) * b).amax());
    }
    let spec = eigenvalues_mean_zero(&build_da_kernel(table)?)?;
    let max_eig = spec
        .values
        .iter()
        .enumerate()
        .map(|(i, &lam)| {
            let b = basis.beta.get(i + 1).copied().unwrap_or(0.0);
            (lam - b * b).abs()
        })
        .fold(0.0_f64, f64::max);
    let passed = max_px.max(max_py).max(max_eig) < SVD_IDENTITY_TOLERANCE;
    Ok(SvdIdentityReport {
        max_px_residual: max_px,
        max_py_residual: max_py,
        max_eigen_residual: max_eig,
        passed,
    })
}

/// `‖h‖` in `L²(w)`.
pub(crate) fn weighted_norm(h: &DVector<f64>, w: &DVector<f64>) -> f64 {
    h.iter().zip(w.iter()).map(|(a, b)| a * a * b).sum::<f64>().sqrt()
}
