//! Finite constants bounding `x₁ᵀ(x₁x₁ᵀ + Σ aᵢxᵢxᵢᵀ + a₁I)⁻²x₁` over `a > 0`,
//! and the uniform bound on weighted least-squares coefficients they imply.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::distributions::RngStream;
use crate::linalg::householder_to_e1;
use crate::{Error, Result};

/// `|b_i[0]| < A_SET_TOLERANCE · ‖b_i‖` puts `i` in the set `A`.
pub const A_SET_TOLERANCE: f64 = 1e-12;
pub const LOG10_A_MIN: f64 = -8.0;
pub const LOG10_A_MAX: f64 = 8.0;
pub const MARGIN_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub recursive_bound: f64,
    pub empirical_sup: f64,
    pub samples: usize,
    pub margin: f64,
}

impl BoundReport {
    fn new(recursive_bound: f64, empirical_sup: f64, samples: usize) -> Self {
        Self {
            recursive_bound,
            empirical_sup,
            samples,
            margin: recursive_bound - empirical_sup,
        }
    }

    pub fn passed(&self) -> bool {
        self.margin >= -MARGIN_TOLERANCE
    }
}

/// Upper bound on `C_{p,n}(x₁; x₂, …, x_n)` by induction on the dimension.
///
/// Rotate so `x₁ ∝ e₁`, write each `b_i = P x_i` as `(0, v_i)` (set `A`) or
/// `u_i (1, v_i)` (set `B`), and bound by
/// `(1 + [Σ_{i∈B} √C_{p−1,n−1}(v_i; v_j, j ≠ i)]²) / ‖x₁‖²`.
pub fn recursive_c_bound(x1: &DVector<f64>, others: &[DVector<f64>]) -> f64 {
    let norm2 = x1.norm_squared();
    if norm2 == 0.0 {
        return 0.0;
    }
    let p = x1.len();
    if p == 1 || others.is_empty() {
        return 1.0 / norm2;
    }
    let h = householder_to_e1(x1);
    let mut vs = Vec::with_capacity(others.len());
    let mut in_b = Vec::with_capacity(others.len());
    for x in others {
        let b = &h * x;
        let head = b[0];
        let tail = b.rows(1, p - 1).into_owned();
        if head.abs() < A_SET_TOLERANCE * b.norm() || b.norm() == 0.0 {
            vs.push(tail);
            in_b.push(false);
        } else {
            vs.push(tail / head);
            in_b.push(true);
        }
    }
    let mut sum = 0.0;
    for i in (0..vs.len()).filter(|&i| in_b[i]) {
        let rest: Vec<DVector<f64>> = (0..vs.len()).filter(|&j| j != i).map(|j| vs[j].clone()).collect();
        sum += recursive_c_bound(&vs[i], &rest).sqrt();
    }
    (1.0 + sum * sum) / norm2
}

/// `x₁ᵀ(x₁x₁ᵀ + Σ_{i≥2} a_i x_i x_iᵀ + a₁I)⁻²x₁`, with `a[0] = a₁` on the
/// identity and `a[k]` on `others[k − 1]`.
///
/// With `C = [x₁ᵀ; √a_i x_iᵀ; √a₁ I]` the matrix is `CᵀC` and `x₁ = Cᵀe₁`,
/// so the form is `‖C⁺e₁‖²`: the squared norm of a least-squares solution.
/// Row weights span many decades, so rows are sorted by decreasing norm
/// and the QR uses column pivoting, which keeps the backward error small
/// row by row rather than only relative to `‖C‖`.
pub fn quadratic_form(x1: &DVector<f64>, others: &[DVector<f64>], a: &[f64]) -> Result<f64> {
    if x1.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    let p = x1.len();
    let mut rows: Vec<DVector<f64>> = Vec::with_capacity(1 + others.len() + p);
    rows.push(x1.clone());
    for (k, x) in others.iter().enumerate() {
        rows.push(x * a[k + 1].sqrt());
    }
    let ridge = a[0].sqrt();
    for j in 0..p {
        let mut e = DVector::zeros(p);
        e[j] = ridge;
        rows.push(e);
    }
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let norms: Vec<f64> = rows.iter().map(|r| r.norm()).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let c = DMatrix::from_fn(rows.len(), p, |i, j| rows[order[i]][j]);
    let target = order.iter().position(|&i| i == 0).expect("x1 row present");
    let qr = c.col_piv_qr();
    let q = qr.q();
    let r = qr.r();
    let rhs = q.row(target).transpose();
    let w = r
        .solve_upper_triangular(&rhs)
        .ok_or_else(|| Error::Degenerate("quadratic form system is singular".into()))?;
    Ok(w.norm_squared())
}

fn log_uniform(rng: &mut RngStream) -> f64 {
    10f64.powf(rng.random_range(LOG10_A_MIN..=LOG10_A_MAX))
}

/// Largest quadratic form over `n_samples` coefficient vectors: the all-`10⁻⁸`
/// corner, then log-uniform draws on `[10⁻⁸, 10⁸]ⁿ` with each coordinate
/// pinned to a face with probability 1/4 (low) or 1/20 (high).
pub fn empirical_sup_check(
    x1: &DVector<f64>,
    others: &[DVector<f64>],
    n_samples: usize,
    rng: &mut RngStream,
) -> Result<BoundReport> {
    if others.iter().any(|x| x.len() != x1.len()) {
        return Err(Error::parameter("others", x1.len(), "all vectors must share the dimension of x1"));
    }
    let bound = recursive_c_bound(x1, others);
    let n = others.len() + 1;
    let low = 10f64.powf(LOG10_A_MIN);
    let high = 10f64.powf(LOG10_A_MAX);
    let mut sup = 0.0_f64;
    let mut a = vec![low; n];
    for s in 0..n_samples {
        if s > 0 {
            for ai in a.iter_mut() {
                let u: f64 = rng.random();
                *ai = if u < 0.25 {
                    low
                } else if u < 0.30 {
                    high
                } else {
                    log_uniform(rng)
                };
            }
        }
        sup = sup.max(quadratic_form(x1, others, &a)?);
    }
    Ok(BoundReport::new(bound, sup, n_samples))
}

/// `β̂(y) = (XᵀDX)⁻¹XᵀDz` with `D = diag(1/y)`, by QR of `D^{1/2}X`.
pub fn weighted_ls(x: &DMatrix<f64>, z: &DVector<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let w = y.map(|v| v.sqrt().recip());
    let xs = DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] * w[i]);
    let zs = z.component_mul(&w);
    let qr = xs.qr();
    let rhs = qr.q().tr_mul(&zs);
    qr.r()
        .solve_upper_triangular(&rhs)
        .ok_or_else(|| Error::Degenerate("weighted design lost rank".into()))
}

/// `Σ_i |z_i| √C_i(X)` with `C_i(X)` the recursive bound for row `i`
/// against the other rows.
pub fn wls_coefficient_bound(x: &DMatrix<f64>, z: &DVector<f64>) -> f64 {
    let rows: Vec<DVector<f64>> = (0..x.nrows()).map(|i| x.row(i).transpose()).collect();
    (0..rows.len())
        .map(|i| {
            let rest: Vec<DVector<f64>> = (0..rows.len()).filter(|&j| j != i).map(|j| rows[j].clone()).collect();
            z[i].abs() * recursive_c_bound(&rows[i], &rest).sqrt()
        })
        .sum()
}

/// Checks `‖β̂(y)‖₂ ≤ Σ|z_i|√C_i(X)` over log-uniform `y ∈ [10⁻⁸, 10⁸]^m`.
pub fn wls_uniform_check(
    x: &DMatrix<f64>,
    z: &DVector<f64>,
    n_samples: usize,
    rng: &mut RngStream,
) -> Result<BoundReport> {
    let (m, p) = x.shape();
    if z.len() != m {
        return Err(Error::parameter("z", z.len(), format!("length must equal the {m} rows of X")));
    }
    let sv = x.singular_values();
    if m < p || !(sv.min() > 1e-10 * sv.max()) {
        return Err(Error::parameter("X", format!("{m}x{p}"), "design must have full column rank"));
    }
    let bound = wls_coefficient_bound(x, z);
    let mut sup = 0.0_f64;
    for _ in 0..n_samples {
        let y = DVector::from_fn(m, |_, _| log_uniform(rng));
        sup = sup.max(weighted_ls(x, z, &y)?.norm());
    }
    Ok(BoundReport::new(bound, sup, n_samples))
}
