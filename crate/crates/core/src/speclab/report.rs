use nalgebra::{DMatrix, DVector};

use super::kernel::{build_da_kernel, build_sandwich_kernel, Kernel};
use super::spectrum::{eigenvalues_mean_zero, svd_ratio, weighted_norm, TIE_TOLERANCE};
use super::table::JointTable;
use crate::record::KvRecord;
use crate::{Error, Result};

/// `R` must be idempotent to this tolerance for the comparison theory to apply.
pub const IDEMPOTENCY_TOLERANCE: f64 = 1e-8;
/// Smallest singular value of `(R − I) H_l` above which only `a = 0` solves
/// `R Σ a_i h_i = Σ a_i h_i`.
pub const NULLSPACE_TOLERANCE: f64 = 1e-8;
/// Slack allowed when comparing eigenvalues and traces of `K` and `K*`.
pub const DOMINATION_TOLERANCE: f64 = 1e-10;
/// `R h_i = h_i` is declared when `‖R h_i − h_i‖ < FIXED_TOLERANCE`.
pub const FIXED_TOLERANCE: f64 = 1e-8;

/// Side-by-side spectra of the DA kernel `K` and the sandwich kernel `K*`.
#[derive(Debug, Clone)]
pub struct SpectralReport {
    /// Singular values `β_0 = 1 ≥ β_1 ≥ …` of the density ratio.
    pub beta: Vec<f64>,
    /// Mean-zero eigenvalues of `K`, descending.
    pub lambda: Vec<f64>,
    /// Mean-zero eigenvalues of `K*`, descending.
    pub lambda_star: Vec<f64>,
    pub trace_k: f64,
    pub trace_kstar: f64,
    /// `max{i : β_i = β_1}` (1-based).
    pub l: usize,
    /// `{i : β_i > 0}` (1-based).
    pub n_set: Vec<usize>,
    /// `max{i : λ_i = λ_1}` (1-based).
    pub i_star: usize,
    /// Eigenfunctions of `K`, columns orthonormal in `L²(f_X)`.
    pub e_basis: DMatrix<f64>,
    /// `max_{i ∈ N} ‖R h_i − h_i‖` in `L²(f_Y)`; zero iff traces agree.
    pub max_fixed_residual: f64,
    /// Smallest singular value of `(R − I) H_l`.
    pub nullspace_margin: f64,
    /// Whether `‖K*‖ < ‖K‖` by the fixed-vector criterion.
    pub strict_norm_drop: bool,
}

impl SpectralReport {
    /// Descriptions of every broken domination invariant; empty when all hold.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, values) in [("lambda", &self.lambda), ("lambda_star", &self.lambda_star)] {
            for (i, &v) in values.iter().enumerate() {
                if !(-DOMINATION_TOLERANCE..=1.0 + DOMINATION_TOLERANCE).contains(&v) {
                    out.push(format!("{name}[{}] = {v} lies outside [0, 1]", i + 1));
                }
            }
        }
        for (i, (&ls, &l)) in self.lambda_star.iter().zip(&self.lambda).enumerate() {
            if ls > l + DOMINATION_TOLERANCE {
                out.push(format!("lambda_star[{}] = {ls} exceeds lambda[{}] = {l}", i + 1, i + 1));
            }
        }
        if self.trace_kstar > self.trace_k + DOMINATION_TOLERANCE {
            out.push(format!(
                "trace(K*) = {} exceeds trace(K) = {}",
                self.trace_kstar, self.trace_k
            ));
        }
        out
    }

    /// Trace equality and `R h_i = h_i` on `N` agree. Only meaningful when
    /// every `β_i` in `N` is well separated from zero.
    pub fn trace_fixed_agreement(&self) -> bool {
        let traces_equal = (self.trace_k - self.trace_kstar).abs() < 1e-9;
        traces_equal == (self.max_fixed_residual < FIXED_TOLERANCE)
    }

    /// `λ_1 = 1`: the DA chain is reducible and the convergence theory does
    /// not apply, though domination still holds.
    pub fn reducible(&self) -> bool {
        self.lambda.first().is_some_and(|&l| l > 1.0 - DOMINATION_TOLERANCE)
    }

    pub fn to_record(&self) -> KvRecord {
        let mut r = KvRecord::new();
        r.push_list("beta", &self.beta)
            .push_list("lambda", &self.lambda)
            .push_list("lambda_star", &self.lambda_star)
            .push("trace_K", self.trace_k)
            .push("trace_Kstar", self.trace_kstar)
            .push("l", self.l)
            .push_list("N", &self.n_set)
            .push("i_star", self.i_star)
            .push("max_fixed_residual", self.max_fixed_residual)
            .push("nullspace_margin", self.nullspace_margin)
            .push("strict_norm_drop", self.strict_norm_drop)
            .push("e_basis.rows", self.e_basis.nrows())
            .push("e_basis.cols", self.e_basis.ncols());
        let row_major: Vec<f64> = self.e_basis.transpose().iter().copied().collect();
        r.push_list("e_basis", &row_major);
        r
    }
}

/// Compares `K` and `K* = P_X R P_Y` for an idempotent middle kernel `R`.
pub fn domination_report(table: &JointTable, r: &Kernel) -> Result<SpectralReport> {
    let idem = r.idempotency_residual();
    if idem > IDEMPOTENCY_TOLERANCE {
        return Err(Error::parameter(
            "R",
            format!("‖R² − R‖ = {idem:e}"),
            "middle kernel must be idempotent",
        ));
    }
    let k = build_da_kernel(table)?;
    let ks = build_sandwich_kernel(table, r)?;
    let spec = eigenvalues_mean_zero(&k)?;
    let spec_star = eigenvalues_mean_zero(&ks)?;
    let basis = svd_ratio(table);

    let beta1 = basis.beta.get(1).copied().unwrap_or(0.0);
    let l = basis.beta[1..]
        .iter()
        .take_while(|&&b| (b - beta1).abs() <= TIE_TOLERANCE)
        .count();
    let n_set: Vec<usize> = (1..basis.beta.len()).filter(|&i| basis.beta[i] > TIE_TOLERANCE).collect();
    let lambda1 = spec.values.first().copied().unwrap_or(0.0);
    let i_star = spec
        .values
        .iter()
        .take_while(|&&v| (v - lambda1).abs() <= TIE_TOLERANCE)
        .count();

    let fy = table.marginal_y();
    let max_fixed_residual = n_set
        .iter()
        .map(|&i| {
            let h: DVector<f64> = basis.h.column(i).into_owned();
            weighted_norm(&(r.matrix() * &h - &h), fy)
        })
        .fold(0.0_f64, f64::max);

    // ‖K*‖ < ‖K‖ iff (R − I) H_l has trivial null space. With β_1 = 0 both
    // norms vanish and no drop is possible.
    let (nullspace_margin, strict_norm_drop) = if l == 0 || beta1 <= TIE_TOLERANCE {
        (0.0, false)
    } else {
        let n = table.ny();
        let hl = basis.h.columns(1, l).into_owned();
        let m = (r.matrix() - DMatrix::<f64>::identity(n, n)) * hl;
        let smallest = m.singular_values().iter().copied().fold(f64::INFINITY, f64::min);
        (smallest, smallest > NULLSPACE_TOLERANCE)
    };

    Ok(SpectralReport {
        trace_k: spec.values.iter().sum(),
        trace_kstar: spec_star.values.iter().sum(),
        beta: basis.beta,
        lambda: spec.values,
        lambda_star: spec_star.values,
        l,
        n_set,
        i_star,
        e_basis: spec.functions,
        max_fixed_residual,
        nullspace_margin,
        strict_norm_drop,
    })
}
