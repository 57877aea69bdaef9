use nalgebra::{DMatrix, DVector};

use super::table::JointTable;
use crate::linalg::max_abs;
use crate::{Error, Result};

pub const ROW_SUM_TOLERANCE: f64 = 1e-12;
pub const DETAILED_BALANCE_TOLERANCE: f64 = 1e-10;
/// Allowed mismatch between a middle-step kernel's stationary vector and `f_Y`.
pub const STATIONARITY_TOLERANCE: f64 = 1e-8;

/// Row-stochastic transition matrix with the weight vector it is
/// reversible against.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    p: DMatrix<f64>,
    pi: DVector<f64>,
}

impl Kernel {
    pub fn new(p: DMatrix<f64>, pi: DVector<f64>) -> Result<Self> {
        let n = pi.len();
        if p.nrows() != n || p.ncols() != n {
            return Err(Error::Consistency(format!(
                "kernel is {}x{} but the weight vector has {n} entries",
                p.nrows(),
                p.ncols()
            )));
        }
        for (i, row) in p.row_iter().enumerate() {
            let s = row.sum();
            if (s - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::Consistency(format!("row {i} sums to {s}, not 1")));
            }
            if row.iter().any(|v| *v < -ROW_SUM_TOLERANCE) {
                return Err(Error::Consistency(format!("row {i} has a negative entry")));
            }
        }
        let kernel = Self { p, pi };
        let residual = kernel.detailed_balance_residual();
        if residual > DETAILED_BALANCE_TOLERANCE {
            return Err(Error::Reversibility {
                residual,
                tolerance: DETAILED_BALANCE_TOLERANCE,
            });
        }
        Ok(kernel)
    }

    pub fn identity(pi: DVector<f64>) -> Result<Self> {
        let n = pi.len();
        Self::new(DMatrix::identity(n, n), pi)
    }

    /// The kernel that jumps straight to stationarity: every row is `pi`.
    pub fn projection(pi: DVector<f64>) -> Result<Self> {
        let n = pi.len();
        let p = DMatrix::from_fn(n, n, |_, j| pi[j]);
        Self::new(p, pi)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn stationary(&self) -> &DVector<f64> {
        &self.pi
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    /// `max |π(i) P(i,j) − π(j) P(j,i)|`.
    pub fn detailed_balance_residual(&self) -> f64 {
        let n = self.len();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in (i + 1)..n {
                let d = self.pi[i] * self.p[(i, j)] - self.pi[j] * self.p[(j, i)];
                worst = worst.max(d.abs());
            }
        }
        worst
    }

    /// `‖P² − P‖_max`.
    pub fn idempotency_residual(&self) -> f64 {
        max_abs(&(&self.p * &self.p - &self.p))
    }

    /// `P⁰, P¹, …` applied: the `n`-step transition matrix.
    pub fn power(&self, n: u32) -> DMatrix<f64> {
        let mut out = DMatrix::identity(self.len(), self.len());
        for _ in 0..n {
            out = &out * &self.p;
        }
        out
    }
}

/// DA kernel `k(x'|x) = Σ_y f_{X|Y}(x'|y) f_{Y|X}(y|x)`.
pub fn build_da_kernel(f: &JointTable) -> Result<Kernel> {
    let k = f.y_given_x() * f.x_given_y();
    Kernel::new(k, f.marginal_x().clone())
}

/// Sandwich kernel `k*(x'|x) = Σ_y Σ_y' f_{X|Y}(x'|y') R(y,y') f_{Y|X}(y|x)`.
pub fn build_sandwich_kernel(f: &JointTable, r: &Kernel) -> Result<Kernel> {
    if r.len() != f.ny() {
        return Err(Error::Consistency(format!(
            "middle kernel acts on {} states but Y has {}",
            r.len(),
            f.ny()
        )));
    }
    let mismatch = (r.stationary() - f.marginal_y()).amax();
    if mismatch > STATIONARITY_TOLERANCE {
        return Err(Error::Consistency(format!(
            "middle kernel is reversible against a vector {mismatch:e} away from f_Y"
        )));
    }
    let k = f.y_given_x() * r.matrix() * f.x_given_y();
    Kernel::new(k, f.marginal_x().clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::RngStream;

    fn bundled() -> JointTable {
        JointTable::from_row_major(2, 2, &[0.3, 0.2, 0.1, 0.4]).unwrap()
    }

    /// Direct double sum, independent of the matrix-product route.
    fn da_by_double_sum(t: &JointTable) -> DMatrix<f64> {
        let f = t.probabilities();
        let (fx, fy) = (t.marginal_x(), t.marginal_y());
        DMatrix::from_fn(t.nx(), t.nx(), |x, xp| {
            (0..t.ny()).map(|y| (f[(xp, y)] / fy[y]) * (f[(x, y)] / fx[x])).sum()
        })
    }

    #[test]
    fn bundled_table_da_kernel() {
        let k = build_da_kernel(&bundled()).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[7.0 / 12.0, 5.0 / 12.0, 5.0 / 12.0, 7.0 / 12.0]);
        assert!(max_abs(&(k.matrix() - want)) < 1e-15);
    }

    #[test]
    fn da_kernel_matches_double_sum_on_random_tables() {
        let mut rng = RngStream::new(2, 0);
        for _ in 0..20 {
            let t = JointTable::random(&mut rng, 5, 7).unwrap();
            let k = build_da_kernel(&t).unwrap();
            assert!(max_abs(&(k.matrix() - da_by_double_sum(&t))) < 1e-14);
        }
    }

    #[test]
    fn independent_table_mixes_in_one_step() {
        let t = JointTable::independent(&[0.2, 0.5, 0.3], &[0.6, 0.4]).unwrap();
        let k = build_da_kernel(&t).unwrap();
        for row in k.matrix().row_iter() {
            assert!((row.transpose() - t.marginal_x()).amax() < 1e-15);
        }
    }

    #[test]
    fn deterministic_coupling_gives_identity() {
        let t = JointTable::new(DMatrix::from_diagonal_element(3, 3, 1.0 / 3.0)).unwrap();
        let k = build_da_kernel(&t).unwrap();
        assert!(max_abs(&(k.matrix() - DMatrix::identity(3, 3))) < 1e-15);
    }

    #[test]
    fn identity_middle_step_reproduces_da() {
        let mut rng = RngStream::new(3, 0);
        let t = JointTable::random(&mut rng, 4, 5).unwrap();
        let r = Kernel::identity(t.marginal_y().clone()).unwrap();
        let k = build_da_kernel(&t).unwrap();
        let ks = build_sandwich_kernel(&t, &r).unwrap();
        assert!(max_abs(&(k.matrix() - ks.matrix())) < 1e-15);
    }

    #[test]
    fn full_projection_middle_step_is_iid() {
        let t = bundled();
        let r = Kernel::projection(t.marginal_y().clone()).unwrap();
        let ks = build_sandwich_kernel(&t, &r).unwrap();
        for row in ks.matrix().row_iter() {
            assert!((row[0] - 0.5).abs() < 1e-15 && (row[1] - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn sandwich_rejects_mismatched_stationary_vector() {
        let t = bundled();
        let r = Kernel::identity(DVector::from_vec(vec![0.5, 0.5])).unwrap();
        assert!(matches!(build_sandwich_kernel(&t, &r), Err(Error::Consistency(_))));
    }

    #[test]
    fn kernel_rejects_irreversible_matrix() {
        let p = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
        let pi = DVector::from_element(3, 1.0 / 3.0);
        assert!(matches!(Kernel::new(p, pi), Err(Error::Reversibility { .. })));
    }
}
