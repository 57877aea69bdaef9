use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::distributions::RngStream;
use crate::{Error, Result};

/// Tolerance on the total mass of a joint table.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Finite joint pmf `f(x, y)` over `X × Y` with counting measures.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    f: DMatrix<f64>,
    fx: DVector<f64>,
    fy: DVector<f64>,
}

impl JointTable {
    pub fn new(f: DMatrix<f64>) -> Result<Self> {
        if f.nrows() == 0 || f.ncols() == 0 {
            return Err(Error::parameter(
                "table",
                format!("{}x{}", f.nrows(), f.ncols()),
                "must have at least one row and one column",
            ));
        }
        if let Some(bad) = f.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::parameter("probability", bad, "entries must be finite and nonnegative"));
        }
        let total = f.sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::parameter("total mass", total, "probabilities must sum to 1"));
        }
        let fx = DVector::from_iterator(f.nrows(), f.row_iter().map(|r| r.sum()));
        let fy = DVector::from_iterator(f.ncols(), f.column_iter().map(|c| c.sum()));
        if let Some(i) = fx.iter().position(|&v| v <= 0.0) {
            return Err(Error::Degenerate(format!("row {i} has zero marginal mass")));
        }
        if let Some(j) = fy.iter().position(|&v| v <= 0.0) {
            return Err(Error::Degenerate(format!("column {j} has zero marginal mass")));
        }
        Ok(Self { f, fx, fy })
    }

    pub fn from_row_major(rows: usize, cols: usize, values: &[f64]) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::parameter(
                "probabilities",
                values.len(),
                format!("expected {rows} x {cols} = {} entries", rows * cols),
            ));
        }
        Self::new(DMatrix::from_row_slice(rows, cols, values))
    }

    /// Product table `f_X ⊗ f_Y`.
    pub fn independent(fx: &[f64], fy: &[f64]) -> Result<Self> {
        let f = DMatrix::from_fn(fx.len(), fy.len(), |i, j| fx[i] * fy[j]);
        Self::new(f)
    }

    /// Random table with entries uniform on `[0.05, 1)` before normalization.
    pub fn random(rng: &mut RngStream, rows: usize, cols: usize) -> Result<Self> {
        let mut f = DMatrix::from_fn(rows, cols, |_, _| rng.random_range(0.05..1.0));
        let total = f.sum();
        f /= total;
        // Push any residual roundoff into the largest cell.
        let drift = 1.0 - f.sum();
        let (imax, _) = f.iter().enumerate().fold((0, 0.0), |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc });
        f[imax] += drift;
        Self::new(f)
    }

    pub fn probabilities(&self) -> &DMatrix<f64> {
        &self.f
    }

    pub fn marginal_x(&self) -> &DVector<f64> {
        &self.fx
    }

    pub fn marginal_y(&self) -> &DVector<f64> {
        &self.fy
    }

    pub fn nx(&self) -> usize {
        self.f.nrows()
    }

    pub fn ny(&self) -> usize {
        self.f.ncols()
    }

    /// `|X| × |Y|` matrix of `f_{Y|X}(y | x)`; row `x` is a pmf on `Y`.
    pub fn y_given_x(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.nx(), self.ny(), |i, j| self.f[(i, j)] / self.fx[i])
    }

    /// `|Y| × |X|` matrix of `f_{X|Y}(x | y)`; row `y` is a pmf on `X`.
    pub fn x_given_y(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.ny(), self.nx(), |j, i| self.f[(i, j)] / self.fy[j])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_mass_deficit() {
        let err = JointTable::from_row_major(2, 2, &[0.3, 0.2, 0.1, 0.3]).unwrap_err();
        assert!(matches!(err, Error::Parameter { name: "total mass", .. }));
    }

    #[test]
    fn rejects_negative_entries() {
        assert!(JointTable::from_row_major(2, 2, &[0.6, -0.1, 0.1, 0.4]).is_err());
    }

    #[test]
    fn rejects_zero_marginals() {
        let err = JointTable::from_row_major(2, 2, &[0.5, 0.0, 0.5, 0.0]).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
    }

    #[test]
    fn conditionals_are_stochastic() {
        let mut rng = RngStream::new(1, 0);
        let t = JointTable::random(&mut rng, 4, 6).unwrap();
        for row in t.y_given_x().row_iter() {
            assert!((row.sum() - 1.0).abs() < 1e-14);
        }
        for row in t.x_given_y().row_iter() {
            assert!((row.sum() - 1.0).abs() < 1e-14);
        }
    }
}
