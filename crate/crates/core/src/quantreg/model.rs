use nalgebra::{DMatrix, DVector, SymmetricEigen};
use sha2::{Digest, Sha256};

use crate::distributions::{asym_laplace_mixture_params, GigParams};
use crate::linalg::{cholesky_lower, cholesky_solve};
use crate::{Error, Result};

/// Relative singular-value floor for the full-rank check.
pub const RANK_TOLERANCE: f64 = 1e-10;
/// Condition number of `XᵀDX` above which a warning is attached.
pub const CONDITION_WARNING: f64 = 1e12;
/// `Q` below this is treated as an exact fit and the `b = 0` branch is used.
pub const RESIDUAL_FLOOR: f64 = 1e-14;

/// Linear quantile regression `z_i = x_iᵀβ + ε_i` with a flat prior on `β`.
#[derive(Debug, Clone)]
pub struct QuantileModel {
    x: DMatrix<f64>,
    z: DVector<f64>,
    r: f64,
    theta: f64,
    tau2: f64,
}

impl QuantileModel {
    pub fn new(x: DMatrix<f64>, z: DVector<f64>, r: f64) -> Result<Self> {
        let (m, p) = x.shape();
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::parameter("r", r, "must lie in (0, 1)"));
        }
        if z.len() != m {
            return Err(Error::parameter("z", z.len(), format!("length must equal the {m} rows of X")));
        }
        if p == 0 {
            return Err(Error::parameter("p", 0, "need at least one covariate"));
        }
        if m < p {
            return Err(Error::parameter("m", m, format!("need at least p = {p} observations")));
        }
        if x.iter().chain(z.iter()).any(|v| !v.is_finite()) {
            return Err(Error::parameter("data", "non-finite", "X and z must be finite"));
        }
        let sv = x.singular_values();
        let largest = sv.max();
        let smallest = sv.min();
        if !(smallest > RANK_TOLERANCE * largest) {
            return Err(Error::parameter(
                "X",
                format!("singular values {smallest:e}..{largest:e}"),
                "design must have full column rank",
            ));
        }
        let (theta, tau2) = asym_laplace_mixture_params(r);
        Ok(Self { x, z, r, theta, tau2 })
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn z(&self) -> &DVector<f64> {
        &self.z
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn tau2(&self) -> f64 {
        self.tau2
    }

    pub fn m(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn is_median(&self) -> bool {
        (self.r - 0.5).abs() < 1e-12
    }

    /// SHA-256 over the shape, `X`, `z` and `r` (little-endian bit patterns).
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.m() as u64).to_le_bytes());
        h.update((self.p() as u64).to_le_bytes());
        for v in self.x.iter().chain(self.z.iter()).chain(std::iter::once(&self.r)) {
            h.update(v.to_bits().to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    /// `ε_i = z_i − x_iᵀβ`.
    pub fn residuals(&self, beta: &DVector<f64>) -> DVector<f64> {
        &self.z - &self.x * beta
    }

    /// `log s(β, z)`: the log likelihood up to `m log(r(1−r))`.
    pub fn log_posterior_unnorm(&self, beta: &DVector<f64>) -> f64 {
        self.residuals(beta).iter().map(|&e| check_loss(e, self.r)).sum()
    }

    /// `β | y ~ N(μ, Σ)`.
    pub fn beta_conditional(&self, y: &DVector<f64>) -> Result<BetaConditional> {
        self.check_latent(y)?;
        let d = y.map(|yi| 1.0 / (self.tau2 * yi));
        let xtd = DMatrix::from_fn(self.p(), self.m(), |j, i| self.x[(i, j)] * d[i]);
        let precision = &xtd * &self.x;
        let precision = (&precision + precision.transpose()) * 0.5;
        let rhs = &xtd * &self.z - self.x.tr_mul(&DVector::from_element(self.m(), 1.0)) * (self.theta / self.tau2);
        let precision_chol = cholesky_lower(&precision)?;
        let mean = cholesky_solve(&precision_chol, &rhs);
        let eig = SymmetricEigen::new(precision.clone()).eigenvalues;
        let condition = eig.max() / eig.min();
        let warning = (!(condition <= CONDITION_WARNING))
            .then(|| format!("XᵀDX is ill-conditioned (condition number {condition:e})"));
        Ok(BetaConditional {
            mean,
            precision_chol,
            condition,
            warning,
        })
    }

    /// `y_i | β, z ~ GIG(1/2, (2τ² + θ²)/τ², (z_i − x_iᵀβ)²/τ²)`.
    pub fn y_conditional_params(&self, beta: &DVector<f64>, i: usize) -> GigParams {
        let e = self.z[i] - self.x.row(i).dot(&beta.transpose());
        GigParams {
            lambda: 0.5,
            a: (2.0 * self.tau2 + self.theta * self.theta) / self.tau2,
            b: e * e / self.tau2,
        }
    }

    /// Law of the scale `g` in the middle step `y ↦ g y` (median case).
    ///
    /// Marginally `π(y | z) ∝ Π y_i^{-1/2} e^{-Σ y_i} |XᵀDX|^{-1/2} e^{-Q/2}`.
    /// Under `y ↦ g y`, `D ↦ D/g`, so the determinant contributes `g^{p/2}`,
    /// the product `g^{-m/2}` and the left Haar measure of the scale group
    /// together with the Jacobian `g^{m-1}`. The density of `g` is therefore
    /// `∝ g^{(m+p)/2 - 1} exp{-g Σ y_i - Q/(2g)}`, i.e. GIG((m+p)/2, 2Σy_i, Q).
    pub fn sandwich_middle_params(&self, y: &DVector<f64>) -> Result<GigParams> {
        if !self.is_median() {
            return Err(Error::UnsupportedQuantile(self.r));
        }
        self.check_latent(y)?;
        let q = self.weighted_residual(y)?;
        let b = if q < RESIDUAL_FLOOR { 0.0 } else { q };
        Ok(GigParams {
            lambda: 0.5 * (self.m() + self.p()) as f64,
            a: 2.0 * y.sum(),
            b,
        })
    }

    /// `Q = (z − Xβ̂)ᵀ D (z − Xβ̂)` with `β̂` the weighted least-squares fit;
    /// equal to `zᵀD^{1/2}(I − H)D^{1/2}z` but never negative.
    pub fn weighted_residual(&self, y: &DVector<f64>) -> Result<f64> {
        let d = y.map(|yi| 1.0 / (self.tau2 * yi));
        let xtd = DMatrix::from_fn(self.p(), self.m(), |j, i| self.x[(i, j)] * d[i]);
        let precision = &xtd * &self.x;
        let precision = (&precision + precision.transpose()) * 0.5;
        let l = cholesky_lower(&precision)?;
        let fit = cholesky_solve(&l, &(&xtd * &self.z));
        let e = self.residuals(&fit);
        Ok(e.iter().zip(d.iter()).map(|(ei, di)| di * ei * ei).sum::<f64>().max(0.0))
    }

    fn check_latent(&self, y: &DVector<f64>) -> Result<()> {
        if y.len() != self.m() {
            return Err(Error::parameter("y", y.len(), format!("length must be m = {}", self.m())));
        }
        if let Some(bad) = y.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::parameter("y", bad, "latent scales must be positive and finite"));
        }
        Ok(())
    }
}

/// `ρ(ε)` with `log s = Σ ρ(ε_i)`.
pub(crate) fn check_loss(e: f64, r: f64) -> f64 {
    if e <= 0.0 {
        (1.0 - r) * e
    } else {
        -r * e
    }
}

/// Normal full conditional of `β`.
#[derive(Debug, Clone)]
pub struct BetaConditional {
    pub mean: DVector<f64>,
    /// Lower Cholesky factor of `Σ⁻¹ = XᵀDX`.
    pub precision_chol: DMatrix<f64>,
    pub condition: f64,
    pub warning: Option<String>,
}

impl BetaConditional {
    pub fn covariance(&self) -> DMatrix<f64> {
        let p = self.mean.len();
        let mut cov = DMatrix::zeros(p, p);
        for j in 0..p {
            let mut e = DVector::zeros(p);
            e[j] = 1.0;
            cov.set_column(j, &cholesky_solve(&self.precision_chol, &e));
        }
        cov
    }
}

/// Ten observations, one covariate, no intercept; generated once from
/// `z = 1.2 x + asymmetric Laplace(1/2)` noise and frozen.
pub fn reference_dataset() -> QuantileModel {
    let x = [-1.164, 1.734, -0.744, 0.767, -1.29, 0.36, 2.323, -0.685, -0.816, 2.029];
    let z = [-2.794, 2.824, -0.616, -0.302, -1.575, 0.909, 2.669, -1.218, -1.269, 2.709];
    QuantileModel::new(DMatrix::from_column_slice(10, 1, &x), DVector::from_column_slice(&z), 0.5)
        .expect("reference dataset is valid")
}
