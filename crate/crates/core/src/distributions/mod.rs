//! Seeded random-variate generation.
//!
//! Every sampler takes an explicit [`RngStream`]; nothing here touches a
//! global or thread-local generator, so a `(seed, stream_id)` pair fully
//! determines the output sequence.

mod gig;

pub use gig::{sample_gig, sample_gig_generic, GigParams};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, Gamma, StandardNormal};

use crate::linalg::{cholesky_lower, solve_upper_transposed};
use crate::{Error, Result};

/// A reproducible random stream.
///
/// Backed by ChaCha8, whose 64-bit stream selector gives each `stream_id`
/// its own independent keystream under the same seed.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform draw on the open interval (0, 1).
    pub fn uniform_open(&mut self) -> f64 {
        loop {
            let u: f64 = self.inner.random();
            if u > 0.0 {
                return u;
            }
        }
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

pub fn sample_standard_normal(rng: &mut RngStream) -> f64 {
    rng.sample(StandardNormal)
}

pub fn sample_normal(rng: &mut RngStream, mean: f64, sd: f64) -> Result<f64> {
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(Error::parameter("sd", sd, "must be positive and finite"));
    }
    if !mean.is_finite() {
        return Err(Error::parameter("mean", mean, "must be finite"));
    }
    Ok(mean + sd * sample_standard_normal(rng))
}

/// Exp(1) draw.
pub fn sample_exponential(rng: &mut RngStream) -> f64 {
    rng.sample(Exp1)
}

/// Gamma draw with the given shape and *rate*.
pub fn sample_gamma(rng: &mut RngStream, shape: f64, rate: f64) -> Result<f64> {
    if !(shape > 0.0) || !shape.is_finite() {
        return Err(Error::parameter("shape", shape, "must be positive and finite"));
    }
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::parameter("rate", rate, "must be positive and finite"));
    }
    let gamma = Gamma::new(shape, 1.0 / rate)
        .map_err(|e| Error::parameter("shape", shape, e.to_string()))?;
    Ok(rng.sample(gamma))
}

/// Multivariate normal draw with covariance `cov`.
pub fn sample_mvn(rng: &mut RngStream, mean: &DVector<f64>, cov: &DMatrix<f64>) -> Result<DVector<f64>> {
    if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
        return Err(Error::parameter(
            "cov",
            format!("{}x{}", cov.nrows(), cov.ncols()),
            format!("must be {0}x{0} to match the mean", mean.len()),
        ));
    }
    let l = cholesky_lower(cov)?;
    let xi = DVector::from_fn(mean.len(), |_, _| sample_standard_normal(rng));
    Ok(mean + l * xi)
}

/// Multivariate normal draw parametrized by the lower Cholesky factor of
/// the *precision* matrix, `Q = L Lᵀ`. The covariance `Q⁻¹` is never formed.
pub fn sample_mvn_precision(rng: &mut RngStream, mean: &DVector<f64>, precision_chol: &DMatrix<f64>) -> DVector<f64> {
    let xi = DVector::from_fn(mean.len(), |_, _| sample_standard_normal(rng));
    mean + solve_upper_transposed(precision_chol, &xi)
}

/// Inverse Gaussian draw in the (mean, shape) parametrization, by the
/// transformation-with-multiple-roots method.
pub fn sample_inverse_gaussian(rng: &mut RngStream, mu: f64, lam: f64) -> Result<f64> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::parameter("mu", mu, "must be positive and finite"));
    }
    if !(lam > 0.0) || !lam.is_finite() {
        return Err(Error::parameter("lam", lam, "must be positive and finite"));
    }
    Ok(inverse_gaussian_unchecked(rng, mu, lam))
}

pub(crate) fn inverse_gaussian_unchecked(rng: &mut RngStream, mu: f64, lam: f64) -> f64 {
    let nu = sample_standard_normal(rng);
    let y = mu * nu * nu;
    // Smaller root of the quadratic, written as 4μλy / (y + √(y² + 4λy))²
    // so that neither λ ≫ μ nor λ ≪ μ loses precision to cancellation.
    let s = (y * y + 4.0 * lam * y).sqrt();
    let denom = y + s;
    let x = if denom > 0.0 {
        4.0 * mu * lam * y / (denom * denom)
    } else {
        mu
    };
    let u: f64 = rng.random();
    if u * (mu + x) <= mu {
        x
    } else {
        mu * mu / x
    }
}

/// `(θ, τ²)` of the normal variance-mean mixture for quantile `r`.
pub fn asym_laplace_mixture_params(r: f64) -> (f64, f64) {
    let q = r * (1.0 - r);
    ((1.0 - 2.0 * r) / q, 2.0 / q)
}

/// Draw from the asymmetric Laplace law with `r`-th quantile zero, via
/// `θV + τ√V U` with `V ~ Exp(1)` and `U ~ N(0, 1)`.
pub fn sample_asym_laplace(rng: &mut RngStream, r: f64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::parameter("r", r, "must lie in (0, 1)"));
    }
    let (theta, tau2) = asym_laplace_mixture_params(r);
    let v = sample_exponential(rng);
    let u = sample_standard_normal(rng);
    Ok(theta * v + tau2.sqrt() * v.sqrt() * u)
}

/// Closed-form CDF of the asymmetric Laplace density
/// `r(1-r)[e^{(1-r)ε} 1{ε≤0} + e^{-rε} 1{ε>0}]`.
pub fn asym_laplace_cdf(eps: f64, r: f64) -> f64 {
    if eps <= 0.0 {
        r * ((1.0 - r) * eps).exp()
    } else {
        1.0 - (1.0 - r) * (-r * eps).exp()
    }
}
