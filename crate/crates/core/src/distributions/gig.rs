//! Generalized inverse Gaussian variates.
//!
//! Density `∝ x^{λ-1} exp{-(a x + b/x) / 2}` on `x > 0`. The general path
//! reduces to the one-parameter form `y^{λ-1} exp{-ω(y + 1/y)/2}` with
//! `ω = √(ab)`, `x = √(b/a) y`, folds negative orders through `1/y`, and
//! picks one of three rejection schemes by `(λ, ω)`:
//!
//! * ratio-of-uniforms with the mode shifted to the origin (`λ > 2` or `ω > 3`);
//! * plain ratio-of-uniforms (moderate `λ`, `ω`);
//! * a piecewise constant/power/exponential hat for `0 ≤ λ < 1` with small
//!   `ω`, where the density is not log-concave.

use std::f64::consts::PI;

use super::{inverse_gaussian_unchecked, sample_gamma, RngStream};
use crate::{Error, Result};

/// `(λ, a, b)` for the GIG law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GigParams {
    pub lambda: f64,
    pub a: f64,
    pub b: f64,
}

impl GigParams {
    /// Validates that the triple gives a normalizable density.
    pub fn new(lambda: f64, a: f64, b: f64) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(Error::parameter("lambda", lambda, "must be finite"));
        }
        if !(a >= 0.0) || !a.is_finite() {
            return Err(Error::parameter("a", a, "must be finite and nonnegative"));
        }
        if !(b >= 0.0) || !b.is_finite() {
            return Err(Error::parameter("b", b, "must be finite and nonnegative"));
        }
        match (a > 0.0, b > 0.0) {
            (true, true) => {}
            (true, false) if lambda > 0.0 => {}
            (false, true) if lambda < 0.0 => {}
            (true, false) => {
                return Err(Error::parameter("lambda", lambda, "must be positive when b = 0"));
            }
            (false, true) => {
                return Err(Error::parameter("lambda", lambda, "must be negative when a = 0"));
            }
            (false, false) => {
                return Err(Error::parameter("a", a, "a and b cannot both be zero"));
            }
        }
        Ok(Self { lambda, a, b })
    }

    /// Log of the unnormalized density.
    pub fn log_density_unnorm(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return f64::NEG_INFINITY;
        }
        (self.lambda - 1.0) * x.ln() - 0.5 * (self.a * x + self.b / x)
    }

    /// Location of the density's maximum.
    pub fn mode(&self) -> f64 {
        let (l, a, b) = (self.lambda, self.a, self.b);
        if b == 0.0 {
            return (2.0 * (l - 1.0) / a).max(0.0);
        }
        if a == 0.0 {
            return b / (2.0 * (1.0 - l));
        }
        // Positive root of a x² - 2(λ-1) x - b = 0.
        ((l - 1.0) + ((l - 1.0) * (l - 1.0) + a * b).sqrt()) / a
    }
}

/// Draws from GIG(λ, a, b), taking the gamma, inverse-gamma and
/// (reciprocal) inverse Gaussian shortcuts whenever they apply.
pub fn sample_gig(rng: &mut RngStream, p: GigParams) -> Result<f64> {
    let p = GigParams::new(p.lambda, p.a, p.b)?;
    if p.b == 0.0 {
        return sample_gamma(rng, p.lambda, 0.5 * p.a);
    }
    if p.a == 0.0 {
        return Ok(1.0 / sample_gamma(rng, -p.lambda, 0.5 * p.b)?);
    }
    if p.lambda == -0.5 {
        return Ok(inverse_gaussian_unchecked(rng, (p.b / p.a).sqrt(), p.b));
    }
    if p.lambda == 0.5 {
        return Ok(1.0 / inverse_gaussian_unchecked(rng, (p.a / p.b).sqrt(), p.a));
    }
    Ok(general(rng, p))
}

/// Draws from GIG(λ, a, b) through the rejection schemes only, never the
/// closed-form shortcuts (boundary cases `a = 0` or `b = 0` still go
/// through the gamma law, which is the only option there).
pub fn sample_gig_generic(rng: &mut RngStream, p: GigParams) -> Result<f64> {
    let p = GigParams::new(p.lambda, p.a, p.b)?;
    if p.b == 0.0 || p.a == 0.0 {
        return sample_gig(rng, p);
    }
    Ok(general(rng, p))
}

fn general(rng: &mut RngStream, p: GigParams) -> f64 {
    let omega = (p.a * p.b).sqrt();
    let alpha = (p.b / p.a).sqrt();
    let lambda = p.lambda.abs();
    let y = if lambda > 2.0 || omega > 3.0 {
        rou_shifted(rng, lambda, omega)
    } else if lambda >= 1.0 - 2.25 * omega * omega || omega > 0.2 {
        rou_plain(rng, lambda, omega)
    } else {
        concave_hat(rng, lambda, omega)
    };
    if p.lambda < 0.0 {
        alpha / y
    } else {
        alpha * y
    }
}

/// Mode of `y^{λ-1} e^{-ω(y+1/y)/2}` for `λ ≥ 1`; for `λ < 1`, the mode
/// of the same density in `1/y`'s parametrization, which bounds the region
/// the hats below are built on.
fn mode(lambda: f64, omega: f64) -> f64 {
    if lambda >= 1.0 {
        ((lambda - 1.0).hypot(omega) + (lambda - 1.0)) / omega
    } else {
        omega / ((1.0 - lambda).hypot(omega) + (1.0 - lambda))
    }
}

fn rou_plain(rng: &mut RngStream, lambda: f64, omega: f64) -> f64 {
    let t = 0.5 * (lambda - 1.0);
    let s = 0.25 * omega;
    let xm = mode(lambda, omega);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);
    let ym = ((lambda + 1.0) + (lambda + 1.0).hypot(omega)) / omega;
    let um = (0.5 * (lambda + 1.0) * ym.ln() - s * (ym + 1.0 / ym) - nc).exp();
    loop {
        let u = um * rng.uniform_open();
        let v = rng.uniform_open();
        let x = u / v;
        if v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

fn rou_shifted(rng: &mut RngStream, lambda: f64, omega: f64) -> f64 {
    let t = 0.5 * (lambda - 1.0);
    let s = 0.25 * omega;
    let xm = mode(lambda, omega);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);

    // Extremes of (x - xm)·√f(x) are the roots of y³ + a y² + b y + c on
    // (0, xm) and (xm, ∞); solve the depressed cubic trigonometrically.
    let a = -(2.0 * (lambda + 1.0) / omega + xm);
    let b = 2.0 * (lambda - 1.0) * xm / omega - 1.0;
    let c = xm;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let phi = (-q / (2.0 * (-(p * p * p) / 27.0).sqrt())).clamp(-1.0, 1.0).acos();
    let fak = 2.0 * (-p / 3.0).sqrt();
    let y1 = fak * (phi / 3.0).cos() - a / 3.0;
    let y2 = fak * (phi / 3.0 + 4.0 / 3.0 * PI).cos() - a / 3.0;

    let uplus = (y1 - xm) * (t * y1.ln() - s * (y1 + 1.0 / y1) - nc).exp();
    let uminus = (y2 - xm) * (t * y2.ln() - s * (y2 + 1.0 / y2) - nc).exp();
    loop {
        let u = uminus + rng.uniform_open() * (uplus - uminus);
        let v = rng.uniform_open();
        let x = u / v + xm;
        if x > 0.0 && v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

fn concave_hat(rng: &mut RngStream, lambda: f64, omega: f64) -> f64 {
    let xm = mode(lambda, omega);
    let x0 = omega / (1.0 - lambda);

    // [0, x0]: constant at the density maximum.
    let k0 = ((lambda - 1.0) * xm.ln() - 0.5 * omega * (xm + 1.0 / xm)).exp();
    let a0 = k0 * x0;

    // [x0, ∞): power then exponential, or exponential only.
    let (k1, a1, k2, a2) = if x0 >= 2.0 / omega {
        let k2 = x0.powf(lambda - 1.0);
        (0.0, 0.0, k2, k2 * 2.0 * (-omega * x0 / 2.0).exp() / omega)
    } else {
        let k1 = (-omega).exp();
        let a1 = if lambda == 0.0 {
            k1 * (2.0 / (omega * omega)).ln()
        } else {
            k1 / lambda * ((2.0 / omega).powf(lambda) - x0.powf(lambda))
        };
        let k2 = (2.0 / omega).powf(lambda - 1.0);
        (k1, a1, k2, k2 * 2.0 * (-1.0_f64).exp() / omega)
    };
    let total = a0 + a1 + a2;
    let tail_start = x0.max(2.0 / omega);

    loop {
        let mut v = total * rng.uniform_open();
        let (x, hx) = if v <= a0 {
            (x0 * v / a0, k0)
        } else {
            v -= a0;
            if v <= a1 {
                if lambda == 0.0 {
                    let x = omega * (omega.exp() * v).exp();
                    (x, k1 / x)
                } else {
                    let x = (x0.powf(lambda) + lambda / k1 * v).powf(1.0 / lambda);
                    (x, k1 * x.powf(lambda - 1.0))
                }
            } else {
                v -= a1;
                let inner = (-omega / 2.0 * tail_start).exp() - omega / (2.0 * k2) * v;
                let x = -2.0 / omega * inner.max(f64::MIN_POSITIVE).ln();
                (x, k2 * (-omega / 2.0 * x).exp())
            }
        };
        let u = rng.uniform_open() * hx;
        if u.ln() <= (lambda - 1.0) * x.ln() - omega / 2.0 * (x + 1.0 / x) {
            return x;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate_positive, Tolerance};

    /// Mean and variance of GIG(λ, a, b) by quadrature.
    fn quad_moments(p: GigParams) -> (f64, f64) {
        let shift = p.log_density_unnorm(p.mode());
        let c = p.mode().ln();
        let m = |k: i32| {
            integrate_positive(
                |x| x.powi(k) * (p.log_density_unnorm(x) - shift).exp(),
                c,
                1.0,
                Tolerance::default(),
            )
            .unwrap()
            .value
        };
        let (m0, m1, m2) = (m(0), m(1), m(2));
        let mean = m1 / m0;
        (mean, m2 / m0 - mean * mean)
    }

    fn check_moments(p: GigParams, draws: impl Fn(&mut RngStream) -> f64, seed: u64) {
        let mut rng = RngStream::new(seed, 0);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| draws(&mut rng)).collect();
        let nf = n as f64;
        let mean = xs.iter().sum::<f64>() / nf;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / nf;
        let (qm, qv) = quad_moments(p);
        let se_mean = (var / nf).sqrt();
        let se_var = ((m4 - var * var) / nf).sqrt();
        assert!((mean - qm).abs() < 3.0 * se_mean, "{p:?}: mean {mean} vs {qm}");
        assert!((var - qv).abs() < 3.0 * se_var, "{p:?}: var {var} vs {qv}");
    }

    #[test]
    fn parameter_validation() {
        assert!(GigParams::new(1.0, 1.0, 1.0).is_ok());
        assert!(GigParams::new(0.5, 2.0, 0.0).is_ok());
        assert!(GigParams::new(-0.5, 2.0, 0.0).is_err());
        assert!(GigParams::new(-0.5, 0.0, 2.0).is_ok());
        assert!(GigParams::new(0.5, 0.0, 2.0).is_err());
        assert!(GigParams::new(1.0, 0.0, 0.0).is_err());
        assert!(GigParams::new(1.0, -1.0, 1.0).is_err());
        assert!(GigParams::new(f64::NAN, 1.0, 1.0).is_err());
    }

    #[test]
    fn each_rejection_regime_matches_quadrature() {
        let cases = [
            // concave hat: 0 ≤ |λ| < 1, small ω
            GigParams::new(0.3, 0.1, 0.1).unwrap(),
            GigParams::new(0.0, 0.05, 0.2).unwrap(),
            // plain ratio-of-uniforms
            GigParams::new(1.0, 2.0, 2.0).unwrap(),
            GigParams::new(-0.8, 1.0, 0.5).unwrap(),
            // mode-shifted ratio-of-uniforms
            GigParams::new(3.5, 1.0, 1.0).unwrap(),
            GigParams::new(1.5, 8.0, 4.0).unwrap(),
            GigParams::new(-2.5, 0.5, 3.0).unwrap(),
        ];
        for (i, p) in cases.into_iter().enumerate() {
            check_moments(p, |rng| sample_gig_generic(rng, p).unwrap(), 100 + i as u64);
        }
    }

    #[test]
    fn gamma_degeneracy() {
        let p = GigParams::new(3.0, 4.0, 0.0).unwrap();
        let mut rng = RngStream::new(11, 0);
        let n = 100_000;
        let mean = (0..n).map(|_| sample_gig(&mut rng, p).unwrap()).sum::<f64>() / n as f64;
        // Gamma(3, rate 2): mean 1.5, variance 0.75.
        assert!((mean - 1.5).abs() < 3.0 * (0.75 / n as f64).sqrt(), "mean = {mean}");
    }

    #[test]
    fn inverse_gamma_boundary() {
        let p = GigParams::new(-3.0, 0.0, 4.0).unwrap();
        let mut rng = RngStream::new(12, 0);
        let n = 100_000;
        let mean = (0..n).map(|_| sample_gig(&mut rng, p).unwrap()).sum::<f64>() / n as f64;
        // Inverse gamma with shape 3, scale 2: mean 1, variance 1.
        assert!((mean - 1.0).abs() < 3.0 * (1.0 / n as f64).sqrt(), "mean = {mean}");
    }

    #[test]
    fn unit_order_matches_quadrature_mean() {
        let p = GigParams::new(1.0, 2.0, 2.0).unwrap();
        check_moments(p, |rng| sample_gig(rng, p).unwrap(), 13);
    }

    #[test]
    fn mode_is_a_stationary_point() {
        for &(l, a, b) in &[(1.0, 2.0, 2.0), (0.3, 0.1, 0.4), (-2.0, 1.0, 3.0), (4.0, 0.5, 0.1)] {
            let p = GigParams::new(l, a, b).unwrap();
            let m = p.mode();
            let h = 1e-6 * m;
            let d = (p.log_density_unnorm(m + h) - p.log_density_unnorm(m - h)) / (2.0 * h);
            assert!(d.abs() < 1e-5, "({l},{a},{b}): slope {d} at mode {m}");
        }
    }
}
