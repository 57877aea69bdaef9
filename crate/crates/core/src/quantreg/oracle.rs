//! Posterior moments of `β` by deterministic integration, for `p ≤ 2`.
//!
//! Along any line `log s` is concave and piecewise linear with kinks where
//! a residual changes sign, so the integral in one coordinate is a sum of
//! exponentials integrated in closed form. For `p = 2` the remaining
//! coordinate is handled by adaptive Gauss–Kronrod on the real line.

use nalgebra::DVector;

use super::model::{check_loss, QuantileModel};
use crate::quadrature::{integrate_real_line, Tolerance};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct PosteriorMoments {
    pub mean: DVector<f64>,
    pub variance: DVector<f64>,
}

/// `log ∫ e^{ℓ(t)} dt` and the first two moments of `t`, where
/// `ℓ(t) = Σ_i ρ(c_i − a_i t)`.
#[derive(Debug, Clone, Copy)]
struct LineMoments {
    log_mass: f64,
    mean: f64,
    second: f64,
}

/// `∫_0^w e^{k s} s^j ds` for `j = 0, 1, 2`, stable for any sign of `k`.
fn exp_poly_moments(k: f64, w: f64) -> [f64; 3] {
    let x = k * w;
    if x.abs() < 1e-3 {
        // Series in x to O(x⁴): relative error below 1e-13.
        let s = |j: i32| -> f64 {
            let mut term = w.powi(j + 1) / (j + 1) as f64;
            let mut sum = term;
            for n in 1..6 {
                term *= x * (j + n) as f64 / ((j + n + 1) as f64 * n as f64);
                sum += term;
            }
            sum
        };
        return [s(0), s(1), s(2)];
    }
    let e = x.exp();
    let m0 = x.exp_m1() / k;
    let m1 = (w * e - m0) / k;
    let m2 = (w * w * e - 2.0 * m1) / k;
    [m0, m1, m2]
}

fn line_moments(a: &[f64], c: &[f64], r: f64) -> Result<LineMoments> {
    let ell = |t: f64| -> f64 { a.iter().zip(c).map(|(&ai, &ci)| check_loss(ci - ai * t, r)).sum() };
    let mut knots: Vec<f64> = a
        .iter()
        .zip(c)
        .filter(|(ai, _)| **ai != 0.0)
        .map(|(ai, ci)| ci / ai)
        .collect();
    if knots.is_empty() {
        return Err(Error::Propriety("log posterior is flat along a coordinate".into()));
    }
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let vals: Vec<f64> = knots.iter().map(|&t| ell(t)).collect();
    let peak = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // Slopes of ℓ beyond the outermost knots.
    let slope = |far: f64| -> f64 {
        a.iter()
            .map(|&ai| {
                if ai == 0.0 {
                    0.0
                } else if (far * ai) < 0.0 {
                    // c − a t → +∞: ρ' = −r, dℓ/dt = a r.
                    ai * r
                } else {
                    -ai * (1.0 - r)
                }
            })
            .sum()
    };
    let left = slope(-1.0);
    let right = slope(1.0);
    if !(left > 0.0 && right < 0.0) {
        return Err(Error::Propriety(format!("tail slopes {left} (left) and {right} (right) do not decay")));
    }

    // Moments are accumulated about `origin` to limit cancellation.
    let origin = knots[vals.iter().position(|&v| v == peak).unwrap_or(0)];
    let mut m = [0.0_f64; 3];
    let shift = |t0: f64, raw: [f64; 3], scale: f64, m: &mut [f64; 3]| {
        // raw_j = ∫ s^j e^{ks} ds on the local variable s = t − t0.
        let d = t0 - origin;
        m[0] += scale * raw[0];
        m[1] += scale * (raw[1] + d * raw[0]);
        m[2] += scale * (raw[2] + 2.0 * d * raw[1] + d * d * raw[0]);
    };
    // Left tail: ∫_{-∞}^{0} e^{k s} s^j ds with k > 0.
    {
        let k = left;
        let raw = [1.0 / k, -1.0 / (k * k), 2.0 / (k * k * k)];
        shift(knots[0], raw, (vals[0] - peak).exp(), &mut m);
    }
    for w in 0..knots.len() - 1 {
        let (t0, t1) = (knots[w], knots[w + 1]);
        let (k, width) = ((vals[w + 1] - vals[w]) / (t1 - t0), t1 - t0);
        if k > 0.0 {
            // Integrate from the higher end so no factor exceeds one.
            let [u0, u1, u2] = exp_poly_moments(-k, width);
            let raw = [u0, width * u0 - u1, width * width * u0 - 2.0 * width * u1 + u2];
            shift(t0, raw, (vals[w + 1] - peak).exp(), &mut m);
        } else {
            shift(t0, exp_poly_moments(k, width), (vals[w] - peak).exp(), &mut m);
        }
    }
    {
        let k = -right;
        let raw = [1.0 / k, 1.0 / (k * k), 2.0 / (k * k * k)];
        shift(*knots.last().expect("nonempty"), raw, (vals[vals.len() - 1] - peak).exp(), &mut m);
    }
    let mean_rel = m[1] / m[0];
    Ok(LineMoments {
        log_mass: peak + m[0].ln(),
        mean: origin + mean_rel,
        second: m[2] / m[0] - mean_rel * mean_rel + (origin + mean_rel).powi(2),
    })
}

/// Posterior mean and variance of `β` under the flat prior, `p ≤ 2`.
pub fn quadrature_posterior_moments(model: &QuantileModel) -> Result<PosteriorMoments> {
    let (x, z, r) = (model.x(), model.z(), model.r());
    let m = model.m();
    match model.p() {
        1 => {
            let a: Vec<f64> = x.column(0).iter().copied().collect();
            let c: Vec<f64> = z.iter().copied().collect();
            let lm = line_moments(&a, &c, r)?;
            Ok(PosteriorMoments {
                mean: DVector::from_element(1, lm.mean),
                variance: DVector::from_element(1, lm.second - lm.mean * lm.mean),
            })
        }
        2 => {
            let a: Vec<f64> = x.column(0).iter().copied().collect();
            let inner = |b2: f64| -> Result<LineMoments> {
                let c: Vec<f64> = (0..m).map(|i| z[i] - x[(i, 1)] * b2).collect();
                line_moments(&a, &c, r)
            };
            // Centre the outer integral on the conditional peak of β₂.
            let a2: Vec<f64> = x.column(1).iter().copied().collect();
            let centre_line = line_moments(&a2, &z.iter().copied().collect::<Vec<_>>(), r)?;
            let centre = centre_line.mean;
            let scale = (centre_line.second - centre * centre).sqrt().max(1e-6);
            let reference = inner(centre)?.log_mass;
            let tol = Tolerance {
                abs: 1e-14,
                rel: 1e-11,
                max_intervals: 4000,
            };
            let failure = std::cell::RefCell::new(None::<String>);
            let moment = |f: &dyn Fn(f64, &LineMoments) -> f64| -> f64 {
                integrate_real_line(
                    |b2| match inner(b2) {
                        Ok(lm) => (lm.log_mass - reference).exp() * f(b2, &lm),
                        Err(e) => {
                            failure.borrow_mut().get_or_insert(e.to_string());
                            0.0
                        }
                    },
                    centre,
                    scale,
                    tol,
                )
                .map(|i| i.value)
                .unwrap_or(f64::NAN)
            };
            let z0 = moment(&|_, _| 1.0);
            let e1 = moment(&|_, lm| lm.mean) / z0;
            let e11 = moment(&|_, lm| lm.second) / z0;
            let e2 = moment(&|b2, _| b2) / z0;
            let e22 = moment(&|b2, _| b2 * b2) / z0;
            if let Some(msg) = failure.into_inner() {
                return Err(Error::Propriety(msg));
            }
            if ![z0, e1, e11, e2, e22].iter().all(|v| v.is_finite()) || !(z0 > 0.0) {
                return Err(Error::Propriety("outer integral did not converge".into()));
            }
            Ok(PosteriorMoments {
                mean: DVector::from_vec(vec![e1, e2]),
                variance: DVector::from_vec(vec![e11 - e1 * e1, e22 - e2 * e2]),
            })
        }
        p => Err(Error::parameter("p", p, "quadrature oracle supports p ≤ 2")),
    }
}

/// Posterior mean of `β` under the flat prior, `p ≤ 2`.
pub fn quadrature_posterior_mean(model: &QuantileModel) -> Result<DVector<f64>> {
    Ok(quadrature_posterior_moments(model)?.mean)
}
