//! Autocorrelation, effective sample size and trace summaries.

use rand::Rng;
use serde::Serialize;

use crate::distributions::RngStream;
use crate::{Error, Result};

fn centred(trace: &[f64]) -> (f64, Vec<f64>, f64) {
    let n = trace.len() as f64;
    let mean = trace.iter().sum::<f64>() / n;
    let c: Vec<f64> = trace.iter().map(|v| v - mean).collect();
    let c0 = c.iter().map(|v| v * v).sum::<f64>() / n;
    (mean, c, c0)
}

fn lag_product(c: &[f64], k: usize) -> f64 {
    c[..c.len() - k].iter().zip(&c[k..]).map(|(a, b)| a * b).sum::<f64>()
}

/// Biased sample autocorrelation `ρ̂_k = γ̂_k / γ̂_0` for `k = 0..=max_lag`.
///
/// A constant trace has no defined correlation; it gets `ρ̂_0 = 1` and
/// zeros elsewhere.
pub fn autocorrelation(trace: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if trace.len() <= 2 * max_lag || trace.len() < 2 {
        return Err(Error::parameter(
            "trace",
            trace.len(),
            format!("length must exceed 2 × max_lag = {}", 2 * max_lag),
        ));
    }
    let (_, c, c0) = centred(trace);
    let n = trace.len() as f64;
    let mut acf = vec![0.0; max_lag + 1];
    acf[0] = 1.0;
    if c0 > 0.0 {
        for (k, slot) in acf.iter_mut().enumerate().skip(1) {
            *slot = lag_product(&c, k) / n / c0;
        }
    }
    Ok(acf)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ess {
    pub value: f64,
    /// The trace was constant; `value` is then 1 regardless of length.
    pub degenerate: bool,
}

/// Effective sample size `n / τ̂` with `τ̂ = −1 + 2 Σ_{k≤K} (ρ̂_{2k} + ρ̂_{2k+1})`,
/// `K` the last index before a pair sum turns nonpositive. Capped at `n`.
pub fn effective_sample_size(trace: &[f64]) -> Result<Ess> {
    let n = trace.len();
    if n < 4 {
        return Err(Error::parameter("trace", n, "need at least 4 draws"));
    }
    let (_, c, c0) = centred(trace);
    if !(c0 > 0.0) {
        return Ok(Ess {
            value: 1.0,
            degenerate: true,
        });
    }
    let nf = n as f64;
    let rho = |k: usize| lag_product(&c, k) / nf / c0;
    let mut tau = -1.0;
    let mut k = 0;
    while 2 * k + 1 < n {
        let pair = rho(2 * k) + rho(2 * k + 1);
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        k += 1;
    }
    Ok(Ess {
        value: (nf / tau).min(nf),
        degenerate: false,
    })
}

/// Per-coordinate summary of a scalar trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceSummary {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub acf: Vec<f64>,
    pub ess: f64,
    pub degenerate: bool,
    /// Monte Carlo standard error of the mean, `√(variance / ess)`.
    pub mcse: f64,
}

pub fn summarize(trace: &[f64], max_lag: usize) -> Result<TraceSummary> {
    let acf = autocorrelation(trace, max_lag)?;
    let ess = effective_sample_size(trace)?;
    let (mean, _, c0) = centred(trace);
    let n = trace.len();
    let variance = c0 * n as f64 / (n - 1) as f64;
    Ok(TraceSummary {
        n,
        mean,
        variance,
        acf,
        ess: ess.value,
        degenerate: ess.degenerate,
        mcse: (variance / ess.value).sqrt(),
    })
}

/// Moving-block bootstrap standard error of `statistic(trace)`.
pub fn block_bootstrap_se<F>(
    trace: &[f64],
    statistic: F,
    block_len: usize,
    replicates: usize,
    rng: &mut RngStream,
) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let n = trace.len();
    if block_len == 0 || block_len > n {
        return Err(Error::parameter("block_len", block_len, format!("must lie in 1..={n}")));
    }
    if replicates < 2 {
        return Err(Error::parameter("replicates", replicates, "need at least 2"));
    }
    let starts = n - block_len + 1;
    let mut resample = Vec::with_capacity(n);
    let mut stats = Vec::with_capacity(replicates);
    for _ in 0..replicates {
        resample.clear();
        while resample.len() < n {
            let s = rng.random_range(0..starts);
            let take = block_len.min(n - resample.len());
            resample.extend_from_slice(&trace[s..s + take]);
        }
        stats.push(statistic(&resample)?);
    }
    let mean = stats.iter().sum::<f64>() / replicates as f64;
    let var = stats.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (replicates - 1) as f64;
    Ok(var.sqrt())
}
