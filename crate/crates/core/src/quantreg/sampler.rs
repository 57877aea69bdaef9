use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;

use super::model::QuantileModel;
use crate::distributions::{sample_gig, sample_mvn_precision, RngStream};
use crate::{Error, Result};

pub const DEFAULT_BURN_IN: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub beta: DVector<f64>,
    pub y: DVector<f64>,
}

impl ChainState {
    /// `y ≡ 1` and `β` at the corresponding conditional mean.
    pub fn initial(model: &QuantileModel) -> Result<Self> {
        let y = DVector::from_element(model.m(), 1.0);
        let beta = model.beta_conditional(&y)?.mean;
        Ok(Self { beta, y })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChainKind {
    Da,
    Sandwich,
}

impl fmt::Display for ChainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChainKind::Da => "da",
            ChainKind::Sandwich => "sandwich",
        })
    }
}

impl FromStr for ChainKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "da" => Ok(ChainKind::Da),
            "sandwich" => Ok(ChainKind::Sandwich),
            _ => Err(Error::parameter("kind", s, "expected `da` or `sandwich`")),
        }
    }
}

fn draw_latent(model: &QuantileModel, beta: &DVector<f64>, rng: &mut RngStream) -> Result<DVector<f64>> {
    let mut y = DVector::zeros(model.m());
    for i in 0..model.m() {
        // Guard against a gamma draw underflowing to zero when b = 0.
        y[i] = sample_gig(rng, model.y_conditional_params(beta, i))?.max(f64::MIN_POSITIVE);
    }
    Ok(y)
}

fn draw_beta(model: &QuantileModel, y: &DVector<f64>, rng: &mut RngStream) -> Result<DVector<f64>> {
    let bc = model.beta_conditional(y)?;
    Ok(sample_mvn_precision(rng, &bc.mean, &bc.precision_chol))
}

/// One DA iteration: `y ~ π(y | β, z)` then `β ~ π(β | y, z)`.
pub fn da_step(model: &QuantileModel, state: &ChainState, rng: &mut RngStream) -> Result<ChainState> {
    let y = draw_latent(model, &state.beta, rng)?;
    let beta = draw_beta(model, &y, rng)?;
    Ok(ChainState { beta, y })
}

/// One sandwich iteration: `y ~ π(y | β, z)`, `g` from the middle-step law,
/// `y ← g y`, then `β ~ π(β | y, z)`.
pub fn sandwich_step(model: &QuantileModel, state: &ChainState, rng: &mut RngStream) -> Result<ChainState> {
    sandwich_step_with(model, state, rng, None)
}

/// [`sandwich_step`] with an optional fixed `g`. With `Some(1.0)` no middle
/// draw is made and the result is bit-identical to [`da_step`].
pub fn sandwich_step_with(
    model: &QuantileModel,
    state: &ChainState,
    rng: &mut RngStream,
    forced_g: Option<f64>,
) -> Result<ChainState> {
    if !model.is_median() {
        return Err(Error::UnsupportedQuantile(model.r()));
    }
    let y = draw_latent(model, &state.beta, rng)?;
    let g = match forced_g {
        Some(g) => g,
        None => sample_gig(rng, model.sandwich_middle_params(&y)?)?,
    };
    let y = if g == 1.0 { y } else { (y * g).map(|v| v.max(f64::MIN_POSITIVE)) };
    let beta = draw_beta(model, &y, rng)?;
    Ok(ChainState { beta, y })
}

#[derive(Debug, Clone)]
pub struct ChainConfig {
    pub kind: ChainKind,
    /// Retained draws after burn-in and thinning.
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub keep_latent: bool,
    pub seed: u64,
}

impl ChainConfig {
    pub fn new(kind: ChainKind, iterations: usize, seed: u64) -> Self {
        Self {
            kind,
            iterations,
            burn_in: DEFAULT_BURN_IN,
            thin: 1,
            keep_latent: false,
            seed,
        }
    }
}

/// Retained draws of one chain plus what is needed to regenerate them.
#[derive(Debug, Clone)]
pub struct ChainTrace {
    pub kind: ChainKind,
    pub seed: u64,
    pub stream_id: u64,
    pub fingerprint: String,
    /// Iteration number (1-based, counting burn-in) of each retained draw.
    pub iterations: Vec<usize>,
    pub beta: Vec<DVector<f64>>,
    pub latent: Option<Vec<DVector<f64>>>,
}

impl ChainTrace {
    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }

    /// The `j`-th coefficient across draws.
    pub fn coordinate(&self, j: usize) -> Vec<f64> {
        self.beta.iter().map(|b| b[j]).collect()
    }
}

pub fn run_chain(model: &QuantileModel, config: &ChainConfig, stream_id: u64) -> Result<ChainTrace> {
    if config.thin == 0 {
        return Err(Error::parameter("thin", 0, "must be at least 1"));
    }
    if config.kind == ChainKind::Sandwich && !model.is_median() {
        return Err(Error::UnsupportedQuantile(model.r()));
    }
    let mut rng = RngStream::new(config.seed, stream_id);
    let mut state = ChainState::initial(model)?;
    let step = match config.kind {
        ChainKind::Da => da_step,
        ChainKind::Sandwich => sandwich_step,
    };
    let mut iterations = Vec::with_capacity(config.iterations);
    let mut beta = Vec::with_capacity(config.iterations);
    let mut latent = config.keep_latent.then(|| Vec::with_capacity(config.iterations));
    let total = config.burn_in + config.iterations * config.thin;
    for it in 1..=total {
        state = step(model, &state, &mut rng)?;
        if it > config.burn_in && (it - config.burn_in).is_multiple_of(config.thin) {
            iterations.push(it);
            beta.push(state.beta.clone());
            if let Some(l) = latent.as_mut() {
                l.push(state.y.clone());
            }
        }
    }
    Ok(ChainTrace {
        kind: config.kind,
        seed: config.seed,
        stream_id,
        fingerprint: model.fingerprint(),
        iterations,
        beta,
        latent,
    })
}

/// Runs `chains` independent chains on streams `0..chains`, one thread each.
pub fn run_chains(model: &QuantileModel, config: &ChainConfig, chains: usize) -> Result<Vec<ChainTrace>> {
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..chains as u64)
            .map(|id| s.spawn(move || run_chain(model, config, id)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("chain thread panicked"))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantreg::model::reference_dataset;
    use nalgebra::DMatrix;

    #[test]
    fn forced_identity_scale_matches_da_bitwise() {
        let model = reference_dataset();
        let state = ChainState::initial(&model).unwrap();
        let mut r1 = RngStream::new(5, 3);
        let mut r2 = RngStream::new(5, 3);
        let (mut s1, mut s2) = (state.clone(), state);
        for _ in 0..50 {
            s1 = da_step(&model, &s1, &mut r1).unwrap();
            s2 = sandwich_step_with(&model, &s2, &mut r2, Some(1.0)).unwrap();
            assert_eq!(s1, s2);
        }
    }

    #[test]
    fn chains_are_reproducible_and_streams_differ() {
        let model = reference_dataset();
        let mut cfg = ChainConfig::new(ChainKind::Sandwich, 200, 42);
        cfg.burn_in = 10;
        let a = run_chains(&model, &cfg, 2).unwrap();
        let b = run_chains(&model, &cfg, 2).unwrap();
        assert_eq!(a[0].beta, b[0].beta);
        assert_eq!(a[1].beta, b[1].beta);
        assert_ne!(a[0].beta, a[1].beta);
    }

    #[test]
    fn thinning_and_burn_in_bookkeeping() {
        let model = reference_dataset();
        let mut cfg = ChainConfig::new(ChainKind::Da, 5, 1);
        cfg.burn_in = 7;
        cfg.thin = 3;
        cfg.keep_latent = true;
        let t = run_chain(&model, &cfg, 0).unwrap();
        assert_eq!(t.iterations, vec![10, 13, 16, 19, 22]);
        assert_eq!(t.latent.as_ref().unwrap().len(), 5);
        assert!(t.latent.unwrap().iter().all(|y| y.iter().all(|&v| v > 0.0)));
    }

    #[test]
    fn sandwich_rejects_other_quantiles() {
        let model = QuantileModel::new(reference_dataset().x().clone(), reference_dataset().z().clone(), 0.25).unwrap();
        let cfg = ChainConfig::new(ChainKind::Sandwich, 10, 1);
        assert!(matches!(run_chain(&model, &cfg, 0), Err(Error::UnsupportedQuantile(_))));
        let cfg = ChainConfig::new(ChainKind::Da, 10, 1);
        assert!(run_chain(&model, &cfg, 0).is_ok());
    }

    #[test]
    fn concentrates_on_exact_fit() {
        let x = DMatrix::from_fn(40, 1, |i, _| 1.0 + (i % 7) as f64);
        let z = x.column(0).map(|v| 0.8 * v + 1e-4 * ((v * 13.0).sin()));
        let model = QuantileModel::new(x, z, 0.5).unwrap();
        let mut cfg = ChainConfig::new(ChainKind::Da, 500, 9);
        cfg.burn_in = 100;
        let t = run_chain(&model, &cfg, 0).unwrap();
        let mean = t.coordinate(0).iter().sum::<f64>() / t.len() as f64;
        assert!((mean - 0.8).abs() < 1e-2, "{mean}");
    }
}
