use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use sandwich_core::quantreg::io::{load_dataset, summarize_chain, write_trace};
use sandwich_core::quantreg::{quadrature_posterior_moments, reference_dataset, run_chains, ChainConfig, ChainKind, QuantileModel};

use crate::config::{load_document, relative_to};
use crate::output::{emit, warn, with_path, Failure};

#[derive(Debug, Args)]
pub struct QrArgs {
    /// TOML config file; its `[qr]` section supplies defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV dataset with header; covariates then response. Defaults to the
    /// built-in ten-observation reference dataset.
    #[arg(long)]
    data: Option<PathBuf>,
    /// `da` or `sandwich`.
    #[arg(long)]
    kind: Option<String>,
    /// Target quantile in (0, 1).
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Independent chains, one RNG stream each.
    #[arg(long)]
    chains: Option<usize>,
    /// Retained draws per chain.
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    burnin: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    /// Largest autocorrelation lag in the summary.
    #[arg(long)]
    max_lag: Option<usize>,
    /// Also write the latent scales to the trace files.
    #[arg(long)]
    write_latent: bool,
    /// Output directory for `trace_<chain>.csv` and `summary.jsonl`; without
    /// it only the summary is printed.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
struct QrFileDoc {
    #[serde(default)]
    qr: QrFile,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct QrFile {
    data: Option<PathBuf>,
    kind: Option<String>,
    r: Option<f64>,
    seed: Option<u64>,
    chains: Option<usize>,
    iters: Option<usize>,
    burnin: Option<usize>,
    thin: Option<usize>,
    max_lag: Option<usize>,
    write_latent: Option<bool>,
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
struct QrConfig {
    data: Option<PathBuf>,
    kind: String,
    r: f64,
    seed: u64,
    chains: usize,
    iters: usize,
    burnin: usize,
    thin: usize,
    max_lag: usize,
    write_latent: bool,
    out: Option<PathBuf>,
}

fn resolve(args: QrArgs) -> Result<QrConfig, Failure> {
    let file = load_document::<QrFileDoc>(args.config.as_deref())?.qr;
    let cfg = args.config.as_deref();
    let config = QrConfig {
        data: args.data.or_else(|| file.data.map(|p| relative_to(cfg, p))),
        kind: args.kind.or(file.kind).unwrap_or_else(|| "da".into()).to_ascii_lowercase(),
        r: args.r.or(file.r).unwrap_or(0.5),
        seed: args.seed.or(file.seed).unwrap_or(1),
        chains: args.chains.or(file.chains).unwrap_or(1),
        iters: args.iters.or(file.iters).unwrap_or(10_000),
        burnin: args.burnin.or(file.burnin).unwrap_or(sandwich_core::quantreg::DEFAULT_BURN_IN),
        thin: args.thin.or(file.thin).unwrap_or(1),
        max_lag: args.max_lag.or(file.max_lag).unwrap_or(50),
        write_latent: args.write_latent || file.write_latent.unwrap_or(false),
        out: args.out.or_else(|| file.out.map(|p| relative_to(cfg, p))),
    };
    if config.chains == 0 {
        return Err(Failure::Input("--chains must be at least 1".into()));
    }
    if config.iters <= 2 * config.max_lag {
        return Err(Failure::Input(format!(
            "--iters ({}) must exceed 2 × --max-lag ({})",
            config.iters, config.max_lag
        )));
    }
    Ok(config)
}

fn model_for(config: &QrConfig) -> Result<QuantileModel, Failure> {
    match &config.data {
        None => Ok(QuantileModel::new(reference_dataset().x().clone(), reference_dataset().z().clone(), config.r)?),
        Some(path) => {
            let data = load_dataset(path).map_err(with_path(path))?;
            QuantileModel::new(data.x, data.z, config.r)
                .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
        }
    }
}

pub fn run(args: QrArgs) -> Result<(), Failure> {
    let config = resolve(args)?;
    let kind: ChainKind = config.kind.parse()?;
    let model = model_for(&config)?;
    if kind == ChainKind::Sandwich && !model.is_median() {
        return Err(sandwich_core::Error::UnsupportedQuantile(config.r).into());
    }
    if !model.is_median() {
        warn(&format!(
            "r = {}: posterior propriety is only established for r = 1/2; treat results as unchecked",
            config.r
        ));
    }

    let chain_config = ChainConfig {
        kind,
        iterations: config.iters,
        burn_in: config.burnin,
        thin: config.thin,
        keep_latent: config.write_latent,
        seed: config.seed,
    };
    let traces = run_chains(&model, &chain_config, config.chains)?;

    let oracle = if model.p() <= 2 {
        quadrature_posterior_moments(&model).ok()
    } else {
        None
    };
    let mut lines = String::new();
    for trace in &traces {
        let summary = summarize_chain(trace, config.max_lag)?;
        let record = serde_json::json!({
            "version": sandwich_core::VERSION,
            "command": "qr",
            "seed": config.seed,
            "config": config,
            "chain": summary,
        });
        lines.push_str(&record.to_string());
        lines.push('\n');
    }
    if let Some(o) = oracle {
        let record = serde_json::json!({
            "version": sandwich_core::VERSION,
            "command": "qr",
            "seed": config.seed,
            "config": config,
            "quadrature": { "mean": o.mean.as_slice(), "variance": o.variance.as_slice() },
        });
        lines.push_str(&record.to_string());
        lines.push('\n');
    }

    match &config.out {
        None => emit(None, &lines)?,
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))?;
            for trace in &traces {
                let path = dir.join(format!("trace_{}.csv", trace.stream_id));
                let file = File::create(&path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
                write_trace(BufWriter::new(file), trace)?;
            }
            emit(Some(&dir.join("summary.jsonl")), &lines)?;
        }
    }
    Ok(())
}
