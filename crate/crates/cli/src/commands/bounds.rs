use std::path::PathBuf;

use clap::{Args, ValueEnum};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use sandwich_core::bounds::{wls_uniform_check, empirical_sup_check, BoundReport, MARGIN_TOLERANCE};
use sandwich_core::distributions::RngStream;
use sandwich_core::quantreg::io::load_dataset;
use sandwich_core::quantreg::reference_dataset;

use crate::config::{load_document, relative_to};
use crate::output::{emit, with_path, Failure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Recursive bound against sampled coefficients for one `(x1, others)` instance.
    Instance,
    /// Uniform bound on weighted least-squares coefficients of a design.
    Design,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    /// TOML config file; its `[bounds]` section supplies defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Instance file with `x1 = [...]` and `others = [[...], ...]`.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Dataset CSV for design mode (defaults to the reference dataset).
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// JSON-lines destination (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
struct BoundsFileDoc {
    #[serde(default)]
    bounds: BoundsFile,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundsFile {
    mode: Option<Mode>,
    instance: Option<PathBuf>,
    data: Option<PathBuf>,
    samples: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct BoundsConfig {
    mode: Mode,
    instance: Option<PathBuf>,
    data: Option<PathBuf>,
    samples: usize,
    seed: u64,
    out: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    x1: Vec<f64>,
    #[serde(default)]
    others: Vec<Vec<f64>>,
}

fn resolve(args: BoundsArgs) -> Result<BoundsConfig, Failure> {
    let file = load_document::<BoundsFileDoc>(args.config.as_deref())?.bounds;
    let cfg = args.config.as_deref();
    let instance = args.instance.or_else(|| file.instance.map(|p| relative_to(cfg, p)));
    let mode = args
        .mode
        .or(file.mode)
        .unwrap_or(if instance.is_some() { Mode::Instance } else { Mode::Design });
    Ok(BoundsConfig {
        mode,
        instance,
        data: args.data.or_else(|| file.data.map(|p| relative_to(cfg, p))),
        samples: args.samples.or(file.samples).unwrap_or(100_000),
        seed: args.seed.or(file.seed).unwrap_or(1),
        out: args.out.or_else(|| file.out.map(|p| relative_to(cfg, p))),
    })
}

fn load_instance(path: &PathBuf) -> Result<(DVector<f64>, Vec<DVector<f64>>), Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let inst: InstanceFile = toml::from_str(&text).map_err(|e| {
        let line = e
            .span()
            .map(|s| format!(", line {}", text[..s.start.min(text.len())].matches('\n').count() + 1))
            .unwrap_or_default();
        Failure::Input(format!("{}{line}: {}", path.display(), e.message()))
    })?;
    if inst.x1.is_empty() || inst.others.iter().any(|v| v.len() != inst.x1.len()) {
        return Err(Failure::Input(format!(
            "{}: x1 must be nonempty and every vector in `others` must have its length",
            path.display()
        )));
    }
    Ok((
        DVector::from_vec(inst.x1),
        inst.others.into_iter().map(DVector::from_vec).collect(),
    ))
}

pub fn run(args: BoundsArgs) -> Result<(), Failure> {
    let config = resolve(args)?;
    let mut rng = RngStream::new(config.seed, 0);
    let report: BoundReport = match config.mode {
        Mode::Instance => {
            let path = config
                .instance
                .as_ref()
                .ok_or_else(|| Failure::Input("instance mode needs --instance".into()))?;
            let (x1, others) = load_instance(path)?;
            empirical_sup_check(&x1, &others, config.samples, &mut rng)?
        }
        Mode::Design => {
            let (x, z) = match &config.data {
                Some(p) => {
                    let d = load_dataset(p).map_err(with_path(p))?;
                    (d.x, d.z)
                }
                None => {
                    let m = reference_dataset();
                    (m.x().clone(), m.z().clone())
                }
            };
            wls_uniform_check(&x, &z, config.samples, &mut rng)?
        }
    };
    let record = serde_json::json!({
        "version": sandwich_core::VERSION,
        "command": "bounds",
        "seed": config.seed,
        "config": config,
        "report": report,
    });
    emit(config.out.as_deref(), &format!("{record}\n"))?;
    if report.margin < -MARGIN_TOLERANCE {
        return Err(Failure::Violation(format!(
            "sampled value {} exceeds the bound {} (margin {:e})",
            report.empirical_sup, report.recursive_bound, report.margin
        )));
    }
    Ok(())
}
