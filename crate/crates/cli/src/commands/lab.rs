use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use sandwich_core::record::KvRecord;
use sandwich_core::speclab::{
    build_group_r, check_shared_conditional, domination_report, load_lab, verify_svd_identities, verify_orbit_projection, GroupAction,
};

use crate::config::{load_document, relative_to};
use crate::output::{emit, with_path, Failure};

#[derive(Debug, Args)]
pub struct LabArgs {
    /// TOML config file; its `[lab]` section supplies defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Table file (`[table]`, optionally `[action]`).
    #[arg(long)]
    table: Option<PathBuf>,
    /// Separate file holding the `[action]` section. Without any action the
    /// middle step is the identity.
    #[arg(long)]
    action: Option<PathBuf>,
    /// Echoed for provenance; the lab is deterministic.
    #[arg(long)]
    seed: Option<u64>,
    /// Report destination (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
struct LabFileDoc {
    #[serde(default)]
    lab: LabFile,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct LabFile {
    table: Option<PathBuf>,
    action: Option<PathBuf>,
    seed: Option<u64>,
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct LabConfig {
    table: PathBuf,
    action: Option<PathBuf>,
    seed: u64,
    out: Option<PathBuf>,
}

fn resolve(args: LabArgs) -> Result<LabConfig, Failure> {
    let file = load_document::<LabFileDoc>(args.config.as_deref())?.lab;
    let cfg = args.config.as_deref();
    let table = args
        .table
        .or_else(|| file.table.map(|p| relative_to(cfg, p)))
        .ok_or_else(|| Failure::Input("no table given (use --table or `table` in the config)".into()))?;
    Ok(LabConfig {
        table,
        action: args.action.or_else(|| file.action.map(|p| relative_to(cfg, p))),
        seed: args.seed.or(file.seed).unwrap_or(0),
        out: args.out.or_else(|| file.out.map(|p| relative_to(cfg, p))),
    })
}

pub fn run(args: LabArgs) -> Result<(), Failure> {
    let config = resolve(args)?;
    let input = load_lab(&config.table).map_err(with_path(&config.table))?;
    let table = input
        .table
        .ok_or_else(|| Failure::Input(format!("{}: missing [table] section", config.table.display())))?;
    let mut action = input.action;
    if let Some(path) = &config.action {
        let extra = load_lab(path).map_err(with_path(path))?;
        action = Some(
            extra
                .action
                .ok_or_else(|| Failure::Input(format!("{}: missing [action] section", path.display())))?,
        );
    }
    let explicit_action = action.is_some();
    let action = action.unwrap_or_else(|| GroupAction::trivial(table.ny()));
    if action.n_states() != table.ny() {
        return Err(Failure::Input(format!(
            "action permutes {} states but the table has {} Y-states",
            action.n_states(),
            table.ny()
        )));
    }

    let r = build_group_r(table.marginal_y(), &action)?;
    let report = domination_report(&table, &r)?;
    let svd_check = verify_svd_identities(&table)?;
    let orbit_check = verify_orbit_projection(table.marginal_y(), &action)?;
    let shared = check_shared_conditional(&table, &action)?;

    let mut violations = report.violations();
    if !svd_check.passed {
        violations.push(format!("singular-value identities fail (residual {:e})", svd_check.max_residual()));
    }
    if !orbit_check.passed {
        violations.push("group kernel is not the orbit projection".into());
    }
    // A conditional that varies along orbits must lower the trace.
    if !shared && report.trace_kstar >= report.trace_k - 1e-12 {
        violations.push("conditional varies on orbits but the trace did not drop".into());
    }

    let mut rec = KvRecord::new();
    rec.push("version", sandwich_core::VERSION)
        .push("command", "lab")
        .push("seed", config.seed)
        .push("config.table", config.table.display())
        .push("config.action", config.action.as_ref().map_or(String::new(), |p| p.display().to_string()))
        .push("config.seed", config.seed)
        .push("config.out", config.out.as_ref().map_or(String::new(), |p| p.display().to_string()))
        .push("table.rows", table.nx())
        .push("table.cols", table.ny())
        .push("action.order", action.order())
        .push("action.orbits", action.orbit_count())
        .push("action.explicit", explicit_action);
    for (k, v) in report.to_record().entries() {
        rec.push(k.clone(), v);
    }
    rec.push("reducible", report.reducible())
        .push("svd.max_residual", svd_check.max_residual())
        .push("orbit_projection.passed", orbit_check.passed)
        .push("shared_conditional", shared)
        .push("violations", violations.len());
    for (i, v) in violations.iter().enumerate() {
        rec.push(format!("violation.{}", i + 1), v);
    }
    emit(config.out.as_deref(), &rec.to_string())?;
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Failure::Violation(violations.join("; ")))
    }
}
