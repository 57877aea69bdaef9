//! Dataset and trace files.
//!
//! Datasets are CSV with a header row; every column but the last is a
//! covariate (include a column of ones for an intercept) and the last is
//! the response. Traces are CSV with `iteration,beta_1..beta_p` and, when
//! latents are kept, `y_1..y_m`.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::sampler::ChainTrace;
use crate::diagnostics::{summarize, TraceSummary};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct Dataset {
    pub names: Vec<String>,
    pub x: DMatrix<f64>,
    pub z: DVector<f64>,
}

pub fn read_dataset<R: Read>(reader: R, context: &str) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let parse_err = |line: Option<u64>, message: String| Error::Parse {
        context: match line {
            Some(l) => format!("{context}, line {l}"),
            None => context.to_string(),
        },
        message,
    };
    let names: Vec<String> = rdr
        .headers()
        .map_err(|e| parse_err(Some(1), e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if names.len() < 2 {
        return Err(parse_err(Some(1), "need at least one covariate column and a response column".into()));
    }
    let cols = names.len();
    let mut values = Vec::new();
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse_err(e.position().map(|p| p.line()), e.to_string()))?;
        let line = rec.position().map(|p| p.line());
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(line, format!("column `{}`: `{field}` is not a number", names[j])))?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("column `{}`: value must be finite", names[j])));
            }
            values.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(parse_err(None, "no data rows".into()));
    }
    let all = DMatrix::from_row_slice(rows, cols, &values);
    Ok(Dataset {
        names,
        x: all.columns(0, cols - 1).into_owned(),
        z: all.column(cols - 1).into_owned(),
    })
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    read_dataset(file, &path.display().to_string())
}

pub fn write_dataset<W: Write>(writer: W, data: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(e.into());
    w.write_record(&data.names).map_err(io)?;
    for i in 0..data.z.len() {
        let mut row: Vec<String> = data.x.row(i).iter().map(|v| v.to_string()).collect();
        row.push(data.z[i].to_string());
        w.write_record(&row).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes one row per retained draw. Floats use shortest round-trip form.
pub fn write_trace<W: Write>(writer: W, trace: &ChainTrace) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(e.into());
    let p = trace.beta.first().map_or(0, |b| b.len());
    let m = trace.latent.as_ref().and_then(|l| l.first()).map_or(0, |y| y.len());
    let mut header = vec!["iteration".to_string()];
    header.extend((1..=p).map(|j| format!("beta_{j}")));
    header.extend((1..=m).map(|i| format!("y_{i}")));
    w.write_record(&header).map_err(io)?;
    for (k, it) in trace.iterations.iter().enumerate() {
        let mut row = vec![it.to_string()];
        row.extend(trace.beta[k].iter().map(|v| v.to_string()));
        if let Some(l) = &trace.latent {
            row.extend(l[k].iter().map(|v| v.to_string()));
        }
        w.write_record(&row).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainSummary {
    pub kind: String,
    pub seed: u64,
    pub stream_id: u64,
    pub fingerprint: String,
    pub draws: usize,
    pub coordinates: Vec<TraceSummary>,
}

pub fn summarize_chain(trace: &ChainTrace, max_lag: usize) -> Result<ChainSummary> {
    let p = trace.beta.first().map_or(0, |b| b.len());
    let coordinates = (0..p)
        .map(|j| summarize(&trace.coordinate(j), max_lag))
        .collect::<Result<Vec<_>>>()?;
    Ok(ChainSummary {
        kind: trace.kind.to_string(),
        seed: trace.seed,
        stream_id: trace.stream_id,
        fingerprint: trace.fingerprint.clone(),
        draws: trace.len(),
        coordinates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantreg::{reference_dataset, run_chain, ChainConfig, ChainKind};

    #[test]
    fn dataset_round_trip() {
        let model = reference_dataset();
        let data = Dataset {
            names: vec!["x".into(), "z".into()],
            x: model.x().clone(),
            z: model.z().clone(),
        };
        let mut buf = Vec::new();
        write_dataset(&mut buf, &data).unwrap();
        let back = read_dataset(buf.as_slice(), "mem").unwrap();
        assert_eq!(back.x, data.x);
        assert_eq!(back.z, data.z);
    }

    #[test]
    fn bad_cell_reports_line() {
        let text = "x,z\n1,2\n3,abc\n";
        let err = read_dataset(text.as_bytes(), "d.csv").unwrap_err().to_string();
        assert!(err.contains("d.csv, line 3") && err.contains("abc"), "{err}");
    }

    #[test]
    fn trace_csv_layout() {
        let model = reference_dataset();
        let mut cfg = ChainConfig::new(ChainKind::Da, 3, 1);
        cfg.burn_in = 2;
        cfg.keep_latent = true;
        let t = run_chain(&model, &cfg, 0).unwrap();
        let mut buf = Vec::new();
        write_trace(&mut buf, &t).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("iteration,beta_1,y_1,"));
        assert_eq!(lines[1].split(',').count(), 12);
        let b: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(b.to_bits(), t.beta[0][0].to_bits());
    }
}
