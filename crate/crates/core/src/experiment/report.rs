use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Method, Report, RunMetrics};
use crate::{Error, Result};

pub const CSV_HEADER: &str = "method,n_b,err,t_basis_s,t_dg_s,n_tot_iter,dofs";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(Error::Config(format!("unknown report format {s:?}"))),
        }
    }
}

fn sci(x: f64) -> String {
    format!("{x:.5e}")
}

pub fn to_csv(rows: &[RunMetrics]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.method.name(),
            r.n_b,
            sci(r.err),
            sci(r.t_basis_s),
            sci(r.t_dg_s),
            sci(r.n_tot_iter),
            r.dofs
        ));
    }
    out
}

pub fn parse_csv(text: &str) -> Result<Vec<RunMetrics>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Config("missing or wrong CSV header".into()));
    }
    let bad = |line: &str| Error::Config(format!("malformed CSV row {line:?}"));
    lines
        .filter(|l| !l.is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(bad(line));
            }
            let method: Method = serde_json::from_value(serde_json::Value::String(f[0].into()))
                .map_err(|_| bad(line))?;
            let float = |s: &str| s.parse::<f64>().map_err(|_| bad(line));
            Ok(RunMetrics {
                method,
                n_b: f[1].parse().map_err(|_| bad(line))?,
                err: float(f[2])?,
                t_basis_s: float(f[3])?,
                t_dg_s: float(f[4])?,
                n_tot_iter: float(f[5])?,
                dofs: f[6].parse().map_err(|_| bad(line))?,
            })
        })
        .collect()
}

pub fn to_json(report: &Report) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)?)
}

/// Writes the report to `path` in the requested format.
pub fn emit_report(report: &Report, format: ReportFormat, path: &Path) -> Result<()> {
    if report.rows.is_empty() {
        return Err(Error::Config("empty report".into()));
    }
    let text = match format {
        ReportFormat::Csv => to_csv(&report.rows),
        ReportFormat::Json => to_json(report)?,
    };
    std::fs::write(path, text)?;
    Ok(())
}
