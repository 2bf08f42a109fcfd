use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use gcalb::experiment::{
    emit_report, run_experiment, to_csv, to_json, ExperimentConfig, ExperimentId, Method,
    ReportFormat,
};
use log::error;

/// Runs one experiment sweep and writes a CSV or JSON report.
#[derive(Debug, Parser)]
#[command(name = "gcalb", version, about)]
struct Args {
    /// TOML configuration file.
    #[arg(short, long)]
    config: Option<PathBuf>,

    #[arg(long, value_parser = parse_experiment)]
    experiment: Option<ExperimentId>,

    #[arg(long, value_parser = parse_method)]
    method: Option<Method>,

    /// Comma-separated sweep values (basis functions per element, or grid
    /// points per dimension for planewave).
    #[arg(long, value_delimiter = ',')]
    nb: Option<Vec<usize>>,

    #[arg(long)]
    seed: Option<u64>,

    /// Output file; the report goes to stdout when absent.
    #[arg(short, long)]
    out: Option<PathBuf>,

    #[arg(long, default_value = "csv")]
    format: ReportFormat,

    /// Deterministic serial execution.
    #[arg(long)]
    serial: bool,

    /// Run sweep entries in parallel.
    #[arg(long)]
    parallel_sweep: bool,

    /// Extra `key.path=value` overrides applied after the file.
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn parse_experiment(s: &str) -> Result<ExperimentId, String> {
    serde_json::from_value(serde_json::Value::String(s.into()))
        .map_err(|_| format!("unknown experiment {s:?}"))
}

fn parse_method(s: &str) -> Result<Method, String> {
    serde_json::from_value(serde_json::Value::String(s.into()))
        .map_err(|_| format!("unknown method {s:?}"))
}

fn build_config(args: &Args) -> gcalb::Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_toml(&std::fs::read_to_string(path)?)?,
        None => ExperimentConfig::default(),
    };
    for kv in &args.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| gcalb::Error::Config(format!("override {kv:?} is not KEY=VALUE")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(e) = args.experiment {
        cfg.experiment = e;
    }
    if let Some(m) = args.method {
        cfg.method = m;
    }
    if let Some(nb) = &args.nb {
        cfg.nb = nb.clone();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if args.out.is_some() {
        cfg.out = args.out.clone();
    }
    cfg.serial |= args.serial;
    cfg.parallel_sweep |= args.parallel_sweep;
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let cfg = match build_config(&args) {
        Ok(c) => c,
        Err(e) => {
            error!("{e}");
            return ExitCode::from(1);
        }
    };
    let report = match run_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => {
            error!("{e}");
            return ExitCode::from(if e.is_non_convergence() { 2 } else { 1 });
        }
    };
    let written = match &cfg.out {
        Some(path) => emit_report(&report, args.format, path),
        None => match args.format {
            ReportFormat::Csv => {
                print!("{}", to_csv(&report.rows));
                Ok(())
            }
            ReportFormat::Json => to_json(&report).map(|s| println!("{s}")),
        },
    };
    if let Err(e) = written {
        error!("{e}");
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
