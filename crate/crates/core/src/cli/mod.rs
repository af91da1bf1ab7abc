//! Job runner behind the `optoent` binary: config ingestion, single points,
//! sweeps, convergence scans, mode extraction, noise fitting and the oracle
//! self-check. Each run writes `records.jsonl`, `summary.json` and, where
//! meaningful, CSV tables into the output directory.

mod cache;
pub mod config;
pub mod job;
pub mod output;

use std::collections::HashMap;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::json;

pub use config::{JobConfig, Task};
pub use job::{AxisValue, SweepRecord};

use crate::covariance::Partition;
use crate::entanglement::{convergence_scan, AnalysisOptions};
use crate::error::{Error, Result};
use crate::oracles::self_check;
use crate::spectra::{fit_noise_model, read_psd_csv};
use job::{EvalOptions, Point};

#[derive(Debug, Parser)]
#[command(name = "optoent", version, about = "Stationary optomechanical entanglement")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML job file; built-in aLIGO defaults when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Recompute even when cached results exist.
    #[arg(long, global = true)]
    pub force: bool,
    /// Time bin in seconds.
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    /// Sampled duration in seconds.
    #[arg(long, global = true)]
    pub duration: Option<f64>,
    /// traced, full or adiabatic.
    #[arg(long, global = true)]
    pub partition: Option<String>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    Negativity,
    Sweep,
    Convergence,
    Mode,
    Fit,
    SelfCheck,
}

impl Command {
    fn task(self) -> Task {
        match self {
            Command::Negativity => Task::Negativity,
            Command::Sweep => Task::Sweep,
            Command::Convergence => Task::Convergence,
            Command::Mode => Task::Mode,
            Command::Fit => Task::Fit,
            Command::SelfCheck => Task::SelfCheck,
        }
    }
}

impl Cli {
    /// Effective config: file (or defaults) with command-line overrides.
    pub fn job_config(&self) -> Result<JobConfig> {
        let mut c = match &self.config {
            Some(p) => JobConfig::load(p)?,
            None => JobConfig::default(),
        };
        c.task = self.command.task();
        if let Some(o) = &self.out {
            c.out = o.clone();
        }
        if let Some(w) = self.workers {
            c.workers = w;
        }
        if let Some(dt) = self.dt {
            c.grid.dt = dt;
        }
        if let Some(d) = self.duration {
            c.grid.duration = d;
        }
        if let Some(p) = &self.partition {
            c.partition = Partition::parse(p)?;
        }
        Ok(c)
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub records: Vec<SweepRecord>,
    pub summary: serde_json::Value,
    /// True when the task produced no usable result.
    pub failed: bool,
}

fn echo(config: &JobConfig) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(config)?)
}

fn job_hash(config: &JobConfig) -> Result<String> {
    use sha2::{Digest, Sha256};
    let mut c = config.clone();
    c.workers = 1;
    c.out = PathBuf::new();
    Ok(hex::encode(Sha256::digest(serde_json::to_string(&c)?.as_bytes())))
}

/// Executes the configured task and writes its artifacts under `config.out`.
pub fn run(config: &JobConfig, force: bool) -> Result<RunOutcome> {
    config.validate()?;
    let out = &config.out;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let outcome = match config.task {
        Task::SelfCheck => run_self_check(config)?,
        Task::Fit => run_fit(config)?,
        Task::Negativity | Task::Mode => run_single(config, force)?,
        Task::Sweep => run_sweep(config, force)?,
        Task::Convergence => run_convergence(config, force)?,
    };
    output::write_summary(&out.join("summary.json"), outcome.summary.clone())?;
    Ok(outcome)
}

fn counts(records: &[SweepRecord]) -> serde_json::Value {
    let mut m: HashMap<&str, usize> = HashMap::new();
    for r in records {
        let k = r.verdict.map(|v| v.label()).unwrap_or("failed");
        *m.entry(k).or_default() += 1;
    }
    let mut keys: Vec<_> = m.into_iter().collect();
    keys.sort();
    serde_json::Value::Object(keys.into_iter().map(|(k, v)| (k.to_string(), json!(v))).collect())
}

fn points_run(
    config: &JobConfig,
    points: &[Point],
    force: bool,
    cache: bool,
    analysis: AnalysisOptions,
) -> Result<Vec<(SweepRecord, Option<crate::entanglement::EntanglementReport>)>> {
    let records_path = config.out.join("records.jsonl");
    let previous = if force { HashMap::new() } else { output::read_records(&records_path)? };
    let cache_dir = config.out.join("cache");
    let opts = EvalOptions {
        cache_dir: cache.then_some(cache_dir.as_path()),
        force,
        analysis,
    };
    let results = job::run_points(points, config.workers, &previous, &opts)?;
    let records: Vec<SweepRecord> = results.iter().map(|r| r.0.clone()).collect();
    output::write_records(&records_path, &records)?;
    Ok(results)
}

fn run_single(config: &JobConfig, force: bool) -> Result<RunOutcome> {
    let extract = config.task == Task::Mode;
    let points = vec![Point {
        index: 0,
        axes: Vec::new(),
        config: config.clone(),
    }];
    let mut results = points_run(config, &points, force, true, AnalysisOptions { extract_mode: extract })?;
    let (rec, report) = results.remove(0);
    if let Some(mode) = report.as_ref().and_then(|r| r.mode.as_ref()) {
        output::write_mode_table(&config.out.join("mode.csv"), mode)?;
    }
    let fit = report.as_ref().and_then(|r| r.fit.clone());
    let mut summary = json!({
        "task": config.task,
        "job_hash": job_hash(config)?,
        "config": echo(config)?,
        "record": rec,
    });
    if let Some(rep) = &report {
        summary["below_one"] = json!(rep.below_one);
        summary["symplectic_route"] = json!(rep.symplectic_route);
    }
    if extract {
        summary["mode_fit"] = json!(fit);
        if report.as_ref().is_some_and(|r| r.mode.is_none()) {
            summary["mode_note"] = json!("no negative PPT eigenvalue above the numerical threshold");
        }
    }
    Ok(RunOutcome {
        failed: !rec.ok(),
        records: vec![rec],
        summary,
    })
}

fn run_sweep(config: &JobConfig, force: bool) -> Result<RunOutcome> {
    let points = job::expand(config)?;
    let results = points_run(config, &points, force, config.sweep.cache_covariance, AnalysisOptions::default())?;
    let records: Vec<SweepRecord> = results.into_iter().map(|r| r.0).collect();
    output::write_line_table(&config.out.join("line.csv"), &records)?;
    if config.sweep.axes.len() == 2 {
        output::write_contour_table(&config.out.join("contour.csv"), &records)?;
    }
    let summary = json!({
        "task": config.task,
        "job_hash": job_hash(config)?,
        "config": echo(config)?,
        "counts": counts(&records),
        "records": records,
    });
    Ok(RunOutcome {
        failed: records.iter().all(|r| !r.ok()),
        records,
        summary,
    })
}

fn run_convergence(config: &JobConfig, force: bool) -> Result<RunOutcome> {
    let mut cfg = config.clone();
    cfg.sweep.axes = vec![config::Axis {
        name: "dt".into(),
        values: config.convergence.dts.clone(),
        log_range: None,
        points: None,
    }];
    let points = job::expand(&cfg)?;
    let results = points_run(config, &points, force, false, AnalysisOptions::default())?;
    let records: Vec<SweepRecord> = results.into_iter().map(|r| r.0).collect();
    let by_dt: HashMap<u64, &SweepRecord> = records.iter().map(|r| (r.grid.dt.to_bits(), r)).collect();
    let scan = convergence_scan(&config.convergence.dts, |dt| {
        let r = by_dt[&dt.to_bits()];
        match (r.lambda_b, r.lambda_n, &r.error) {
            (Some(b), Some(n), None) => Ok((b, n)),
            (_, _, e) => Err(Error::Integration(e.clone().unwrap_or_default())),
        }
    });
    output::write_line_table(&config.out.join("line.csv"), &records)?;
    let summary = json!({
        "task": config.task,
        "job_hash": job_hash(config)?,
        "config": echo(config)?,
        "converged": scan.converged,
        "scan": scan,
        "records": records,
    });
    Ok(RunOutcome {
        failed: records.iter().all(|r| !r.ok()),
        records,
        summary,
    })
}

fn run_fit(config: &JobConfig) -> Result<RunOutcome> {
    let path = config.fit.csv.as_ref().ok_or_else(|| Error::Config("fit needs [fit] csv".into()))?;
    let table = read_psd_csv(path)?;
    let (f, s) = table.samples();
    let report = fit_noise_model(f, s, config.fit.template)?;
    let summary = json!({
        "task": config.task,
        "job_hash": job_hash(config)?,
        "config": echo(config)?,
        "fit": report,
        "model": report.model,
    });
    Ok(RunOutcome {
        records: Vec::new(),
        summary,
        failed: false,
    })
}

fn run_self_check(config: &JobConfig) -> Result<RunOutcome> {
    let checks = self_check();
    let failed = checks.iter().any(|c| !c.passed);
    for c in &checks {
        log::info!("{} {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
    }
    let summary = json!({
        "task": config.task,
        "passed": !failed,
        "checks": checks,
    });
    Ok(RunOutcome {
        records: Vec::new(),
        summary,
        failed,
    })
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    let result = cli.job_config().and_then(|c| run(&c, cli.force).map(|o| (c, o)));
    match result {
        Ok((c, o)) => {
            let ok = o.records.iter().filter(|r| r.ok()).count();
            eprintln!(
                "{}: {} record(s), {} ok; results in {}",
                serde_json::to_value(c.task).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
                o.records.len(),
                ok,
                c.out.display()
            );
            if o.failed {
                1
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
