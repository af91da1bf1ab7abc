//! Evaluation of grid points: one covariance build and PPT analysis each.

use std::collections::HashMap;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::cache;
use super::config::{JobConfig, ResolvedPoint};
use crate::covariance::{build_covariance, CovarianceSet, IntegratorSettings, Partition, TimeGrid};
use crate::entanglement::{analyze_with_reference, AnalysisOptions, EntanglementReport, Verdict};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisValue {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub index: usize,
    pub axes: Vec<AxisValue>,
    pub config_hash: String,
    pub partition: Partition,
    pub grid: TimeGrid,
    pub integrator: IntegratorSettings,
    pub lambda_b: Option<f64>,
    pub lambda_n: Option<f64>,
    pub eps_num: Option<f64>,
    pub nu_min: Option<f64>,
    /// Absent for undecidable and failed points.
    pub log_negativity: Option<f64>,
    pub verdict: Option<Verdict>,
    pub error: Option<String>,
    pub timing_s: f64,
}

impl SweepRecord {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }

    pub fn undecidable(&self) -> bool {
        self.verdict == Some(Verdict::Undecidable)
    }
}

/// SHA-256 of the canonical JSON of the resolved inputs.
pub fn point_hash(point: &ResolvedPoint) -> Result<String> {
    let text = serde_json::to_string(point)?;
    Ok(hex::encode(Sha256::digest(text.as_bytes())))
}

pub struct Point {
    pub index: usize,
    pub axes: Vec<AxisValue>,
    pub config: JobConfig,
}

/// Row-major expansion of the sweep axes (last axis fastest).
pub fn expand(config: &JobConfig) -> Result<Vec<Point>> {
    let axes = &config.sweep.axes;
    let samples: Vec<Vec<f64>> = axes.iter().map(|a| a.samples()).collect::<Result<_>>()?;
    let total: usize = samples.iter().map(|s| s.len()).product();
    let mut out = Vec::with_capacity(total);
    for index in 0..total {
        let mut rem = index;
        let mut vals = vec![0.0; axes.len()];
        for k in (0..axes.len()).rev() {
            vals[k] = samples[k][rem % samples[k].len()];
            rem /= samples[k].len();
        }
        let mut cfg = config.clone();
        let mut av = Vec::new();
        for (a, &v) in axes.iter().zip(&vals) {
            cfg = cfg.with_value(&a.name, v)?;
            av.push(AxisValue {
                name: a.name.clone(),
                value: v,
            });
        }
        out.push(Point {
            index,
            axes: av,
            config: cfg,
        });
    }
    Ok(out)
}

pub struct EvalOptions<'a> {
    pub cache_dir: Option<&'a Path>,
    pub force: bool,
    pub analysis: AnalysisOptions,
}

fn cached_build(point: &ResolvedPoint, settings: &IntegratorSettings, key: &str, opts: &EvalOptions) -> Result<CovarianceSet> {
    if let Some(dir) = opts.cache_dir {
        if !opts.force {
            if let Some(set) = cache::lookup(dir, key)? {
                return Ok(set);
            }
        }
    }
    let set = build_covariance(&point.params, &point.noise, point.grid, point.partition, settings)?;
    if let Some(dir) = opts.cache_dir {
        cache::store(dir, key, &set)?;
    }
    Ok(set)
}

/// Covariance for a resolved point, plus the finer-grid reference when the
/// integrator asks for an error estimate. Both reuse the cache when allowed.
pub fn covariance_for(
    point: &ResolvedPoint,
    hash: &str,
    opts: &EvalOptions,
) -> Result<(CovarianceSet, Option<CovarianceSet>)> {
    let set = cached_build(point, &point.integrator, hash, opts)?;
    let reference = if point.integrator.error_estimate {
        Some(cached_build(point, &point.integrator.refined(), &format!("{hash}-ref"), opts)?)
    } else {
        None
    };
    Ok((set, reference))
}

pub fn evaluate(point: &Point, opts: &EvalOptions) -> (SweepRecord, Option<EntanglementReport>) {
    let start = Instant::now();
    let resolved = point.config.resolve();
    let hash = resolved
        .as_ref()
        .ok()
        .and_then(|r| point_hash(r).ok())
        .unwrap_or_default();
    let mut rec = SweepRecord {
        index: point.index,
        axes: point.axes.clone(),
        config_hash: hash.clone(),
        partition: point.config.partition,
        grid: TimeGrid {
            bins: (point.config.grid.duration / point.config.grid.dt).round() as usize,
            dt: point.config.grid.dt,
        },
        integrator: point.config.integrator.clone(),
        lambda_b: None,
        lambda_n: None,
        eps_num: None,
        nu_min: None,
        log_negativity: None,
        verdict: None,
        error: None,
        timing_s: 0.0,
    };
    let result = resolved.and_then(|r| {
        let (set, reference) = covariance_for(&r, &hash, opts)?;
        analyze_with_reference(&set, reference.as_ref(), opts.analysis)
    });
    let report = match result {
        Ok(rep) => {
            rec.lambda_b = Some(rep.lambda_b);
            rec.lambda_n = Some(rep.lambda_n);
            rec.eps_num = Some(rep.eps_num);
            rec.nu_min = Some(rep.nu_min);
            rec.verdict = Some(rep.verdict);
            if rep.verdict != Verdict::Undecidable {
                rec.log_negativity = Some(rep.log_negativity);
            }
            Some(rep)
        }
        Err(e) => {
            log::warn!("point {} failed: {e}", point.index);
            rec.error = Some(e.to_string());
            None
        }
    };
    rec.timing_s = start.elapsed().as_secs_f64();
    (rec, report)
}

/// Evaluates every point on a pool of `workers` threads. Records come back
/// in point order; points whose hash already has a successful record in
/// `previous` are reused unless `force` is set.
pub fn run_points(
    points: &[Point],
    workers: usize,
    previous: &HashMap<String, SweepRecord>,
    opts: &EvalOptions,
) -> Result<Vec<(SweepRecord, Option<EntanglementReport>)>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(|| {
        points
            .par_iter()
            .map(|p| {
                if !opts.force && !opts.analysis.extract_mode {
                    if let Ok(h) = p.config.resolve().and_then(|r| point_hash(&r)) {
                        if let Some(old) = previous.get(&h) {
                            let mut rec = old.clone();
                            rec.index = p.index;
                            rec.axes = p.axes.clone();
                            return (rec, None);
                        }
                    }
                }
                evaluate(p, opts)
            })
            .collect()
    }))
}
