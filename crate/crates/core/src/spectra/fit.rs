//! Least-squares fits of the rational noise models to sampled budgets.
//!
//! The objective is the mean squared error of log10(PSD) on a log-uniform
//! frequency grid spanning the sampled band. Parameters are optimized in
//! log space so they stay positive.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{LigoForce, LigoSensing, NoiseModel, Rolloff, Table};
use crate::error::{Error, Result};
use crate::lsq;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
const RESAMPLED_POINTS: usize = 256;
const MAX_ITERATIONS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitTemplate {
    /// `τ_F / ((Ω/ω_F)^14 + 1)`; free: τ_F, ω_F.
    LigoForce,
    /// `τ_X1 (Ω/ω_X)² + τ_X2`; free: τ_X1, τ_X2. Only τ_X1/ω_X² is
    /// identifiable, so ω_X stays at its nominal value.
    LigoSensing,
    /// `τ_ST / ((Ω/ω_ST)^8 + 1)`; free: τ_ST, ω_ST.
    Suspension,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub template: FitTemplate,
    /// Fitted values keyed by their conventional symbols (SI, rad/s).
    pub parameters: BTreeMap<String, f64>,
    /// Mean squared error of log10(PSD) at the optimum.
    pub residual: f64,
    pub evaluations: usize,
    pub weighting: String,
    pub band_hz: (f64, f64),
    #[serde(skip)]
    pub model: Option<NoiseModel>,
}

fn template_eval(template: FitTemplate, p: &[f64], omega: f64) -> f64 {
    match template {
        FitTemplate::LigoForce => p[0] / ((omega / p[1]).powi(14) + 1.0),
        FitTemplate::Suspension => p[0] / ((omega / p[1]).powi(8) + 1.0),
        FitTemplate::LigoSensing => {
            let r = omega / LigoSensing::aligo().omega_x;
            p[0] * r * r + p[1]
        }
    }
}

fn initial_guess(template: FitTemplate, f: &[f64], s: &[f64]) -> Vec<f64> {
    match template {
        FitTemplate::LigoForce | FitTemplate::Suspension => {
            let knee = f
                .iter()
                .zip(s)
                .find(|(_, &v)| v < 0.5 * s[0])
                .map(|(&x, _)| x)
                .unwrap_or_else(|| (f[0] * f[f.len() - 1]).sqrt());
            vec![s[0], TWO_PI * knee]
        }
        FitTemplate::LigoSensing => {
            let floor = s.iter().cloned().fold(f64::INFINITY, f64::min);
            let last = f.len() - 1;
            let r = TWO_PI * f[last] / LigoSensing::aligo().omega_x;
            vec![((s[last] - floor).max(floor * 1e-3)) / (r * r), floor]
        }
    }
}

/// Fits `template` to the sampled one-sided PSD `(frequency_hz, psd)`.
pub fn fit_noise_model(frequency_hz: &[f64], psd: &[f64], template: FitTemplate) -> Result<FitReport> {
    if frequency_hz.is_empty() || frequency_hz.len() != psd.len() {
        return Err(Error::Fit {
            iterations: 0,
            residual: f64::NAN,
            best: Vec::new(),
        });
    }
    let table = Table::new(frequency_hz.to_vec(), psd.to_vec(), Rolloff::default()).map_err(|_| {
        Error::Fit {
            iterations: 0,
            residual: f64::NAN,
            best: Vec::new(),
        }
    })?;
    let (lo, hi) = table.band_hz();
    let (l0, l1) = (lo.log10(), hi.log10());
    let f: Vec<f64> = (0..RESAMPLED_POINTS)
        .map(|k| 10f64.powf(l0 + (l1 - l0) * k as f64 / (RESAMPLED_POINTS - 1) as f64))
        .collect();
    let y: Vec<f64> = f.iter().map(|&x| table.eval(x).map(f64::log10)).collect::<Result<_>>()?;
    let s: Vec<f64> = y.iter().map(|v| 10f64.powf(*v)).collect();

    let x0: Vec<f64> = initial_guess(template, &f, &s).iter().map(|v| v.ln()).collect();
    let sol = lsq::minimize(
        |q, r| {
            let p: Vec<f64> = q.iter().map(|v| v.exp()).collect();
            for i in 0..f.len() {
                r[i] = template_eval(template, &p, TWO_PI * f[i]).log10() - y[i];
            }
        },
        &x0,
        f.len(),
        MAX_ITERATIONS,
    )
    .map_err(|e| match e {
        Error::Fit {
            iterations,
            residual,
            best,
        } => Error::Fit {
            iterations,
            residual: residual / f.len() as f64,
            best: best.iter().map(|v| v.exp()).collect(),
        },
        other => other,
    })?;
    let p: Vec<f64> = sol.x.iter().map(|v| v.exp()).collect();

    let mut parameters = BTreeMap::new();
    let model = match template {
        FitTemplate::LigoForce => {
            parameters.insert("tau_F".to_string(), p[0]);
            parameters.insert("omega_F".to_string(), p[1]);
            NoiseModel::LigoParam {
                force: LigoForce {
                    tau_f: p[0],
                    omega_f: p[1],
                    ..LigoForce::aligo()
                },
                sensing: LigoSensing::aligo(),
            }
        }
        FitTemplate::LigoSensing => {
            let omega_x = LigoSensing::aligo().omega_x;
            parameters.insert("tau_X1".to_string(), p[0]);
            parameters.insert("tau_X2".to_string(), p[1]);
            parameters.insert("omega_X".to_string(), omega_x);
            NoiseModel::LigoParam {
                force: LigoForce::aligo(),
                sensing: LigoSensing {
                    tau_x1: p[0],
                    tau_x2: p[1],
                    ..LigoSensing::aligo()
                },
            }
        }
        FitTemplate::Suspension => {
            parameters.insert("tau_ST".to_string(), p[0]);
            parameters.insert("omega_ST".to_string(), p[1]);
            NoiseModel::SuspensionOnly {
                tau_st: p[0],
                omega_st: p[1],
                sensing: LigoSensing::aligo(),
            }
        }
    };
    Ok(FitReport {
        template,
        parameters,
        residual: sol.ssr / f.len() as f64,
        evaluations: sol.evaluations,
        weighting: format!(
            "uniform weights on log10(PSD) at {RESAMPLED_POINTS} log-spaced frequencies"
        ),
        band_hz: (lo, hi),
        model: Some(model),
    })
}
