//! Damped-sinusoid fit of the entangling mode profile.
//!
//! The four real curves `Re e1, Im e1, Re e2, Im e2` are fitted jointly to
//! `e^{−γ|t|} (p_c sin ωt + q_c cos ωt)` with shared `(ω, γ)`. The linear
//! coefficients are eliminated for every trial `(ω, γ)` (variable
//! projection) so the nonlinear search runs in two dimensions.

use serde::{Deserialize, Serialize};

use super::ModeFunction;
use crate::error::{Error, Result};
use crate::lsq;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeFit {
    /// rad/s
    pub omega: f64,
    /// 1/s
    pub gamma: f64,
    /// Amplitude and phase of `a sin(ωt + θ)` for each curve.
    pub amplitudes: [f64; 4],
    pub phases: [f64; 4],
    pub residual: f64,
    pub explained_variance: f64,
    pub converged: bool,
}

impl ModeFit {
    pub fn frequency_hz(&self) -> f64 {
        self.omega / (2.0 * std::f64::consts::PI)
    }
}

struct Curves {
    t: Vec<f64>,
    y: [Vec<f64>; 4],
}

impl Curves {
    fn new(mode: &ModeFunction) -> Self {
        Self {
            t: mode.times.clone(),
            y: [
                mode.e1.iter().map(|z| z.0).collect(),
                mode.e1.iter().map(|z| z.1).collect(),
                mode.e2.iter().map(|z| z.0).collect(),
                mode.e2.iter().map(|z| z.1).collect(),
            ],
        }
    }

    /// Linear coefficients `(p, q)` per curve and the residual vector.
    fn project(&self, omega: f64, gamma: f64, out: &mut [f64]) -> [(f64, f64); 4] {
        let n = self.t.len();
        let basis: Vec<(f64, f64)> = self
            .t
            .iter()
            .map(|&t| {
                let e = (-gamma * t.abs()).exp();
                (e * (omega * t).sin(), e * (omega * t).cos())
            })
            .collect();
        let (mut ss, mut sc, mut cc) = (0.0, 0.0, 0.0);
        for &(s, c) in &basis {
            ss += s * s;
            sc += s * c;
            cc += c * c;
        }
        let det = ss * cc - sc * sc;
        let mut coef = [(0.0, 0.0); 4];
        for (k, y) in self.y.iter().enumerate() {
            let (mut ys, mut yc) = (0.0, 0.0);
            for (b, &yi) in basis.iter().zip(y) {
                ys += b.0 * yi;
                yc += b.1 * yi;
            }
            let (p, q) = if det.abs() > 1e-300 {
                ((cc * ys - sc * yc) / det, (ss * yc - sc * ys) / det)
            } else {
                (0.0, 0.0)
            };
            coef[k] = (p, q);
            for i in 0..n {
                out[k * n + i] = y[i] - p * basis[i].0 - q * basis[i].1;
            }
        }
        coef
    }

    fn ssr(&self, omega: f64, gamma: f64) -> f64 {
        let mut r = vec![0.0; 4 * self.t.len()];
        self.project(omega, gamma, &mut r);
        r.iter().map(|x| x * x).sum()
    }
}

/// Peak of the combined periodogram of `e2` on `(0, π/Δt)`.
fn dominant_frequency(t: &[f64], re: &[f64], im: &[f64]) -> f64 {
    let n = t.len();
    let dt = (t[0] - t[n - 1]).abs() / (n - 1).max(1) as f64;
    let span = dt * n as f64;
    let kmax = n / 2;
    let mut best = (0.0, 2.0 * std::f64::consts::PI / span);
    for k in 1..=kmax {
        let w = 2.0 * std::f64::consts::PI * k as f64 / span;
        let mut p = 0.0;
        for y in [re, im] {
            let (mut a, mut b) = (0.0, 0.0);
            for (ti, yi) in t.iter().zip(y) {
                a += yi * (w * ti).cos();
                b += yi * (w * ti).sin();
            }
            p += a * a + b * b;
        }
        if p > best.0 {
            best = (p, w);
        }
    }
    best.1
}

pub fn fit_mode(mode: &ModeFunction) -> Result<ModeFit> {
    let curves = Curves::new(mode);
    let n = curves.t.len();
    if n < 4 {
        return Err(Error::Fit {
            iterations: 0,
            residual: f64::NAN,
            best: Vec::new(),
        });
    }
    let sst: f64 = curves
        .y
        .iter()
        .map(|y| {
            let m = y.iter().sum::<f64>() / n as f64;
            y.iter().map(|v| (v - m) * (v - m)).sum::<f64>()
        })
        .sum();
    let w0 = dominant_frequency(&curves.t, &curves.y[2], &curves.y[3]);
    let span = (curves.t[0] - curves.t[n - 1]).abs();
    // coarse start over decay rates from one span to a tenth of a period
    let mut start = (f64::INFINITY, w0, 1.0 / span);
    for wf in [0.8, 0.9, 1.0, 1.1, 1.25] {
        for k in 0..16 {
            let g = (1.0 / span) * (10.0 * w0 * span).powf(k as f64 / 15.0);
            let s = curves.ssr(w0 * wf, g);
            if s < start.0 {
                start = (s, w0 * wf, g);
            }
        }
    }
    let resid = |x: &[f64], out: &mut [f64]| {
        curves.project(x[0].exp(), x[1].exp(), out);
    };
    let (x, converged) = match lsq::minimize(resid, &[start.1.ln(), start.2.ln()], 4 * n, 200) {
        Ok(sol) => (sol.x, true),
        Err(e) => {
            log::warn!("mode fit did not converge: {e}");
            (vec![start.1.ln(), start.2.ln()], false)
        }
    };
    let (omega, gamma) = (x[0].exp(), x[1].exp());
    let mut r = vec![0.0; 4 * n];
    let coef = curves.project(omega, gamma, &mut r);
    let ssr: f64 = r.iter().map(|v| v * v).sum();
    let mut amplitudes = [0.0; 4];
    let mut phases = [0.0; 4];
    for (k, (p, q)) in coef.iter().enumerate() {
        amplitudes[k] = p.hypot(*q);
        phases[k] = q.atan2(*p);
    }
    Ok(ModeFit {
        omega,
        gamma,
        amplitudes,
        phases,
        residual: ssr,
        explained_variance: if sst > 0.0 { 1.0 - ssr / sst } else { 0.0 },
        converged,
    })
}
