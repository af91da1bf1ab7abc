//! Composite Gauss–Legendre rule on `[0, Ω_max]`.
//!
//! Panels are refined geometrically around every spectral feature (resonances,
//! cut-offs, cavity pole) and capped in width so that `e^{-iΩτ}` turns by at
//! most a fixed phase across a panel at the longest lag.

use serde::{Deserialize, Serialize};

const PI: f64 = std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FrequencyGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub omega_max: f64,
    pub panels: usize,
}

/// Builds the panel layout. `features` are `(centre, half-width)` pairs in
/// rad/s; `breaks` are extra panel edges where the integrand may jump;
/// `max_width` caps every panel; `density` subdivides every panel
/// (1 = nominal, 2 = twice as many nodes).
pub fn build_grid(
    omega_max: f64,
    features: &[(f64, f64)],
    breaks: &[f64],
    max_width: f64,
    order: usize,
    density: usize,
) -> FrequencyGrid {
    let mut cuts = vec![0.0, omega_max];
    cuts.extend(breaks.iter().copied().filter(|&b| b > 0.0 && b < omega_max));
    for &(c, hw) in features {
        if !(c.is_finite() && hw.is_finite()) || hw <= 0.0 || c < 0.0 || c >= omega_max {
            continue;
        }
        cuts.push(c);
        let mut d = hw / 8.0;
        while d < omega_max {
            for p in [c - d, c + d] {
                if p > 0.0 && p < omega_max {
                    cuts.push(p);
                }
            }
            d *= 2.0;
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1e-300));

    let (gx, gw) = gauss_legendre(order);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let mut panels = 0;
    for win in cuts.windows(2) {
        let (a, b) = (win[0], win[1]);
        if b <= a {
            continue;
        }
        let pieces = (((b - a) / max_width).ceil() as usize).max(1) * density.max(1);
        let h = (b - a) / pieces as f64;
        for p in 0..pieces {
            let lo = a + p as f64 * h;
            let mid = lo + 0.5 * h;
            for k in 0..order {
                nodes.push(mid + 0.5 * h * gx[k]);
                weights.push(0.5 * h * gw[k]);
            }
            panels += 1;
        }
    }
    FrequencyGrid {
        nodes,
        weights,
        omega_max,
        panels,
    }
}
