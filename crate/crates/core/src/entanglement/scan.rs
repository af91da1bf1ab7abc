//! Time-step convergence of the PPT eigenvalues.

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Relative change that counts as converged.
pub const CONVERGENCE_TOLERANCE: f64 = 0.05;
/// Changes are measured relative to `max(|λ|, SCALE_FLOOR)`; eigenvalues of
/// `V + iJ/2` live on the vacuum scale 1, so differences between values
/// at round-off level do not count as movement.
pub const SCALE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    pub dt: f64,
    pub lambda_b: Option<f64>,
    pub lambda_n: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceScan {
    /// Sorted by decreasing Δt.
    pub points: Vec<ConvergencePoint>,
    /// Both λ moved by less than 5% between the two finest successful steps.
    pub converged: bool,
    pub last_change_b: Option<f64>,
    pub last_change_n: Option<f64>,
    /// Largest Δt from which every later step stays within tolerance.
    pub converged_at: Option<f64>,
}

/// Evaluates `eval(dt) → (λ_B, λ_N)` on every step, recording failures
/// instead of aborting.
pub fn convergence_scan<F>(dts: &[f64], mut eval: F) -> ConvergenceScan
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    let mut dts = dts.to_vec();
    dts.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let points: Vec<ConvergencePoint> = dts
        .iter()
        .map(|&dt| match eval(dt) {
            Ok((b, n)) => ConvergencePoint {
                dt,
                lambda_b: Some(b),
                lambda_n: Some(n),
                error: None,
            },
            Err(e) => {
                log::warn!("dt = {dt:.3e} s failed: {e}");
                ConvergencePoint {
                    dt,
                    lambda_b: None,
                    lambda_n: None,
                    error: Some(e.to_string()),
                }
            }
        })
        .collect();
    let ok: Vec<&ConvergencePoint> = points.iter().filter(|p| p.error.is_none()).collect();
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(SCALE_FLOOR);
    let changes: Vec<(f64, f64, f64)> = ok
        .windows(2)
        .map(|w| {
            (
                w[1].dt,
                rel(w[1].lambda_b.unwrap(), w[0].lambda_b.unwrap()),
                rel(w[1].lambda_n.unwrap(), w[0].lambda_n.unwrap()),
            )
        })
        .collect();
    let within = |c: &(f64, f64, f64)| c.1 < CONVERGENCE_TOLERANCE && c.2 < CONVERGENCE_TOLERANCE;
    let settled = changes.iter().rev().take_while(|c| within(c)).count();
    let converged_at = (settled > 0).then(|| changes[changes.len() - settled].0);
    let last = changes.last();
    ConvergenceScan {
        converged: last.is_some_and(within),
        points,
        last_change_b: last.map(|c| c.1),
        last_change_n: last.map(|c| c.2),
        converged_at,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn continues_past_failures() {
        let scan = convergence_scan(&[1e-3, 4e-3, 2e-3, 5e-4], |dt| {
            if dt == 2e-3 {
                Err(Error::Integration("synthetic".into()))
            } else {
                Ok((1e-3, -1.0 - dt))
            }
        });
        assert_eq!(scan.points.len(), 4);
        assert_eq!(scan.points[0].dt, 4e-3);
        assert!(scan.points[1].error.is_some());
        assert!(scan.converged);
        assert_eq!(scan.converged_at, Some(1e-3));
    }

    #[test]
    fn round_off_differences_are_not_movement() {
        let scan = convergence_scan(&[4e-3, 2e-3, 1e-3], |dt| Ok((1e-14 * dt, -7e-13 * dt)));
        assert!(scan.converged);
        assert_eq!(scan.converged_at, Some(2e-3));
    }
}
