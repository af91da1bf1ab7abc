//! Thin adapter around the `levenberg-marquardt` crate for small dense
//! problems given as a residual closure. The Jacobian is taken by central
//! differences.

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::{DMatrix, DVector, Dyn, Owned};

use crate::error::{Error, Result};

pub(crate) struct Solution {
    pub x: Vec<f64>,
    /// Sum of squared residuals.
    pub ssr: f64,
    pub evaluations: usize,
}

struct Problem<F> {
    f: F,
    x: DVector<f64>,
    m: usize,
}

impl<F: Fn(&[f64], &mut [f64])> Problem<F> {
    fn eval(&self, x: &[f64]) -> Option<DVector<f64>> {
        let mut r = vec![0.0; self.m];
        (self.f)(x, &mut r);
        r.iter().all(|v| v.is_finite()).then(|| DVector::from_vec(r))
    }
}

impl<F: Fn(&[f64], &mut [f64])> LeastSquaresProblem<f64, Dyn, Dyn> for Problem<F> {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, Dyn>;
    type ParameterStorage = Owned<f64, Dyn>;

    fn set_params(&mut self, x: &DVector<f64>) {
        self.x.copy_from(x);
    }

    fn params(&self) -> DVector<f64> {
        self.x.clone()
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        self.eval(self.x.as_slice())
    }

    fn jacobian(&self) -> Option<DMatrix<f64>> {
        let n = self.x.len();
        let mut jac = DMatrix::zeros(self.m, n);
        let mut xp = self.x.as_slice().to_vec();
        for k in 0..n {
            let h = 1e-6 * self.x[k].abs().max(1e-3);
            xp[k] = self.x[k] + h;
            let fp = self.eval(&xp)?;
            xp[k] = self.x[k] - h;
            let fm = self.eval(&xp)?;
            xp[k] = self.x[k];
            jac.set_column(k, &((fp - fm) / (2.0 * h)));
        }
        Some(jac)
    }
}

/// Minimizes `Σ r_i(x)²` starting from `x0`. `max_iterations` bounds the
/// number of residual evaluations per parameter.
pub(crate) fn minimize<F>(f: F, x0: &[f64], m: usize, max_iterations: usize) -> Result<Solution>
where
    F: Fn(&[f64], &mut [f64]),
{
    if m == 0 || x0.is_empty() {
        return Err(Error::Fit {
            iterations: 0,
            residual: f64::NAN,
            best: x0.to_vec(),
        });
    }
    let problem = Problem {
        f,
        x: DVector::from_column_slice(x0),
        m,
    };
    let (problem, report) = LevenbergMarquardt::new()
        .with_gtol(1e-10)
        .with_ftol(1e-14)
        .with_xtol(1e-14)
        .with_patience(max_iterations)
        .minimize(problem);
    let x = problem.x.as_slice().to_vec();
    let ssr = 2.0 * report.objective_function;
    if !report.termination.was_successful() {
        return Err(Error::Fit {
            iterations: report.number_of_evaluations,
            residual: ssr,
            best: x,
        });
    }
    Ok(Solution {
        x,
        ssr,
        evaluations: report.number_of_evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exponential_decay() {
        let t: Vec<f64> = (0..40).map(|k| k as f64 * 0.1).collect();
        let y: Vec<f64> = t.iter().map(|t| 2.5 * (-1.3 * t).exp()).collect();
        let sol = minimize(
            |p, r| {
                for i in 0..t.len() {
                    r[i] = p[0] * (-p[1] * t[i]).exp() - y[i];
                }
            },
            &[1.0, 0.5],
            t.len(),
            500,
        )
        .unwrap();
        assert!((sol.x[0] - 2.5).abs() < 1e-8 && (sol.x[1] - 1.3).abs() < 1e-8);
        assert!(sol.ssr < 1e-20);
    }
}
