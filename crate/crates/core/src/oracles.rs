//! Closed-form references: analytic Gaussian states and the steady-state
//! Lyapunov solution of the Markovian mechanics + cavity block. Shipped in
//! the library so the `self-check` command can run them in the field.

use nalgebra::{DMatrix, DVector, Matrix4};
use serde::{Deserialize, Serialize};

use crate::covariance::{
    build_v_qq, CovarianceMeta, CovarianceSet, IntegratorSettings, Partition, TimeGrid,
};
use crate::dynamics::{zero_point_force, Model};
use crate::entanglement::{analyze, physicality_lambda, AnalysisOptions};
use crate::error::{Error, Result};
use crate::model::{SystemParams, HBAR};
use crate::spectra::{force_spectrum, sensing_spectrum, NoiseModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateLabel {
    Vacuum,
    Thermal { n: f64 },
    Tmsv { r: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticState {
    pub label: StateLabel,
    pub dim: usize,
    /// Row-major, vacuum = I/2.
    pub v: Vec<f64>,
}

impl AnalyticState {
    /// Wraps the state as a covariance set whose first pair is the "mechanics"
    /// side of the cut and whose remaining pairs play the field bins.
    pub fn to_set(&self) -> CovarianceSet {
        CovarianceSet {
            dim: self.dim,
            v: self.v.clone(),
            grid: TimeGrid {
                bins: (self.dim - 2) / 2,
                dt: 1.0,
            },
            partition: Partition::CavityTraced,
            transposed: false,
            meta: CovarianceMeta {
                params: SystemParams::aligo(),
                noise: NoiseModel::quiet(),
                integrator: IntegratorSettings::default(),
                omega_max: 0.0,
                nu: 0.0,
                nodes: 0,
                panels: 0,
                worst_tail: 0.0,
                band_limited_inverse_tail: 0.0,
                band_limit: 0.0,
                effective_mech_damping: 0.0,
            },
        }
    }
}

pub fn vacuum_state(modes: usize) -> AnalyticState {
    let mut s = thermal_state(0.0, modes);
    s.label = StateLabel::Vacuum;
    s
}

pub fn thermal_state(n: f64, modes: usize) -> AnalyticState {
    let dim = 2 * modes;
    let mut v = vec![0.0; dim * dim];
    for k in 0..dim {
        v[k * dim + k] = n + 0.5;
    }
    AnalyticState {
        label: StateLabel::Thermal { n },
        dim,
        v,
    }
}

/// Two-mode squeezed vacuum in standard form, ordering `(x1, p1, x2, p2)`.
pub fn tmsv_covariance(r: f64) -> AnalyticState {
    let (c, s) = ((2.0 * r).cosh() / 2.0, (2.0 * r).sinh() / 2.0);
    #[rustfmt::skip]
    let v = vec![
        c, 0.0, s, 0.0,
        0.0, c, 0.0, -s,
        s, 0.0, c, 0.0,
        0.0, -s, 0.0, c,
    ];
    AnalyticState {
        label: StateLabel::Tmsv { r },
        dim: 4,
        v,
    }
}

fn white_levels(params: &SystemParams, noise: &NoiseModel) -> Result<(f64, f64)> {
    match noise {
        NoiseModel::White { .. } | NoiseModel::Tabulated { force: None, sensing: None } => Ok((
            force_spectrum(noise, 0.0, params.mass)?,
            sensing_spectrum(noise, 0.0, params.mass)?,
        )),
        other => Err(Error::Precondition(format!(
            "the Lyapunov oracle needs white noise, got {}",
            other.kind()
        ))),
    }
}

/// Steady-state covariance of `(B1, B2, A1, A2)` from `A V + V Aᵀ + D = 0`
/// with delta-correlated inputs; row-major 4×4.
pub fn lyapunov_qq(params: &SystemParams, noise: &NoiseModel) -> Result<[[f64; 4]; 4]> {
    params.validate()?;
    let (s_f, s_x) = white_levels(params, noise)?;
    let s_f = s_f + zero_point_force(params, noise);
    let d = params.derived();
    let (wm, gm, g, kappa) = (params.mech_freq, params.mech_damping, params.cavity_decay, params.coupling);
    let pnorm = 1.0 / (HBAR * params.mass * wm).sqrt();
    let sq2 = std::f64::consts::SQRT_2;
    #[rustfmt::skip]
    let a = Matrix4::new(
        0.0, wm, 0.0, 0.0,
        -wm, -gm, sq2 * HBAR * kappa * pnorm, 0.0,
        0.0, 0.0, -g, 0.0,
        sq2 * kappa * d.x_zpf, 0.0, 0.0, -g,
    );
    if a.complex_eigenvalues().iter().any(|z| z.re >= 0.0) {
        return Err(Error::Precondition("drift matrix is not strictly stable".into()));
    }
    // inputs (u1, u2, nX, nF)
    let mut b = nalgebra::Matrix4::<f64>::zeros();
    b[(2, 0)] = (2.0 * g).sqrt();
    b[(3, 1)] = (2.0 * g).sqrt();
    b[(3, 2)] = sq2 * kappa;
    b[(1, 3)] = pnorm;
    let s = nalgebra::Matrix4::from_diagonal(&nalgebra::Vector4::new(0.5, 0.5, 0.5 * s_x, 0.5 * s_f));
    let dm = b * s * b.transpose();

    // (I ⊗ A + A ⊗ I) vec(V) = −vec(D), column-major vec
    let mut k = DMatrix::<f64>::zeros(16, 16);
    for i in 0..4 {
        for j in 0..4 {
            for l in 0..4 {
                k[(i + 4 * j, l + 4 * j)] += a[(i, l)];
                k[(i + 4 * j, i + 4 * l)] += a[(j, l)];
            }
        }
    }
    let rhs = DVector::from_iterator(16, dm.iter().map(|x| -x));
    let sol = k
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Precondition("singular Lyapunov operator".into()))?;
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = 0.5 * (sol[i + 4 * j] + sol[j + 4 * i]);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> CheckResult {
    CheckResult {
        name: name.into(),
        passed,
        detail,
    }
}

/// Largest entrywise relative deviation, each entry scaled by the geometric
/// mean of the matching diagonal elements.
pub fn relative_deviation(a: &[[f64; 4]; 4], b: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let scale = (a[i][i] * a[j][j]).sqrt().max(f64::MIN_POSITIVE);
            worst = worst.max((a[i][j] - b[4 * i + j]).abs() / scale);
        }
    }
    worst
}

/// White-noise parameters at aLIGO scale used by the cross-check.
pub fn white_reference() -> (SystemParams, NoiseModel) {
    let params = SystemParams::aligo();
    let wq = params.derived().omega_q;
    (
        params,
        NoiseModel::White {
            omega_f: 0.5 * wq,
            omega_x: 2.0 * wq,
        },
    )
}

/// Runs every oracle comparison.
pub fn self_check() -> Vec<CheckResult> {
    let mut out = Vec::new();
    for r in [0.0, 0.1, 0.5, 1.0] {
        let expect = 2.0 * r * std::f64::consts::LOG2_E;
        let res = analyze(&tmsv_covariance(r).to_set(), AnalysisOptions::default());
        out.push(match res {
            Ok(rep) => check(
                &format!("tmsv r={r}"),
                (rep.log_negativity - expect).abs() < 1e-9,
                format!("E_N = {:.12}, expected {:.12}", rep.log_negativity, expect),
            ),
            Err(e) => check(&format!("tmsv r={r}"), false, e.to_string()),
        });
    }
    for (name, st) in [("vacuum", vacuum_state(3)), ("thermal n=2", thermal_state(2.0, 3))] {
        out.push(match physicality_lambda(&st.to_set()) {
            Ok(l) => check(name, l >= -1e-12, format!("λ_B = {l:.3e}")),
            Err(e) => check(name, false, e.to_string()),
        });
    }

    let (params, noise) = white_reference();
    let grid = TimeGrid { bins: 8, dt: 1e-3 };
    out.push(
        match (
            lyapunov_qq(&params, &noise),
            build_v_qq(&params, &noise, grid, Model::Full, &IntegratorSettings::default()),
        ) {
            (Ok(a), Ok(b)) => {
                let dev = relative_deviation(&a, &b);
                check("lyapunov vs frequency domain", dev < 0.01, format!("max relative deviation {dev:.3e}"))
            }
            (Err(e), _) | (_, Err(e)) => check("lyapunov vs frequency domain", false, e.to_string()),
        },
    );

    // decoupled, heavily damped mirror driven by white force noise
    let mut p = params;
    p.coupling = 0.0;
    p.mech_damping = 10.0 * p.mech_freq;
    out.push(match lyapunov_qq(&p, &noise) {
        Ok(v) => {
            let s_f = force_spectrum(&noise, 0.0, p.mass).unwrap() + zero_point_force(&p, &noise);
            let x2 = s_f / (4.0 * p.mech_damping * p.mech_freq.powi(2) * p.mass.powi(2));
            let expect = x2 / p.derived().x_zpf.powi(2);
            let dev = (v[0][0] / expect - 1.0).abs().max((v[1][1] / expect - 1.0).abs());
            check("equipartition", dev < 1e-9, format!("relative deviation {dev:.3e}"))
        }
        Err(e) => check("equipartition", false, e.to_string()),
    });
    out
}
