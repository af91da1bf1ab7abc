//! Input noise spectra. All densities are one-sided and even in Ω.
//!
//! Force spectra are in N²/Hz and sensing spectra in m²/Hz. The optical
//! vacuum inputs have unit spectrum in the quadrature normalization.

mod fit;
mod table;

pub use fit::{fit_noise_model, FitReport, FitTemplate};
pub use table::{read_psd_csv, Rolloff, Table};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::HBAR;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonantMode {
    /// Mode frequency Ω_v (rad/s).
    pub omega: f64,
    /// Full width at half maximum Γ_v (rad/s).
    pub fwhm: f64,
    /// Amplitude A_v (rad/s).
    pub amplitude: f64,
}

impl ResonantMode {
    fn lorentzian(&self, w: f64) -> f64 {
        let d = w - self.omega;
        let h = 0.5 * self.fwhm;
        self.amplitude * self.amplitude / (d * d + h * h)
    }
}

/// Rigid-body suspension resonances seen in the aLIGO force budget.
pub fn aligo_resonances() -> Vec<ResonantMode> {
    const F: [f64; 7] = [0.441, 0.995, 1.98, 2.37, 3.38, 3.81, 9.73];
    const W: [f64; 7] = [1.92e-3, 5.63e-5, 2.11e-5, 1.44e-1, 1.45e-4, 1.65e-3, 1.03e-3];
    const A: [f64; 7] = [159.0, 93.8, 538.0, 235.0, 353.0, 27.4, 78.0];
    (0..7)
        .map(|i| ResonantMode {
            omega: TWO_PI * F[i],
            fwhm: TWO_PI * W[i],
            amplitude: A[i],
        })
        .collect()
}

/// Rational sensing-noise model shared by the interferometer families:
/// `τ_X1 (Ω/ω_X)² α_X1 + τ_X2 α_X2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LigoSensing {
    pub tau_x1: f64,
    pub tau_x2: f64,
    pub omega_x: f64,
    pub alpha_x1: f64,
    pub alpha_x2: f64,
}

impl LigoSensing {
    pub fn aligo() -> Self {
        Self {
            tau_x1: 1e-50,
            tau_x2: 1e-48,
            omega_x: TWO_PI * 1e4,
            alpha_x1: 1.0,
            alpha_x2: 1.0,
        }
    }

    pub fn eval(&self, omega: f64) -> f64 {
        let r = omega / self.omega_x;
        self.tau_x1 * r * r * self.alpha_x1 + self.tau_x2 * self.alpha_x2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LigoForce {
    pub tau_f: f64,
    pub omega_f: f64,
    pub alpha_f1: f64,
    pub alpha_f2: f64,
    #[serde(default)]
    pub resonances: Vec<ResonantMode>,
}

impl LigoForce {
    pub fn aligo() -> Self {
        Self {
            tau_f: 1.6e-20,
            omega_f: TWO_PI * 0.25,
            alpha_f1: 1.0,
            alpha_f2: 1.0,
            resonances: Vec::new(),
        }
    }

    pub fn eval(&self, omega: f64) -> f64 {
        let w = omega.abs();
        let base = self.tau_f * self.alpha_f1 / ((w / self.omega_f * self.alpha_f2).powi(14) + 1.0);
        if self.resonances.is_empty() {
            return base;
        }
        let peaks: f64 = self.resonances.iter().map(|m| m.lorentzian(w)).sum();
        base * (1.0 + peaks)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    /// White force and sensing noise crossing the free-mass SQL at Ω_F and Ω_X.
    White { omega_f: f64, omega_x: f64 },
    /// Structural (loss-angle) damping with 1/|Ω| force and sensing noise.
    Structural {
        omega_f: f64,
        omega_x: f64,
        phi: f64,
        omega_c: f64,
        /// Optional viscous rate kept alongside the complex spring.
        #[serde(default)]
        viscous: f64,
    },
    /// Parametrized interferometer force and sensing noise.
    LigoParam { force: LigoForce, sensing: LigoSensing },
    /// Suspension thermal force noise alone (no seismic contribution) with
    /// the interferometer sensing noise unchanged.
    SuspensionOnly {
        tau_st: f64,
        omega_st: f64,
        sensing: LigoSensing,
    },
    /// Sampled budgets. A missing table means that channel is noiseless.
    Tabulated {
        force: Option<Table>,
        sensing: Option<Table>,
    },
}

impl NoiseModel {
    pub fn aligo() -> Self {
        NoiseModel::LigoParam {
            force: LigoForce::aligo(),
            sensing: LigoSensing::aligo(),
        }
    }

    pub fn aligo_with_resonances() -> Self {
        let mut force = LigoForce::aligo();
        force.resonances = aligo_resonances();
        NoiseModel::LigoParam {
            force,
            sensing: LigoSensing::aligo(),
        }
    }

    /// No classical noise at all.
    pub fn quiet() -> Self {
        NoiseModel::Tabulated {
            force: None,
            sensing: None,
        }
    }

    pub fn aligo_no_seismic() -> Self {
        NoiseModel::SuspensionOnly {
            tau_st: 3.1e-35,
            omega_st: TWO_PI * 1.9e3,
            sensing: LigoSensing::aligo(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn pos(name: &str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Domain(format!("{name} must be positive, got {v}")))
            }
        }
        fn sensing(s: &LigoSensing) -> Result<()> {
            pos("tau_x1", s.tau_x1)?;
            pos("tau_x2", s.tau_x2)?;
            pos("omega_x", s.omega_x)?;
            pos("alpha_x1", s.alpha_x1)?;
            pos("alpha_x2", s.alpha_x2)
        }
        match self {
            NoiseModel::White { omega_f, omega_x } => {
                pos("omega_f", *omega_f)?;
                pos("omega_x", *omega_x)
            }
            NoiseModel::Structural {
                omega_f,
                omega_x,
                phi,
                omega_c,
                viscous,
            } => {
                pos("omega_f", *omega_f)?;
                pos("omega_x", *omega_x)?;
                pos("omega_c", *omega_c)?;
                if !(phi.is_finite() && *phi >= 0.0) {
                    return Err(Error::Domain(format!("loss angle must be ≥ 0, got {phi}")));
                }
                if !(viscous.is_finite() && *viscous >= 0.0) {
                    return Err(Error::Domain(format!("viscous rate must be ≥ 0, got {viscous}")));
                }
                Ok(())
            }
            NoiseModel::LigoParam { force, sensing: s } => {
                pos("tau_f", force.tau_f)?;
                pos("omega_f", force.omega_f)?;
                pos("alpha_f1", force.alpha_f1)?;
                pos("alpha_f2", force.alpha_f2)?;
                for m in &force.resonances {
                    pos("resonance frequency", m.omega)?;
                    pos("resonance width", m.fwhm)?;
                    pos("resonance amplitude", m.amplitude)?;
                }
                sensing(s)
            }
            NoiseModel::SuspensionOnly {
                tau_st,
                omega_st,
                sensing: s,
            } => {
                pos("tau_st", *tau_st)?;
                pos("omega_st", *omega_st)?;
                sensing(s)
            }
            NoiseModel::Tabulated { .. } => Ok(()),
        }
    }

    /// Loss-angle parameters when the mechanics is structurally damped.
    pub fn structural(&self) -> Option<(f64, f64)> {
        match self {
            NoiseModel::Structural { phi, omega_c, .. } => Some((*phi, *omega_c)),
            _ => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            NoiseModel::White { .. } => "white",
            NoiseModel::Structural { .. } => "structural",
            NoiseModel::LigoParam { .. } => "ligo",
            NoiseModel::SuspensionOnly { .. } => "suspension",
            NoiseModel::Tabulated { .. } => "tabulated",
        }
    }

    /// Characteristic frequencies (centre, width) in rad/s where the spectra
    /// change shape. Used to place quadrature refinement.
    pub fn features(&self) -> Vec<(f64, f64)> {
        match self {
            NoiseModel::White { .. } => Vec::new(),
            NoiseModel::Structural { omega_c, .. } => vec![(0.0, *omega_c)],
            NoiseModel::LigoParam { force, sensing } => {
                let knee = force.omega_f / force.alpha_f2;
                let mut f = vec![(knee, 0.05 * knee), (sensing.omega_x, 0.1 * sensing.omega_x)];
                f.extend(force.resonances.iter().map(|m| (m.omega, 0.5 * m.fwhm)));
                f
            }
            NoiseModel::SuspensionOnly {
                omega_st, sensing, ..
            } => vec![(*omega_st, 0.05 * omega_st), (sensing.omega_x, 0.1 * sensing.omega_x)],
            NoiseModel::Tabulated { force, sensing } => {
                let mut f = Vec::new();
                for t in [force, sensing].into_iter().flatten() {
                    let (lo, hi) = t.band_hz();
                    f.push((TWO_PI * lo, TWO_PI * lo));
                    f.push((TWO_PI * hi, 0.1 * TWO_PI * hi));
                }
                f
            }
        }
    }
}

/// `φ(Ω) = φ |Ω| / (|Ω| + Ω_c)`; the sign of Ω is applied by the dynamics.
pub fn loss_angle(omega: f64, phi: f64, omega_c: f64) -> f64 {
    let w = omega.abs();
    phi * w / (w + omega_c)
}

/// One-sided force-noise spectral density `S_nF(Ω)` in N²/Hz.
pub fn force_spectrum(model: &NoiseModel, omega: f64, mass: f64) -> Result<f64> {
    let w = omega.abs();
    Ok(match model {
        NoiseModel::White { omega_f, .. } => 2.0 * HBAR * mass * omega_f * omega_f,
        NoiseModel::Structural {
            omega_f, omega_c, ..
        } => 2.0 * HBAR * mass * omega_f.powi(3) / (w + omega_c),
        NoiseModel::LigoParam { force, .. } => force.eval(w),
        NoiseModel::SuspensionOnly {
            tau_st, omega_st, ..
        } => tau_st / ((w / omega_st).powi(8) + 1.0),
        NoiseModel::Tabulated { force, .. } => match force {
            Some(t) => t.eval(w / TWO_PI)?,
            None => 0.0,
        },
    })
}

/// One-sided sensing-noise spectral density `S_nX(Ω)` in m²/Hz.
pub fn sensing_spectrum(model: &NoiseModel, omega: f64, mass: f64) -> Result<f64> {
    let w = omega.abs();
    Ok(match model {
        NoiseModel::White { omega_x, .. } => 2.0 * HBAR / (mass * omega_x * omega_x),
        NoiseModel::Structural {
            omega_x, omega_c, ..
        } => 2.0 * HBAR / (mass * omega_x * (w + omega_c)),
        NoiseModel::LigoParam { sensing, .. } | NoiseModel::SuspensionOnly { sensing, .. } => {
            sensing.eval(w)
        }
        NoiseModel::Tabulated { sensing, .. } => match sensing {
            Some(t) => t.eval(w / TWO_PI)?,
            None => 0.0,
        },
    })
}

/// Index of an optical vacuum input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VacuumInput {
    U1,
    U2,
}

/// One-sided symmetrized vacuum cross spectrum of the incoming field.
pub fn vacuum_input_spectrum(i: VacuumInput, j: VacuumInput) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}
