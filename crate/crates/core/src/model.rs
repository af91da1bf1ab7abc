//! Physical parameters of the reduced optomechanical cavity and the scales
//! derived from them.
//!
//! Everything is SI with an explicit ħ. Quadratures are dimensionless:
//! `B1 = x / x_zpf`, `B2 = p x_zpf / ħ` with `x_zpf = sqrt(ħ / (M ω_m))`, and the
//! optical quadratures are normalized so that the one-sided vacuum spectrum
//! is exactly 1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Mirror mass M (kg).
    pub mass: f64,
    /// Mechanical resonance ω_m (rad/s).
    pub mech_freq: f64,
    /// Viscous damping rate γ_m (rad/s). Zero is allowed for structurally damped runs.
    pub mech_damping: f64,
    /// Cavity amplitude decay rate γ (rad/s).
    pub cavity_decay: f64,
    /// Arm length L (m).
    pub arm_length: f64,
    /// Circulating power P_c (W).
    pub circulating_power: f64,
    /// Laser wavelength λ (m).
    pub laser_wavelength: f64,
    /// Linear optomechanical coupling G (rad·s⁻¹·m⁻¹).
    pub coupling: f64,
    /// Detuning Δ (rad/s). Only the resonant case is supported.
    pub detuning: f64,
}

impl SystemParams {
    /// Reduced-cavity parameters fitted to the aLIGO quantum noise curve.
    pub fn aligo() -> Self {
        let circulating_power = 322.7e3;
        let arm_length = 3995.0;
        let laser_wavelength = 1064e-9;
        let coupling = coupling_from_power(circulating_power, arm_length, laser_wavelength)
            .expect("built-in aLIGO parameters are positive");
        Self {
            mass: 9.446,
            mech_freq: TWO_PI * 0.9991,
            mech_damping: TWO_PI * 1e-3,
            cavity_decay: TWO_PI * 424.6,
            arm_length,
            circulating_power,
            laser_wavelength,
            coupling,
            detuning: 0.0,
        }
    }

    /// Free-mass study parameters: the coupling is chosen so that the
    /// interaction frequency equals `omega_q`. The cavity is kept very broad
    /// so the adiabatic model is the relevant one.
    pub fn free_mass(omega_q: f64, mech_freq: f64, mech_damping: f64) -> Result<Self> {
        let base = Self::aligo();
        let cavity_decay = TWO_PI * 1e6;
        let coupling = coupling_for_interaction_frequency(omega_q, base.mass, cavity_decay)?;
        let p = Self {
            mech_freq,
            mech_damping,
            cavity_decay,
            coupling,
            circulating_power: power_for_coupling(
                coupling,
                base.arm_length,
                base.laser_wavelength,
            ),
            ..base
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass", self.mass),
            ("mech_freq", self.mech_freq),
            ("cavity_decay", self.cavity_decay),
            ("arm_length", self.arm_length),
            ("circulating_power", self.circulating_power),
            ("laser_wavelength", self.laser_wavelength),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.coupling.is_finite() && self.coupling >= 0.0) {
            return Err(Error::Domain(format!(
                "coupling must be non-negative, got {}",
                self.coupling
            )));
        }
        if !(self.mech_damping.is_finite() && self.mech_damping >= 0.0) {
            return Err(Error::Domain(format!(
                "mech_damping must be non-negative, got {}",
                self.mech_damping
            )));
        }
        if self.detuning != 0.0 {
            return Err(Error::Domain(format!(
                "detuned operation is not supported (Δ = {}); only Δ = 0 is stable by construction",
                self.detuning
            )));
        }
        Ok(())
    }

    pub fn derived(&self) -> DerivedScales {
        let omega_q = 2.0 * self.coupling * (HBAR / (self.mass * self.cavity_decay)).sqrt();
        DerivedScales {
            omega_q,
            alpha: omega_q * (self.mass / HBAR).sqrt(),
            x_zpf: (HBAR / (self.mass * self.mech_freq)).sqrt(),
        }
    }

    /// Returns a copy with the coupling rescaled to produce `omega_q`.
    pub fn with_interaction_frequency(&self, omega_q: f64) -> Result<Self> {
        let coupling = coupling_for_interaction_frequency(omega_q, self.mass, self.cavity_decay)?;
        Ok(Self {
            coupling,
            circulating_power: power_for_coupling(
                coupling,
                self.arm_length,
                self.laser_wavelength,
            ),
            ..*self
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedScales {
    /// Characteristic interaction frequency Ω_q (rad/s).
    pub omega_q: f64,
    /// Reduced drive coefficient α = Ω_q sqrt(M/ħ).
    pub alpha: f64,
    /// Zero-point position scale (m).
    pub x_zpf: f64,
}

impl DerivedScales {
    /// Free-mass SQL evaluated at `omega` for the given mass.
    pub fn sql(&self, omega: f64, mass: f64) -> Result<f64> {
        sql_free_mass(omega, mass)
    }
}

/// `G = sqrt(2 ω₀ P_c / (ħ L c))` with `ω₀ = 2πc/λ`.
pub fn coupling_from_power(power: f64, arm_length: f64, wavelength: f64) -> Result<f64> {
    for (name, v) in [
        ("circulating power", power),
        ("arm length", arm_length),
        ("wavelength", wavelength),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Domain(format!("{name} must be positive, got {v}")));
        }
    }
    let omega0 = TWO_PI * SPEED_OF_LIGHT / wavelength;
    Ok((2.0 * omega0 * power / (HBAR * arm_length * SPEED_OF_LIGHT)).sqrt())
}

fn power_for_coupling(coupling: f64, arm_length: f64, wavelength: f64) -> f64 {
    let omega0 = TWO_PI * SPEED_OF_LIGHT / wavelength;
    coupling * coupling * HBAR * arm_length * SPEED_OF_LIGHT / (2.0 * omega0)
}

/// `Ω_q = 2 G sqrt(ħ / (M γ))`.
pub fn interaction_frequency(coupling: f64, mass: f64, cavity_decay: f64) -> Result<f64> {
    if !(coupling >= 0.0 && mass > 0.0 && cavity_decay > 0.0) {
        return Err(Error::Domain(format!(
            "interaction frequency needs G ≥ 0, M > 0, γ > 0 (got {coupling}, {mass}, {cavity_decay})"
        )));
    }
    Ok(2.0 * coupling * (HBAR / (mass * cavity_decay)).sqrt())
}

/// Inverse of [`interaction_frequency`].
pub fn coupling_for_interaction_frequency(omega_q: f64, mass: f64, cavity_decay: f64) -> Result<f64> {
    if !(omega_q >= 0.0 && mass > 0.0 && cavity_decay > 0.0) {
        return Err(Error::Domain(format!(
            "cannot invert Ω_q = {omega_q} with M = {mass}, γ = {cavity_decay}"
        )));
    }
    Ok(omega_q / (2.0 * (HBAR / (mass * cavity_decay)).sqrt()))
}

/// Free-mass standard quantum limit `2ħ / (M Ω²)` in m²/Hz.
pub fn sql_free_mass(omega: f64, mass: f64) -> Result<f64> {
    if omega == 0.0 || !omega.is_finite() {
        return Err(Error::Domain("SQL diverges at Ω = 0".into()));
    }
    if !(mass > 0.0) {
        return Err(Error::Domain(format!("mass must be positive, got {mass}")));
    }
    Ok(2.0 * HBAR / (mass * omega * omega))
}
