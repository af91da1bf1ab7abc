//! Frequency-domain solution of the linearized Langevin equations.
//!
//! Fourier convention: `f(t) = ∫ dΩ/2π f(Ω) e^{-iΩt}`, so `d/dt → -iΩ` and a
//! causal response has its poles in the lower half plane. Inputs are ordered
//! `(u1, u2, nX, nF)`; outputs `(B1, B2, A1, A2, v1, v2)` for the full model
//! and `(B1, B2, v1, v2)` once the cavity is eliminated.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{SystemParams, HBAR};
use crate::spectra::{force_spectrum, loss_angle, sensing_spectrum, NoiseModel};

pub const INPUTS: usize = 4;
pub const MAX_OUTPUTS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Full,
    Adiabatic,
}

impl Model {
    pub fn outputs(self) -> usize {
        match self {
            Model::Full => 6,
            Model::Adiabatic => 4,
        }
    }

    /// Row of `v1` in the output vector; `v2` follows it.
    pub fn v_row(self) -> usize {
        match self {
            Model::Full => 4,
            Model::Adiabatic => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    pub omega: f64,
    pub model: Model,
    /// Rows beyond `model.outputs()` are zero.
    pub t: [[C64; INPUTS]; MAX_OUTPUTS],
}

impl TransferMatrix {
    pub fn rows(&self) -> usize {
        self.model.outputs()
    }
}

/// Hermitian one-sided cross-spectral matrix of the outputs at one Ω.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputCrossSpectrum {
    pub omega: f64,
    pub n: usize,
    pub s: [[C64; MAX_OUTPUTS]; MAX_OUTPUTS],
}

/// Mechanical susceptibility `x = χ F`. Viscous damping gives
/// `χ = 1 / (M(ω_m² − Ω²) − i M γ_m Ω)`. With a loss angle the spring becomes
/// `M ω_m² (1 − i φ(|Ω|) sgn Ω)` and the velocity term is dropped, leaving
/// only the optional regularizing rate carried by the noise model.
pub fn susceptibility(omega: f64, params: &SystemParams, noise: &NoiseModel) -> Result<C64> {
    let m = params.mass;
    let wm2 = params.mech_freq * params.mech_freq;
    let damping = viscous_damping(params, noise);
    let loss = match noise {
        NoiseModel::Structural { phi, omega_c, .. } => loss_angle(omega, *phi, *omega_c) * omega.signum(),
        _ => 0.0,
    };
    let d = C64::new(m * (wm2 - omega * omega), -m * damping * omega - m * wm2 * loss);
    if d.norm() == 0.0 {
        return Err(Error::Singular {
            omega,
            reason: "undamped mechanical resonance".into(),
        });
    }
    Ok(d.inv())
}

fn scaled_mechanics(omega: f64, params: &SystemParams, x: [C64; INPUTS]) -> ([C64; INPUTS], [C64; INPUTS]) {
    let x_zpf = params.derived().x_zpf;
    let p_scale = C64::new(0.0, -omega * params.mass * x_zpf / HBAR);
    let mut b1 = [C64::new(0.0, 0.0); INPUTS];
    let mut b2 = b1;
    for k in 0..INPUTS {
        b1[k] = x[k] / x_zpf;
        b2[k] = x[k] * p_scale;
    }
    (b1, b2)
}

/// Exact solution including the cavity mode.
pub fn transfer_full(omega: f64, params: &SystemParams, noise: &NoiseModel) -> Result<TransferMatrix> {
    let g = params.cavity_decay;
    let sg = (2.0 * g).sqrt();
    let a = C64::new(g, -omega).inv();
    let chi = susceptibility(omega, params, noise)?;
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);

    let a1 = [a * sg, zero, zero, zero];
    let drive = (2.0f64).sqrt() * HBAR * params.coupling;
    let x = [chi * drive * a1[0], zero, zero, chi];
    let k = (2.0f64).sqrt() * params.coupling;
    let a2 = [
        a * k * x[0],
        a * sg,
        a * k,
        a * k * x[3],
    ];
    let (b1, b2) = scaled_mechanics(omega, params, x);
    let unit = [[one, zero, zero, zero], [zero, one, zero, zero]];
    let mut v1 = [zero; INPUTS];
    let mut v2 = [zero; INPUTS];
    for c in 0..INPUTS {
        v1[c] = unit[0][c] - a1[c] * sg;
        v2[c] = unit[1][c] - a2[c] * sg;
    }
    Ok(TransferMatrix {
        omega,
        model: Model::Full,
        t: [b1, b2, a1, a2, v1, v2],
    })
}

/// Cavity eliminated in the limit γ ≫ Ω:
/// `v1 = u1`, `v2 = u2 + α(x + nX)`, `x = χ(ħα u1 + nF)`.
///
/// This is the γ → ∞ limit of [`transfer_full`] with both v rows negated,
/// a constant phase that leaves every entanglement measure unchanged.
pub fn transfer_adiabatic(omega: f64, params: &SystemParams, noise: &NoiseModel) -> Result<TransferMatrix> {
    let alpha = params.derived().alpha;
    let chi = susceptibility(omega, params, noise)?;
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let x = [chi * HBAR * alpha, zero, zero, chi];
    let (b1, b2) = scaled_mechanics(omega, params, x);
    let v1 = [one, zero, zero, zero];
    let v2 = [x[0] * alpha, one, C64::new(alpha, 0.0), x[3] * alpha];
    Ok(TransferMatrix {
        omega,
        model: Model::Adiabatic,
        t: [b1, b2, v1, v2, [zero; INPUTS], [zero; INPUTS]],
    })
}

pub fn transfer(omega: f64, params: &SystemParams, noise: &NoiseModel, model: Model) -> Result<TransferMatrix> {
    match model {
        Model::Full => transfer_full(omega, params, noise),
        Model::Adiabatic => transfer_adiabatic(omega, params, noise),
    }
}

/// One-sided spectra of the mutually uncorrelated inputs `(u1, u2, nX, nF)`.
pub fn input_spectra(omega: f64, params: &SystemParams, noise: &NoiseModel) -> Result<[f64; INPUTS]> {
    Ok([
        1.0,
        1.0,
        sensing_spectrum(noise, omega, params.mass)?,
        force_spectrum(noise, omega, params.mass)? + zero_point_force(params, noise),
    ])
}

/// Velocity damping rate acting on the mirror for this noise model.
pub fn viscous_damping(params: &SystemParams, noise: &NoiseModel) -> f64 {
    match noise {
        NoiseModel::Structural { viscous, .. } => *viscous,
        _ => params.mech_damping,
    }
}

/// White force noise `2ħMω_mγ_m` of a zero-temperature viscous bath. It keeps
/// the undriven mirror in its ground state and is negligible next to any
/// realistic classical force budget.
pub fn zero_point_force(params: &SystemParams, noise: &NoiseModel) -> f64 {
    2.0 * HBAR * params.mass * params.mech_freq * viscous_damping(params, noise)
}

/// `S_out = T diag(S_in) T†`, symmetrized to be exactly Hermitian.
pub fn output_cross_spectrum(t: &TransferMatrix, s_in: &[f64; INPUTS]) -> OutputCrossSpectrum {
    let n = t.rows();
    let mut s = [[C64::new(0.0, 0.0); MAX_OUTPUTS]; MAX_OUTPUTS];
    for i in 0..n {
        for j in i..n {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..INPUTS {
                acc += t.t[i][k] * s_in[k] * t.t[j][k].conj();
            }
            if i == j {
                acc.im = 0.0;
            }
            s[i][j] = acc;
            s[j][i] = acc.conj();
        }
    }
    OutputCrossSpectrum { omega: t.omega, n, s }
}

/// Convenience: transfer matrix and input spectra at one frequency.
pub fn cross_spectrum_at(
    omega: f64,
    params: &SystemParams,
    noise: &NoiseModel,
    model: Model,
) -> Result<OutputCrossSpectrum> {
    let t = transfer(omega, params, noise, model)?;
    Ok(output_cross_spectrum(&t, &input_spectra(omega, params, noise)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

    fn decoupled() -> SystemParams {
        SystemParams {
            coupling: 0.0,
            ..SystemParams::aligo()
        }
    }

    #[test]
    fn uncoupled_cavity_reflects_vacuum_unitarily() {
        let p = decoupled();
        let n = NoiseModel::aligo();
        for w in [-3e3, -1.0, 0.0, 0.5, 2.7e3, 1e6] {
            let t = transfer_full(w, &p, &n).unwrap();
            assert!((t.t[4][0].norm() - 1.0).abs() < 1e-14);
            assert_eq!(t.t[5][2], C64::new(0.0, 0.0));
            let quiet = [1.0, 1.0, 0.0, 0.0];
            let s = output_cross_spectrum(&t, &quiet);
            assert!((s.s[4][4].re - 1.0).abs() < 1e-14);
            assert!(s.s[4][5].norm() < 1e-15);
        }
    }

    /// Independent check at Ω = 0: solve the static Langevin balance
    /// for (x, A1, A2) by Gaussian elimination instead of substitution.
    #[test]
    fn static_response_matches_linear_solve() {
        let p = SystemParams::aligo();
        let n = NoiseModel::aligo();
        let g = p.cavity_decay;
        let k = 2f64.sqrt() * p.coupling;
        // unknowns (x, A1, A2); inputs unit nF only
        // 0 = -M ω_m² x + √2ħG A1 + nF
        // 0 = -γ A1 + √(2γ) u1
        // 0 = -γ A2 + √(2γ) u2 + √2 G (x + nX)
        let a = DMatrix::from_row_slice(
            3,
            3,
            &[
                -p.mass * p.mech_freq * p.mech_freq,
                HBAR * k,
                0.0,
                0.0,
                -g,
                0.0,
                k,
                0.0,
                -g,
            ],
        );
        let rhs = DVector::from_vec(vec![-1.0, 0.0, 0.0]);
        let sol = a.lu().solve(&rhs).unwrap();
        let t = transfer_full(0.0, &p, &n).unwrap();
        let x_zpf = p.derived().x_zpf;
        let expected = (p.mass * p.mech_freq / HBAR).sqrt() / (p.mass * p.mech_freq * p.mech_freq);
        assert!((t.t[0][3].re - expected).abs() < 1e-12 * expected);
        assert!((sol[0] / x_zpf - expected).abs() < 1e-12 * expected);
        assert!((t.t[3][3].re - sol[2]).abs() < 1e-12 * sol[2].abs());
    }

    #[test]
    fn adiabatic_matches_full_for_broad_cavity() {
        let mut p = SystemParams::free_mass(TWO_PI * 100.0, TWO_PI, TWO_PI * 0.01).unwrap();
        p = SystemParams {
            cavity_decay: TWO_PI * 1e5,
            ..p
        }
        .with_interaction_frequency(TWO_PI * 100.0)
        .unwrap();
        let n = NoiseModel::White {
            omega_f: TWO_PI * 100.0,
            omega_x: TWO_PI * 100.0,
        };
        let w = TWO_PI * 50.0;
        let f = transfer_full(w, &p, &n).unwrap();
        let a = transfer_adiabatic(w, &p, &n).unwrap();
        for c in 0..INPUTS {
            for (rf, ra, sign) in [(0, 0, 1.0), (1, 1, 1.0), (4, 2, -1.0), (5, 3, -1.0)] {
                let d = (f.t[rf][c] - a.t[ra][c] * sign).norm();
                let scale = a.t[ra][c].norm().max(1e-300);
                assert!(d <= 0.005 * scale || d < 1e-12, "row {ra} col {c}: {d} vs {scale}");
            }
        }
    }

    #[test]
    fn adiabatic_v1_is_the_input() {
        let p = SystemParams::free_mass(TWO_PI * 100.0, TWO_PI, 0.0).unwrap();
        let n = NoiseModel::Structural {
            omega_f: TWO_PI * 100.0,
            omega_x: TWO_PI * 200.0,
            phi: 0.05,
            omega_c: TWO_PI * 0.05,
            viscous: 0.0,
        };
        let t = transfer_adiabatic(13.0, &p, &n).unwrap();
        assert_eq!(t.t[2], [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
    }

    #[test]
    fn structural_susceptibility_is_causal_and_real() {
        let p = SystemParams::free_mass(TWO_PI * 100.0, TWO_PI, 0.0).unwrap();
        let n = NoiseModel::Structural {
            omega_f: TWO_PI * 100.0,
            omega_x: TWO_PI * 200.0,
            phi: 0.05,
            omega_c: TWO_PI * 0.05,
            viscous: 0.0,
        };
        for w in [0.2, TWO_PI, 40.0] {
            let a = susceptibility(w, &p, &n).unwrap();
            let b = susceptibility(-w, &p, &n).unwrap();
            assert!((a - b.conj()).norm() < 1e-15 * a.norm());
            // dissipation: Im χ has the sign of Ω
            assert!(a.im > 0.0);
        }
    }

    #[test]
    fn undamped_resonance_is_singular() {
        let p = SystemParams {
            mech_damping: 0.0,
            ..SystemParams::aligo()
        };
        let r = susceptibility(p.mech_freq, &p, &NoiseModel::aligo());
        assert!(matches!(r, Err(Error::Singular { .. })));
    }
}
