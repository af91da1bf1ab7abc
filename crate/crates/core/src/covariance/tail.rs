//! Asymptotic model of a cross spectrum beyond the quadrature cut-off.
//!
//! Above `Ω_max` every spectrum is fitted by
//!
//! ```text
//! S(Ω) ≈ P + c1/|Ω| + c3/|Ω|³ + Σ_k b_k (ν/(ν − iΩ))^k
//! ```
//!
//! with real coefficients, which is the general form compatible with
//! `S(−Ω) = conj S(Ω)`. The plateau `P` is the white part, turned into a
//! Kronecker delta on the time grid. The `b_k` terms are causal and have
//! closed-form transforms, so they are removed before quadrature and added
//! back exactly. The odd `|Ω|` powers stay in the integrand; `c1/|Ω|` is the
//! only piece whose integral does not converge, and it is band-limited.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

const SAMPLES: usize = 48;
const U_MIN: f64 = 1e-4;

pub(crate) struct TailBasis {
    pub nu: f64,
    pub omega_max: f64,
    pub terms: usize,
    /// Sample frequencies above `Ω_max`.
    pub omegas: Vec<f64>,
    /// `du` quadrature weights mapping `∫_{Ω_max}^∞ dΩ = Ω_max ∫ du / u²`.
    u_weights: Vec<f64>,
    us: Vec<f64>,
    pinv: DMatrix<f64>,
    scale: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct TailFit {
    pub plateau: f64,
    pub c1: f64,
    pub b: [f64; 16],
    /// Estimate of `∫_{Ω_max}^∞ |remainder| dΩ / 2π`, excluding `c1/|Ω|`.
    pub truncation: f64,
}

impl TailBasis {
    pub fn new(omega_max: f64, nu: f64, terms: usize) -> Self {
        assert!(terms <= 16);
        // Chebyshev points in u = Ω_max/Ω ∈ [U_MIN, 1]
        let us: Vec<f64> = (0..SAMPLES)
            .map(|j| {
                let t = ((2 * j + 1) as f64 * std::f64::consts::PI / (2 * SAMPLES) as f64).cos();
                U_MIN + (1.0 - U_MIN) * 0.5 * (1.0 + t)
            })
            .collect();
        let mut order: Vec<usize> = (0..SAMPLES).collect();
        order.sort_by(|&a, &b| us[a].partial_cmp(&us[b]).unwrap());
        let us: Vec<f64> = order.iter().map(|&i| us[i]).collect();
        let omegas: Vec<f64> = us.iter().map(|u| omega_max / u).collect();
        let mut u_weights = vec![0.0; SAMPLES];
        for j in 0..SAMPLES {
            let lo = if j == 0 { 0.0 } else { 0.5 * (us[j - 1] + us[j]) };
            let hi = if j + 1 == SAMPLES { 1.0 } else { 0.5 * (us[j] + us[j + 1]) };
            u_weights[j] = hi - lo;
        }

        let cols = 3 + terms;
        let mut a = DMatrix::<f64>::zeros(2 * SAMPLES, cols);
        for (j, &w) in omegas.iter().enumerate() {
            let row = Self::columns_at(w, nu, terms);
            for (c, v) in row.iter().enumerate() {
                a[(2 * j, c)] = v.re;
                a[(2 * j + 1, c)] = v.im;
            }
        }
        let scale: Vec<f64> = (0..cols).map(|c| a.column(c).norm().max(1e-300)).collect();
        for c in 0..cols {
            let s = scale[c];
            a.column_mut(c).scale_mut(1.0 / s);
        }
        let pinv = a.svd(true, true).pseudo_inverse(1e-13).expect("SVD of tail basis");
        Self {
            nu,
            omega_max,
            terms,
            omegas,
            u_weights,
            us,
            pinv,
            scale,
        }
    }

    fn columns_at(omega: f64, nu: f64, terms: usize) -> Vec<C64> {
        let w = omega.abs();
        let z = C64::new(nu, 0.0) / C64::new(nu, -omega);
        let mut cols = vec![C64::new(1.0, 0.0), C64::new(1.0 / w, 0.0), C64::new(w.powi(-3), 0.0)];
        let mut zk = z;
        for _ in 0..terms {
            cols.push(zk);
            zk *= z;
        }
        cols
    }

    /// Fits one cross spectrum sampled at `self.omegas`.
    pub fn fit(&self, samples: &[C64]) -> TailFit {
        let mut rhs = DVector::<f64>::zeros(2 * SAMPLES);
        for (j, s) in samples.iter().enumerate() {
            rhs[2 * j] = s.re;
            rhs[2 * j + 1] = s.im;
        }
        let x = &self.pinv * rhs;
        let coef: Vec<f64> = (0..x.len()).map(|c| x[c] / self.scale[c]).collect();
        let mut fit = TailFit {
            plateau: coef[0],
            c1: coef[1],
            ..Default::default()
        };
        fit.b[..self.terms].copy_from_slice(&coef[3..]);
        let mut trunc = 0.0;
        for (j, s) in samples.iter().enumerate() {
            let r = *s - self.smooth(&fit, self.omegas[j]) - fit.c1 / self.omegas[j];
            trunc += self.u_weights[j] * r.norm() / (self.us[j] * self.us[j]);
        }
        fit.truncation = trunc * self.omega_max / (2.0 * std::f64::consts::PI);
        fit
    }

    /// The part removed before quadrature: plateau plus causal terms.
    pub fn smooth(&self, fit: &TailFit, omega: f64) -> C64 {
        let z = C64::new(self.nu, 0.0) / C64::new(self.nu, -omega);
        let mut acc = C64::new(fit.plateau, 0.0);
        let mut zk = z;
        for k in 0..self.terms {
            acc += zk * fit.b[k];
            zk *= z;
        }
        acc
    }

    /// Closed-form `½ ∫ dΩ/2π Σ b_k (ν/(ν−iΩ))^k e^{−iΩτ}` (plateau excluded).
    pub fn causal_transform(&self, fit: &TailFit, tau: f64) -> f64 {
        if tau < 0.0 {
            return 0.0;
        }
        if tau == 0.0 {
            return 0.25 * self.nu * fit.b[0];
        }
        let x = self.nu * tau;
        let e = (-x).exp();
        if e == 0.0 {
            return 0.0;
        }
        let mut term = 1.0;
        let mut acc = 0.0;
        for k in 0..self.terms {
            if k > 0 {
                term *= x / k as f64;
            }
            acc += fit.b[k] * term;
        }
        0.5 * self.nu * e * acc
    }
}
