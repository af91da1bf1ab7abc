//! PPT test, symplectic spectrum and logarithmic negativity of a covariance
//! set, plus the verdict logic that tolerates discretization error.
//!
//! Normalization: canonical pairs have commutator `i`, so the vacuum has
//! `V = I/2` and the Heisenberg bound is `V + iJ/2 ⪰ 0`. Symplectic
//! eigenvalues are reported as `ν̃ = 2|eig(J⁻¹V)|` so that vacuum gives 1.

mod modefit;
mod scan;

pub use modefit::{fit_mode, ModeFit};
pub use scan::{convergence_scan, ConvergencePoint, ConvergenceScan};

use faer::{c64, Mat, Side};
use serde::{Deserialize, Serialize};

use crate::covariance::{partial_transpose, CovarianceSet, Partition};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Entangled,
    Separable,
    Undecidable,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::Entangled => "entangled",
            Verdict::Separable => "separable",
            Verdict::Undecidable => "undecidable",
        }
    }
}

/// Decision rule on the physicality and PPT eigenvalues with exact zero
/// threshold.
pub fn verdict(lambda_b: f64, lambda_n: f64) -> Verdict {
    verdict_with_tolerance(lambda_b, lambda_n, 0.0)
}

/// Largest threshold at which a decision is still attempted. Eigenvalues of
/// `V + iJ/2` live on the vacuum scale 1; beyond this the matrix is not
/// resolved.
pub const MAX_RESOLVABLE_EPS: f64 = 1e-2;

/// As [`verdict`], treating `|λ| ≤ eps` as zero. Undecidable when `eps`
/// exceeds [`MAX_RESOLVABLE_EPS`].
pub fn verdict_with_tolerance(lambda_b: f64, lambda_n: f64, eps: f64) -> Verdict {
    if !(eps <= MAX_RESOLVABLE_EPS) {
        return Verdict::Undecidable;
    }
    let b_ok = lambda_b >= -eps;
    let n_neg = lambda_n < -eps;
    if b_ok && n_neg {
        Verdict::Entangled
    } else if !b_ok && n_neg && lambda_n.abs() >= 100.0 * lambda_b.abs() {
        Verdict::Entangled
    } else if b_ok && !n_neg {
        Verdict::Separable
    } else {
        Verdict::Undecidable
    }
}

/// Multiple of `u·‖V + iJ/2‖₂` taken as the eigensolver roundoff floor.
pub const ROUNDOFF_FACTOR: f64 = 4.0;
/// Safety factor on the measured first-order eigenvalue shift.
pub const REFINEMENT_SAFETY: f64 = 10.0;

struct MinEig {
    lambda: f64,
    vector: Vec<c64>,
    /// Spectral norm of `V + iJ/2`.
    norm: f64,
}

fn min_eig(set: &CovarianceSet, transposed: bool) -> Result<MinEig> {
    let s = if set.transposed == transposed { set.clone() } else { partial_transpose(set) };
    let eig = heisenberg_matrix(&s)
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let ev = eig.S().column_vector();
    let n = set.dim;
    Ok(MinEig {
        lambda: ev[0].re,
        vector: (0..n).map(|i| eig.U()[(i, 0)]).collect(),
        norm: ev[0].re.abs().max(ev[n - 1].re.abs()),
    })
}

/// `e† (V_ref − V) e`, the first-order eigenvalue change when `set` is
/// replaced by `reference`.
fn first_order_shift(set: &CovarianceSet, reference: &CovarianceSet, e: &[c64], transposed: bool) -> f64 {
    let a = if set.transposed == transposed { set.clone() } else { partial_transpose(set) };
    let b = if reference.transposed == transposed { reference.clone() } else { partial_transpose(reference) };
    let n = set.dim;
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let d = b.v[i * n + j] - a.v[i * n + j];
            if d != 0.0 {
                acc += d * (e[i].conj() * e[j]).re;
            }
        }
    }
    acc
}

fn check_reference(set: &CovarianceSet, reference: &CovarianceSet) -> Result<()> {
    if reference.dim != set.dim || reference.grid != set.grid || reference.partition != set.partition {
        return Err(Error::Precondition(
            "reference covariance must share grid and partition".into(),
        ));
    }
    Ok(())
}

fn threshold(set: &CovarianceSet, reference: Option<&CovarianceSet>, b: &MinEig, n: &MinEig) -> f64 {
    let floor = ROUNDOFF_FACTOR * f64::EPSILON * b.norm.max(n.norm).max(1.0);
    let measured = reference.map_or(0.0, |r| {
        let sb = first_order_shift(set, r, &b.vector, false).abs();
        let sn = first_order_shift(set, r, &n.vector, true).abs();
        REFINEMENT_SAFETY * sb.max(sn)
    });
    floor.max(measured)
}

/// Zero threshold for sign decisions on λ_B and λ_N. `reference` is the same
/// covariance integrated on a finer frequency grid; its first-order effect
/// on both eigenvalues, times a safety factor, estimates the quadrature
/// error. Without it only the eigensolver roundoff floor is used.
pub fn eps_num(set: &CovarianceSet, reference: Option<&CovarianceSet>) -> Result<f64> {
    if let Some(r) = reference {
        check_reference(set, r)?;
    }
    let b = min_eig(set, false)?;
    let n = min_eig(set, true)?;
    Ok(threshold(set, reference, &b, &n))
}

fn heisenberg_matrix(set: &CovarianceSet) -> Mat<c64> {
    let n = set.dim;
    Mat::from_fn(n, n, |i, j| {
        let jij = if i / 2 == j / 2 && i != j {
            if i % 2 == 0 {
                0.5
            } else {
                -0.5
            }
        } else {
            0.0
        };
        c64::new(set.v[i * n + j], jij)
    })
}

fn min_eigenvalue(set: &CovarianceSet) -> Result<f64> {
    let h = heisenberg_matrix(set);
    let ev = h
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    ev.first()
        .copied()
        .ok_or_else(|| Error::Eigen("empty matrix".into()))
}

/// Minimum eigenvalue of `V + iJ/2` (negative means non-physical).
pub fn physicality_lambda(set: &CovarianceSet) -> Result<f64> {
    let s = if set.transposed { partial_transpose(set) } else { set.clone() };
    min_eigenvalue(&s)
}

/// Minimum eigenvalue of `V_pt + iJ/2` (negative means entangled).
pub fn ppt_lambda(set: &CovarianceSet) -> Result<f64> {
    let s = if set.transposed { set.clone() } else { partial_transpose(set) };
    min_eigenvalue(&s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymplecticSpectrum {
    /// Ascending, one value per canonical pair.
    pub values: Vec<f64>,
    /// "hermitian" when V ≻ 0, otherwise "general".
    pub route: String,
}

/// Normalized symplectic eigenvalues of `V` (or of its partial transpose).
pub fn symplectic_spectrum(set: &CovarianceSet, transposed: bool) -> Result<SymplecticSpectrum> {
    let n = set.dim;
    if n % 2 != 0 {
        return Err(Error::Dimension(format!("odd dimension {n}")));
    }
    let v = set.to_faer();
    let eig = v
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let d: Vec<f64> = (0..n).map(|k| eig.S().column_vector()[k]).collect();
    let dmax = d.iter().cloned().fold(0.0, f64::max);
    // the transposed spectrum is that of V with the B2 sign flipped in J
    let flip = transposed != set.transposed;
    let jsign = |i: usize| if flip && i < 2 { -1.0 } else { 1.0 };

    if d[0] > 1e-13 * dmax.max(1e-300) {
        let u = eig.U();
        let half = Mat::<f64>::from_fn(n, n, |i, j| {
            let mut s = 0.0;
            for k in 0..n {
                s += u[(i, k)] * d[k].sqrt() * u[(j, k)];
            }
            s
        });
        // H = V^{1/2} (iJ) V^{1/2}; (iJ) couples columns 2p and 2p+1
        let mut hj = Mat::<c64>::zeros(n, n);
        for i in 0..n {
            for p in 0..n / 2 {
                let (a, b) = (2 * p, 2 * p + 1);
                let s = jsign(a);
                // (V^{1/2} iJ)_{i,b} = i V_{i,a} J_{a,b}; (…)_{i,a} = i V_{i,b} J_{b,a}
                hj[(i, b)] = c64::new(0.0, s * half[(i, a)]);
                hj[(i, a)] = c64::new(0.0, -s * half[(i, b)]);
            }
        }
        let halfc = Mat::<c64>::from_fn(n, n, |i, j| c64::new(half[(i, j)], 0.0));
        let h = &hj * &halfc;
        let h = Mat::<c64>::from_fn(n, n, |i, j| (h[(i, j)] + h[(j, i)].conj()) * 0.5);
        let ev = h
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Eigen(format!("{e:?}")))?;
        let mut values: Vec<f64> = ev[n / 2..].iter().map(|x| 2.0 * x.abs()).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        return Ok(SymplecticSpectrum {
            values,
            route: "hermitian".into(),
        });
    }

    log::warn!(
        "covariance matrix is not positive definite (min eigenvalue {:.3e}); using the general eigensolver",
        d[0]
    );
    // J⁻¹ = −J
    let vv = if flip { partial_transpose(set) } else { set.clone() };
    let jv = Mat::<f64>::from_fn(n, n, |i, j| {
        let p = i / 2;
        if i % 2 == 0 {
            -vv.v[(2 * p + 1) * n + j]
        } else {
            vv.v[(2 * p) * n + j]
        }
    });
    let ev = jv.eigenvalues().map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let mut mags: Vec<f64> = ev.iter().map(|z| 2.0 * z.norm()).collect();
    mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let values = mags.chunks(2).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
    Ok(SymplecticSpectrum {
        values,
        route: "general".into(),
    })
}

/// `E_N = Σ max(0, −log2 ν̃)`.
pub fn log_negativity(nu: &[f64]) -> f64 {
    nu.iter().map(|&x| (-x.log2()).max(0.0)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeFunction {
    pub times: Vec<f64>,
    /// `(re, im)` of `e1(t_α)` and `e2(t_α)`, normalized so `Σ|e|² Δt = 1`.
    pub e1: Vec<(f64, f64)>,
    pub e2: Vec<(f64, f64)>,
    /// Squared weight of the mechanical and cavity components before the
    /// field sector was renormalized.
    pub non_field_weight: f64,
}

impl ModeFunction {
    pub fn norm(&self, dt: f64) -> f64 {
        let s: f64 = self
            .e1
            .iter()
            .chain(&self.e2)
            .map(|(a, b)| a * a + b * b)
            .sum();
        (s * dt).sqrt()
    }
}

/// Field-sector profile of the eigenvector of `V_pt + iJ/2` with the most
/// negative eigenvalue.
/// Fails unless that eigenvalue is below `-eps`.
pub fn extract_mode(set: &CovarianceSet, eps: f64) -> Result<(f64, ModeFunction)> {
    let pt = if set.transposed { set.clone() } else { partial_transpose(set) };
    let h = heisenberg_matrix(&pt);
    let eig = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let lambda = eig.S().column_vector()[0].re;
    if lambda >= -eps {
        return Err(Error::Precondition(format!(
            "no negative PPT eigenvalue (λ_N = {lambda:.3e})"
        )));
    }
    let u = eig.U();
    let nq = set.q_dim();
    let bins = set.grid.bins;
    let total: f64 = (0..set.dim).map(|i| u[(i, 0)].norm_sqr()).sum();
    let field: f64 = (nq..set.dim).map(|i| u[(i, 0)].norm_sqr()).sum();
    // fix the global phase: largest e2 component real and positive
    let (kmax, _) = (0..bins)
        .map(|a| (a, u[(nq + 2 * a + 1, 0)].norm()))
        .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    let ph = u[(nq + 2 * kmax + 1, 0)];
    let rot = if ph.norm() > 0.0 { ph.conj() / ph.norm() } else { c64::new(1.0, 0.0) };
    let scale = 1.0 / (field.sqrt() * set.grid.dt.sqrt());
    let comp = |i: usize| {
        let z = u[(i, 0)] * rot * scale;
        (z.re, z.im)
    };
    Ok((
        lambda,
        ModeFunction {
            times: set.grid.times(),
            e1: (0..bins).map(|a| comp(nq + 2 * a)).collect(),
            e2: (0..bins).map(|a| comp(nq + 2 * a + 1)).collect(),
            non_field_weight: 1.0 - field / total,
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntanglementReport {
    pub partition: Partition,
    pub bins: usize,
    pub dt: f64,
    pub lambda_b: f64,
    pub lambda_n: f64,
    pub eps_num: f64,
    pub nu_min: f64,
    pub log_negativity: f64,
    /// Number of transposed symplectic eigenvalues below 1.
    pub below_one: usize,
    pub symplectic_route: String,
    pub verdict: Verdict,
    pub mode: Option<ModeFunction>,
    pub fit: Option<ModeFit>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AnalysisOptions {
    pub extract_mode: bool,
}

pub fn analyze(set: &CovarianceSet, options: AnalysisOptions) -> Result<EntanglementReport> {
    analyze_with_reference(set, None, options)
}

/// As [`analyze`], with the error threshold estimated against a covariance
/// integrated on a finer frequency grid (see [`eps_num`]).
pub fn analyze_with_reference(
    set: &CovarianceSet,
    reference: Option<&CovarianceSet>,
    options: AnalysisOptions,
) -> Result<EntanglementReport> {
    if let Some(r) = reference {
        check_reference(set, r)?;
    }
    let b = min_eig(set, false)?;
    let n = min_eig(set, true)?;
    let eps = threshold(set, reference, &b, &n);
    let (lambda_b, lambda_n) = (b.lambda, n.lambda);
    let spec = symplectic_spectrum(set, true)?;
    let nu_min = spec.values.first().copied().unwrap_or(f64::NAN);
    let verdict = verdict_with_tolerance(lambda_b, lambda_n, eps);
    let (mode, fit) = if options.extract_mode && lambda_n < -eps {
        let (_, mode) = extract_mode(set, eps)?;
        let fit = fit_mode(&mode).ok();
        (Some(mode), fit)
    } else {
        (None, None)
    };
    Ok(EntanglementReport {
        partition: set.partition,
        bins: set.grid.bins,
        dt: set.grid.dt,
        lambda_b,
        lambda_n,
        eps_num: eps,
        nu_min,
        log_negativity: log_negativity(&spec.values),
        below_one: spec.values.iter().filter(|&&x| x < 1.0).count(),
        symplectic_route: spec.route,
        verdict,
        mode,
        fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_rules() {
        assert_eq!(verdict(1e-9, -1e-3), Verdict::Entangled);
        assert_eq!(verdict(1e-9, 1e-4), Verdict::Separable);
        assert_eq!(verdict(-1e-3, -1.5e-3), Verdict::Undecidable);
        assert_eq!(verdict(-1e-5, -1e-2), Verdict::Entangled);
        assert_eq!(verdict(-1e-3, 1e-2), Verdict::Undecidable);
        assert_eq!(verdict_with_tolerance(-1e-7, -1e-7, 1e-6), Verdict::Separable);
        assert_eq!(verdict_with_tolerance(-0.2, -0.2, 0.3), Verdict::Undecidable);
        assert_eq!(verdict_with_tolerance(1.0, -1.0, f64::NAN), Verdict::Undecidable);
    }

    #[test]
    fn log_negativity_values() {
        assert_eq!(log_negativity(&[1.0, 2.0, 7.0]), 0.0);
        assert!((log_negativity(&[0.5, 1.5]) - 1.0).abs() < 1e-15);
        let r: f64 = 1.0;
        assert!((log_negativity(&[(-2.0 * r).exp()]) - 2.0 / std::f64::consts::LN_2).abs() < 1e-12);
    }
}
