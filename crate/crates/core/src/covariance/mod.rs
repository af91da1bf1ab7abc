//! Discretized covariance matrix of (mechanics, [cavity], outgoing field).
//!
//! Correlations are `C_ab(τ) = ½ ∫ dΩ/2π S_ab(Ω) e^{−iΩτ}` with the one-sided
//! symmetrized cross spectra from [`crate::dynamics`]. The time grid samples
//! the outgoing field at `t_α = −(α + ½)Δt`, and the blocks are
//!
//! ```text
//! V^QQ_JK        = C_JK(0)
//! V^Qv_J,mα      = √Δt C_{Q_J v_m}((α + ½)Δt)
//! V^vv_lα,mα'    = Δt C_lm((α' − α)Δt) + (P_lm / 2) δ_αα'
//! ```
//!
//! where `P` is the white plateau of the field spectra. Rows are ordered
//! `(B1, B2, [A1, A2], v1(t_0), v2(t_0), v1(t_1), …)`.

mod engine;
pub mod quadrature;
mod store;
mod tail;

pub use engine::{build_blocks, build_v_qq, build_v_qv, build_v_vv, Blocks};
pub use store::{load, save};

use serde::{Deserialize, Serialize};

use crate::dynamics::Model;
use crate::error::{Error, Result};
use crate::model::SystemParams;
use crate::spectra::NoiseModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub bins: usize,
    pub dt: f64,
}

impl TimeGrid {
    pub fn new(bins: usize, dt: f64) -> Result<Self> {
        if bins < 2 {
            return Err(Error::Domain(format!("time grid needs at least 2 bins, got {bins}")));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Domain(format!("time step must be positive, got {dt}")));
        }
        Ok(Self { bins, dt })
    }

    /// Grid covering `duration` with step `dt`; the bin count is rounded.
    pub fn from_duration(dt: f64, duration: f64) -> Result<Self> {
        if !(duration.is_finite() && duration > 0.0 && dt > 0.0) {
            return Err(Error::Domain(format!("invalid grid dt = {dt}, T = {duration}")));
        }
        Self::new((duration / dt).round() as usize, dt)
    }

    pub fn duration(&self) -> f64 {
        self.bins as f64 * self.dt
    }

    pub fn time(&self, alpha: usize) -> f64 {
        -(alpha as f64 + 0.5) * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.bins).map(|a| self.time(a)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    /// Mechanics versus cavity mode plus outgoing field.
    #[serde(alias = "full")]
    WithCavity,
    /// Mechanics versus outgoing field, cavity traced out.
    #[serde(alias = "traced")]
    CavityTraced,
    /// Mechanics versus outgoing field with the cavity eliminated adiabatically.
    Adiabatic,
}

impl Partition {
    pub fn model(self) -> Model {
        match self {
            Partition::Adiabatic => Model::Adiabatic,
            _ => Model::Full,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Partition::WithCavity => "full",
            Partition::CavityTraced => "traced",
            Partition::Adiabatic => "adiabatic",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "full" | "with_cavity" => Ok(Partition::WithCavity),
            "traced" | "cavity_traced" => Ok(Partition::CavityTraced),
            "adiabatic" => Ok(Partition::Adiabatic),
            other => Err(Error::Config(format!(
                "unknown partition '{other}' (expected traced, full or adiabatic)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorSettings {
    /// Gauss–Legendre nodes per panel.
    pub order: usize,
    /// Explicit cut-off in rad/s; otherwise `max(cavity_factor·γ, nyquist_factor·2π/Δt)`.
    pub omega_max: Option<f64>,
    pub cavity_factor: f64,
    pub nyquist_factor: f64,
    /// `1/|Ω|` spectral tails are cut at `band_limit_factor·2π/Δt` (0.5 is
    /// the Nyquist frequency of the time grid) or at the quadrature cut-off,
    /// whichever is lower.
    pub band_limit_factor: f64,
    /// Largest phase `Ω τ_max` swept across one panel.
    pub panel_phase: f64,
    /// Number of causal terms in the asymptotic model.
    pub tail_terms: usize,
    /// Relative bound on the neglected tail and on non-decaying QQ spectra.
    pub tail_tolerance: f64,
    /// Panel subdivision multiplier.
    pub density: usize,
    /// Neumaier-compensated accumulation of the frequency sums.
    pub compensated: bool,
    /// Rebuild at twice the density and fail if any entry moves by more
    /// than `refinement_tolerance` relative to its scale.
    pub verify_refinement: bool,
    pub refinement_tolerance: f64,
    /// Build a second covariance at twice the density to estimate the
    /// numerical zero threshold of the entanglement decision.
    pub error_estimate: bool,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            order: 16,
            omega_max: None,
            cavity_factor: 16.0,
            nyquist_factor: 4.0,
            band_limit_factor: 0.5,
            panel_phase: 1.5 * std::f64::consts::PI,
            tail_terms: 10,
            tail_tolerance: 1e-6,
            density: 1,
            compensated: false,
            verify_refinement: false,
            refinement_tolerance: 1e-6,
            error_estimate: true,
        }
    }
}

impl IntegratorSettings {
    /// The same settings at twice the panel density.
    pub fn refined(&self) -> Self {
        Self {
            density: 2 * self.density.max(1),
            verify_refinement: false,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceMeta {
    pub params: SystemParams,
    pub noise: NoiseModel,
    pub integrator: IntegratorSettings,
    pub omega_max: f64,
    pub nu: f64,
    pub nodes: usize,
    pub panels: usize,
    /// Largest neglected tail relative to the entry scale.
    pub worst_tail: f64,
    /// Largest `|c1|` of a `1/|Ω|` tail, cut at `band_limit`.
    pub band_limited_inverse_tail: f64,
    pub band_limit: f64,
    /// Viscous damping actually used by the mechanics.
    pub effective_mech_damping: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSet {
    pub dim: usize,
    /// Row-major symmetric matrix.
    pub v: Vec<f64>,
    pub grid: TimeGrid,
    pub partition: Partition,
    /// True after [`partial_transpose`].
    pub transposed: bool,
    pub meta: CovarianceMeta,
}

impl CovarianceSet {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.v[i * self.dim + j]
    }

    /// Number of mechanical + cavity rows preceding the field bins.
    pub fn q_dim(&self) -> usize {
        self.dim - 2 * self.grid.bins
    }

    pub fn to_faer(&self) -> faer::Mat<f64> {
        faer::Mat::from_fn(self.dim, self.dim, |i, j| self.v[i * self.dim + j])
    }

    pub fn commutator(&self) -> Vec<f64> {
        commutator(self.dim)
    }

    pub fn inf_norm(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.v[i * self.dim..(i + 1) * self.dim].iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.v.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Largest asymmetry `|V_ij − V_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }
}

/// Block-diagonal symplectic form with `[[0, 1], [−1, 0]]` on every
/// canonical pair; row-major `dim × dim`.
pub fn commutator(dim: usize) -> Vec<f64> {
    let mut j = vec![0.0; dim * dim];
    for p in 0..dim / 2 {
        let (a, b) = (2 * p, 2 * p + 1);
        j[a * dim + b] = 1.0;
        j[b * dim + a] = -1.0;
    }
    j
}

/// Assembles the covariance set for `partition` from blocks built with the
/// matching dynamical model.
pub fn assemble(partition: Partition, blocks: &Blocks) -> Result<CovarianceSet> {
    if blocks.model != partition.model() {
        return Err(Error::Dimension(format!(
            "blocks from the {:?} model cannot form the {} partition",
            blocks.model,
            partition.label()
        )));
    }
    let nq_all = blocks.nq;
    let keep: Vec<usize> = match partition {
        Partition::CavityTraced => vec![0, 1],
        _ => (0..nq_all).collect(),
    };
    let nq = keep.len();
    let nv = 2 * blocks.grid.bins;
    if blocks.qv.len() != nq_all * nv || blocks.vv.len() != nv * nv || blocks.qq.len() != nq_all * nq_all {
        return Err(Error::Dimension("block sizes do not match the grid".into()));
    }
    let dim = nq + nv;
    let mut v = vec![0.0; dim * dim];
    for (i, &qi) in keep.iter().enumerate() {
        for (j, &qj) in keep.iter().enumerate() {
            v[i * dim + j] = blocks.qq[qi * nq_all + qj];
        }
        for c in 0..nv {
            let x = blocks.qv[qi * nv + c];
            v[i * dim + nq + c] = x;
            v[(nq + c) * dim + i] = x;
        }
    }
    for r in 0..nv {
        let row = &blocks.vv[r * nv..(r + 1) * nv];
        v[(nq + r) * dim + nq..(nq + r + 1) * dim].copy_from_slice(row);
    }
    Ok(CovarianceSet {
        dim,
        v,
        grid: blocks.grid,
        partition,
        transposed: false,
        meta: blocks.meta.clone(),
    })
}

/// Builds the covariance set for one configuration.
pub fn build_covariance(
    params: &SystemParams,
    noise: &NoiseModel,
    grid: TimeGrid,
    partition: Partition,
    integrator: &IntegratorSettings,
) -> Result<CovarianceSet> {
    let blocks = build_blocks(params, noise, grid, partition.model(), integrator)?;
    assemble(partition, &blocks)
}

/// Negates the `B2` row and column, leaving the `(B2, B2)` entry alone.
pub fn partial_transpose(set: &CovarianceSet) -> CovarianceSet {
    let mut out = set.clone();
    let n = set.dim;
    for k in 0..n {
        if k != 1 {
            out.v[n + k] = -out.v[n + k];
            out.v[k * n + 1] = -out.v[k * n + 1];
        }
    }
    out.transposed = !set.transposed;
    out
}
