use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::quadrature::{build_grid, FrequencyGrid};
use super::tail::{TailBasis, TailFit};
use super::{CovarianceMeta, IntegratorSettings, TimeGrid};
use crate::dynamics::{cross_spectrum_at, Model, OutputCrossSpectrum};
use crate::error::{Error, Result};
use crate::model::SystemParams;
use crate::spectra::{loss_angle, NoiseModel};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
const CHUNK: usize = 1024;
const RESYNC: usize = 32;

/// Raw blocks before partitioning. `qv` is `nq × 2N` with column `2α + m`;
/// `vv` is `2N × 2N`.
#[derive(Debug, Clone)]
pub struct Blocks {
    pub model: Model,
    pub nq: usize,
    pub grid: TimeGrid,
    pub qq: Vec<f64>,
    pub qv: Vec<f64>,
    pub vv: Vec<f64>,
    /// White plateau of the field spectra `P_lm`.
    pub plateau: [[f64; 2]; 2],
    pub meta: CovarianceMeta,
}

struct Layout {
    nq: usize,
    r: usize,
    bins: usize,
}

impl Layout {
    // ordered output pairs whose correlations are needed
    fn pairs(&self) -> Vec<(usize, usize)> {
        let mut p = Vec::new();
        for a in 0..self.nq {
            for b in 0..self.nq {
                p.push((a, b));
            }
        }
        for a in 0..self.nq {
            for m in 0..2 {
                p.push((a, self.r + m));
            }
        }
        for l in 0..2 {
            for m in 0..2 {
                p.push((self.r + l, self.r + m));
            }
        }
        p
    }

    fn qq_index(&self, a: usize, b: usize) -> usize {
        a * self.nq + b
    }

    fn qv_index(&self, a: usize, m: usize) -> usize {
        self.nq * self.nq + 2 * a + m
    }

    fn vv_index(&self, l: usize, m: usize) -> usize {
        self.nq * self.nq + 2 * self.nq + 2 * l + m
    }

    /// Accumulator length: one slot per QQ pair, `bins` per QV and VV pair.
    fn acc_len(&self) -> usize {
        self.nq * self.nq + (2 * self.nq + 4) * self.bins
    }

    fn acc_offset(&self, pair: usize) -> usize {
        let nqq = self.nq * self.nq;
        if pair < nqq {
            pair
        } else {
            nqq + (pair - nqq) * self.bins
        }
    }
}

fn mechanical_half_width(params: &SystemParams, noise: &NoiseModel) -> (f64, f64) {
    let wm = params.mech_freq;
    let (viscous, loss) = match noise {
        NoiseModel::Structural {
            phi,
            omega_c,
            viscous,
            ..
        } => (*viscous, loss_angle(wm, *phi, *omega_c)),
        _ => (params.mech_damping, 0.0),
    };
    (viscous, (0.5 * (viscous + loss * wm)).max(1e-9 * wm))
}

fn plan(
    params: &SystemParams,
    noise: &NoiseModel,
    grid: &TimeGrid,
    model: Model,
    s: &IntegratorSettings,
) -> Result<(FrequencyGrid, f64, f64)> {
    let nyquist = s.nyquist_factor * TWO_PI / grid.dt;
    let omega_max = match (s.omega_max, model) {
        (Some(w), _) => w,
        (None, Model::Full) => nyquist.max(s.cavity_factor * params.cavity_decay),
        (None, Model::Adiabatic) => nyquist,
    };
    if !(omega_max.is_finite() && omega_max > 0.0) {
        return Err(Error::Integration(format!("invalid cut-off Ω_max = {omega_max}")));
    }
    let nu = match model {
        Model::Full => params.cavity_decay.max(omega_max / 32.0),
        Model::Adiabatic => omega_max / 32.0,
    };
    let (_, hw) = mechanical_half_width(params, noise);
    let mut features = vec![(params.mech_freq, hw), (0.0, nu), (0.0, params.mech_freq)];
    if model == Model::Full {
        features.push((0.0, params.cavity_decay));
    }
    features.extend(noise.features());
    let band = (s.band_limit_factor * TWO_PI / grid.dt).min(omega_max);
    if !(band > 0.0) {
        return Err(Error::Config("band_limit_factor must be positive".into()));
    }
    let tau_max = grid.duration();
    let fg = build_grid(
        omega_max,
        &features,
        &[band],
        s.panel_phase / tau_max,
        s.order,
        s.density,
    );
    Ok((fg, nu, band))
}

#[derive(Clone)]
struct Acc {
    sum: Vec<f64>,
    comp: Vec<f64>,
}

impl Acc {
    fn new(n: usize, compensated: bool) -> Self {
        Self {
            sum: vec![0.0; n],
            comp: if compensated { vec![0.0; n] } else { Vec::new() },
        }
    }

    #[inline(always)]
    fn add(&mut self, i: usize, x: f64) {
        if self.comp.is_empty() {
            self.sum[i] += x;
        } else {
            let s = self.sum[i];
            let t = s + x;
            if s.abs() >= x.abs() {
                self.comp[i] += (s - t) + x;
            } else {
                self.comp[i] += (x - t) + s;
            }
            self.sum[i] = t;
        }
    }

    fn merge(&mut self, other: &Acc) {
        for i in 0..self.sum.len() {
            self.add(i, other.sum[i]);
            if !other.comp.is_empty() {
                self.add(i, other.comp[i]);
            }
        }
    }

    fn total(&self, i: usize) -> f64 {
        self.sum[i] + self.comp.get(i).copied().unwrap_or(0.0)
    }
}

#[allow(clippy::too_many_arguments)]
fn accumulate_chunk(
    nodes: &[f64],
    weights: &[f64],
    params: &SystemParams,
    noise: &NoiseModel,
    model: Model,
    layout: &Layout,
    pairs: &[(usize, usize)],
    basis: &TailBasis,
    fits: &[TailFit],
    dt: f64,
    band: f64,
    compensated: bool,
) -> Result<Acc> {
    let n = layout.bins;
    let mut acc = Acc::new(layout.acc_len(), compensated);
    let mut yr = vec![0.0; n];
    let mut yi = vec![0.0; n];
    let nqq = layout.nq * layout.nq;
    for (&w, &wt) in nodes.iter().zip(weights) {
        let s: OutputCrossSpectrum = cross_spectrum_at(w, params, noise, model)?;
        let step = C64::from_polar(1.0, -w * dt);
        let mut y = C64::new(1.0, 0.0);
        for k in 0..n {
            if k % RESYNC == 0 {
                y = C64::from_polar(1.0, -w * dt * k as f64);
            }
            yr[k] = y.re;
            yi[k] = y.im;
            y *= step;
        }
        let half = C64::from_polar(1.0, -0.5 * w * dt);
        for (p, &(a, b)) in pairs.iter().enumerate() {
            let mut r = s.s[a][b] - basis.smooth(&fits[p], w);
            if w > band {
                r -= fits[p].c1 / w;
            }
            r *= wt;
            if p < nqq {
                acc.add(p, r.re);
                continue;
            }
            if b >= layout.r && a < layout.nq {
                r *= half;
            }
            let off = layout.acc_offset(p);
            if acc.comp.is_empty() {
                let dst = &mut acc.sum[off..off + n];
                for k in 0..n {
                    dst[k] += r.re * yr[k] - r.im * yi[k];
                }
            } else {
                for k in 0..n {
                    acc.add(off + k, r.re * yr[k] - r.im * yi[k]);
                }
            }
        }
    }
    Ok(acc)
}

/// Builds the QQ, QV and VV blocks for `model` on `grid`.
pub fn build_blocks(
    params: &SystemParams,
    noise: &NoiseModel,
    grid: TimeGrid,
    model: Model,
    settings: &IntegratorSettings,
) -> Result<Blocks> {
    params.validate()?;
    noise.validate()?;
    if settings.order == 0 || settings.tail_terms == 0 || settings.tail_terms > 16 {
        return Err(Error::Config("integrator order and tail terms must be in range".into()));
    }
    let nq = model.v_row();
    let layout = Layout {
        nq,
        r: model.v_row(),
        bins: grid.bins,
    };
    let pairs = layout.pairs();
    let (fgrid, nu, band) = plan(params, noise, &grid, model, settings)?;
    let basis = TailBasis::new(fgrid.omega_max, nu, settings.tail_terms);

    let tail_samples: Vec<OutputCrossSpectrum> = basis
        .omegas
        .iter()
        .map(|&w| cross_spectrum_at(w, params, noise, model))
        .collect::<Result<_>>()?;
    let fits: Vec<TailFit> = pairs
        .iter()
        .map(|&(a, b)| {
            let col: Vec<C64> = tail_samples.iter().map(|s| s.s[a][b]).collect();
            basis.fit(&col)
        })
        .collect();

    let chunks: Vec<Result<Acc>> = fgrid
        .nodes
        .par_chunks(CHUNK)
        .zip(fgrid.weights.par_chunks(CHUNK))
        .map(|(x, w)| {
            accumulate_chunk(
                x,
                w,
                params,
                noise,
                model,
                &layout,
                &pairs,
                &basis,
                &fits,
                grid.dt,
                band,
                settings.compensated,
            )
        })
        .collect();
    let mut acc = Acc::new(layout.acc_len(), settings.compensated);
    for c in chunks {
        acc.merge(&c?);
    }

    let n = grid.bins;
    let nqq = nq * nq;
    let corr = |p: usize, k: usize, tau: f64| -> f64 {
        acc.total(layout.acc_offset(p) + if p < nqq { 0 } else { k }) / TWO_PI
            + basis.causal_transform(&fits[p], tau)
    };

    // plateaus and scales
    let mut plateau = [[0.0; 2]; 2];
    for l in 0..2 {
        for m in 0..2 {
            let p = layout.vv_index(l, m);
            let q = layout.vv_index(m, l);
            plateau[l][m] = 0.5 * (fits[p].plateau + fits[q].plateau);
        }
    }
    let mut scale = vec![0.0; nq + 2];
    for a in 0..nq {
        scale[a] = corr(layout.qq_index(a, a), 0, 0.0).abs();
    }
    for l in 0..2 {
        scale[nq + l] = grid.dt * corr(layout.vv_index(l, l), 0, 0.0).abs() + 0.5 * plateau[l][l].abs();
    }
    let out_index = |o: usize| if o < nq { o } else { nq + (o - layout.r) };
    // field entries carry √Δt per index, as in the covariance blocks
    let weight = |o: usize| if o < nq { 1.0 } else { grid.dt.sqrt() };
    let tol = settings.tail_tolerance;
    let mut worst: f64 = 0.0;
    let mut inverse_tail: f64 = 0.0;
    for (p, &(a, b)) in pairs.iter().enumerate() {
        let sc = (scale[out_index(a)] * scale[out_index(b)]).sqrt().max(1e-300);
        let f = &fits[p];
        let neglected = f.truncation * weight(a) * weight(b);
        worst = worst.max(neglected / sc);
        if neglected > tol * sc {
            return Err(Error::Integration(format!(
                "spectrum ({a},{b}) has not settled at Ω_max = {:.4e} rad/s: neglected tail {:.3e} vs scale {:.3e}",
                fgrid.omega_max, neglected, sc
            )));
        }
        let both_q = a < nq && b < nq;
        let decays = f.plateau.abs() <= tol * sc && f.c1.abs() / band <= tol * sc;
        if both_q && !decays {
            return Err(Error::Integration(format!(
                "spectrum ({a},{b}) does not decay at high frequency (plateau {:.3e}, 1/|Ω| coefficient {:.3e})",
                f.plateau, f.c1
            )));
        }
        if !both_q {
            inverse_tail = inverse_tail.max(f.c1.abs());
        }
    }

    let mut qq = vec![0.0; nqq];
    for a in 0..nq {
        for b in 0..nq {
            let x = 0.5 * (corr(layout.qq_index(a, b), 0, 0.0) + corr(layout.qq_index(b, a), 0, 0.0));
            qq[a * nq + b] = x;
        }
    }

    let nv = 2 * n;
    let sdt = grid.dt.sqrt();
    let mut qv = vec![0.0; nq * nv];
    for a in 0..nq {
        for m in 0..2 {
            let p = layout.qv_index(a, m);
            for al in 0..n {
                let tau = (al as f64 + 0.5) * grid.dt;
                qv[a * nv + 2 * al + m] = sdt * corr(p, al, tau);
            }
        }
    }

    // lag table C_lm(kΔt), k ≥ 0
    let mut lag = vec![[[0.0; 2]; 2]; n];
    for (k, entry) in lag.iter_mut().enumerate() {
        let tau = k as f64 * grid.dt;
        for l in 0..2 {
            for m in 0..2 {
                entry[l][m] = grid.dt * corr(layout.vv_index(l, m), k, tau);
            }
        }
    }
    let zero = {
        let c = lag[0];
        let off = 0.5 * (c[0][1] + c[1][0]) + 0.5 * (plateau[0][1] + plateau[1][0]) * 0.5;
        [
            [c[0][0] + 0.5 * plateau[0][0], off],
            [off, c[1][1] + 0.5 * plateau[1][1]],
        ]
    };
    let mut vv = vec![0.0; nv * nv];
    for al in 0..n {
        for l in 0..2 {
            for m in 0..2 {
                vv[(2 * al + l) * nv + 2 * al + m] = zero[l][m];
            }
        }
        for ap in al + 1..n {
            let c = lag[ap - al];
            for l in 0..2 {
                for m in 0..2 {
                    let i = 2 * al + l;
                    let j = 2 * ap + m;
                    vv[i * nv + j] = c[l][m];
                    vv[j * nv + i] = c[l][m];
                }
            }
        }
    }

    let (effective_damping, _) = mechanical_half_width(params, noise);
    let meta = CovarianceMeta {
        params: *params,
        noise: noise.clone(),
        integrator: settings.clone(),
        omega_max: fgrid.omega_max,
        nu,
        nodes: fgrid.nodes.len(),
        panels: fgrid.panels,
        worst_tail: worst,
        band_limited_inverse_tail: inverse_tail,
        band_limit: band,
        effective_mech_damping: effective_damping,
    };
    let blocks = Blocks {
        model,
        nq,
        grid,
        qq,
        qv,
        vv,
        plateau,
        meta,
    };

    if settings.verify_refinement {
        let other = build_blocks(params, noise, grid, model, &settings.refined())?;
        compare_blocks(&blocks, &other, &scale, settings.refinement_tolerance)?;
    }
    Ok(blocks)
}

fn compare_blocks(a: &Blocks, b: &Blocks, scale: &[f64], tol: f64) -> Result<()> {
    let nq = a.nq;
    let nv = 2 * a.grid.bins;
    let sc = |i: usize| if i < nq { scale[i] } else { scale[nq + (i - nq) % 2] };
    let mut worst: f64 = 0.0;
    for i in 0..nq {
        for j in 0..nq {
            let d = (a.qq[i * nq + j] - b.qq[i * nq + j]).abs() / (sc(i) * sc(j)).sqrt().max(1e-300);
            worst = worst.max(d);
        }
        for c in 0..nv {
            let d = (a.qv[i * nv + c] - b.qv[i * nv + c]).abs()
                / (a.grid.dt.sqrt() * (sc(i) * sc(nq + c)).sqrt()).max(1e-300);
            worst = worst.max(d);
        }
    }
    for r in 0..nv {
        for c in 0..nv {
            let d = (a.vv[r * nv + c] - b.vv[r * nv + c]).abs() / (sc(nq + r) * sc(nq + c)).sqrt().max(1e-300);
            worst = worst.max(d);
        }
    }
    if worst > tol {
        return Err(Error::Integration(format!(
            "doubling the frequency grid moved entries by {worst:.3e} (tolerance {tol:.1e})"
        )));
    }
    Ok(())
}

/// `V^QQ`, `nq × nq` row-major.
pub fn build_v_qq(
    params: &SystemParams,
    noise: &NoiseModel,
    grid: TimeGrid,
    model: Model,
    settings: &IntegratorSettings,
) -> Result<Vec<f64>> {
    Ok(build_blocks(params, noise, grid, model, settings)?.qq)
}

/// `V^Qv`, `nq × 2N` row-major.
pub fn build_v_qv(
    params: &SystemParams,
    noise: &NoiseModel,
    grid: TimeGrid,
    model: Model,
    settings: &IntegratorSettings,
) -> Result<Vec<f64>> {
    Ok(build_blocks(params, noise, grid, model, settings)?.qv)
}

/// `V^vv`, `2N × 2N` row-major.
pub fn build_v_vv(
    params: &SystemParams,
    noise: &NoiseModel,
    grid: TimeGrid,
    model: Model,
    settings: &IntegratorSettings,
) -> Result<Vec<f64>> {
    Ok(build_blocks(params, noise, grid, model, settings)?.vv)
}
