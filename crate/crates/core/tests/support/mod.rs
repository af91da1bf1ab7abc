//! Randomized invariants shared by the property tests and the acceptance run.
#![allow(dead_code)]

use std::collections::HashMap;

use num_complex::Complex64 as C64;
use optoent::cli::job::{run_points, EvalOptions, Point};
use optoent::cli::JobConfig;
use optoent::covariance::{build_v_vv, partial_transpose, CovarianceSet, IntegratorSettings, TimeGrid};
use optoent::dynamics::{cross_spectrum_at, input_spectra, transfer, Model};
use optoent::entanglement::{eps_num, ppt_lambda, symplectic_spectrum, AnalysisOptions};
use optoent::model::SystemParams;
use optoent::oracles::thermal_state;
use optoent::spectra::{aligo_resonances, force_spectrum, sensing_spectrum, LigoForce, LigoSensing, NoiseModel};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

pub const CASES: u32 = 100;
const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

pub fn noise_model() -> impl Strategy<Value = NoiseModel> {
    let hz = |lo: f64, hi: f64| (lo.log10()..hi.log10()).prop_map(|e| TWO_PI * 10f64.powf(e));
    prop_oneof![
        (hz(10.0, 1e3), hz(10.0, 1e3)).prop_map(|(omega_f, omega_x)| NoiseModel::White { omega_f, omega_x }),
        (hz(10.0, 1e3), hz(10.0, 1e3), 0.001..0.2f64, hz(0.01, 1.0)).prop_map(|(omega_f, omega_x, phi, omega_c)| {
            NoiseModel::Structural {
                omega_f,
                omega_x,
                phi,
                omega_c,
                viscous: TWO_PI * 0.01,
            }
        }),
        (-18.0..0.0f64, 0.5..20.0f64, any::<bool>()).prop_map(|(a1, a2, res)| {
            let mut force = LigoForce::aligo();
            force.alpha_f1 = 10f64.powf(a1);
            force.alpha_f2 = a2;
            if res {
                force.resonances = aligo_resonances();
            }
            NoiseModel::LigoParam {
                force,
                sensing: LigoSensing::aligo(),
            }
        }),
        Just(NoiseModel::aligo_no_seismic()),
    ]
}

/// Nonzero angular frequency, log-uniform in magnitude.
pub fn frequency() -> impl Strategy<Value = f64> {
    (-2.0..5.0f64, any::<bool>()).prop_map(|(e, neg)| if neg { -TWO_PI * 10f64.powf(e) } else { TWO_PI * 10f64.powf(e) })
}

pub fn spectra_even_nonnegative(noise: &NoiseModel, omega: f64) -> Result<(), TestCaseError> {
    let m = SystemParams::aligo().mass;
    for f in [force_spectrum, sensing_spectrum] {
        let (a, b) = (f(noise, omega, m).unwrap(), f(noise, -omega, m).unwrap());
        prop_assert!(a >= 0.0 && a.is_finite(), "S({omega}) = {a}");
        prop_assert_eq!(a, b);
    }
    Ok(())
}

/// `T S_in T†` rebuilt independently, compared for Hermiticity, and the
/// reality condition `S(−Ω) = conj S(Ω)`.
pub fn output_hermitian_real(noise: &NoiseModel, omega: f64, adiabatic: bool) -> Result<(), TestCaseError> {
    let p = SystemParams::aligo();
    let model = if adiabatic { Model::Adiabatic } else { Model::Full };
    let t = transfer(omega, &p, noise, model).unwrap();
    let s_in = input_spectra(omega, &p, noise).unwrap();
    let s = cross_spectrum_at(omega, &p, noise, model).unwrap();
    let s_neg = cross_spectrum_at(-omega, &p, noise, model).unwrap();
    let n = s.n;
    let scale = (0..n).map(|i| s.s[i][i].re.abs()).fold(0.0, f64::max);
    for i in 0..n {
        for j in 0..n {
            let direct: C64 = (0..s_in.len()).map(|k| t.t[i][k] * s_in[k] * t.t[j][k].conj()).sum();
            let direct_t: C64 = (0..s_in.len()).map(|k| t.t[j][k] * s_in[k] * t.t[i][k].conj()).sum();
            prop_assert!((direct - direct_t.conj()).norm() <= 1e-12 * scale, "({i},{j}) not Hermitian");
            prop_assert!((s.s[i][j] - direct).norm() <= 1e-12 * scale);
            prop_assert!((s_neg.s[i][j] - s.s[i][j].conj()).norm() <= 1e-9 * scale, "({i},{j}) reality");
        }
    }
    Ok(())
}

pub fn vv_block_toeplitz(noise: &NoiseModel, bins: usize, dt: f64) -> Result<(), TestCaseError> {
    // interferometer sensing noise rises as Ω² and needs the cavity filter
    let (p, model) = match noise {
        NoiseModel::White { .. } | NoiseModel::Structural { .. } => (
            SystemParams::free_mass(TWO_PI * 100.0, TWO_PI, TWO_PI * 0.01).unwrap(),
            Model::Adiabatic,
        ),
        _ => (SystemParams::aligo(), Model::Full),
    };
    let grid = TimeGrid::new(bins, dt).unwrap();
    let vv = build_v_vv(&p, noise, grid, model, &IntegratorSettings::default()).unwrap();
    let n = 2 * bins;
    let scale = vv.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for a in 0..bins - 1 {
        for b in 0..bins - 1 {
            for l in 0..2 {
                for m in 0..2 {
                    let x = vv[(2 * a + l) * n + 2 * b + m];
                    let y = vv[(2 * (a + 1) + l) * n + 2 * (b + 1) + m];
                    prop_assert!((x - y).abs() <= 1e-12 * scale, "({a},{b},{l},{m}): {x} vs {y}");
                }
            }
        }
    }
    Ok(())
}

pub fn symmetric_set() -> impl Strategy<Value = CovarianceSet> {
    (1usize..6).prop_flat_map(|modes| {
        let dim = 2 * modes;
        prop::collection::vec(-10.0..10.0f64, dim * dim).prop_map(move |raw| {
            let mut s = thermal_state(0.0, modes).to_set();
            for i in 0..dim {
                for j in 0..dim {
                    s.v[i * dim + j] = 0.5 * (raw[i * dim + j] + raw[j * dim + i]);
                }
            }
            s
        })
    })
}

pub fn transpose_involution(set: &CovarianceSet) -> Result<(), TestCaseError> {
    let once = partial_transpose(set);
    let twice = partial_transpose(&once);
    prop_assert_eq!(&twice.v, &set.v);
    prop_assert_eq!(once.get(1, 1), set.get(1, 1));
    if set.dim > 2 {
        prop_assert_eq!(once.get(0, 2), set.get(0, 2));
        prop_assert_eq!(once.get(1, 2), -set.get(1, 2));
    }
    Ok(())
}

/// Symplectic generators on a pair of modes: two-mode squeezing, a beam
/// splitter and single-mode squeezing, applied to `V` as `S V Sᵀ`.
#[derive(Debug, Clone)]
pub enum Gate {
    TwoModeSqueeze { i: usize, j: usize, r: f64 },
    BeamSplitter { i: usize, j: usize, theta: f64 },
    Squeeze { i: usize, r: f64 },
}

fn gate_matrix(g: &Gate, dim: usize) -> Vec<f64> {
    let mut s = vec![0.0; dim * dim];
    for k in 0..dim {
        s[k * dim + k] = 1.0;
    }
    let mut set = |r: usize, c: usize, v: f64| s[r * dim + c] = v;
    match *g {
        Gate::TwoModeSqueeze { i, j, r } => {
            let (c, sh) = (r.cosh(), r.sinh());
            let (xi, pi, xj, pj) = (2 * i, 2 * i + 1, 2 * j, 2 * j + 1);
            set(xi, xi, c);
            set(pi, pi, c);
            set(xj, xj, c);
            set(pj, pj, c);
            set(xi, xj, sh);
            set(xj, xi, sh);
            set(pi, pj, -sh);
            set(pj, pi, -sh);
        }
        Gate::BeamSplitter { i, j, theta } => {
            let (c, sn) = (theta.cos(), theta.sin());
            for q in 0..2 {
                let (a, b) = (2 * i + q, 2 * j + q);
                set(a, a, c);
                set(b, b, c);
                set(a, b, sn);
                set(b, a, -sn);
            }
        }
        Gate::Squeeze { i, r } => {
            set(2 * i, 2 * i, (-r).exp());
            set(2 * i + 1, 2 * i + 1, r.exp());
        }
    }
    s
}

fn congruence(s: &[f64], v: &[f64], dim: usize) -> Vec<f64> {
    let mut sv = vec![0.0; dim * dim];
    for i in 0..dim {
        for k in 0..dim {
            let a = s[i * dim + k];
            if a != 0.0 {
                for j in 0..dim {
                    sv[i * dim + j] += a * v[k * dim + j];
                }
            }
        }
    }
    let mut out = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            out[i * dim + j] = (0..dim).map(|k| sv[i * dim + k] * s[j * dim + k]).sum();
        }
    }
    out
}

/// Physical Gaussian states: random gates applied to a thermal product.
pub fn gaussian_state() -> impl Strategy<Value = CovarianceSet> {
    (2usize..5).prop_flat_map(|modes| {
        let pair = (0..modes, 0..modes).prop_filter("distinct", |(i, j)| i != j);
        let gate = prop_oneof![
            (pair.clone(), 0.0..1.2f64).prop_map(|((i, j), r)| Gate::TwoModeSqueeze { i, j, r }),
            (pair, 0.0..std::f64::consts::PI).prop_map(|((i, j), theta)| Gate::BeamSplitter { i, j, theta }),
            (0..modes, -0.8..0.8f64).prop_map(|(i, r)| Gate::Squeeze { i, r }),
        ];
        (
            prop::collection::vec(0.0..1.5f64, modes),
            prop::collection::vec(gate, 1..6),
        )
            .prop_map(move |(occupation, gates)| {
                let dim = 2 * modes;
                let mut s = thermal_state(0.0, modes).to_set();
                for (k, n) in occupation.iter().enumerate() {
                    s.v[2 * k * dim + 2 * k] = n + 0.5;
                    s.v[(2 * k + 1) * dim + 2 * k + 1] = n + 0.5;
                }
                for g in &gates {
                    s.v = congruence(&gate_matrix(g, dim), &s.v, dim);
                }
                s
            })
    })
}

pub fn boundary_consistent(set: &CovarianceSet) -> Result<(), TestCaseError> {
    let lambda_n = ppt_lambda(set).unwrap();
    let eps = eps_num(set, None).unwrap();
    let nu_min = symplectic_spectrum(set, true).unwrap().values[0];
    if lambda_n.abs() > 10.0 * eps {
        prop_assert_eq!(
            (nu_min - 1.0).signum(),
            lambda_n.signum(),
            "ν̃_min = {}, λ_N = {}, ε = {}",
            nu_min,
            lambda_n,
            eps
        );
    }
    Ok(())
}

/// A small adiabatic free-mass sweep over the sensing ratio.
pub fn tiny_sweep(structural: bool, ratios: &[f64]) -> JobConfig {
    let kind = if structural { "structural" } else { "white" };
    let values: Vec<String> = ratios.iter().map(|r| format!("{r}")).collect();
    JobConfig::from_toml_str(&format!(
        r#"
task = "sweep"
partition = "adiabatic"
[system]
preset = "free_mass"
interaction_freq_hz = 100.0
[noise]
kind = "{kind}"
omega_f_hz = 100.0
omega_x_hz = 100.0
[grid]
dt = 1e-3
duration = 6e-3
[sweep]
axes = [{{ name = "omega_x_ratio", values = [{}] }}]
"#,
        values.join(", ")
    ))
    .unwrap()
}

pub fn parallel_matches_serial(structural: bool, ratios: &[f64], workers: usize) -> Result<(), TestCaseError> {
    let cfg = tiny_sweep(structural, ratios);
    let points: Vec<Point> = optoent::cli::job::expand(&cfg).unwrap();
    let opts = EvalOptions {
        cache_dir: None,
        force: true,
        analysis: AnalysisOptions::default(),
    };
    let serial = run_points(&points, 1, &HashMap::new(), &opts).unwrap();
    let parallel = run_points(&points, workers, &HashMap::new(), &opts).unwrap();
    prop_assert_eq!(serial.len(), parallel.len());
    for ((a, _), (b, _)) in serial.iter().zip(&parallel) {
        prop_assert_eq!(a.index, b.index);
        prop_assert_eq!(&a.config_hash, &b.config_hash);
        prop_assert_eq!(a.lambda_b, b.lambda_b);
        prop_assert_eq!(a.lambda_n, b.lambda_n);
        prop_assert_eq!(a.log_negativity, b.log_negativity);
        prop_assert_eq!(a.verdict, b.verdict);
    }
    Ok(())
}

pub fn ratios() -> impl Strategy<Value = (bool, Vec<f64>, usize)> {
    (any::<bool>(), prop::collection::vec(0.3..5.0f64, 1..4), 2usize..5)
}

pub fn runner() -> TestRunner {
    TestRunner::new(Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    })
}

fn outcome<T: std::fmt::Debug>(r: Result<(), proptest::test_runner::TestError<T>>) -> Result<(), String> {
    r.map_err(|e| e.to_string())
}

/// Runs every invariant `CASES` times and reports each one.
pub fn run_all() -> Vec<(&'static str, Result<(), String>)> {
    vec![
        (
            "spectra even and nonnegative",
            outcome(runner().run(&(noise_model(), frequency()), |(n, w)| spectra_even_nonnegative(&n, w))),
        ),
        (
            "output spectrum Hermitian and real",
            outcome(runner().run(&(noise_model(), frequency(), any::<bool>()), |(n, w, a)| {
                output_hermitian_real(&n, w, a)
            })),
        ),
        (
            "field block Toeplitz",
            outcome(runner().run(&(noise_model(), 2usize..10, 2e-4..2e-3f64), |(n, b, dt)| {
                vv_block_toeplitz(&n, b, dt)
            })),
        ),
        (
            "partial transpose involution",
            outcome(runner().run(&symmetric_set(), |s| transpose_involution(&s))),
        ),
        (
            "PPT and symplectic boundary agree",
            outcome(runner().run(&gaussian_state(), |s| boundary_consistent(&s))),
        ),
        (
            "parallel sweep equals serial",
            outcome(runner().run(&ratios(), |(s, r, w)| parallel_matches_serial(s, &r, w))),
        ),
    ]
}
