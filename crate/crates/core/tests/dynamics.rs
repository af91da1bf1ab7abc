use num_complex::Complex64 as C64;
use optoent::dynamics::{cross_spectrum_at, transfer, transfer_adiabatic, transfer_full, Model};
use optoent::model::SystemParams;
use optoent::spectra::NoiseModel;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

fn frequencies() -> Vec<f64> {
    (0..40).map(|k| TWO_PI * 10f64.powf(-1.0 + 5.0 * k as f64 / 39.0)).collect()
}

#[test]
fn decoupled_output_is_vacuum() {
    let p = SystemParams { coupling: 0.0, ..SystemParams::aligo() };
    for w in frequencies() {
        let s = cross_spectrum_at(w, &p, &NoiseModel::aligo(), Model::Full).unwrap();
        assert!((s.s[4][4].re - 1.0).abs() < 1e-12);
        assert!(s.s[4][5].norm() < 1e-12);
        let t = transfer_full(w, &p, &NoiseModel::aligo()).unwrap();
        assert_eq!(t.t[5][2], C64::new(0.0, 0.0));
    }
}

#[test]
fn adiabatic_amplitude_quadrature_passes_through() {
    let p = SystemParams::aligo();
    for w in frequencies() {
        let t = transfer_adiabatic(w, &p, &NoiseModel::aligo()).unwrap();
        let v1 = t.t[Model::Adiabatic.v_row()];
        assert_eq!(v1, [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
    }
}

#[test]
fn adiabatic_white_phase_quadrature_is_above_shot_noise() {
    let p = SystemParams::free_mass(TWO_PI * 100.0, TWO_PI, TWO_PI * 0.01).unwrap();
    let noise = NoiseModel::White { omega_f: TWO_PI * 100.0, omega_x: TWO_PI * 150.0 };
    for w in frequencies() {
        let s = cross_spectrum_at(w, &p, &noise, Model::Adiabatic).unwrap();
        assert!(s.s[3][3].re >= 1.0, "S_v2v2({w}) = {}", s.s[3][3].re);
    }
}

#[test]
fn negative_frequency_conjugates_transfer() {
    let p = SystemParams::aligo();
    let structural = NoiseModel::Structural {
        omega_f: TWO_PI * 100.0,
        omega_x: TWO_PI * 200.0,
        phi: 0.05,
        omega_c: TWO_PI * 0.05,
        viscous: 0.0,
    };
    for noise in [NoiseModel::aligo(), structural] {
        for model in [Model::Full, Model::Adiabatic] {
            for w in frequencies() {
                let (a, b) = (transfer(w, &p, &noise, model).unwrap(), transfer(-w, &p, &noise, model).unwrap());
                for i in 0..model.outputs() {
                    for k in 0..4 {
                        let d = (a.t[i][k].conj() - b.t[i][k]).norm();
                        assert!(d <= 1e-12 * a.t[i][k].norm().max(1e-300), "{model:?} ({i},{k}) at {w}");
                    }
                }
            }
        }
    }
}

#[test]
fn lossless_structural_spring_approaches_viscous_free_mass() {
    // φ = 0 with a huge viscous rate against the full model with the same rate
    let mut p = SystemParams::aligo();
    p.cavity_decay = TWO_PI * 1e5;
    p.mech_damping = TWO_PI * 1e5;
    let noise = NoiseModel::Structural {
        omega_f: TWO_PI * 100.0,
        omega_x: TWO_PI * 200.0,
        phi: 0.0,
        omega_c: TWO_PI * 0.05,
        viscous: TWO_PI * 1e5,
    };
    let w = TWO_PI * 50.0;
    let a = transfer_adiabatic(w, &p, &noise).unwrap();
    let f = transfer_full(w, &p, &noise).unwrap();
    let (x, y) = (a.t[0][3].norm(), f.t[0][3].norm());
    assert!((x / y - 1.0).abs() < 5e-3, "{x} vs {y}");
}
