//! TOML job configuration. Frequencies given in Hz carry an `_hz` suffix and
//! are converted to rad/s on resolution; everything else is SI.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::covariance::{IntegratorSettings, Partition, TimeGrid};
use crate::error::{Error, Result};
use crate::model::{coupling_for_interaction_frequency, coupling_from_power, SystemParams};
use crate::spectra::{
    aligo_resonances, read_psd_csv, FitTemplate, LigoForce, LigoSensing, NoiseModel,
};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Negativity,
    Sweep,
    Convergence,
    Mode,
    Fit,
    SelfCheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Aligo,
    FreeMass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub preset: Preset,
    pub mass: Option<f64>,
    pub mech_freq_hz: Option<f64>,
    pub mech_damping_hz: Option<f64>,
    pub cavity_decay_hz: Option<f64>,
    pub arm_length: Option<f64>,
    pub circulating_power: Option<f64>,
    pub laser_wavelength: Option<f64>,
    /// Sets the coupling so that Ω_q/2π equals this value; overrides power.
    pub interaction_freq_hz: Option<f64>,
    pub detuning: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            preset: Preset::Aligo,
            mass: None,
            mech_freq_hz: None,
            mech_damping_hz: None,
            cavity_decay_hz: None,
            arm_length: None,
            circulating_power: None,
            laser_wavelength: None,
            interaction_freq_hz: None,
            detuning: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Ligo,
    Suspension,
    White,
    Structural,
    Quiet,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub kind: NoiseKind,
    pub alpha_f1: f64,
    pub alpha_f2: f64,
    pub alpha_x1: f64,
    pub alpha_x2: f64,
    pub resonances: bool,
    pub tau_f: Option<f64>,
    pub omega_f_cut_hz: Option<f64>,
    pub tau_x1: Option<f64>,
    pub tau_x2: Option<f64>,
    pub omega_x_cut_hz: Option<f64>,
    pub tau_st: Option<f64>,
    pub omega_st_hz: Option<f64>,
    /// SQL crossing frequencies of the white and structural families.
    pub omega_f_hz: Option<f64>,
    pub omega_x_hz: Option<f64>,
    pub phi: f64,
    pub omega_c_hz: f64,
    pub viscous_hz: f64,
    pub force_csv: Option<PathBuf>,
    pub sensing_csv: Option<PathBuf>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            kind: NoiseKind::Ligo,
            alpha_f1: 1.0,
            alpha_f2: 1.0,
            alpha_x1: 1.0,
            alpha_x2: 1.0,
            resonances: false,
            tau_f: None,
            omega_f_cut_hz: None,
            tau_x1: None,
            tau_x2: None,
            omega_x_cut_hz: None,
            tau_st: None,
            omega_st_hz: None,
            omega_f_hz: None,
            omega_x_hz: None,
            phi: 0.05,
            omega_c_hz: 0.05,
            viscous_hz: 0.01,
            force_csv: None,
            sensing_csv: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub dt: f64,
    pub duration: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            dt: 2.5e-4,
            duration: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: String,
    #[serde(default)]
    pub values: Vec<f64>,
    /// Log-spaced range `[start, stop]` with `points` samples.
    pub log_range: Option<(f64, f64)>,
    pub points: Option<usize>,
}

impl Axis {
    pub fn samples(&self) -> Result<Vec<f64>> {
        let v = match (&self.log_range, self.points) {
            (Some((a, b)), Some(n)) if self.values.is_empty() => {
                if !(*a > 0.0 && *b > 0.0 && n >= 1) {
                    return Err(Error::Config(format!("axis '{}': invalid log range", self.name)));
                }
                if n == 1 {
                    vec![*a]
                } else {
                    let (la, lb) = (a.log10(), b.log10());
                    (0..n)
                        .map(|k| 10f64.powf(la + (lb - la) * k as f64 / (n - 1) as f64))
                        .collect()
                }
            }
            (None, None) => self.values.clone(),
            _ => {
                return Err(Error::Config(format!(
                    "axis '{}': give either values or log_range with points",
                    self.name
                )))
            }
        };
        if v.is_empty() {
            return Err(Error::Config(format!("axis '{}' is empty", self.name)));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub axes: Vec<Axis>,
    /// Store every covariance matrix in the cache directory.
    pub cache_covariance: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub dts: Vec<f64>,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            dts: vec![2e-3, 1e-3, 5e-4, 2.5e-4, 1e-4],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub csv: Option<PathBuf>,
    pub template: FitTemplate,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            csv: None,
            template: FitTemplate::LigoForce,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JobConfig {
    pub task: Task,
    pub partition: Partition,
    pub workers: usize,
    pub out: PathBuf,
    pub system: SystemConfig,
    pub noise: NoiseConfig,
    pub grid: GridConfig,
    pub integrator: IntegratorSettings,
    pub sweep: SweepConfig,
    pub convergence: ConvergenceConfig,
    pub fit: FitConfig,
}

impl Default for JobConfig {
    fn default() -> Self {
        Self {
            task: Task::Negativity,
            partition: Partition::CavityTraced,
            workers: 1,
            out: PathBuf::from("out"),
            system: SystemConfig::default(),
            noise: NoiseConfig::default(),
            grid: GridConfig::default(),
            integrator: IntegratorSettings::default(),
            sweep: SweepConfig::default(),
            convergence: ConvergenceConfig::default(),
            fit: FitConfig::default(),
        }
    }
}

/// Fully resolved inputs of one computation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedPoint {
    pub params: SystemParams,
    pub noise: NoiseModel,
    pub grid: TimeGrid,
    pub partition: Partition,
    pub integrator: IntegratorSettings,
}

impl JobConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: JobConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        // relative CSV paths are taken relative to the config file
        if let Some(dir) = path.parent() {
            for p in [&mut cfg.noise.force_csv, &mut cfg.noise.sensing_csv, &mut cfg.fit.csv]
                .into_iter()
                .flatten()
            {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        match self.task {
            Task::Sweep => {
                if self.sweep.axes.is_empty() || self.sweep.axes.len() > 2 {
                    return Err(Error::Config("sweeps need one or two axes".into()));
                }
                for a in &self.sweep.axes {
                    a.samples()?;
                    self.with_value(&a.name, a.samples()?[0])?;
                }
            }
            Task::Convergence if self.convergence.dts.is_empty() => {
                return Err(Error::Config("convergence needs at least one dt".into()));
            }
            Task::Fit if self.fit.csv.is_none() => {
                return Err(Error::Config("fit needs [fit] csv".into()));
            }
            _ => {}
        }
        if !matches!(self.task, Task::Fit | Task::SelfCheck) {
            self.resolve()?;
        }
        Ok(())
    }

    pub fn params(&self) -> Result<SystemParams> {
        let s = &self.system;
        let hz = |v: Option<f64>| v.map(|x| TWO_PI * x);
        let mut p = match s.preset {
            Preset::Aligo => SystemParams::aligo(),
            Preset::FreeMass => {
                let wq = hz(s.interaction_freq_hz).ok_or_else(|| {
                    Error::Config("the free_mass preset needs system.interaction_freq_hz".into())
                })?;
                SystemParams::free_mass(
                    wq,
                    hz(s.mech_freq_hz).unwrap_or(TWO_PI),
                    hz(s.mech_damping_hz).unwrap_or(TWO_PI * 0.01),
                )?
            }
        };
        if let Some(v) = s.mass {
            p.mass = v;
        }
        if let Some(v) = hz(s.mech_freq_hz) {
            p.mech_freq = v;
        }
        if let Some(v) = hz(s.mech_damping_hz) {
            p.mech_damping = v;
        }
        if let Some(v) = hz(s.cavity_decay_hz) {
            p.cavity_decay = v;
        }
        if let Some(v) = s.arm_length {
            p.arm_length = v;
        }
        if let Some(v) = s.circulating_power {
            p.circulating_power = v;
        }
        if let Some(v) = s.laser_wavelength {
            p.laser_wavelength = v;
        }
        p.detuning = s.detuning;
        if s.circulating_power.is_some() || s.arm_length.is_some() || s.laser_wavelength.is_some() {
            p.coupling = coupling_from_power(p.circulating_power, p.arm_length, p.laser_wavelength)?;
        }
        if let Some(wq) = hz(s.interaction_freq_hz) {
            p.coupling = coupling_for_interaction_frequency(wq, p.mass, p.cavity_decay)?;
        }
        p.validate()?;
        Ok(p)
    }

    pub fn noise_model(&self) -> Result<NoiseModel> {
        let n = &self.noise;
        let hz = |v: Option<f64>| v.map(|x| TWO_PI * x);
        let sensing = {
            let mut s = LigoSensing::aligo();
            s.tau_x1 = n.tau_x1.unwrap_or(s.tau_x1);
            s.tau_x2 = n.tau_x2.unwrap_or(s.tau_x2);
            s.omega_x = hz(n.omega_x_cut_hz).unwrap_or(s.omega_x);
            s.alpha_x1 = n.alpha_x1;
            s.alpha_x2 = n.alpha_x2;
            s
        };
        let need = |v: Option<f64>, name: &str| {
            hz(v).ok_or_else(|| Error::Config(format!("noise kind needs noise.{name}")))
        };
        let model = match n.kind {
            NoiseKind::Ligo => {
                let mut f = LigoForce::aligo();
                f.tau_f = n.tau_f.unwrap_or(f.tau_f);
                f.omega_f = hz(n.omega_f_cut_hz).unwrap_or(f.omega_f);
                f.alpha_f1 = n.alpha_f1;
                f.alpha_f2 = n.alpha_f2;
                if n.resonances {
                    f.resonances = aligo_resonances();
                }
                NoiseModel::LigoParam { force: f, sensing }
            }
            NoiseKind::Suspension => {
                let NoiseModel::SuspensionOnly { tau_st, omega_st, .. } = NoiseModel::aligo_no_seismic() else {
                    unreachable!()
                };
                NoiseModel::SuspensionOnly {
                    tau_st: n.tau_st.unwrap_or(tau_st),
                    omega_st: hz(n.omega_st_hz).unwrap_or(omega_st),
                    sensing,
                }
            }
            NoiseKind::White => NoiseModel::White {
                omega_f: need(n.omega_f_hz, "omega_f_hz")?,
                omega_x: need(n.omega_x_hz, "omega_x_hz")?,
            },
            NoiseKind::Structural => NoiseModel::Structural {
                omega_f: need(n.omega_f_hz, "omega_f_hz")?,
                omega_x: need(n.omega_x_hz, "omega_x_hz")?,
                phi: n.phi,
                omega_c: TWO_PI * n.omega_c_hz,
                viscous: TWO_PI * n.viscous_hz,
            },
            NoiseKind::Quiet => NoiseModel::quiet(),
            NoiseKind::Tabulated => NoiseModel::Tabulated {
                force: n.force_csv.as_ref().map(read_psd_csv).transpose()?,
                sensing: n.sensing_csv.as_ref().map(read_psd_csv).transpose()?,
            },
        };
        model.validate()?;
        Ok(model)
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::from_duration(self.grid.dt, self.grid.duration)
    }

    pub fn resolve(&self) -> Result<ResolvedPoint> {
        Ok(ResolvedPoint {
            params: self.params()?,
            noise: self.noise_model()?,
            grid: self.time_grid()?,
            partition: self.partition,
            integrator: self.integrator.clone(),
        })
    }

    /// Copy of the config with one named knob set. Ratio axes scale against
    /// the white/structural force frequency `noise.omega_f_hz`.
    pub fn with_value(&self, name: &str, value: f64) -> Result<JobConfig> {
        let mut c = self.clone();
        let omega_f = || {
            self.noise
                .omega_f_hz
                .ok_or_else(|| Error::Config(format!("axis '{name}' needs noise.omega_f_hz")))
        };
        match name {
            "alpha_f1" => c.noise.alpha_f1 = value,
            "alpha_f2" => c.noise.alpha_f2 = value,
            "alpha_x1" => c.noise.alpha_x1 = value,
            "alpha_x2" => c.noise.alpha_x2 = value,
            "tau_st" => c.noise.tau_st = Some(value),
            "omega_f_hz" => c.noise.omega_f_hz = Some(value),
            "omega_x_hz" => c.noise.omega_x_hz = Some(value),
            "omega_x_ratio" => c.noise.omega_x_hz = Some(value * omega_f()?),
            "omega_q_ratio" => c.system.interaction_freq_hz = Some(value * omega_f()?),
            "interaction_freq_hz" => c.system.interaction_freq_hz = Some(value),
            "phi" => c.noise.phi = value,
            "omega_c_hz" => c.noise.omega_c_hz = value,
            "mech_damping_hz" => c.system.mech_damping_hz = Some(value),
            "mech_freq_hz" => c.system.mech_freq_hz = Some(value),
            "dt" => c.grid.dt = value,
            "duration" => c.grid.duration = value,
            other => return Err(Error::Config(format!("unknown sweep axis '{other}'"))),
        }
        Ok(c)
    }
}
