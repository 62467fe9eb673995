//! Run configuration: one TOML file with a section per model layer. Every rate
//! is entered as an ordinary frequency in MHz and converted to angular units
//! by the builders here.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::atomic::LevelScheme;
use crate::cavity::{purcell_fraction, CavitySystem, CouplingDistribution, DetectionChain};
use crate::counting::LeakModel;
use crate::dynamics::{recoil_energy, LossModel, ProbeGeometry, TrapModel};
use crate::error::{Error, Result, Violation};
use crate::scans::{FluorescenceSetup, TransmissionSetup};
use crate::units::{kelvin, mhz, ATOMIC_MASS_UNIT};

/// Seed used when none is given on the command line.
pub const DEFAULT_SEED: u64 = 0x5EED_2013;

/// Shipped defaults, also embedded in the binary.
pub const DEFAULT_CONFIG_TOML: &str = include_str!("../../../configs/default.toml");

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub atomic: AtomicSection,
    pub cavity: CavitySection,
    pub detection: DetectionSection,
    pub readout: ReadoutSection,
    pub transmission: TransmissionSection,
    pub trap: TrapSection,
    pub scenario: ScenarioSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AtomicSection {
    pub ground_splitting_mhz: f64,
    pub excited_splitting_32_mhz: f64,
    pub excited_splitting_21_mhz: f64,
    pub gamma_mhz: f64,
}

impl Default for AtomicSection {
    fn default() -> Self {
        AtomicSection {
            ground_splitting_mhz: 6834.682610904,
            excited_splitting_32_mhz: 267.0,
            excited_splitting_21_mhz: 157.0,
            gamma_mhz: 3.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CavitySection {
    pub g_mhz: f64,
    pub kappa_mhz: f64,
    pub delta_c_mhz: f64,
}

impl Default for CavitySection {
    fn default() -> Self {
        CavitySection {
            g_mhz: 3.0,
            kappa_mhz: 2.8,
            delta_c_mhz: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionSection {
    /// Overrides β; by default it follows from g, κ and γ.
    pub cavity_fraction: Option<f64>,
    pub mirror_fraction: f64,
    pub path_detector_efficiency: f64,
    pub dark_rate: f64,
    pub stray_rate: f64,
}

impl Default for DetectionSection {
    fn default() -> Self {
        DetectionSection {
            cavity_fraction: None,
            mirror_fraction: 0.90,
            path_detector_efficiency: 0.40,
            dark_rate: 25.0,
            stray_rate: 25.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReadoutSection {
    pub probe_duration_us: f64,
    pub delta_a_mhz: f64,
    /// Mean detected count of the bright state that fixes the probe power.
    pub target_mean: f64,
    pub threshold: usize,
    pub prep_error: f64,
    /// Mandel Q the bright-state broadening is calibrated to; 0 disables broadening.
    pub mandel_q: f64,
    pub quadrature_nodes: usize,
    pub leak_model: LeakModel,
    pub dark_scatter_rate: f64,
}

impl Default for ReadoutSection {
    fn default() -> Self {
        ReadoutSection {
            probe_duration_us: 85.0,
            delta_a_mhz: 0.0,
            target_mean: 8.0,
            threshold: 1,
            prep_error: 1e-3,
            mandel_q: 0.5,
            quadrature_nodes: 21,
            leak_model: LeakModel::ExponentialClock,
            dark_scatter_rate: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransmissionSection {
    pub probe_duration_us: f64,
    /// Mean transmitted count with the atom in F=1.
    pub dark_mean: f64,
    pub prep_error: f64,
    pub coupling: CouplingDistribution,
}

impl Default for TransmissionSection {
    fn default() -> Self {
        TransmissionSection {
            probe_duration_us: 300.0,
            dark_mean: 80.0,
            prep_error: 1e-3,
            coupling: CouplingDistribution::Fixed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrapSection {
    pub depth_mk: f64,
    pub recoil_wavelength_nm: f64,
    pub mass_amu: f64,
    pub geometry: ProbeGeometry,
    pub loss_model: LossModel,
}

impl Default for TrapSection {
    fn default() -> Self {
        TrapSection {
            depth_mk: 2.0,
            recoil_wavelength_nm: 780.241209686,
            mass_amu: 86.909180527,
            geometry: ProbeGeometry::Unidirectional,
            loss_model: LossModel::Hard,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub seed: u64,
    pub shots: u64,
    /// Total-variation bound between Monte Carlo and analytic pmfs at 1e5 shots.
    pub tv_tolerance: f64,
    pub fig1_cavity_eta: f64,
    pub fig1_na_eta: f64,
    /// Saturation of the fixed probe used for the scattered-photon curves.
    pub fig1_saturation: f64,
    pub fig1_min_scattered: f64,
    pub fig1_max_scattered: f64,
    pub fig1_points: usize,
    pub scan_step_mhz: f64,
    pub scan_max_mhz: f64,
    pub fig4b_detunings_mhz: Vec<f64>,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        ScenarioSection {
            seed: DEFAULT_SEED,
            shots: 100_000,
            tv_tolerance: 0.01,
            fig1_cavity_eta: 0.20,
            fig1_na_eta: 0.006,
            fig1_saturation: 0.1,
            fig1_min_scattered: 1.0,
            fig1_max_scattered: 10_000.0,
            fig1_points: 241,
            scan_step_mhz: 10.0,
            scan_max_mhz: 100.0,
            fig4b_detunings_mhz: vec![0.0, 20.0],
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string().trim_end().to_owned()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Every violated parameter constraint, keyed by config path.
    pub fn validate(&self) -> Vec<Violation> {
        let mut v = Checks::default();
        let a = &self.atomic;
        v.positive("atomic.ground_splitting_mhz", a.ground_splitting_mhz);
        v.positive("atomic.excited_splitting_32_mhz", a.excited_splitting_32_mhz);
        v.positive("atomic.excited_splitting_21_mhz", a.excited_splitting_21_mhz);
        v.positive("atomic.gamma_mhz", a.gamma_mhz);

        let c = &self.cavity;
        v.non_negative("cavity.g_mhz", c.g_mhz);
        v.positive("cavity.kappa", c.kappa_mhz);
        v.finite("cavity.delta_c_mhz", c.delta_c_mhz);

        let d = &self.detection;
        if let Some(beta) = d.cavity_fraction {
            v.probability("detection.cavity_fraction", beta);
        }
        v.probability("detection.mirror_fraction", d.mirror_fraction);
        v.probability("detection.path_detector_efficiency", d.path_detector_efficiency);
        v.non_negative("detection.dark_rate", d.dark_rate);
        v.non_negative("detection.stray_rate", d.stray_rate);
        let beta = d.cavity_fraction.unwrap_or(0.0).max(0.0);
        let eta = beta * d.mirror_fraction * d.path_detector_efficiency;
        if eta > 1.0 {
            v.push("detection", format!("efficiency product {eta:.4} must be <= 1"));
        }

        let r = &self.readout;
        v.positive("readout.probe_duration_us", r.probe_duration_us);
        v.finite("readout.delta_a_mhz", r.delta_a_mhz);
        if r.delta_a_mhz.abs() > a.excited_splitting_32_mhz {
            v.push("readout.delta_a_mhz", "must not exceed the F'=3 to F'=2 splitting");
        }
        v.positive("readout.target_mean", r.target_mean);
        v.probability("readout.prep_error", r.prep_error);
        v.non_negative("readout.mandel_q", r.mandel_q);
        if r.quadrature_nodes == 0 {
            v.push("readout.quadrature_nodes", "must be >= 1");
        }
        v.non_negative("readout.dark_scatter_rate", r.dark_scatter_rate);

        let t = &self.transmission;
        v.positive("transmission.probe_duration_us", t.probe_duration_us);
        v.positive("transmission.dark_mean", t.dark_mean);
        v.probability("transmission.prep_error", t.prep_error);

        let tr = &self.trap;
        v.positive("trap.depth_mk", tr.depth_mk);
        v.positive("trap.recoil_wavelength_nm", tr.recoil_wavelength_nm);
        v.positive("trap.mass_amu", tr.mass_amu);

        let s = &self.scenario;
        if s.shots == 0 {
            v.push("scenario.shots", "must be >= 1");
        }
        v.positive("scenario.tv_tolerance", s.tv_tolerance);
        v.probability("scenario.fig1_cavity_eta", s.fig1_cavity_eta);
        v.probability("scenario.fig1_na_eta", s.fig1_na_eta);
        v.positive("scenario.fig1_saturation", s.fig1_saturation);
        v.positive("scenario.fig1_min_scattered", s.fig1_min_scattered);
        if !(s.fig1_max_scattered > s.fig1_min_scattered) {
            v.push("scenario.fig1_max_scattered", "must be > scenario.fig1_min_scattered");
        }
        if s.fig1_points < 2 {
            v.push("scenario.fig1_points", "must be >= 2");
        }
        v.positive("scenario.scan_step_mhz", s.scan_step_mhz);
        v.non_negative("scenario.scan_max_mhz", s.scan_max_mhz);
        if s.scan_max_mhz > a.excited_splitting_32_mhz {
            v.push("scenario.scan_max_mhz", "must not exceed the F'=3 to F'=2 splitting");
        }
        for (i, &x) in s.fig4b_detunings_mhz.iter().enumerate() {
            v.finite(&format!("scenario.fig4b_detunings_mhz[{i}]"), x);
        }
        v.0
    }

    /// `Ok` iff `validate` finds nothing.
    pub fn check(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Violations(v))
        }
    }

    pub fn level_scheme(&self) -> Result<LevelScheme> {
        let a = &self.atomic;
        LevelScheme::new(
            mhz(a.ground_splitting_mhz),
            mhz(a.excited_splitting_32_mhz),
            mhz(a.excited_splitting_21_mhz),
            mhz(a.gamma_mhz),
        )
    }

    pub fn cavity_system(&self) -> Result<CavitySystem> {
        let c = &self.cavity;
        CavitySystem::new(
            mhz(c.g_mhz),
            mhz(c.kappa_mhz),
            mhz(self.atomic.gamma_mhz),
            mhz(self.readout.delta_a_mhz),
            mhz(c.delta_c_mhz),
        )
    }

    pub fn detection_chain(&self) -> Result<DetectionChain> {
        let sys = self.cavity_system()?;
        let d = &self.detection;
        let chain = DetectionChain {
            cavity_fraction: d
                .cavity_fraction
                .unwrap_or_else(|| purcell_fraction(sys.g, sys.kappa, sys.gamma)),
            mirror_fraction: d.mirror_fraction,
            path_detector_efficiency: d.path_detector_efficiency,
            dark_rate: d.dark_rate,
            stray_rate: d.stray_rate,
        };
        chain.validate()?;
        Ok(chain)
    }

    /// Fluorescence setup without broadening; scenarios calibrate `rate_spread`.
    pub fn fluorescence_setup(&self) -> Result<FluorescenceSetup> {
        let r = &self.readout;
        Ok(FluorescenceSetup {
            scheme: self.level_scheme()?,
            cavity: self.cavity_system()?,
            chain: self.detection_chain()?,
            probe_duration: r.probe_duration_us * 1e-6,
            prep_error: r.prep_error,
            rate_spread: 0.0,
            dark_scatter_rate: r.dark_scatter_rate,
            leak_model: r.leak_model,
            quadrature_nodes: r.quadrature_nodes,
        })
    }

    pub fn transmission_setup(&self) -> Result<TransmissionSetup> {
        let t = &self.transmission;
        Ok(TransmissionSetup {
            cavity: self.cavity_system()?,
            probe_duration: t.probe_duration_us * 1e-6,
            dark_mean: t.dark_mean,
            prep_error: t.prep_error,
            coupling: t.coupling,
        })
    }

    pub fn trap_model(&self) -> Result<TrapModel> {
        let t = &self.trap;
        TrapModel::new(
            kelvin(t.depth_mk * 1e-3),
            recoil_energy(t.recoil_wavelength_nm * 1e-9, t.mass_amu * ATOMIC_MASS_UNIT),
            t.geometry,
            t.loss_model,
        )
    }
}

#[derive(Default)]
struct Checks(Vec<Violation>);

impl Checks {
    fn push(&mut self, path: &str, msg: impl Into<String>) {
        self.0.push(Violation::new(path, msg));
    }

    fn finite(&mut self, path: &str, x: f64) {
        if !x.is_finite() {
            self.push(path, "must be finite");
        }
    }

    fn positive(&mut self, path: &str, x: f64) {
        if !(x > 0.0 && x.is_finite()) {
            self.push(path, "must be > 0");
        }
    }

    fn non_negative(&mut self, path: &str, x: f64) {
        if !(x >= 0.0 && x.is_finite()) {
            self.push(path, "must be >= 0");
        }
    }

    fn probability(&mut self, path: &str, x: f64) {
        if !(0.0..=1.0).contains(&x) {
            self.push(path, "must be in [0, 1]");
        }
    }
}
