//! Atom–cavity formulas: complex cooperativity, modified excitation,
//! emission into the cavity mode, transmission and collection efficiency.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::units::mhz;

/// Single atom in a single-mode cavity driven by a weak probe.
/// All rates and detunings are angular frequencies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CavitySystem {
    pub g: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub delta_a: f64,
    pub delta_c: f64,
}

impl CavitySystem {
    pub fn new(g: f64, kappa: f64, gamma: f64, delta_a: f64, delta_c: f64) -> Result<Self> {
        let sys = CavitySystem {
            g,
            kappa,
            gamma,
            delta_a,
            delta_c,
        };
        sys.validate()?;
        Ok(sys)
    }

    /// g/2π = 3 MHz, (κ, γ)/2π = (2.8, 3.0) MHz, all detunings zero.
    pub fn reference() -> Self {
        CavitySystem {
            g: mhz(3.0),
            kappa: mhz(2.8),
            gamma: mhz(3.0),
            delta_a: 0.0,
            delta_c: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g >= 0.0) {
            return Err(Error::invalid("cavity.g must be >= 0"));
        }
        if !(self.kappa > 0.0) {
            return Err(Error::invalid("cavity.kappa must be > 0"));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::invalid("atomic.gamma must be > 0"));
        }
        if !(self.delta_a.is_finite() && self.delta_c.is_finite()) {
            return Err(Error::invalid("detunings must be finite"));
        }
        Ok(())
    }

    pub fn with_delta_a(self, delta_a: f64) -> Self {
        CavitySystem { delta_a, ..self }
    }

    pub fn with_g(self, g: f64) -> Self {
        CavitySystem { g, ..self }
    }

    /// ν = g² / [(Δa − iγ)(Δc − iκ)].
    pub fn cooperativity(&self) -> Complex64 {
        let atom = Complex64::new(self.delta_a, -self.gamma);
        let cav = Complex64::new(self.delta_c, -self.kappa);
        Complex64::new(self.g * self.g, 0.0) / (atom * cav)
    }

    /// |1 − ν|², the factor by which the cavity suppresses the atomic excitation.
    pub fn suppression(&self) -> f64 {
        (Complex64::new(1.0, 0.0) - self.cooperativity()).norm_sqr()
    }

    /// Photon rate into the cavity output field, `2κ g²/(Δc² + κ²) · P_e`.
    pub fn scattering_rate(&self, p_e: f64) -> f64 {
        2.0 * self.kappa * self.g * self.g / (self.delta_c * self.delta_c + self.kappa * self.kappa)
            * p_e
    }

    /// Rate of spontaneous emission into free space, `2γ · P_e`.
    pub fn free_space_rate(&self, p_e: f64) -> f64 {
        2.0 * self.gamma * p_e
    }

    /// Fraction of all scattered photons emitted into the cavity mode at this Δc.
    pub fn cavity_fraction(&self) -> f64 {
        let cav = self.scattering_rate(1.0);
        cav / (cav + self.free_space_rate(1.0))
    }

    /// Weak-probe transmission relative to the empty cavity, `1/|1 − ν|²`.
    pub fn transmission(&self) -> f64 {
        1.0 / self.suppression()
    }
}

/// Excitation probability of the intracavity atom, `P_free / |1 − ν|²`.
pub fn intracavity_excitation(p_free: f64, nu: Complex64) -> f64 {
    p_free / (Complex64::new(1.0, 0.0) - nu).norm_sqr()
}

/// Fraction of scattered photons emitted into the cavity: `(2g²/κ)/(2g²/κ + 2γ)`.
pub fn purcell_fraction(g: f64, kappa: f64, gamma: f64) -> f64 {
    let cavity = 2.0 * g * g / kappa;
    cavity / (cavity + 2.0 * gamma)
}

/// Scaling of `(g, κ)` with cavity length at fixed finesse and mirror geometry,
/// near-planar: g ∝ l^(−3/4), κ ∝ l^(−1), so 2g²/κ ∝ l^(−1/2).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LengthReference {
    pub length: f64,
    pub g: f64,
    pub kappa: f64,
}

pub fn coupling_vs_length(length: f64, reference: &LengthReference) -> Result<(f64, f64)> {
    if !(length > 0.0) {
        return Err(Error::invalid("cavity length must be > 0"));
    }
    if !(reference.length > 0.0) {
        return Err(Error::invalid("reference cavity length must be > 0"));
    }
    if length == reference.length {
        return Ok((reference.g, reference.kappa));
    }
    let ratio = length / reference.length;
    Ok((reference.g * ratio.powf(-0.75), reference.kappa / ratio))
}

/// Photon collection chain behind the cavity, plus false-count rates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionChain {
    /// β, probability a scattered photon enters the cavity mode.
    pub cavity_fraction: f64,
    /// Probability an intracavity photon leaves through the output mirror.
    pub mirror_fraction: f64,
    /// Fiber coupling times detector quantum efficiency.
    pub path_detector_efficiency: f64,
    /// Detector dark counts (1/s).
    pub dark_rate: f64,
    /// Stray-light counts (1/s).
    pub stray_rate: f64,
}

impl DetectionChain {
    /// Chain with β taken from rate competition in `sys`, default optics and count rates.
    pub fn for_cavity(sys: &CavitySystem) -> Self {
        DetectionChain {
            cavity_fraction: purcell_fraction(sys.g, sys.kappa, sys.gamma),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("detection.cavity_fraction", self.cavity_fraction),
            ("detection.mirror_fraction", self.mirror_fraction),
            ("detection.path_detector_efficiency", self.path_detector_efficiency),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("{name} must be in [0, 1]")));
            }
        }
        if !(self.dark_rate >= 0.0 && self.stray_rate >= 0.0) {
            return Err(Error::invalid("count rates must be >= 0"));
        }
        Ok(())
    }

    /// Total probability η that a scattered photon produces a detector click.
    pub fn efficiency(&self) -> f64 {
        self.cavity_fraction * self.mirror_fraction * self.path_detector_efficiency
    }

    /// Efficiency for a photon already in the cavity mode.
    pub fn output_efficiency(&self) -> f64 {
        self.mirror_fraction * self.path_detector_efficiency
    }

    pub fn background_rate(&self) -> f64 {
        self.dark_rate + self.stray_rate
    }
}

impl Default for DetectionChain {
    fn default() -> Self {
        DetectionChain {
            cavity_fraction: purcell_fraction(mhz(3.0), mhz(2.8), mhz(3.0)),
            mirror_fraction: 0.90,
            path_detector_efficiency: 0.40,
            dark_rate: 25.0,
            stray_rate: 25.0,
        }
    }
}

pub fn detection_budget(chain: &DetectionChain) -> f64 {
    chain.efficiency()
}

/// Spread of the coupling constant seen by the atom.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CouplingDistribution {
    /// Every shot sees `sys.g`.
    Fixed,
    /// Atom uniformly distributed along the standing wave: g = g_max |cos φ|,
    /// with `sys.g` interpreted as the rms value g_max/√2.
    StandingWave,
}

/// Transmission averaged over the coupling distribution.
pub fn averaged_transmission(sys: &CavitySystem, dist: CouplingDistribution) -> f64 {
    match dist {
        CouplingDistribution::Fixed => sys.transmission(),
        CouplingDistribution::StandingWave => {
            // Midpoint rule on a smooth periodic integrand converges geometrically.
            const NODES: usize = 512;
            let g_max = sys.g * std::f64::consts::SQRT_2;
            let h = FRAC_PI_2 / NODES as f64;
            (0..NODES)
                .map(|k| {
                    let phi = (k as f64 + 0.5) * h;
                    sys.with_g(g_max * phi.cos()).transmission()
                })
                .sum::<f64>()
                / NODES as f64
        }
    }
}
