//! Photon budget before probe light pushes the atom out of the dipole trap.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{kelvin, ATOMIC_MASS_UNIT, PLANCK, RB87_D2_WAVELENGTH, RB87_MASS_AMU};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeGeometry {
    /// Single running-wave probe: every absorption kicks the atom the same way.
    #[default]
    Unidirectional,
    /// Counter-propagating beams: absorption kicks cancel on average and only
    /// recoil heating remains.
    Balanced,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossModel {
    /// Atom survives until the budget is spent, then is lost.
    #[default]
    Hard,
    /// Survival decays as `exp(-n / budget)`.
    Exponential,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrapModel {
    /// Trap depth U₀ (J).
    pub depth: f64,
    /// Single-photon recoil energy E_rec (J).
    pub recoil_energy: f64,
    pub geometry: ProbeGeometry,
    pub loss: LossModel,
}

/// `E_rec = h² / (2 m λ²)`.
pub fn recoil_energy(wavelength: f64, mass: f64) -> f64 {
    PLANCK * PLANCK / (2.0 * mass * wavelength * wavelength)
}

impl TrapModel {
    pub fn new(depth: f64, recoil_energy: f64, geometry: ProbeGeometry, loss: LossModel) -> Result<Self> {
        if !(depth > 0.0) {
            return Err(Error::invalid("trap.depth must be > 0"));
        }
        if !(recoil_energy > 0.0) {
            return Err(Error::invalid("trap.recoil_energy must be > 0"));
        }
        Ok(TrapModel {
            depth,
            recoil_energy,
            geometry,
            loss,
        })
    }

    /// 2 mK deep trap for ⁸⁷Rb probed on the D2 line.
    pub fn rb87(geometry: ProbeGeometry) -> Self {
        TrapModel {
            depth: kelvin(2e-3),
            recoil_energy: recoil_energy(RB87_D2_WAVELENGTH, RB87_MASS_AMU * ATOMIC_MASS_UNIT),
            geometry,
            loss: LossModel::Hard,
        }
    }
}

/// Expected number of scattered photons before the atom leaves the trap.
///
/// Unidirectional: n directed kicks carry kinetic energy n²·E_rec, so
/// n = ⌈√(U₀/E_rec)⌉. Balanced: each cycle deposits about 2·E_rec, so
/// n = ⌈U₀/(2·E_rec)⌉. Cooling by the probe is ignored, so the balanced value
/// is a lower bound.
pub fn pushout_photon_budget(trap: &TrapModel) -> u64 {
    let ratio = trap.depth / trap.recoil_energy;
    let n = match trap.geometry {
        ProbeGeometry::Unidirectional => ratio.sqrt(),
        ProbeGeometry::Balanced => ratio / 2.0,
    };
    (n.ceil() as u64).max(1)
}

pub fn survival_probability(n_scattered: f64, trap: &TrapModel) -> f64 {
    let budget = pushout_photon_budget(trap) as f64;
    match trap.loss {
        LossModel::Hard => {
            if n_scattered < budget {
                1.0
            } else {
                0.0
            }
        }
        LossModel::Exponential => (-n_scattered / budget).exp(),
    }
}
