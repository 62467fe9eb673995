//! Unit conversions. Rates are stored internally as angular frequencies (rad/s);
//! configuration files carry them as ordinary frequencies in MHz.

use std::f64::consts::TAU;

pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const PLANCK: f64 = 6.626_070_15e-34;
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// Mass of ⁸⁷Rb in atomic mass units.
pub const RB87_MASS_AMU: f64 = 86.909_180_527;
/// Vacuum wavelength of the ⁸⁷Rb D2 line.
pub const RB87_D2_WAVELENGTH: f64 = 780.241_209_686e-9;

#[inline]
pub fn mhz(f: f64) -> f64 {
    TAU * 1e6 * f
}

#[inline]
pub fn to_mhz(omega: f64) -> f64 {
    omega / (TAU * 1e6)
}

/// Energy of a temperature expressed in kelvin.
#[inline]
pub fn kelvin(t: f64) -> f64 {
    BOLTZMANN * t
}
