//! ⁸⁷Rb D2 hyperfine structure: line strengths, decay branching and
//! saturated-Lorentzian excitation of the probe and leak transitions.

use serde::{Deserialize, Serialize};

use crate::angular::wigner_6j;
use crate::error::{Error, Result};
use crate::units::mhz;

// Doubled angular momenta of the 5S1/2 -> 5P3/2 transition in ⁸⁷Rb.
const TWO_J_GROUND: i32 = 1;
const TWO_J_EXCITED: i32 = 3;
const TWO_I: i32 = 3;
const TWO_F_BRIGHT: i32 = 4;
const TWO_F_DARK: i32 = 2;

/// Excited hyperfine levels reachable from the bright F=2 ground state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExcitedLevel {
    F1,
    F2,
    F3,
}

impl ExcitedLevel {
    pub const ALL: [ExcitedLevel; 3] = [ExcitedLevel::F1, ExcitedLevel::F2, ExcitedLevel::F3];

    pub fn f(self) -> u32 {
        match self {
            ExcitedLevel::F1 => 1,
            ExcitedLevel::F2 => 2,
            ExcitedLevel::F3 => 3,
        }
    }

    fn index(self) -> usize {
        self.f() as usize - 1
    }
}

/// Relative strength of the `F -> F'` component of a `J -> J'` line,
/// `(2F'+1)(2J+1){J J' 1; F' F I}²`. Summed over `F'` this is one.
pub fn hyperfine_line_strength(two_j: i32, two_jp: i32, two_i: i32, two_f: i32, two_fp: i32) -> f64 {
    let w = wigner_6j([two_j, two_jp, 2, two_fp, two_f, two_i]);
    (two_fp + 1) as f64 * (two_j + 1) as f64 * w * w
}

/// Probability that `F'` decays to ground level `F`,
/// `(2F+1)(2J'+1){J J' 1; F' F I}²`.
pub fn hyperfine_branching(two_j: i32, two_jp: i32, two_i: i32, two_fp: i32, two_f: i32) -> f64 {
    let w = wigner_6j([two_j, two_jp, 2, two_fp, two_f, two_i]);
    (two_f + 1) as f64 * (two_jp + 1) as f64 * w * w
}

/// Polarization-averaged strengths of `F=2 -> F'`, normalized to sum to one.
/// Indexed by `F' - 1`.
pub fn line_strengths() -> [f64; 3] {
    let raw = ExcitedLevel::ALL.map(|l| {
        hyperfine_line_strength(TWO_J_GROUND, TWO_J_EXCITED, TWO_I, TWO_F_BRIGHT, 2 * l.f() as i32)
    });
    let total: f64 = raw.iter().sum();
    raw.map(|s| s / total)
}

/// Probability that each `F'` decays into the dark `F=1` level. Indexed by `F' - 1`.
pub fn branching_to_dark() -> [f64; 3] {
    ExcitedLevel::ALL.map(|l| match l {
        // ΔF = 2 is forbidden; keep it an exact zero.
        ExcitedLevel::F3 => 0.0,
        _ => hyperfine_branching(TWO_J_GROUND, TWO_J_EXCITED, TWO_I, 2 * l.f() as i32, TWO_F_DARK),
    })
}

/// Hyperfine level structure and decay rate of the D2 line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelScheme {
    /// Ground-state hyperfine splitting (rad/s).
    pub ground_splitting: f64,
    /// F'=3 to F'=2 splitting (rad/s).
    pub excited_splitting_32: f64,
    /// F'=2 to F'=1 splitting (rad/s).
    pub excited_splitting_21: f64,
    /// Atomic polarization decay rate γ (rad/s).
    pub gamma: f64,
    line_strengths: [f64; 3],
    branching: [f64; 3],
}

impl LevelScheme {
    pub fn new(
        ground_splitting: f64,
        excited_splitting_32: f64,
        excited_splitting_21: f64,
        gamma: f64,
    ) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::invalid("atomic.gamma must be > 0"));
        }
        if !(excited_splitting_32 > 0.0 && excited_splitting_21 > 0.0) {
            return Err(Error::invalid("excited-state splittings must be > 0"));
        }
        if !(ground_splitting > 0.0) {
            return Err(Error::invalid("atomic.ground_splitting must be > 0"));
        }
        Ok(LevelScheme {
            ground_splitting,
            excited_splitting_32,
            excited_splitting_21,
            gamma,
            line_strengths: line_strengths(),
            branching: branching_to_dark(),
        })
    }

    /// Tabulated ⁸⁷Rb values: 6.834 GHz ground splitting, 267 MHz and 157 MHz
    /// excited splittings, γ/2π = 3 MHz.
    pub fn rb87() -> Self {
        Self::new(mhz(6834.682_610_904), mhz(267.0), mhz(157.0), mhz(3.0))
            .expect("tabulated constants are valid")
    }

    /// Energy of `F'` below F'=3 (rad/s).
    pub fn excited_offset(&self, level: ExcitedLevel) -> f64 {
        match level {
            ExcitedLevel::F3 => 0.0,
            ExcitedLevel::F2 => self.excited_splitting_32,
            ExcitedLevel::F1 => self.excited_splitting_32 + self.excited_splitting_21,
        }
    }

    pub fn line_strength(&self, level: ExcitedLevel) -> f64 {
        self.line_strengths[level.index()]
    }

    pub fn branching_to_dark(&self, level: ExcitedLevel) -> f64 {
        self.branching[level.index()]
    }
}

impl Default for LevelScheme {
    fn default() -> Self {
        Self::rb87()
    }
}

/// Steady-state excited population of a driven two-level atom,
/// `(s/2) / (1 + s + (Δ/γ)²)`.
pub fn free_excitation_probability(s: f64, delta_a: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::invalid("gamma must be > 0"));
    }
    if !(s >= 0.0) {
        return Err(Error::invalid("saturation parameter must be >= 0"));
    }
    let x = delta_a / gamma;
    Ok(0.5 * s / (1.0 + s + x * x))
}

/// An off-resonant excitation path out of the cycling transition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LeakChannel {
    pub level: ExcitedLevel,
    /// Excitation rate of this level relative to F'=3 at the same probe.
    pub relative_rate: f64,
    /// Probability that a decay from this level ends in the dark state.
    pub branch_to_dark: f64,
}

impl LeakChannel {
    pub fn dark_rate(&self) -> f64 {
        self.relative_rate * self.branch_to_dark
    }
}

/// Leak excitation of F'=2 and F'=1 for a probe `delta_a` red of F'=3.
///
/// The ratio of two power-broadened Lorentzians: the leak line sits at
/// `offset(F') - delta_a` from the probe, the cycling line at `delta_a`.
pub fn leak_channels(delta_a: f64, scheme: &LevelScheme, s: f64) -> Vec<LeakChannel> {
    let width2 = scheme.gamma * scheme.gamma * (1.0 + s.max(0.0));
    let cycling = delta_a * delta_a + width2;
    let s3 = scheme.line_strength(ExcitedLevel::F3);
    [ExcitedLevel::F2, ExcitedLevel::F1]
        .into_iter()
        .map(|level| {
            let detuning = scheme.excited_offset(level) - delta_a;
            let relative_rate =
                scheme.line_strength(level) / s3 * cycling / (detuning * detuning + width2);
            LeakChannel {
                level,
                relative_rate,
                branch_to_dark: scheme.branching_to_dark(level),
            }
        })
        .collect()
}

/// Depumping events per F'=3 excitation-decay cycle, summed over leak channels.
pub fn dark_leak_ratio(channels: &[LeakChannel]) -> f64 {
    channels.iter().map(LeakChannel::dark_rate).sum()
}
