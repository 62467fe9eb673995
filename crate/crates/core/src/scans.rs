//! Parameter scans built on the readout model: fidelity against the number of
//! scattered photons, and against probe–atom detuning for both the
//! fluorescence and the transmission technique.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atomic::{dark_leak_ratio, free_excitation_probability, leak_channels, LevelScheme};
use crate::cavity::{intracavity_excitation, CavitySystem, CouplingDistribution, DetectionChain};
use crate::counting::{
    measured_distribution, AtomState, CountDistribution, LeakModel, ReadoutConfig,
};
use crate::discrimination::{optimal_threshold, optimal_threshold_with_rule, FidelityReport, Rule};
use crate::error::{Error, Result};
use crate::montecarlo::poisson;

/// Physical parameters of cavity-enhanced fluorescence readout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluorescenceSetup {
    pub scheme: LevelScheme,
    /// Cavity and atom; `delta_a` is overridden per scan point.
    pub cavity: CavitySystem,
    pub chain: DetectionChain,
    pub probe_duration: f64,
    pub prep_error: f64,
    pub rate_spread: f64,
    pub dark_scatter_rate: f64,
    pub leak_model: LeakModel,
    pub quadrature_nodes: usize,
}

impl FluorescenceSetup {
    /// Readout parameters for probe detuning `delta_a` and saturation `s`.
    ///
    /// The cycling line scatters into the cavity (Purcell) and into free space
    /// from the cavity-modified excitation. Leak lines see the same local
    /// field but decay only into free space.
    pub fn readout(&self, delta_a: f64, s: f64) -> Result<ReadoutConfig> {
        let sys = self.cavity.with_delta_a(delta_a);
        let p_free = free_excitation_probability(s, delta_a, sys.gamma)?;
        let p_e = intracavity_excitation(p_free, sys.cooperativity());
        let cavity_rate = sys.scattering_rate(p_e);
        let free_rate = sys.free_space_rate(p_e);
        let leak = free_rate * dark_leak_ratio(&leak_channels(delta_a, &self.scheme, s));
        Ok(ReadoutConfig {
            probe_duration: self.probe_duration,
            scatter_rate: cavity_rate + free_rate,
            eta: self.chain.efficiency(),
            leak_rate: leak,
            background_rate: self.chain.background_rate(),
            prep_error: self.prep_error,
            rate_spread: self.rate_spread,
            dark_scatter_rate: self.dark_scatter_rate,
            leak_model: self.leak_model,
        })
    }

    /// Probe saturation giving a mean bright-state count of `target`.
    ///
    /// When depumping caps the attainable mean below `target`, returns the
    /// saturation that maximizes it and `reached = false`.
    pub fn solve_saturation(&self, delta_a: f64, target: f64) -> Result<PowerSolution> {
        if !(target > 0.0) {
            return Err(Error::invalid("target mean count must be > 0"));
        }
        let mean = |log_s: f64| -> Result<f64> { Ok(self.readout(delta_a, 10f64.powf(log_s))?.bright_mean()) };
        const LO: f64 = -9.0;
        const HI: f64 = 8.0;
        const STEPS: usize = 136;
        let grid: Vec<f64> = (0..=STEPS)
            .map(|k| LO + (HI - LO) * k as f64 / STEPS as f64)
            .collect();
        let means = grid.iter().map(|&x| mean(x)).collect::<Result<Vec<_>>>()?;
        let crossing = means.iter().position(|&m| m >= target);
        let log_s = match crossing {
            Some(0) => LO,
            Some(k) => {
                let (mut a, mut b) = (grid[k - 1], grid[k]);
                for _ in 0..80 {
                    let mid = 0.5 * (a + b);
                    if mean(mid)? >= target {
                        b = mid;
                    } else {
                        a = mid;
                    }
                }
                b
            }
            None => {
                let k = means
                    .iter()
                    .enumerate()
                    .fold(0, |best, (i, &m)| if m > means[best] { i } else { best });
                // Refine the maximum by golden-section search on the bracket.
                let lo = grid[k.saturating_sub(1)];
                let hi = grid[(k + 1).min(STEPS)];
                golden_max(lo, hi, |x| mean(x).unwrap_or(f64::NEG_INFINITY))
            }
        };
        let saturation = 10f64.powf(log_s);
        let readout = self.readout(delta_a, saturation)?;
        let achieved = readout.bright_mean();
        Ok(PowerSolution {
            saturation,
            readout,
            mean: achieved,
            reached: achieved >= target * (1.0 - 1e-9),
        })
    }

    /// Bright and dark distributions as recorded for each prepared state.
    pub fn distributions(&self, cfg: &ReadoutConfig) -> Result<(CountDistribution, CountDistribution)> {
        Ok((
            measured_distribution(cfg, AtomState::Bright, self.quadrature_nodes)?,
            measured_distribution(cfg, AtomState::Dark, self.quadrature_nodes)?,
        ))
    }
}

fn golden_max(mut a: f64, mut b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    for _ in 0..80 {
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - r * (b - a);
        d = a + r * (b - a);
    }
    0.5 * (a + b)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerSolution {
    pub saturation: f64,
    pub readout: ReadoutConfig,
    pub mean: f64,
    pub reached: bool,
}

/// Readout with a fixed scattering rate, parameterized by the mean number of
/// scattered photons per interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatterCurveSetup {
    /// Detection probability per scattered photon.
    pub eta: f64,
    /// Scattering rate on the cycling transition (1/s).
    pub scatter_rate: f64,
    /// Probability that one scattering event depumps the atom.
    pub leak_per_scatter: f64,
    /// False-count rate (1/s).
    pub background_rate: f64,
    pub prep_error: f64,
}

impl ScatterCurveSetup {
    pub fn readout(&self, n_scattered: f64) -> ReadoutConfig {
        ReadoutConfig {
            probe_duration: n_scattered / self.scatter_rate,
            scatter_rate: self.scatter_rate,
            eta: self.eta,
            leak_rate: self.leak_per_scatter * self.scatter_rate,
            background_rate: self.background_rate,
            prep_error: self.prep_error,
            rate_spread: 0.0,
            dark_scatter_rate: 0.0,
            leak_model: LeakModel::ExponentialClock,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub x: f64,
    pub report: FidelityReport,
}

/// Best achievable fidelity at each mean scattered-photon number.
pub fn fidelity_vs_scattered(setup: &ScatterCurveSetup, grid: &[f64]) -> Result<Vec<CurvePoint>> {
    if !(setup.scatter_rate > 0.0) {
        return Err(Error::invalid("scatter rate must be > 0"));
    }
    if grid.iter().any(|&n| !(n > 0.0)) {
        return Err(Error::invalid("scattered-photon grid must be positive"));
    }
    grid.par_iter()
        .map(|&n| {
            let cfg = setup.readout(n);
            let bright = measured_distribution(&cfg, AtomState::Bright, 1)?;
            let dark = measured_distribution(&cfg, AtomState::Dark, 1)?;
            Ok(CurvePoint {
                x: n,
                report: optimal_threshold(&bright, &dark),
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FluorescenceScanPoint {
    pub delta_a: f64,
    pub saturation: f64,
    pub mean_bright: f64,
    pub target_reached: bool,
    pub report: FidelityReport,
}

/// Fidelity versus detuning with the probe power readjusted at every point so
/// the bright atom yields `target_mean` detected photons.
pub fn detuning_scan_fluorescence(
    setup: &FluorescenceSetup,
    grid: &[f64],
    target_mean: f64,
) -> Result<Vec<FluorescenceScanPoint>> {
    let limit = setup.scheme.excited_splitting_32;
    if let Some(bad) = grid.iter().find(|d| d.abs() > limit) {
        return Err(Error::invalid(format!(
            "detuning {bad:.4e} rad/s lies beyond the F'=2 line; the leak model is not valid there"
        )));
    }
    grid.par_iter()
        .map(|&delta_a| {
            let sol = setup.solve_saturation(delta_a, target_mean)?;
            let (bright, dark) = setup.distributions(&sol.readout)?;
            Ok(FluorescenceScanPoint {
                delta_a,
                saturation: sol.saturation,
                mean_bright: sol.mean,
                target_reached: sol.reached,
                report: optimal_threshold(&bright, &dark),
            })
        })
        .collect()
}

/// Transmission readout: the probe drives the cavity on axis and the bright
/// atom shows up as a dip.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransmissionSetup {
    pub cavity: CavitySystem,
    pub probe_duration: f64,
    /// Mean transmitted count with the atom in the dark (uncoupled) state.
    pub dark_mean: f64,
    pub prep_error: f64,
    pub coupling: CouplingDistribution,
}

const COUPLING_NODES: usize = 256;

impl TransmissionSetup {
    pub fn transmission(&self, delta_a: f64) -> f64 {
        crate::cavity::averaged_transmission(&self.cavity.with_delta_a(delta_a), self.coupling)
    }

    /// Conditional (bright, dark) count distributions for correctly prepared atoms.
    pub fn conditional_distributions(&self, delta_a: f64) -> (CountDistribution, CountDistribution) {
        let dark = CountDistribution::poisson(self.dark_mean);
        let sys = self.cavity.with_delta_a(delta_a);
        let bright = match self.coupling {
            CouplingDistribution::Fixed => CountDistribution::poisson(self.dark_mean * sys.transmission()),
            CouplingDistribution::StandingWave => {
                let g_max = sys.g * std::f64::consts::SQRT_2;
                let h = FRAC_PI_2 / COUPLING_NODES as f64;
                let parts: Vec<CountDistribution> = (0..COUPLING_NODES)
                    .map(|k| {
                        let phi = (k as f64 + 0.5) * h;
                        let t = sys.with_g(g_max * phi.cos()).transmission();
                        CountDistribution::poisson(self.dark_mean * t)
                    })
                    .collect();
                let w = 1.0 / COUPLING_NODES as f64;
                CountDistribution::mixture(parts.iter().map(|p| (w, p)))
            }
        };
        (bright, dark)
    }

    /// Distributions as recorded for each prepared state, preparation error included.
    pub fn distributions(&self, delta_a: f64) -> (CountDistribution, CountDistribution) {
        let (b, d) = self.conditional_distributions(delta_a);
        (b.mix(&d, self.prep_error), d.mix(&b, self.prep_error))
    }

    pub fn fidelity(&self, delta_a: f64) -> FidelityReport {
        let (b, d) = self.distributions(delta_a);
        optimal_threshold_with_rule(&b, &d, Rule::BrightBelow)
    }

    /// One transmission interval for an atom prepared in `prepared`.
    pub fn simulate_shot(&self, rng: &mut impl Rng, delta_a: f64, prepared: AtomState) -> u64 {
        let actual = if self.prep_error > 0.0 && rng.random::<f64>() < self.prep_error {
            prepared.flip()
        } else {
            prepared
        };
        let t = match actual {
            AtomState::Dark => 1.0,
            AtomState::Bright => {
                let sys = self.cavity.with_delta_a(delta_a);
                match self.coupling {
                    CouplingDistribution::Fixed => sys.transmission(),
                    CouplingDistribution::StandingWave => {
                        let phi = rng.random::<f64>() * FRAC_PI_2;
                        sys.with_g(sys.g * std::f64::consts::SQRT_2 * phi.cos()).transmission()
                    }
                }
            }
        };
        poisson(rng, self.dark_mean * t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TransmissionScanPoint {
    pub delta_a: f64,
    pub transmission: f64,
    pub report: FidelityReport,
}

pub fn detuning_scan_transmission(setup: &TransmissionSetup, grid: &[f64]) -> Result<Vec<TransmissionScanPoint>> {
    if !(setup.dark_mean > 0.0) {
        return Err(Error::invalid("transmission dark-state mean count must be > 0"));
    }
    Ok(grid
        .par_iter()
        .map(|&delta_a| TransmissionScanPoint {
            delta_a,
            transmission: setup.transmission(delta_a),
            report: setup.fidelity(delta_a),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::mhz;

    fn fluorescence() -> FluorescenceSetup {
        let cavity = CavitySystem::reference();
        FluorescenceSetup {
            scheme: LevelScheme::rb87(),
            cavity,
            chain: DetectionChain::for_cavity(&cavity),
            probe_duration: 85e-6,
            prep_error: 1e-3,
            rate_spread: 0.0,
            dark_scatter_rate: 0.0,
            leak_model: LeakModel::ExponentialClock,
            quadrature_nodes: 21,
        }
    }

    #[test]
    fn detected_rate_is_cavity_output() {
        let f = fluorescence();
        let r = f.readout(0.0, 0.1).unwrap();
        let sys = f.cavity;
        let p_e = intracavity_excitation(0.05 / 1.1, sys.cooperativity());
        let expected = sys.scattering_rate(p_e) * 0.9 * 0.4;
        assert!((r.scatter_rate * r.eta - expected).abs() / expected < 1e-12);
    }

    #[test]
    fn power_solution_hits_target() {
        let f = fluorescence();
        let sol = f.solve_saturation(mhz(20.0), 8.0).unwrap();
        assert!(sol.reached);
        assert!((sol.mean - 8.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_detuning_past_f2() {
        let f = fluorescence();
        assert!(detuning_scan_fluorescence(&f, &[mhz(300.0)], 8.0).is_err());
    }

    #[test]
    fn transmission_without_atom_is_chance() {
        let t = TransmissionSetup {
            cavity: CavitySystem::reference().with_g(0.0),
            probe_duration: 300e-6,
            dark_mean: 80.0,
            prep_error: 0.0,
            coupling: CouplingDistribution::Fixed,
        };
        let r = t.fidelity(0.0);
        assert!((r.p_correct_bright + r.p_correct_dark - 1.0).abs() < 1e-9);
    }
}
