//! Simulation of cavity-enhanced hyperfine state detection of a single ⁸⁷Rb
//! atom: level structure, atom–cavity response, photon-count statistics,
//! state discrimination, push-out budget, and a scenario runner.
//!
//! Angular frequencies are in rad/s and times in seconds throughout; the
//! config layer accepts MHz and microseconds.

pub mod angular;
pub mod atomic;
pub mod cavity;
pub mod config;
pub mod counting;
pub mod discrimination;
pub mod dynamics;
pub mod error;
pub mod montecarlo;
pub mod quadrature;
pub mod scans;
pub mod scenario;
pub mod units;

pub use atomic::{free_excitation_probability, leak_channels, ExcitedLevel, LeakChannel, LevelScheme};
pub use cavity::{
    averaged_transmission, detection_budget, intracavity_excitation, purcell_fraction, CavitySystem,
    CouplingDistribution, DetectionChain,
};
pub use config::Config;
pub use counting::{
    bright_state_distribution, broadened_distribution, calibrate_broadening, dark_state_distribution,
    mandel_q, measured_distribution, AtomState, CountDistribution, CountStatistics, LeakModel,
    ReadoutConfig,
};
pub use discrimination::{
    fidelity_at_threshold, ml_classifier, optimal_threshold, FidelityReport, MlAssignment, Rule,
};
pub use dynamics::{pushout_photon_budget, survival_probability, ProbeGeometry, TrapModel};
pub use error::{Error, Result, Violation};
pub use montecarlo::{simulate_histogram, simulate_shot, CountHistogram};
pub use scenario::{run, RunOptions, ScenarioOutput, SCENARIOS};
