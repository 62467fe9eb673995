//! Cross-checks against independent constructions: explicit Clebsch–Gordan
//! sums for the level scheme, direct quadrature over the leak time for the
//! bright-state pmf, and hand-rolled complex arithmetic for the cavity.

use cavity_readout::atomic::{branching_to_dark, leak_channels, line_strengths, ExcitedLevel, LevelScheme};
use cavity_readout::cavity::{intracavity_excitation, purcell_fraction, CavitySystem, DetectionChain};
use cavity_readout::config::Config;
use cavity_readout::counting::{bright_state_distribution, LeakModel, ReadoutConfig};
use cavity_readout::scans::{FluorescenceSetup, ScatterCurveSetup};
use cavity_readout::units::mhz;

fn factorial(n: i32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// ⟨j1 m1; j2 m2 | J M⟩ from the explicit Racah sum; all arguments doubled.
fn clebsch_gordan(j1: i32, m1: i32, j2: i32, m2: i32, j: i32, m: i32) -> f64 {
    if m1 + m2 != m || m.abs() > j || m1.abs() > j1 || m2.abs() > j2 {
        return 0.0;
    }
    if j < (j1 - j2).abs() || j > j1 + j2 || (j1 + j2 + j) % 2 != 0 {
        return 0.0;
    }
    let h = |x: i32| {
        debug_assert!(x % 2 == 0);
        x / 2
    };
    let pre = ((j + 1) as f64 * factorial(h(j1 + j2 - j)) * factorial(h(j1 - j2 + j)) * factorial(h(-j1 + j2 + j))
        / factorial(h(j1 + j2 + j) + 1))
    .sqrt()
        * (factorial(h(j1 + m1))
            * factorial(h(j1 - m1))
            * factorial(h(j2 + m2))
            * factorial(h(j2 - m2))
            * factorial(h(j + m))
            * factorial(h(j - m)))
        .sqrt();
    let mut sum = 0.0;
    for k in 0..=h(j1 + j2 + j) {
        let args = [
            h(j1 + j2 - j) - k,
            h(j1 - m1) - k,
            h(j2 + m2) - k,
            h(j - j2 + m1) + k,
            h(j - j1 - m2) + k,
        ];
        if args.iter().any(|&a| a < 0) {
            continue;
        }
        let denom = factorial(k) * args.iter().map(|&a| factorial(a)).product::<f64>();
        sum += if k % 2 == 0 { 1.0 } else { -1.0 } / denom;
    }
    pre * sum
}

const TWO_I: i32 = 3;
const TWO_J: i32 = 1;
const TWO_JP: i32 = 3;

/// ⟨F mF | d_q | F' mF'⟩ up to a common reduced element, via |J mJ⟩⊗|I mI⟩.
fn dipole(two_f: i32, two_mf: i32, two_fp: i32, two_mfp: i32, two_q: i32) -> f64 {
    let mut amp = 0.0;
    for two_mi in (-TWO_I..=TWO_I).step_by(2) {
        for two_mj in (-TWO_J..=TWO_J).step_by(2) {
            let two_mjp = two_mj - two_q;
            if two_mjp.abs() > TWO_JP {
                continue;
            }
            let ground = clebsch_gordan(TWO_J, two_mj, TWO_I, two_mi, two_f, two_mf);
            let excited = clebsch_gordan(TWO_JP, two_mjp, TWO_I, two_mi, two_fp, two_mfp);
            let electronic = clebsch_gordan(TWO_JP, two_mjp, 2, two_q, TWO_J, two_mj);
            amp += ground * excited * electronic;
        }
    }
    amp
}

fn summed_strength(two_f: i32, two_fp: i32) -> f64 {
    let mut s = 0.0;
    for two_mf in (-two_f..=two_f).step_by(2) {
        for two_mfp in (-two_fp..=two_fp).step_by(2) {
            for two_q in [-2, 0, 2] {
                s += dipole(two_f, two_mf, two_fp, two_mfp, two_q).powi(2);
            }
        }
    }
    s
}

#[test]
fn line_strengths_match_clebsch_gordan_sums() {
    let raw: Vec<f64> = [2, 4, 6].iter().map(|&fp| summed_strength(4, fp)).collect();
    let total: f64 = raw.iter().sum();
    let lib = line_strengths();
    for (k, s) in raw.iter().enumerate() {
        assert!((s / total - lib[k]).abs() < 1e-12, "F'={}: {} vs {}", k + 1, s / total, lib[k]);
    }
}

#[test]
fn branching_matches_clebsch_gordan_sums() {
    let lib = branching_to_dark();
    for (k, two_fp) in [2, 4, 6].into_iter().enumerate() {
        // Decay from the stretched-free sublevel mF' = F' (any sublevel gives the same ratio).
        let to = |two_f: i32| {
            let mut s = 0.0;
            for two_mf in (-two_f..=two_f).step_by(2) {
                for two_q in [-2, 0, 2] {
                    s += dipole(two_f, two_mf, two_fp, two_fp, two_q).powi(2);
                }
            }
            s
        };
        let (f1, f2) = (to(2), to(4));
        let b = if f1 + f2 == 0.0 { 0.0 } else { f1 / (f1 + f2) };
        assert!((b - lib[k]).abs() < 1e-12, "F'={}: {b} vs {}", k + 1, lib[k]);
    }
}

#[test]
fn relative_leak_follows_two_level_lorentzians() {
    let scheme = LevelScheme::rb87();
    let s = 0.1;
    let gamma = scheme.gamma;
    for da_mhz in [0.0, 10.0, 40.0, 100.0] {
        let da = mhz(da_mhz);
        let lorentz = |d: f64| 1.0 / (d * d + gamma * gamma * (1.0 + s));
        let ch = leak_channels(da, &scheme, s);
        for c in &ch {
            let offset = scheme.excited_offset(c.level);
            let expect = scheme.line_strength(c.level) / scheme.line_strength(ExcitedLevel::F3) * lorentz(offset - da)
                / lorentz(da);
            assert!((c.relative_rate - expect).abs() <= 1e-12 * expect.max(1e-30));
        }
    }
}

/// Composite Simpson rule on [0, t] with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, t: f64, n: usize) -> f64 {
    let h = t / n as f64;
    let mut s = f(0.0) + f(t);
    for k in 1..n {
        s += f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn poisson(n: usize, mean: f64) -> f64 {
    if mean == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    (-mean + n as f64 * mean.ln() - (1..=n).map(|k| (k as f64).ln()).sum::<f64>()).exp()
}

#[test]
fn bright_pmf_matches_leak_time_quadrature() {
    for (signal, leak_t, bg) in [(8.0, 0.02, 0.00425), (20.0, 1.5, 0.5), (3.0, 4.0, 0.0), (45.0, 0.3, 2.0)] {
        let t = 85e-6;
        let cfg = ReadoutConfig {
            probe_duration: t,
            scatter_rate: signal / (0.2 * t),
            eta: 0.2,
            leak_rate: leak_t / t,
            background_rate: bg / t,
            prep_error: 0.0,
            ..Default::default()
        };
        let lambda = signal / t;
        let l = cfg.leak_rate;
        let fluor: Vec<f64> = (0..120)
            .map(|n| {
                (-l * t).exp() * poisson(n, signal)
                    + simpson(|tau| l * (-l * tau).exp() * poisson(n, lambda * tau), t, 2000)
            })
            .collect();
        let d = bright_state_distribution(&cfg);
        for n in 0..100 {
            let oracle: f64 = (0..=n).map(|k| fluor[k] * poisson(n - k, bg)).sum();
            assert!((d.prob(n) - oracle).abs() < 1e-9, "n={n}: {} vs {oracle}", d.prob(n));
        }
    }
}

#[test]
fn per_scatter_pmf_is_thinned_clock() {
    let t = 85e-6;
    let base = ReadoutConfig {
        probe_duration: t,
        scatter_rate: 1e6,
        eta: 0.1,
        leak_rate: 2e4,
        background_rate: 0.0,
        prep_error: 0.0,
        ..Default::default()
    };
    let per = bright_state_distribution(&ReadoutConfig {
        leak_model: LeakModel::PerScatter,
        ..base
    });
    // Leaking scatters are removed from the emitting process before thinning.
    let clock = bright_state_distribution(&ReadoutConfig {
        scatter_rate: base.scatter_rate - base.leak_rate,
        ..base
    });
    for n in 0..200 {
        assert!((per.prob(n) - clock.prob(n)).abs() < 1e-12);
    }
}

#[test]
fn cavity_arithmetic() {
    let sys = CavitySystem::reference();
    let nu = sys.cooperativity();
    assert!((nu.re + 9.0 / 8.4).abs() < 1e-12 && nu.im.abs() < 1e-12);
    // 9 / (-8.4 - 56i) = 9(-8.4 + 56i) / (8.4² + 56²)
    let d = 8.4f64.powi(2) + 56.0f64.powi(2);
    let nu20 = sys.with_delta_a(mhz(20.0)).cooperativity();
    assert!((nu20.re + 9.0 * 8.4 / d).abs() < 1e-12);
    assert!((nu20.im - 9.0 * 56.0 / d).abs() < 1e-12);
    let p_e = intracavity_excitation(0.045454, nu);
    assert!((p_e - 0.045454 / (1.0 + 9.0 / 8.4f64).powi(2)).abs() < 1e-15);
    let r = sys.scattering_rate(0.010594);
    assert!((r - mhz(9.0 / 1.4) * 0.010594).abs() < 1e-6 * r);
    assert!((r - 4.28e5).abs() < 0.005e5);
    assert!((purcell_fraction(sys.g, sys.kappa, sys.gamma) - 6.4286 / 12.4286).abs() < 1e-4);
}

#[test]
fn quoted_defaults() {
    let c = Config::default();
    assert_eq!(c.readout.probe_duration_us, 85.0);
    assert_eq!(c.readout.prep_error, 1e-3);
    assert_eq!(c.readout.mandel_q, 0.5);
    assert_eq!(c.readout.target_mean, 8.0);
    assert_eq!((c.cavity.g_mhz, c.cavity.kappa_mhz, c.atomic.gamma_mhz), (3.0, 2.8, 3.0));
    assert_eq!(c.atomic.excited_splitting_32_mhz, 267.0);
    assert_eq!((c.detection.mirror_fraction, c.detection.path_detector_efficiency), (0.9, 0.4));
    assert_eq!((c.detection.dark_rate, c.detection.stray_rate), (25.0, 25.0));
    assert_eq!((c.transmission.probe_duration_us, c.transmission.dark_mean), (300.0, 80.0));
    assert_eq!(c.trap.depth_mk, 2.0);
    assert_eq!((c.scenario.fig1_cavity_eta, c.scenario.fig1_na_eta), (0.2, 0.006));
    assert_eq!(c.scenario.fig1_saturation, 0.1);
    let chain = DetectionChain::default();
    assert!((chain.efficiency() - 0.1862).abs() < 1e-4);
}

#[test]
fn dark_state_examples() {
    let cfg = ReadoutConfig {
        background_rate: 50.0,
        ..Default::default()
    };
    let d = cavity_readout::dark_state_distribution(&cfg);
    assert!((d.prob(0) - 0.99576).abs() < 1e-5);
    let twice = cavity_readout::dark_state_distribution(&ReadoutConfig {
        probe_duration: 2.0 * cfg.probe_duration,
        ..cfg
    });
    use cavity_readout::CountStatistics;
    assert!((twice.mean() - 2.0 * d.mean()).abs() < 1e-12);
}

fn fig1_cavity() -> ScatterCurveSetup {
    let c = Config::default();
    let scheme = c.level_scheme().unwrap();
    let sys = c.cavity_system().unwrap();
    let p_free = cavity_readout::free_excitation_probability(0.1, 0.0, sys.gamma).unwrap();
    let p_e = intracavity_excitation(p_free, sys.cooperativity());
    let (cav, free) = (sys.scattering_rate(p_e), sys.free_space_rate(p_e));
    let ratio = cavity_readout::atomic::dark_leak_ratio(&leak_channels(0.0, &scheme, 0.1));
    ScatterCurveSetup {
        eta: 0.2,
        scatter_rate: cav + free,
        leak_per_scatter: ratio * free / (cav + free),
        background_rate: 25.0,
        prep_error: 0.0,
    }
}

#[test]
fn fidelity_curve_threshold_steps_and_dips() {
    let grid: Vec<f64> = (0..400).map(|k| 10f64.powf(k as f64 / 100.0)).collect();
    let curve = cavity_readout::scans::fidelity_vs_scattered(&fig1_cavity(), &grid).unwrap();
    let thresholds: Vec<usize> = curve.iter().map(|p| p.report.threshold).collect();
    assert!(thresholds.windows(2).all(|w| w[0] <= w[1]), "{thresholds:?}");
    let dips = curve
        .windows(2)
        .filter(|w| w[1].report.fidelity < w[0].report.fidelity)
        .count();
    assert!(dips >= 1);
    // No signal: bright and dark are indistinguishable.
    assert!(curve[0].report.fidelity < 0.5 + 0.2);
}

#[test]
fn transmission_mode_at_unit_transmission_is_baseline() {
    let cfg = Config::default();
    let mut t = cfg.transmission_setup().unwrap();
    t.cavity = t.cavity.with_g(0.0);
    t.prep_error = 0.0;
    let (b, d) = t.distributions(0.0);
    assert_eq!(b, d);
    let r = t.fidelity(0.0);
    assert!((r.p_correct_bright + r.p_correct_dark - 1.0).abs() < 1e-9);
}

#[test]
fn fluorescence_scan_at_resonance_matches_histogram_scenario() {
    let cfg = Config::default();
    let setup: FluorescenceSetup = cfg.fluorescence_setup().unwrap();
    let scan = cavity_readout::scans::detuning_scan_fluorescence(&setup, &[0.0], 8.0).unwrap();
    let out = cavity_readout::scenario::run("fig3-histograms", &cfg, Default::default()).unwrap();
    let f3 = out.result()["results"]["fidelity"].as_f64().unwrap();
    assert!((scan[0].report.fidelity - f3).abs() < 0.002);
}
