//! Named end-to-end runs. Each scenario turns a [`Config`] into a set of
//! output files held in memory; nothing touches the disk until
//! [`ScenarioOutput::write`].

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::atomic::{dark_leak_ratio, free_excitation_probability, leak_channels};
use crate::cavity::{averaged_transmission, intracavity_excitation, CouplingDistribution};
use crate::config::Config;
use crate::counting::{calibrate_broadening, mandel_q, measured_distribution, AtomState, CountDistribution};
use crate::discrimination::{fidelity_at_threshold, ml_classifier, optimal_threshold};
use crate::dynamics::{pushout_photon_budget, survival_probability, ProbeGeometry, TrapModel};
use crate::error::{Error, Result};
use crate::montecarlo::{derive_seed, simulate_counts, simulate_histogram, total_variation, CountHistogram};
use crate::scans::{
    detuning_scan_fluorescence, detuning_scan_transmission, fidelity_vs_scattered, CurvePoint,
    ScatterCurveSetup,
};
use crate::units::{kelvin, mhz, to_mhz};

pub struct ScenarioInfo {
    pub name: &'static str,
    pub description: &'static str,
}

pub const SCENARIOS: &[ScenarioInfo] = &[
    ScenarioInfo {
        name: "fig1-fidelity-curves",
        description: "best fidelity vs mean scattered photons, cavity and high-NA collection",
    },
    ScenarioInfo {
        name: "fig3-histograms",
        description: "bright/dark count pmfs and Monte Carlo histograms at the default readout",
    },
    ScenarioInfo {
        name: "fig4a-detuning-scan",
        description: "fidelity vs probe detuning for fluorescence and transmission readout",
    },
    ScenarioInfo {
        name: "fig4b-transmission-histograms",
        description: "transmission count pmfs and histograms at selected detunings",
    },
    ScenarioInfo {
        name: "efficiency-budget",
        description: "cavity fraction, detection chain and transmission contrast",
    },
    ScenarioInfo {
        name: "pushout-budget",
        description: "photons scattered before radiation pressure ejects the atom",
    },
];

pub fn lookup(name: &str) -> Option<&'static ScenarioInfo> {
    SCENARIOS.iter().find(|s| s.name == name)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Overrides `scenario.seed`.
    pub seed: Option<u64>,
    /// Overrides `scenario.shots`.
    pub shots: Option<u64>,
    /// Worker threads; 0 uses the global pool. Never changes the output.
    pub workers: usize,
}

/// Files produced by a run, keyed by file name.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScenarioOutput {
    pub files: BTreeMap<String, String>,
}

impl ScenarioOutput {
    pub fn result_json(&self) -> &str {
        &self.files["result.json"]
    }

    pub fn result(&self) -> Value {
        serde_json::from_str(self.result_json()).expect("result.json is valid JSON")
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let io = |path: &Path| {
            let path = path.to_owned();
            move |source| Error::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        for (name, body) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(io(&path))?;
        }
        Ok(())
    }
}

/// Runs `name` on `config`. The config is validated first; unknown names and
/// invalid configs fail before any computation.
pub fn run(name: &str, config: &Config, opts: RunOptions) -> Result<ScenarioOutput> {
    let info = lookup(name).ok_or_else(|| Error::UnknownScenario(name.to_owned()))?;
    let mut cfg = config.clone();
    if let Some(seed) = opts.seed {
        cfg.scenario.seed = seed;
    }
    if let Some(shots) = opts.shots {
        cfg.scenario.shots = shots;
    }
    cfg.check()?;
    let compute = || dispatch(info.name, &cfg);
    let (results, mut files) = if opts.workers == 0 {
        compute()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(opts.workers)
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?
            .install(compute)?
    };
    let payload = json!({
        "scenario": info.name,
        "seed": cfg.scenario.seed,
        "shots": cfg.scenario.shots,
        "config": cfg,
        "results": results,
    });
    let mut text = serde_json::to_string_pretty(&payload).map_err(|e| Error::invalid(e.to_string()))?;
    text.push('\n');
    files.insert("result.json".into(), text);
    files.insert("plot.py".into(), plot_script(info.name));
    Ok(ScenarioOutput { files })
}

type Files = BTreeMap<String, String>;

fn dispatch(name: &str, cfg: &Config) -> Result<(Value, Files)> {
    match name {
        "fig1-fidelity-curves" => fig1(cfg),
        "fig3-histograms" => fig3(cfg),
        "fig4a-detuning-scan" => fig4a(cfg),
        "fig4b-transmission-histograms" => fig4b(cfg),
        "efficiency-budget" => efficiency(cfg),
        "pushout-budget" => pushout(cfg),
        other => Err(Error::UnknownScenario(other.to_owned())),
    }
}

fn to_value(x: &impl Serialize) -> Result<Value> {
    serde_json::to_value(x).map_err(|e| Error::invalid(e.to_string()))
}

/// Allowed total-variation distance at `shots`, scaled like the sampling noise.
fn tv_bound(cfg: &Config) -> f64 {
    let s = &cfg.scenario;
    s.tv_tolerance * (1e5 / s.shots as f64).sqrt().max(1.0)
}

fn check_tv(label: &str, hist: &CountHistogram, dist: &CountDistribution, bound: f64) -> Result<f64> {
    let tv = total_variation(hist, dist);
    if tv < bound {
        Ok(tv)
    } else {
        Err(Error::Convergence(format!(
            "{label}: Monte Carlo and analytic pmfs differ by TV {tv:.5} (bound {bound:.5})"
        )))
    }
}

fn csv(header: &str, rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn f(x: f64) -> String {
    format!("{x}")
}

fn curve_csv(points: &[CurvePoint]) -> String {
    csv(
        "n_scattered,fidelity,threshold,p_correct_bright,p_correct_dark",
        points.iter().map(|p| {
            vec![
                f(p.x),
                f(p.report.fidelity),
                p.report.threshold.to_string(),
                f(p.report.p_correct_bright),
                f(p.report.p_correct_dark),
            ]
        }),
    )
}

fn curve_summary(points: &[CurvePoint], goal: f64) -> Value {
    let peak = points
        .iter()
        .fold(&points[0], |best, p| if p.report.fidelity > best.report.fidelity { p } else { best });
    let first = points.iter().find(|p| p.report.fidelity >= goal).map(|p| p.x);
    json!({
        "peak_fidelity": peak.report.fidelity,
        "peak_n_scattered": peak.x,
        "peak_threshold": peak.report.threshold,
        "goal_fidelity": goal,
        "first_n_scattered_at_goal": first,
    })
}

fn fig1(cfg: &Config) -> Result<(Value, Files)> {
    let s = &cfg.scenario;
    let scheme = cfg.level_scheme()?;
    let sys = cfg.cavity_system()?;
    let delta_a = sys.delta_a;
    let sat = s.fig1_saturation;
    let p_free = free_excitation_probability(sat, delta_a, sys.gamma)?;
    let leak_ratio = dark_leak_ratio(&leak_channels(delta_a, &scheme, sat));
    let background = cfg.detection.dark_rate;

    let p_e = intracavity_excitation(p_free, sys.cooperativity());
    let cav_rate = sys.scattering_rate(p_e);
    let cav_free = sys.free_space_rate(p_e);
    let cavity = ScatterCurveSetup {
        eta: s.fig1_cavity_eta,
        scatter_rate: cav_rate + cav_free,
        leak_per_scatter: leak_ratio * cav_free / (cav_rate + cav_free),
        background_rate: background,
        prep_error: 0.0,
    };
    let na_rate = 2.0 * sys.gamma * p_free;
    let na = ScatterCurveSetup {
        eta: s.fig1_na_eta,
        scatter_rate: na_rate,
        leak_per_scatter: leak_ratio,
        background_rate: background,
        prep_error: 0.0,
    };

    let (lo, hi) = (s.fig1_min_scattered.ln(), s.fig1_max_scattered.ln());
    let grid: Vec<f64> = (0..s.fig1_points)
        .map(|k| (lo + (hi - lo) * k as f64 / (s.fig1_points - 1) as f64).exp())
        .collect();
    let cav_curve = fidelity_vs_scattered(&cavity, &grid)?;
    let na_curve = fidelity_vs_scattered(&na, &grid)?;
    let trap = cfg.trap_model()?;
    let budget = pushout_photon_budget(&trap);

    let results = json!({
        "cavity": { "setup": to_value(&cavity)?, "summary": curve_summary(&cav_curve, 0.999) },
        "na": { "setup": to_value(&na)?, "summary": curve_summary(&na_curve, 0.99) },
        "pushout_budget": budget,
        "trap_geometry": to_value(&trap.geometry)?,
    });
    let mut files = Files::new();
    files.insert("fig1_cavity.csv".into(), curve_csv(&cav_curve));
    files.insert("fig1_na.csv".into(), curve_csv(&na_curve));
    files.insert("fig1_pushout.csv".into(), csv("pushout_budget", [vec![budget.to_string()]]));
    Ok((results, files))
}

fn fig3(cfg: &Config) -> Result<(Value, Files)> {
    let r = &cfg.readout;
    let setup = cfg.fluorescence_setup()?;
    let delta_a = mhz(r.delta_a_mhz);
    let sol = setup.solve_saturation(delta_a, r.target_mean)?;
    if !sol.reached {
        return Err(Error::Convergence(format!(
            "mean bright count {} is unreachable at this detuning (max {:.3})",
            r.target_mean, sol.mean
        )));
    }
    let mut readout = sol.readout;
    if r.mandel_q > 0.0 {
        readout.rate_spread = calibrate_broadening(r.mandel_q, &readout, r.quadrature_nodes)?;
    }
    let bright = measured_distribution(&readout, AtomState::Bright, r.quadrature_nodes)?;
    let dark = measured_distribution(&readout, AtomState::Dark, r.quadrature_nodes)?;
    let at_threshold = fidelity_at_threshold(&bright, &dark, r.threshold);
    let best = optimal_threshold(&bright, &dark);
    let ml = ml_classifier(&bright, &dark);

    let s = &cfg.scenario;
    let hb = simulate_histogram(&readout, AtomState::Bright, s.shots, derive_seed(s.seed, 1), 0)?;
    let hd = simulate_histogram(&readout, AtomState::Dark, s.shots, derive_seed(s.seed, 2), 0)?;
    let bound = tv_bound(cfg);
    let tv_b = check_tv("bright", &hb, &bright, bound)?;
    let tv_d = check_tv("dark", &hd, &dark, bound)?;
    let mc_bright = hb.to_distribution()?;
    let mc_dark = hd.to_distribution()?;
    let mc = fidelity_at_threshold(&mc_bright, &mc_dark, r.threshold);

    let results = json!({
        "saturation": sol.saturation,
        "readout": to_value(&readout)?,
        "detected_rate": readout.scatter_rate * readout.eta,
        "scattered_photons": readout.scatter_rate * readout.probe_duration,
        "bright_mean": crate::counting::CountStatistics::mean(&bright),
        "dark_mean": crate::counting::CountStatistics::mean(&dark),
        "mandel_q": mandel_q(&crate::counting::broadened_bright_distribution(&readout, r.quadrature_nodes)?)?,
        "fidelity": at_threshold.fidelity,
        "at_threshold": to_value(&at_threshold)?,
        "optimal": to_value(&best)?,
        "ml": { "fidelity": ml.fidelity(), "mean_fidelity": ml.mean_fidelity(), "threshold": ml.as_threshold() },
        "monte_carlo": {
            "fidelity": mc.fidelity,
            "p_correct_bright": mc.p_correct_bright,
            "p_correct_dark": mc.p_correct_dark,
            "mandel_q": mandel_q(&hb)?,
            "tv_bright": tv_b,
            "tv_dark": tv_d,
            "tv_bound": bound,
        },
    });
    let len = bright.pmf().len().max(dark.pmf().len()).max(hb.counts.len()).max(hd.counts.len());
    let mut files = Files::new();
    files.insert(
        "fig3_pmf.csv".into(),
        csv(
            "n,p_bright,p_dark",
            (0..len).map(|n| vec![n.to_string(), f(bright.prob(n)), f(dark.prob(n))]),
        ),
    );
    files.insert(
        "fig3_histogram.csv".into(),
        csv(
            "n,count_bright,count_dark",
            (0..len).map(|n| {
                let c = |h: &CountHistogram| h.counts.get(n).copied().unwrap_or(0).to_string();
                vec![n.to_string(), c(&hb), c(&hd)]
            }),
        ),
    );
    Ok((results, files))
}

fn scan_grid(cfg: &Config) -> Vec<f64> {
    let s = &cfg.scenario;
    let steps = (s.scan_max_mhz / s.scan_step_mhz + 1e-9).floor() as usize;
    (0..=steps).map(|k| k as f64 * s.scan_step_mhz).collect()
}

fn fig4a(cfg: &Config) -> Result<(Value, Files)> {
    let grid_mhz = scan_grid(cfg);
    let grid: Vec<f64> = grid_mhz.iter().map(|&d| mhz(d)).collect();
    let fl = detuning_scan_fluorescence(&cfg.fluorescence_setup()?, &grid, cfg.readout.target_mean)?;
    let tr = detuning_scan_transmission(&cfg.transmission_setup()?, &grid)?;

    let fl_rows: Vec<Value> = fl
        .iter()
        .map(|p| {
            json!({
                "delta_a_mhz": to_mhz(p.delta_a),
                "fidelity": p.report.fidelity,
                "threshold": p.report.threshold,
                "saturation": p.saturation,
                "mean_bright": p.mean_bright,
                "target_reached": p.target_reached,
            })
        })
        .collect();
    let tr_rows: Vec<Value> = tr
        .iter()
        .map(|p| {
            json!({
                "delta_a_mhz": to_mhz(p.delta_a),
                "fidelity": p.report.fidelity,
                "threshold": p.report.threshold,
                "transmission": p.transmission,
            })
        })
        .collect();
    let results = json!({
        "target_mean": cfg.readout.target_mean,
        "transmission_dark_mean": cfg.transmission.dark_mean,
        "fluorescence": fl_rows,
        "transmission": tr_rows,
    });
    let mut files = Files::new();
    files.insert(
        "fig4a_fluorescence.csv".into(),
        csv(
            "delta_a_mhz,fidelity,threshold,p_correct_bright,p_correct_dark,saturation,mean_bright,target_reached",
            fl.iter().zip(&grid_mhz).map(|(p, d)| {
                vec![
                    f(*d),
                    f(p.report.fidelity),
                    p.report.threshold.to_string(),
                    f(p.report.p_correct_bright),
                    f(p.report.p_correct_dark),
                    f(p.saturation),
                    f(p.mean_bright),
                    p.target_reached.to_string(),
                ]
            }),
        ),
    );
    files.insert(
        "fig4a_transmission.csv".into(),
        csv(
            "delta_a_mhz,fidelity,threshold,p_correct_bright,p_correct_dark,transmission",
            tr.iter().zip(&grid_mhz).map(|(p, d)| {
                vec![
                    f(*d),
                    f(p.report.fidelity),
                    p.report.threshold.to_string(),
                    f(p.report.p_correct_bright),
                    f(p.report.p_correct_dark),
                    f(p.transmission),
                ]
            }),
        ),
    );
    Ok((results, files))
}

fn fig4b(cfg: &Config) -> Result<(Value, Files)> {
    let setup = cfg.transmission_setup()?;
    let s = &cfg.scenario;
    let bound = tv_bound(cfg);
    let mut rows = Vec::new();
    let mut files = Files::new();
    for (i, &d_mhz) in s.fig4b_detunings_mhz.iter().enumerate() {
        let delta_a = mhz(d_mhz);
        let (bright, dark) = setup.distributions(delta_a);
        let report = setup.fidelity(delta_a);
        let tag = 16 * i as u64;
        let hb = simulate_counts(s.shots, derive_seed(s.seed, tag + 17), 0, |rng| {
            setup.simulate_shot(rng, delta_a, AtomState::Bright)
        })?;
        let hd = simulate_counts(s.shots, derive_seed(s.seed, tag + 18), 0, |rng| {
            setup.simulate_shot(rng, delta_a, AtomState::Dark)
        })?;
        let label = format!("{d_mhz} MHz");
        let tv_b = check_tv(&format!("bright at {label}"), &hb, &bright, bound)?;
        let tv_d = check_tv(&format!("dark at {label}"), &hd, &dark, bound)?;
        let mc = crate::discrimination::fidelity_with_rule(
            &hb.to_distribution()?,
            &hd.to_distribution()?,
            report.threshold,
            report.rule,
        );
        rows.push(json!({
            "delta_a_mhz": d_mhz,
            "transmission": setup.transmission(delta_a),
            "fidelity": report.fidelity,
            "report": to_value(&report)?,
            "monte_carlo": { "fidelity": mc.fidelity, "tv_bright": tv_b, "tv_dark": tv_d, "tv_bound": bound },
        }));
        let len = bright.pmf().len().max(dark.pmf().len()).max(hb.counts.len()).max(hd.counts.len());
        let c = |h: &CountHistogram, n: usize| h.counts.get(n).copied().unwrap_or(0).to_string();
        files.insert(
            format!("fig4b_{d_mhz}mhz.csv"),
            csv(
                "n,p_bright,p_dark,count_bright,count_dark",
                (0..len).map(|n| vec![n.to_string(), f(bright.prob(n)), f(dark.prob(n)), c(&hb, n), c(&hd, n)]),
            ),
        );
    }
    Ok((json!({ "detunings": rows }), files))
}

fn efficiency(cfg: &Config) -> Result<(Value, Files)> {
    let sys = cfg.cavity_system()?;
    let chain = cfg.detection_chain()?;
    let nu = sys.cooperativity();
    let ground = mhz(cfg.atomic.ground_splitting_mhz);
    let at = |d: f64, dist| averaged_transmission(&sys.with_delta_a(d), dist);
    let rows: Vec<(&str, f64)> = vec![
        ("purcell_rate", 2.0 * sys.g * sys.g / sys.kappa),
        ("free_space_rate", 2.0 * sys.gamma),
        ("cavity_fraction", chain.cavity_fraction),
        ("mirror_fraction", chain.mirror_fraction),
        ("path_detector_efficiency", chain.path_detector_efficiency),
        ("eta", chain.efficiency()),
        ("output_efficiency", chain.output_efficiency()),
        ("background_rate", chain.background_rate()),
        ("cooperativity_re", nu.re),
        ("cooperativity_im", nu.im),
        ("transmission_resonant", at(sys.delta_a, CouplingDistribution::Fixed)),
        ("transmission_20mhz", at(mhz(20.0), CouplingDistribution::Fixed)),
        ("transmission_ground_splitting", at(ground, CouplingDistribution::Fixed)),
        ("transmission_resonant_standing_wave", at(sys.delta_a, CouplingDistribution::StandingWave)),
    ];
    let results: serde_json::Map<String, Value> = rows.iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
    let mut files = Files::new();
    files.insert(
        "efficiency_budget.csv".into(),
        csv("quantity,value", rows.iter().map(|(k, v)| vec![k.to_string(), f(*v)])),
    );
    Ok((Value::Object(results), files))
}

fn pushout(cfg: &Config) -> Result<(Value, Files)> {
    let trap = cfg.trap_model()?;
    let uni = TrapModel {
        geometry: ProbeGeometry::Unidirectional,
        ..trap
    };
    let bal = TrapModel {
        geometry: ProbeGeometry::Balanced,
        ..trap
    };
    let (b_uni, b_bal) = (pushout_photon_budget(&uni), pushout_photon_budget(&bal));

    // Photons scattered by the default fluorescence readout, to flag atom loss.
    let setup = cfg.fluorescence_setup()?;
    let sol = setup.solve_saturation(mhz(cfg.readout.delta_a_mhz), cfg.readout.target_mean)?;
    let scattered = sol.readout.scatter_rate * sol.readout.probe_duration;

    let results = json!({
        "trap_depth_mk": cfg.trap.depth_mk,
        "recoil_energy_nk": trap.recoil_energy / kelvin(1e-9),
        "budget_unidirectional": b_uni,
        "budget_balanced": b_bal,
        "budget_configured": pushout_photon_budget(&trap),
        "geometry": to_value(&trap.geometry)?,
        "readout_scattered_photons": scattered,
        "readout_survival": survival_probability(scattered, &trap),
    });
    let top = 2 * b_bal;
    let step = (top / 400).max(1);
    let mut files = Files::new();
    files.insert(
        "pushout_survival.csv".into(),
        csv(
            "n_scattered,survival_unidirectional,survival_balanced",
            (0..=top).step_by(step as usize).map(|n| {
                let n = n as f64;
                vec![f(n), f(survival_probability(n, &uni)), f(survival_probability(n, &bal))]
            }),
        ),
    );
    Ok((results, files))
}

fn plot_script(name: &str) -> String {
    let body = match name {
        "fig1-fidelity-curves" => {
            r#"cav = np.genfromtxt(HERE / "fig1_cavity.csv", delimiter=",", names=True)
na = np.genfromtxt(HERE / "fig1_na.csv", delimiter=",", names=True)
budget = float(np.genfromtxt(HERE / "fig1_pushout.csv", delimiter=",", names=True)["pushout_budget"])
fig, ax = plt.subplots()
ax.semilogx(cav["n_scattered"], cav["fidelity"], label="cavity")
ax.semilogx(na["n_scattered"], na["fidelity"], label="high NA")
ax.axvline(budget, ls="--", c="k", label="push-out")
ax.set_xlabel("mean scattered photons")
ax.set_ylabel("fidelity")
ax.set_ylim(0.9, 1.0)
ax.legend()
"#
        }
        "fig3-histograms" => {
            r#"pmf = np.genfromtxt(HERE / "fig3_pmf.csv", delimiter=",", names=True)
hist = np.genfromtxt(HERE / "fig3_histogram.csv", delimiter=",", names=True)
fig, axes = plt.subplots(1, 2, sharey=True)
for ax, state in zip(axes, ["bright", "dark"]):
    counts = hist["count_" + state]
    ax.bar(hist["n"], counts / counts.sum(), alpha=0.5, label="Monte Carlo")
    ax.plot(pmf["n"], pmf["p_" + state], "k.-", label="analytic")
    ax.set_xlim(-0.5, 25)
    ax.set_yscale("log")
    ax.set_xlabel("detected photons N")
    ax.set_title(state)
axes[0].set_ylabel("probability")
axes[0].legend()
"#
        }
        "fig4a-detuning-scan" => {
            r#"fl = np.genfromtxt(HERE / "fig4a_fluorescence.csv", delimiter=",", names=True)
tr = np.genfromtxt(HERE / "fig4a_transmission.csv", delimiter=",", names=True)
fig, ax = plt.subplots()
ax.plot(fl["delta_a_mhz"], fl["fidelity"], "o-", label="fluorescence")
ax.plot(tr["delta_a_mhz"], tr["fidelity"], "s-", c="grey", label="transmission")
ax.set_xlabel("probe detuning (MHz)")
ax.set_ylabel("fidelity")
ax.legend()
"#
        }
        "fig4b-transmission-histograms" => {
            r#"files = sorted(HERE.glob("fig4b_*mhz.csv"))
fig, axes = plt.subplots(len(files), 1, sharex=True, squeeze=False)
for ax, path in zip(axes[:, 0], files):
    d = np.genfromtxt(path, delimiter=",", names=True)
    for state, c in [("bright", "C0"), ("dark", "C1")]:
        counts = d["count_" + state]
        ax.bar(d["n"], counts / counts.sum(), color=c, alpha=0.4, label=state)
        ax.plot(d["n"], d["p_" + state], color=c)
    ax.set_title(path.stem)
axes[-1, 0].set_xlabel("transmitted photons N")
axes[0, 0].legend()
"#
        }
        "efficiency-budget" => {
            r#"rows = np.genfromtxt(HERE / "efficiency_budget.csv", delimiter=",", names=True, dtype=None, encoding="utf-8")
keep = [r for r in rows if r["quantity"] in ("cavity_fraction", "mirror_fraction", "path_detector_efficiency", "eta")]
fig, ax = plt.subplots()
ax.bar([r["quantity"] for r in keep], [r["value"] for r in keep])
ax.set_ylabel("probability")
"#
        }
        _ => {
            r#"d = np.genfromtxt(HERE / "pushout_survival.csv", delimiter=",", names=True)
fig, ax = plt.subplots()
ax.plot(d["n_scattered"], d["survival_unidirectional"], label="unidirectional")
ax.plot(d["n_scattered"], d["survival_balanced"], label="balanced")
ax.set_xscale("symlog")
ax.set_xlabel("scattered photons")
ax.set_ylabel("survival probability")
ax.legend()
"#
        }
    };
    let mut out = String::new();
    let _ = write!(
        out,
        "# Plots the CSV files written next to this script.\n\
         from pathlib import Path\n\n\
         import matplotlib.pyplot as plt\n\
         import numpy as np\n\n\
         HERE = Path(__file__).resolve().parent\n\n\
         {body}\
         fig.tight_layout()\n\
         fig.savefig(HERE / \"{name}.png\", dpi=150)\n"
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> Config {
        let mut c = Config::default();
        c.scenario.shots = 2000;
        c.scenario.fig1_points = 9;
        c
    }

    #[test]
    fn registry_names_are_unique() {
        let mut names: Vec<_> = SCENARIOS.iter().map(|s| s.name).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), SCENARIOS.len());
    }

    #[test]
    fn unknown_scenario() {
        let e = run("fig2", &quick(), RunOptions::default()).unwrap_err();
        assert_eq!(e.exit_code(), 3);
    }

    #[test]
    fn invalid_config_is_rejected_before_running() {
        let mut c = quick();
        c.cavity.kappa_mhz = -1.0;
        let e = run("efficiency-budget", &c, RunOptions::default()).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn every_scenario_emits_result_and_plot() {
        for s in SCENARIOS {
            let out = run(s.name, &quick(), RunOptions::default()).unwrap();
            assert!(out.files.contains_key("plot.py"));
            assert!(out.files.keys().any(|k| k.ends_with(".csv")), "{}", s.name);
            assert_eq!(out.result()["scenario"], s.name);
        }
    }

    #[test]
    fn overrides_are_echoed() {
        let out = run(
            "pushout-budget",
            &quick(),
            RunOptions {
                seed: Some(9),
                shots: Some(10),
                workers: 0,
            },
        )
        .unwrap();
        let v = out.result();
        assert_eq!(v["seed"], 9);
        assert_eq!(v["config"]["scenario"]["shots"], 10);
    }

    #[test]
    fn tv_bound_scales_with_shots() {
        let mut c = Config::default();
        assert_eq!(tv_bound(&c), 0.01);
        c.scenario.shots = 1000;
        assert!((tv_bound(&c) - 0.1).abs() < 1e-12);
        c.scenario.shots = 1_000_000;
        assert_eq!(tv_bound(&c), 0.01);
    }
}
