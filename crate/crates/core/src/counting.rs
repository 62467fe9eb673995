//! Exact distributions of the detected photon number per probe interval.
//!
//! A bright atom fluoresces as a Poisson process of detected photons until the
//! probe ends or an off-resonant leak pumps it to the dark state. The leak clock
//! is exponential; marginalizing over it gives a closed form in terms of
//! Poisson upper tails. False counts are an independent Poisson background.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::gauss_hermite;

/// Truncated mass allowed in any distribution.
pub const TAIL_MASS: f64 = 1e-9;

const COMPONENT_TAIL: f64 = 1e-13;

pub const DEFAULT_QUADRATURE_NODES: usize = 21;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AtomState {
    /// F=2, fluoresces under the probe.
    Bright,
    /// F=1, stays dark.
    Dark,
}

impl AtomState {
    pub fn flip(self) -> Self {
        match self {
            AtomState::Bright => AtomState::Dark,
            AtomState::Dark => AtomState::Bright,
        }
    }
}

/// How depumping interrupts fluorescence.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LeakModel {
    /// A single exponential clock at `leak_rate`, independent of emission.
    #[default]
    ExponentialClock,
    /// Every scattering event leaks with probability `leak_rate / scatter_rate`.
    PerScatter,
}

/// Parameters of one fluorescence readout interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadoutConfig {
    /// Probe interval (s).
    pub probe_duration: f64,
    /// Scattering rate on the cycling transition, cavity and free space combined (1/s).
    pub scatter_rate: f64,
    /// Probability that a scattered photon is detected.
    pub eta: f64,
    /// Rate of depumping events into the dark state (1/s).
    pub leak_rate: f64,
    /// Dark plus stray counts (1/s).
    pub background_rate: f64,
    /// Probability that state preparation produced the other hyperfine state.
    pub prep_error: f64,
    /// Relative shot-to-shot spread of the scattering rate.
    #[serde(default)]
    pub rate_spread: f64,
    /// Detected counts from residual scattering of a dark atom (1/s).
    #[serde(default)]
    pub dark_scatter_rate: f64,
    #[serde(default)]
    pub leak_model: LeakModel,
}

impl Default for ReadoutConfig {
    fn default() -> Self {
        ReadoutConfig {
            probe_duration: 85e-6,
            scatter_rate: 0.0,
            eta: 0.0,
            leak_rate: 0.0,
            background_rate: 50.0,
            prep_error: 1e-3,
            rate_spread: 0.0,
            dark_scatter_rate: 0.0,
            leak_model: LeakModel::ExponentialClock,
        }
    }
}

impl ReadoutConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.probe_duration > 0.0 && self.probe_duration.is_finite()) {
            return Err(Error::invalid("readout.probe_duration must be > 0"));
        }
        for (name, v) in [
            ("readout.scatter_rate", self.scatter_rate),
            ("readout.leak_rate", self.leak_rate),
            ("readout.background_rate", self.background_rate),
            ("readout.dark_scatter_rate", self.dark_scatter_rate),
            ("readout.rate_spread", self.rate_spread),
        ] {
            if !(v >= 0.0) {
                return Err(Error::invalid(format!("{name} must be >= 0")));
            }
        }
        for (name, p) in [("readout.eta", self.eta), ("readout.prep_error", self.prep_error)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("{name} must be in [0, 1]")));
            }
        }
        Ok(())
    }

    /// Rates `(detected fluorescence, leak)` in the exponential-clock picture.
    pub(crate) fn effective_rates(&self, multiplier: f64) -> (f64, f64) {
        let r = self.scatter_rate * multiplier;
        let leak = self.leak_rate * multiplier;
        match self.leak_model {
            LeakModel::ExponentialClock => (r * self.eta, leak),
            LeakModel::PerScatter => {
                // The leaking scatter itself emits no detectable photon.
                let p = if r > 0.0 { (leak / r).min(1.0) } else { 0.0 };
                (r * (1.0 - p) * self.eta, leak)
            }
        }
    }

    /// Mean detected fluorescence before depumping or the end of the probe.
    pub fn fluorescence_mean(&self) -> f64 {
        let (lambda, leak) = self.effective_rates(1.0);
        let t = self.probe_duration;
        if leak == 0.0 {
            lambda * t
        } else if leak.is_infinite() {
            0.0
        } else {
            lambda / leak * (-(-leak * t).exp_m1())
        }
    }

    /// Mean detected count of a bright atom, background included, no broadening.
    pub fn bright_mean(&self) -> f64 {
        self.fluorescence_mean() + self.background_rate * self.probe_duration
    }
}

/// Probability mass function over detected photon number `N = 0..=n_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountDistribution {
    pmf: Vec<f64>,
}

impl CountDistribution {
    /// Wraps a pmf; entries must be non-negative and sum to one within [`TAIL_MASS`].
    pub fn from_pmf(pmf: Vec<f64>) -> Result<Self> {
        if pmf.is_empty() {
            return Err(Error::invalid("pmf must not be empty"));
        }
        if pmf.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::invalid("pmf entries must be >= 0"));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > TAIL_MASS {
            return Err(Error::invalid(format!("pmf sums to {total}, not 1")));
        }
        Ok(CountDistribution { pmf })
    }

    pub fn delta(n: usize) -> Self {
        let mut pmf = vec![0.0; n + 1];
        pmf[n] = 1.0;
        CountDistribution { pmf }
    }

    pub fn poisson(mean: f64) -> Self {
        with_growth(|tol| poisson_pmf(mean, tol))
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn n_max(&self) -> usize {
        self.pmf.len() - 1
    }

    pub fn prob(&self, n: usize) -> f64 {
        self.pmf.get(n).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.pmf.iter().sum()
    }

    /// Distribution of the sum of two independent counts.
    pub fn convolve(&self, other: &CountDistribution) -> CountDistribution {
        CountDistribution {
            pmf: trim(convolve(&self.pmf, &other.pmf)),
        }
    }

    /// `(1 - w)·self + w·other`.
    pub fn mix(&self, other: &CountDistribution, w: f64) -> CountDistribution {
        if w == 0.0 {
            return self.clone();
        }
        let len = self.pmf.len().max(other.pmf.len());
        let pmf = (0..len)
            .map(|n| (1.0 - w) * self.prob(n) + w * other.prob(n))
            .collect();
        CountDistribution { pmf }
    }

    /// Weighted mixture of several distributions; weights must sum to one.
    pub fn mixture<'a>(parts: impl IntoIterator<Item = (f64, &'a CountDistribution)>) -> CountDistribution {
        let mut pmf: Vec<f64> = Vec::new();
        for (w, part) in parts {
            if pmf.len() < part.pmf.len() {
                pmf.resize(part.pmf.len(), 0.0);
            }
            for (acc, p) in pmf.iter_mut().zip(&part.pmf) {
                *acc += w * p;
            }
        }
        CountDistribution { pmf: trim(pmf) }
    }
}

/// First two moments of a count record, used for the Mandel Q parameter.
pub trait CountStatistics {
    fn mean(&self) -> f64;
    fn variance(&self) -> f64;
}

impl CountStatistics for CountDistribution {
    fn mean(&self) -> f64 {
        let total = self.total();
        self.pmf.iter().enumerate().map(|(n, p)| n as f64 * p).sum::<f64>() / total
    }

    fn variance(&self) -> f64 {
        let m = self.mean();
        let total = self.total();
        self.pmf
            .iter()
            .enumerate()
            .map(|(n, p)| (n as f64 - m).powi(2) * p)
            .sum::<f64>()
            / total
    }
}

/// Q = variance/mean − 1; zero for Poisson statistics.
pub fn mandel_q(dist: &impl CountStatistics) -> Result<f64> {
    let mean = dist.mean();
    if !(mean > 0.0) {
        return Err(Error::invalid("Mandel Q needs a positive mean count"));
    }
    Ok(dist.variance() / mean - 1.0)
}

/// Poisson pmf from `n = 0` until the remaining tail is below `tail_tol`.
pub(crate) fn poisson_pmf(mean: f64, tail_tol: f64) -> Vec<f64> {
    if !(mean > 0.0) {
        return vec![1.0];
    }
    let ln_mu = mean.ln();
    let mut out = Vec::with_capacity(mean as usize * 2 + 16);
    let mut ln_p = -mean;
    let mut n = 0usize;
    loop {
        let p = ln_p.exp();
        out.push(p);
        let nf = n as f64;
        // Beyond the mode the tail is bounded by a geometric series.
        if nf > mean && p * mean / (nf + 1.0 - mean) < tail_tol {
            break;
        }
        n += 1;
        ln_p += ln_mu - (n as f64).ln();
    }
    out
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if b.len() == 1 {
        return a.iter().map(|x| x * b[0]).collect();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Drops trailing bins carrying negligible mass.
fn trim(mut pmf: Vec<f64>) -> Vec<f64> {
    let mut tail = 0.0;
    while pmf.len() > 1 {
        let last = *pmf.last().unwrap();
        if tail + last >= COMPONENT_TAIL * 1e-2 {
            break;
        }
        tail += last;
        pmf.pop();
    }
    pmf
}

/// Pmf of detected fluorescence only (no background), rate multiplier applied.
fn fluorescence_pmf(cfg: &ReadoutConfig, multiplier: f64, tol: f64) -> Vec<f64> {
    let (lambda, leak) = cfg.effective_rates(multiplier);
    let t = cfg.probe_duration;
    let signal = lambda * t;
    if signal == 0.0 || leak.is_infinite() {
        return vec![1.0];
    }
    if leak == 0.0 {
        return poisson_pmf(signal, tol);
    }
    // P(N=n) = e^{-Lt} Pois(n; λt) + L/(L+λ) · (λ/(L+λ))^n · P(Pois((L+λ)t) > n)
    let no_leak = poisson_pmf(signal, tol);
    let survive = (-leak * t).exp();
    let ratio = lambda / (lambda + leak);
    let weight = leak / (lambda + leak);
    let total = (lambda + leak) * t;
    // Bins where the leak branch still exceeds `tol`.
    let geometric = if weight <= tol {
        0
    } else {
        ((tol / weight).ln() / ratio.ln()).ceil() as usize + 1
    };
    let upper = if total - 40.0 * total.sqrt() - 40.0 > no_leak.len().max(geometric) as f64 {
        // Leaks so fast that P(Pois(total) > n) = 1 on every bin that matters.
        vec![1.0; no_leak.len().max(geometric)]
    } else {
        let combined = poisson_pmf(total, tol);
        let mut upper = vec![0.0; combined.len()];
        let mut acc = 0.0;
        for n in (0..combined.len()).rev() {
            upper[n] = acc;
            acc += combined[n];
        }
        upper
    };
    let len = no_leak.len().max(upper.len());
    let mut pmf = Vec::with_capacity(len);
    let mut ratio_pow = 1.0;
    for n in 0..len {
        let a = survive * no_leak.get(n).copied().unwrap_or(0.0);
        let b = weight * ratio_pow * upper.get(n).copied().unwrap_or(0.0);
        pmf.push(a + b);
        ratio_pow *= ratio;
    }
    pmf
}

fn with_growth(build: impl Fn(f64) -> Vec<f64>) -> CountDistribution {
    let mut tol = COMPONENT_TAIL;
    loop {
        let pmf = trim(build(tol));
        if 1.0 - pmf.iter().sum::<f64>() < TAIL_MASS || tol < 1e-30 {
            return CountDistribution { pmf };
        }
        tol *= 1e-3;
    }
}

/// Counts from a correctly prepared dark atom: background only, plus optional
/// residual scattering.
pub fn dark_state_distribution(cfg: &ReadoutConfig) -> CountDistribution {
    CountDistribution::poisson((cfg.background_rate + cfg.dark_scatter_rate) * cfg.probe_duration)
}

/// Counts from a correctly prepared bright atom, without rate broadening.
pub fn bright_state_distribution(cfg: &ReadoutConfig) -> CountDistribution {
    scaled_bright_distribution(cfg, 1.0)
}

/// Bright-atom counts with scattering and leak rates scaled by `multiplier`.
pub fn scaled_bright_distribution(cfg: &ReadoutConfig, multiplier: f64) -> CountDistribution {
    let bg = cfg.background_rate * cfg.probe_duration;
    with_growth(|tol| {
        let fl = fluorescence_pmf(cfg, multiplier, tol);
        if bg > 0.0 {
            convolve(&fl, &poisson_pmf(bg, tol))
        } else {
            fl
        }
    })
}

/// Mixture of `base(m)` over a rate multiplier `m ~ N(1, spread²)` truncated
/// at zero, evaluated by Gauss–Hermite quadrature.
pub fn broadened_distribution(
    base: impl Fn(f64) -> CountDistribution,
    spread: f64,
    n_nodes: usize,
) -> Result<CountDistribution> {
    if !(spread >= 0.0) {
        return Err(Error::invalid("rate spread must be >= 0"));
    }
    if n_nodes == 0 {
        return Err(Error::invalid("need at least one quadrature node"));
    }
    if spread == 0.0 {
        return Ok(base(1.0));
    }
    let (nodes, weights) = gauss_hermite(n_nodes);
    let kept: Vec<(f64, f64)> = nodes
        .iter()
        .zip(&weights)
        .map(|(z, w)| (1.0 + spread * z, *w))
        .filter(|(m, _)| *m >= 0.0)
        .collect();
    let norm: f64 = kept.iter().map(|(_, w)| w).sum();
    let parts: Vec<(f64, CountDistribution)> =
        kept.into_iter().map(|(m, w)| (w / norm, base(m))).collect();
    Ok(CountDistribution::mixture(parts.iter().map(|(w, d)| (*w, d))))
}

/// Bright-atom counts including the configured rate spread.
pub fn broadened_bright_distribution(cfg: &ReadoutConfig, n_nodes: usize) -> Result<CountDistribution> {
    broadened_distribution(|m| scaled_bright_distribution(cfg, m), cfg.rate_spread, n_nodes)
}

/// Counts recorded for an atom *prepared* in `state`, with the preparation
/// error folded in as a mixture with the other state.
pub fn measured_distribution(
    cfg: &ReadoutConfig,
    state: AtomState,
    n_nodes: usize,
) -> Result<CountDistribution> {
    let bright = broadened_bright_distribution(cfg, n_nodes)?;
    let dark = dark_state_distribution(cfg);
    Ok(match state {
        AtomState::Bright => bright.mix(&dark, cfg.prep_error),
        AtomState::Dark => dark.mix(&bright, cfg.prep_error),
    })
}

/// Finds the relative rate spread whose broadened bright distribution has
/// Mandel Q equal to `target_q` within 1e-3 (the search itself aims for 1e-5).
pub fn calibrate_broadening(target_q: f64, cfg: &ReadoutConfig, n_nodes: usize) -> Result<f64> {
    if !(target_q >= 0.0) {
        return Err(Error::invalid("target Mandel Q must be >= 0"));
    }
    if cfg.fluorescence_mean() <= 0.0 {
        if target_q == 0.0 {
            return Ok(0.0);
        }
        return Err(Error::Convergence(
            "no fluorescence signal: a rate spread cannot change the count statistics".into(),
        ));
    }
    let q_of = |spread: f64| -> Result<f64> {
        let d = broadened_distribution(|m| scaled_bright_distribution(cfg, m), spread, n_nodes)?;
        mandel_q(&d)
    };
    let q0 = q_of(0.0)?;
    if (q0 - target_q).abs() < 1e-3 {
        return Ok(0.0);
    }
    if target_q < q0 {
        return Err(Error::Convergence(format!(
            "Mandel Q {target_q} is below the unbroadened value {q0:.4}"
        )));
    }
    // Q ≈ μσ² for a Poisson mixture gives the first bracket.
    let mu = cfg.fluorescence_mean();
    let mut lo = 0.0;
    let mut hi = ((target_q - q0) / mu).sqrt().max(1e-3);
    let mut grown = 0;
    while q_of(hi)? < target_q {
        lo = hi;
        hi *= 2.0;
        grown += 1;
        if grown > 12 {
            return Err(Error::Convergence(format!(
                "Mandel Q {target_q} not reached with rate spread up to {hi:.3}"
            )));
        }
    }
    let mut best = (f64::INFINITY, hi);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let q = q_of(mid)?;
        if (q - target_q).abs() < best.0 {
            best = ((q - target_q).abs(), mid);
        }
        if (q - target_q).abs() < 1e-5 {
            break;
        }
        if q < target_q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if best.0 < 1e-3 {
        Ok(best.1)
    } else {
        Err(Error::Convergence("rate-spread calibration did not converge".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(signal: f64, leak_t: f64, bg: f64) -> ReadoutConfig {
        let t = 85e-6;
        ReadoutConfig {
            probe_duration: t,
            scatter_rate: signal / t / 0.2,
            eta: 0.2,
            leak_rate: leak_t / t,
            background_rate: bg,
            prep_error: 0.0,
            ..Default::default()
        }
    }

    fn poisson_exact(mean: f64, n: usize) -> f64 {
        let mut p = (-mean).exp();
        for k in 1..=n {
            p *= mean / k as f64;
        }
        p
    }

    #[test]
    fn dark_examples() {
        let c = cfg(8.0, 0.0, 50.0);
        let d = dark_state_distribution(&c);
        assert!((d.prob(0) - (-0.00425f64).exp()).abs() < 1e-15);
        assert!((d.prob(0) - 0.99576).abs() < 1e-5);
        let none = dark_state_distribution(&cfg(8.0, 0.0, 0.0));
        assert_eq!(none.prob(0), 1.0);
        let long = ReadoutConfig {
            probe_duration: 170e-6,
            ..c
        };
        let ratio = dark_state_distribution(&long).mean() / d.mean();
        assert!((ratio - 2.0).abs() < 1e-9);
    }

    #[test]
    fn bright_without_leak_is_poisson() {
        let d = bright_state_distribution(&cfg(8.0, 0.0, 0.0));
        for n in 0..40 {
            assert!((d.prob(n) - poisson_exact(8.0, n)).abs() < 1e-13);
        }
    }

    #[test]
    fn bright_zero_count_product() {
        let d = bright_state_distribution(&cfg(8.0, 0.0, 50.0));
        let expected = (-8.0f64).exp() * (-0.00425f64).exp();
        assert!((d.prob(0) - expected).abs() < 1e-15);
        assert!((d.prob(0) - 3.34e-4).abs() < 1e-6);
    }

    #[test]
    fn infinite_leak_collapses_to_background() {
        let mut c = cfg(8.0, 0.0, 5000.0);
        c.leak_rate = f64::INFINITY;
        let b = bright_state_distribution(&c);
        let d = dark_state_distribution(&c);
        for n in 0..10 {
            assert!((b.prob(n) - d.prob(n)).abs() < 1e-12);
        }
        c.leak_rate = 1e15;
        let b = bright_state_distribution(&c);
        assert!((b.prob(0) - d.prob(0)).abs() < 1e-6);
    }

    #[test]
    fn distributions_are_normalized() {
        for (s, l, bg) in [(0.1, 0.0, 0.0), (50.0, 5.0, 50.0), (300.0, 0.5, 1e4), (1e-6, 1.0, 0.0)] {
            let d = bright_state_distribution(&cfg(s, l, bg));
            assert!((d.total() - 1.0).abs() < TAIL_MASS);
            assert!(d.pmf().iter().all(|&p| p >= 0.0));
        }
    }

    #[test]
    fn poisson_q_is_zero() {
        let d = CountDistribution::poisson(8.0);
        assert!(mandel_q(&d).unwrap().abs() < 1e-9);
        assert!((mandel_q(&CountDistribution::delta(5)).unwrap() + 1.0).abs() < 1e-15);
        assert!(mandel_q(&CountDistribution::delta(0)).is_err());
    }

    #[test]
    fn zero_spread_is_identity() {
        let c = cfg(8.0, 0.3, 50.0);
        let base = bright_state_distribution(&c);
        let b = broadened_distribution(|m| scaled_bright_distribution(&c, m), 0.0, 21).unwrap();
        assert_eq!(base, b);
        assert!(broadened_distribution(|m| scaled_bright_distribution(&c, m), -0.1, 21).is_err());
    }

    #[test]
    fn broadening_preserves_mean() {
        let c = cfg(8.0, 0.0, 0.0);
        let b = broadened_distribution(|m| scaled_bright_distribution(&c, m), 0.2, 21).unwrap();
        // Direct summation of the mixture; truncation at zero rate sits 5σ out.
        assert!((b.mean() - 8.0).abs() < 1e-6);
        // Poisson mixture: Var = μ + μ²σ².
        assert!((b.variance() - (8.0 + 64.0 * 0.04)).abs() < 1e-5);
    }

    #[test]
    fn calibrate_examples() {
        let c = cfg(8.0, 0.0, 0.0);
        assert_eq!(calibrate_broadening(0.0, &c, 21).unwrap(), 0.0);
        let s = calibrate_broadening(0.5, &c, 21).unwrap();
        assert!((s - 0.25).abs() < 1e-3, "{s}");
        let dark = cfg(0.0, 0.0, 50.0);
        assert!(calibrate_broadening(0.5, &dark, 21).is_err());
    }

    #[test]
    fn prep_error_mixes_states() {
        let mut c = cfg(8.0, 0.0, 50.0);
        c.prep_error = 1e-3;
        let b = bright_state_distribution(&c);
        let d = dark_state_distribution(&c);
        let md = measured_distribution(&c, AtomState::Dark, 21).unwrap();
        assert!((md.prob(0) - (0.999 * d.prob(0) + 0.001 * b.prob(0))).abs() < 1e-15);
    }

    #[test]
    fn per_scatter_matches_thinned_clock() {
        let mut c = cfg(10.0, 1.0, 0.0);
        c.leak_model = LeakModel::PerScatter;
        let p = c.leak_rate / c.scatter_rate;
        let mut reference = c;
        reference.leak_model = LeakModel::ExponentialClock;
        reference.eta *= 1.0 - p;
        let a = bright_state_distribution(&c);
        let b = bright_state_distribution(&reference);
        for n in 0..40 {
            assert!((a.prob(n) - b.prob(n)).abs() < 1e-15);
        }
    }
}
