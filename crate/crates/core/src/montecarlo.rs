//! Shot-by-shot Monte Carlo counterpart of the analytic count distributions.
//!
//! Every shot draws from its own ChaCha8 stream selected by the shot index, so
//! a histogram depends only on `(seed, n_shots)` and never on how shots are
//! split across worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Exp, Geometric, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counting::{AtomState, CountDistribution, CountStatistics, LeakModel, ReadoutConfig};
use crate::error::{Error, Result};

pub type ShotRng = ChaCha8Rng;

/// Generator for one shot: stream `shot_index` of the ChaCha8 key derived from `seed`.
pub fn shot_rng(seed: u64, shot_index: u64) -> ShotRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shot_index);
    rng
}

/// Independent seed for a named sub-simulation (splitmix64 finalizer).
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn poisson(rng: &mut impl Rng, mean: f64) -> u64 {
    if !(mean > 0.0) {
        return 0;
    }
    let d: Poisson<f64> = Poisson::new(mean).expect("finite positive mean");
    d.sample(rng) as u64
}

/// Occurrence counts over detected photon number.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountHistogram {
    pub counts: Vec<u64>,
    pub n_shots: u64,
    pub seed: u64,
}

impl CountHistogram {
    pub fn empty(seed: u64) -> Self {
        CountHistogram {
            counts: Vec::new(),
            n_shots: 0,
            seed,
        }
    }

    pub fn record(&mut self, n: u64) {
        let n = n as usize;
        if self.counts.len() <= n {
            self.counts.resize(n + 1, 0);
        }
        self.counts[n] += 1;
        self.n_shots += 1;
    }

    /// Adds another histogram's counts. Associative and commutative.
    pub fn merge(mut self, other: CountHistogram) -> CountHistogram {
        if self.counts.len() < other.counts.len() {
            self.counts.resize(other.counts.len(), 0);
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.n_shots += other.n_shots;
        self
    }

    pub fn frequency(&self, n: usize) -> f64 {
        self.counts.get(n).copied().unwrap_or(0) as f64 / self.n_shots as f64
    }

    pub fn to_distribution(&self) -> Result<CountDistribution> {
        if self.n_shots == 0 {
            return Err(Error::invalid("empty histogram"));
        }
        let pmf = self
            .counts
            .iter()
            .map(|&c| c as f64 / self.n_shots as f64)
            .collect();
        CountDistribution::from_pmf(pmf)
    }
}

impl CountStatistics for CountHistogram {
    fn mean(&self) -> f64 {
        let s: f64 = self.counts.iter().enumerate().map(|(n, &c)| n as f64 * c as f64).sum();
        s / self.n_shots as f64
    }

    fn variance(&self) -> f64 {
        let m = self.mean();
        let s: f64 = self
            .counts
            .iter()
            .enumerate()
            .map(|(n, &c)| (n as f64 - m).powi(2) * c as f64)
            .sum();
        s / self.n_shots as f64
    }
}

/// Total-variation distance between an empirical histogram and a pmf.
pub fn total_variation(hist: &CountHistogram, dist: &CountDistribution) -> f64 {
    let len = hist.counts.len().max(dist.pmf().len());
    0.5 * (0..len)
        .map(|n| (hist.frequency(n) - dist.prob(n)).abs())
        .sum::<f64>()
}

/// Multiplier for the scattering rate, `N(1, spread²)` truncated at zero.
fn draw_rate_multiplier(rng: &mut impl Rng, spread: f64) -> f64 {
    if spread == 0.0 {
        return 1.0;
    }
    loop {
        let z: f64 = rng.sample(StandardNormal);
        let m = 1.0 + spread * z;
        if m >= 0.0 {
            return m;
        }
    }
}

fn bright_fluorescence(rng: &mut impl Rng, cfg: &ReadoutConfig, multiplier: f64) -> u64 {
    let t = cfg.probe_duration;
    let rate = cfg.scatter_rate * multiplier;
    let leak = cfg.leak_rate * multiplier;
    match cfg.leak_model {
        LeakModel::ExponentialClock => {
            let on = if leak > 0.0 {
                let t_leak: f64 = Exp::new(leak).expect("positive leak rate").sample(rng);
                t_leak.min(t)
            } else {
                t
            };
            poisson(rng, rate * cfg.eta * on)
        }
        LeakModel::PerScatter => {
            let scattered = poisson(rng, rate * t);
            let p = if rate > 0.0 { (leak / rate).min(1.0) } else { 0.0 };
            let emitted = if p > 0.0 {
                // Non-leaking scatters before the first leak.
                let before = Geometric::new(p).expect("probability in (0, 1]").sample(rng);
                scattered.min(before)
            } else {
                scattered
            };
            if emitted == 0 || cfg.eta == 0.0 {
                0
            } else {
                Binomial::new(emitted, cfg.eta).expect("eta in [0, 1]").sample(rng)
            }
        }
    }
}

/// Detected count of a single probe interval for an atom prepared in `prepared`.
pub fn simulate_shot(rng: &mut impl Rng, cfg: &ReadoutConfig, prepared: AtomState) -> u64 {
    let actual = if cfg.prep_error > 0.0 && rng.random::<f64>() < cfg.prep_error {
        prepared.flip()
    } else {
        prepared
    };
    let t = cfg.probe_duration;
    let signal = match actual {
        AtomState::Bright => {
            let m = draw_rate_multiplier(rng, cfg.rate_spread);
            bright_fluorescence(rng, cfg, m)
        }
        AtomState::Dark => poisson(rng, cfg.dark_scatter_rate * t),
    };
    signal + poisson(rng, cfg.background_rate * t)
}

const CHUNK: u64 = 4096;

/// Runs `shot` for indices `0..n_shots`, each with its own stream, and bins the results.
pub fn simulate_counts<F>(n_shots: u64, seed: u64, workers: usize, shot: F) -> Result<CountHistogram>
where
    F: Fn(&mut ShotRng) -> u64 + Sync,
{
    if n_shots == 0 {
        return Err(Error::invalid("n_shots must be >= 1"));
    }
    let n_chunks = n_shots.div_ceil(CHUNK);
    let run = || {
        (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let mut h = CountHistogram::empty(seed);
                for i in c * CHUNK..((c + 1) * CHUNK).min(n_shots) {
                    let mut rng = shot_rng(seed, i);
                    h.record(shot(&mut rng));
                }
                h
            })
            .reduce(|| CountHistogram::empty(seed), CountHistogram::merge)
    };
    if workers == 0 {
        return Ok(run());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    Ok(pool.install(run))
}

/// Histogram of `n_shots` readouts of an atom prepared in `prepared`.
/// `workers = 0` uses the global rayon pool.
pub fn simulate_histogram(
    cfg: &ReadoutConfig,
    prepared: AtomState,
    n_shots: u64,
    seed: u64,
    workers: usize,
) -> Result<CountHistogram> {
    cfg.validate()?;
    simulate_counts(n_shots, seed, workers, |rng| simulate_shot(rng, cfg, prepared))
}
