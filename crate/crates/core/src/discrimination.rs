//! State assignment from a detected photon number and the resulting fidelities.

use serde::{Deserialize, Serialize};

use crate::counting::CountDistribution;

/// Direction of a threshold rule.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    /// Bright iff `N >= n_th` (fluorescence).
    #[default]
    BrightAbove,
    /// Bright iff `N < n_th` (transmission dip).
    BrightBelow,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub threshold: usize,
    pub rule: Rule,
    pub p_correct_bright: f64,
    pub p_correct_dark: f64,
    /// Conservative fidelity: the smaller of the two conditionals.
    pub fidelity: f64,
}

impl FidelityReport {
    fn new(threshold: usize, rule: Rule, p_correct_bright: f64, p_correct_dark: f64) -> Self {
        FidelityReport {
            threshold,
            rule,
            p_correct_bright,
            p_correct_dark,
            fidelity: p_correct_bright.min(p_correct_dark),
        }
    }

    /// Average of the two conditionals (equal prior on both states).
    pub fn mean_fidelity(&self) -> f64 {
        0.5 * (self.p_correct_bright + self.p_correct_dark)
    }
}

/// Head and tail sums of a pmf, accumulated from each end separately so
/// neither side loses small probabilities to cancellation.
struct Sums {
    head: Vec<f64>,
    tail: Vec<f64>,
}

impl Sums {
    fn new(pmf: &[f64], len: usize) -> Self {
        let mut head = vec![0.0; len + 1];
        for n in 0..len {
            head[n + 1] = head[n] + pmf.get(n).copied().unwrap_or(0.0);
        }
        let mut tail = vec![0.0; len + 1];
        for n in (0..len).rev() {
            tail[n] = tail[n + 1] + pmf.get(n).copied().unwrap_or(0.0);
        }
        Sums { head, tail }
    }

    /// P(N < k)
    fn below(&self, k: usize) -> f64 {
        self.head[k.min(self.head.len() - 1)]
    }

    /// P(N >= k)
    fn at_or_above(&self, k: usize) -> f64 {
        self.tail[k.min(self.tail.len() - 1)]
    }
}

fn report(b: &Sums, d: &Sums, n_th: usize, rule: Rule) -> FidelityReport {
    match rule {
        Rule::BrightAbove => FidelityReport::new(n_th, rule, b.at_or_above(n_th), d.below(n_th)),
        Rule::BrightBelow => FidelityReport::new(n_th, rule, b.below(n_th), d.at_or_above(n_th)),
    }
}

fn support(bright: &CountDistribution, dark: &CountDistribution) -> usize {
    bright.pmf().len().max(dark.pmf().len())
}

/// Fidelity of the fluorescence rule "bright iff N ≥ n_th".
pub fn fidelity_at_threshold(
    bright: &CountDistribution,
    dark: &CountDistribution,
    n_th: usize,
) -> FidelityReport {
    fidelity_with_rule(bright, dark, n_th, Rule::BrightAbove)
}

pub fn fidelity_with_rule(
    bright: &CountDistribution,
    dark: &CountDistribution,
    n_th: usize,
    rule: Rule,
) -> FidelityReport {
    let len = support(bright, dark);
    let b = Sums::new(bright.pmf(), len);
    let d = Sums::new(dark.pmf(), len);
    report(&b, &d, n_th, rule)
}

/// Threshold maximizing the conservative fidelity of the fluorescence rule.
pub fn optimal_threshold(bright: &CountDistribution, dark: &CountDistribution) -> FidelityReport {
    optimal_threshold_with_rule(bright, dark, Rule::BrightAbove)
}

/// Exhaustive scan of `n_th` over `0..=n_max+1`; ties go to the smallest threshold.
pub fn optimal_threshold_with_rule(
    bright: &CountDistribution,
    dark: &CountDistribution,
    rule: Rule,
) -> FidelityReport {
    let len = support(bright, dark);
    let b = Sums::new(bright.pmf(), len);
    let d = Sums::new(dark.pmf(), len);
    let mut best = report(&b, &d, 0, rule);
    for n_th in 1..=len + 1 {
        let r = report(&b, &d, n_th, rule);
        if r.fidelity > best.fidelity {
            best = r;
        }
    }
    best
}

/// Per-count maximum-likelihood assignment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlAssignment {
    /// `bright[n]` is true when N = n is assigned to the bright state. Counts
    /// beyond the table are assigned dark.
    pub bright: Vec<bool>,
    pub p_correct_bright: f64,
    pub p_correct_dark: f64,
}

impl MlAssignment {
    pub fn is_bright(&self, n: usize) -> bool {
        self.bright.get(n).copied().unwrap_or(false)
    }

    /// Conservative fidelity, min of the two conditionals.
    pub fn fidelity(&self) -> f64 {
        self.p_correct_bright.min(self.p_correct_dark)
    }

    /// Average of the two conditionals; maximal over all deterministic rules.
    pub fn mean_fidelity(&self) -> f64 {
        0.5 * (self.p_correct_bright + self.p_correct_dark)
    }

    /// The equivalent "bright iff N ≥ n_th" threshold, if the assignment has that form.
    pub fn as_threshold(&self) -> Option<usize> {
        let first = self.bright.iter().position(|&b| b).unwrap_or(self.bright.len());
        if self.bright[first..].iter().all(|&b| b) {
            Some(first)
        } else {
            None
        }
    }
}

/// Assigns each count to the more likely state; ties go dark.
pub fn ml_classifier(bright: &CountDistribution, dark: &CountDistribution) -> MlAssignment {
    let len = support(bright, dark);
    let mut assign = Vec::with_capacity(len);
    let (mut pb, mut pd) = (0.0, 0.0);
    for n in 0..len {
        let b = bright.prob(n);
        let d = dark.prob(n);
        let is_bright = b > d;
        if is_bright {
            pb += b;
        } else {
            pd += d;
        }
        assign.push(is_bright);
    }
    MlAssignment {
        bright: assign,
        p_correct_bright: pb,
        p_correct_dark: pd,
    }
}
