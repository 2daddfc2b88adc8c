//! Hidden-set recognition experiment: structural subgradients of the
//! gadget family `f_R` (the [`LowerBoundInstance`] values), the reveal
//! bookkeeping a recognizer can extract from each subgradient, query
//! strategies, and Monte-Carlo estimates of how many queries
//! identification of `R` takes.
//!
//! [`LowerBoundInstance`]: crate::oracle::LowerBoundInstance

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gradmaint::splitmix64;
use crate::lovasz::{Permutation, SparseVector};

/// What one subgradient of `f_R` along a permutation discloses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Reveal {
    /// 1-based position of the first prefix not contained in `R`;
    /// `None` exactly when `R` is the full ground set.
    pub first_outside: Option<usize>,
    /// 1-based position of the first prefix containing `R`;
    /// `0` exactly when `R` is empty.
    pub covered_at: usize,
}

/// Scans the permutation once against the target indicator.
pub fn reveal_indices(in_r: &[bool], p: &Permutation) -> Result<Reveal> {
    if in_r.len() != p.n() {
        return Err(Error::domain("target indicator length does not match the permutation"));
    }
    let r_size = in_r.iter().filter(|b| **b).count();
    let mut first_outside = None;
    let mut seen_members = 0usize;
    let mut covered_at = 0usize;
    for (idx, &el) in p.order().iter().enumerate() {
        if in_r[el] {
            seen_members += 1;
            if seen_members == r_size && covered_at == 0 && r_size > 0 {
                covered_at = idx + 1;
            }
        } else if first_outside.is_none() {
            first_outside = Some(idx + 1);
        }
    }
    Ok(Reveal { first_outside, covered_at })
}

/// Exact subgradient of `f_R` (`-1` at `R`, `0` on sets nested with `R`,
/// `1` otherwise, with `f_R(empty) = -1` when `R` is empty) along the
/// ordering `p`, computed structurally: `+1` on the element at the first
/// position whose prefix leaves `R`, `-1` on the element at the first
/// position whose prefix covers `R`.
pub fn gadget_subgradient(in_r: &[bool], p: &Permutation) -> Result<SparseVector> {
    let reveal = reveal_indices(in_r, p)?;
    let mut pairs = Vec::with_capacity(2);
    if let Some(i) = reveal.first_outside {
        pairs.push((p.order()[i - 1], 1.0));
    }
    if reveal.covered_at > 0 {
        pairs.push((p.order()[reveal.covered_at - 1], -1.0));
    }
    SparseVector::from_pairs(pairs)
}

/// Orders the still-unknown elements for the next query. The simulator
/// canonicalizes the full permutation itself: elements already known to
/// belong to `R` are placed first and elements known to be outside last,
/// so a strategy only ever ranks the undetermined block.
pub trait Strategy {
    fn name(&self) -> &'static str;
    /// Called once per trial before any query.
    fn begin_trial(&mut self, _n: usize, _rng: &mut ChaCha8Rng) {}
    /// Must return a permutation of exactly the elements of `unknown`.
    fn order(&mut self, unknown: &[usize], rng: &mut ChaCha8Rng) -> Vec<usize>;
}

/// Ascending element order.
pub struct Lex;

impl Strategy for Lex {
    fn name(&self) -> &'static str {
        "lex"
    }
    fn order(&mut self, unknown: &[usize], _rng: &mut ChaCha8Rng) -> Vec<usize> {
        unknown.to_vec()
    }
}

/// Descending element order.
pub struct ReverseLex;

impl Strategy for ReverseLex {
    fn name(&self) -> &'static str {
        "reverse-lex"
    }
    fn order(&mut self, unknown: &[usize], _rng: &mut ChaCha8Rng) -> Vec<usize> {
        let mut out = unknown.to_vec();
        out.reverse();
        out
    }
}

/// Fresh uniform shuffle of the unknown block at every query.
pub struct UniformShuffle;

impl Strategy for UniformShuffle {
    fn name(&self) -> &'static str {
        "uniform-shuffle"
    }
    fn order(&mut self, unknown: &[usize], rng: &mut ChaCha8Rng) -> Vec<usize> {
        let mut out = unknown.to_vec();
        out.shuffle(rng);
        out
    }
}

/// One random priority drawn per trial; every query orders the unknown
/// block by that fixed priority (a non-adaptive randomized order).
pub struct StaticShuffle {
    priority: Vec<u64>,
}

impl StaticShuffle {
    pub fn new() -> Self {
        StaticShuffle { priority: Vec::new() }
    }
}

impl Default for StaticShuffle {
    fn default() -> Self {
        Self::new()
    }
}

impl Strategy for StaticShuffle {
    fn name(&self) -> &'static str {
        "static-shuffle"
    }
    fn begin_trial(&mut self, n: usize, rng: &mut ChaCha8Rng) {
        self.priority = (0..n).map(|_| rng.random()).collect();
    }
    fn order(&mut self, unknown: &[usize], _rng: &mut ChaCha8Rng) -> Vec<usize> {
        let mut out = unknown.to_vec();
        out.sort_by_key(|&e| (self.priority[e], e));
        out
    }
}

/// Strategy selector used by the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyKind {
    Lex,
    ReverseLex,
    UniformShuffle,
    StaticShuffle,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] = [
        StrategyKind::Lex,
        StrategyKind::ReverseLex,
        StrategyKind::UniformShuffle,
        StrategyKind::StaticShuffle,
    ];

    pub fn build(self) -> Box<dyn Strategy> {
        match self {
            StrategyKind::Lex => Box::new(Lex),
            StrategyKind::ReverseLex => Box::new(ReverseLex),
            StrategyKind::UniformShuffle => Box::new(UniformShuffle),
            StrategyKind::StaticShuffle => Box::new(StaticShuffle::new()),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Lex => "lex",
            StrategyKind::ReverseLex => "reverse-lex",
            StrategyKind::UniformShuffle => "uniform-shuffle",
            StrategyKind::StaticShuffle => "static-shuffle",
        }
    }
}

impl std::str::FromStr for StrategyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lex" => Ok(StrategyKind::Lex),
            "reverse-lex" => Ok(StrategyKind::ReverseLex),
            "uniform-shuffle" => Ok(StrategyKind::UniformShuffle),
            "static-shuffle" => Ok(StrategyKind::StaticShuffle),
            other => Err(Error::domain(format!(
                "unknown strategy '{other}' (expected lex, reverse-lex, uniform-shuffle, static-shuffle)"
            ))),
        }
    }
}

/// Query-count statistics over independent trials.
#[derive(Debug, Clone)]
pub struct SimulationReport {
    pub n: usize,
    pub trials: u64,
    pub mean_queries: f64,
    pub std_queries: f64,
    pub max_queries: u64,
    /// Trials whose hidden set was empty or full; those resolve in one
    /// query through the edge cases of the reveal rule.
    pub degenerate_trials: u64,
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(trial.wrapping_add(1))))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Known {
    Unknown,
    Inside,
    Outside,
}

/// Draws `R` with each element included independently with probability
/// one half, then queries subgradients of `f_R` until every element is
/// classified. Returns per-trial query-count statistics.
pub fn simulate_recognizer(
    strategy: &mut dyn Strategy,
    n: usize,
    trials: u64,
    seed: u64,
) -> Result<SimulationReport> {
    if n == 0 {
        return Err(Error::domain("ground set must be non-empty"));
    }
    if trials == 0 {
        return Err(Error::domain("at least one trial is required"));
    }
    let mut counts = Vec::with_capacity(trials as usize);
    let mut degenerate = 0u64;
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial);
        let in_r: Vec<bool> = (0..n).map(|_| rng.random()).collect();
        if in_r.iter().all(|b| *b) || !in_r.iter().any(|b| *b) {
            degenerate += 1;
        }
        strategy.begin_trial(n, &mut rng);
        counts.push(run_trial(strategy, &in_r, &mut rng)? as f64);
    }
    let trials_f = trials as f64;
    let mean = counts.iter().sum::<f64>() / trials_f;
    let var = if trials > 1 {
        counts.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / (trials_f - 1.0)
    } else {
        0.0
    };
    Ok(SimulationReport {
        n,
        trials,
        mean_queries: mean,
        std_queries: var.sqrt(),
        max_queries: counts.iter().fold(0u64, |m, &c| m.max(c as u64)),
        degenerate_trials: degenerate,
    })
}

fn run_trial(
    strategy: &mut dyn Strategy,
    in_r: &[bool],
    rng: &mut ChaCha8Rng,
) -> Result<u64> {
    let n = in_r.len();
    let mut known = vec![Known::Unknown; n];
    let mut queries = 0u64;
    loop {
        let unknown: Vec<usize> =
            (0..n).filter(|&e| known[e] == Known::Unknown).collect();
        if unknown.is_empty() {
            return Ok(queries);
        }
        let middle = strategy.order(&unknown, rng);
        check_block(&middle, &unknown)?;
        // Canonical query: confirmed members first, confirmed
        // non-members last, the strategy's ordering in between.
        let mut order: Vec<usize> =
            (0..n).filter(|&e| known[e] == Known::Inside).collect();
        order.extend(middle);
        order.extend((0..n).filter(|&e| known[e] == Known::Outside));
        let perm = Permutation::new(order)?;
        let reveal = reveal_indices(in_r, &perm)?;
        queries += 1;
        apply_reveal(&mut known, in_r, perm.order(), reveal);
    }
}

fn check_block(block: &[usize], unknown: &[usize]) -> Result<()> {
    if block.len() != unknown.len() {
        return Err(Error::contract("strategy changed the number of unknown elements"));
    }
    let mut sorted = block.to_vec();
    sorted.sort_unstable();
    if sorted != unknown {
        return Err(Error::contract("strategy must order exactly the unknown elements"));
    }
    Ok(())
}

fn apply_reveal(known: &mut [Known], in_r: &[bool], order: &[usize], reveal: Reveal) {
    let n = order.len();
    let mut classify = |el: usize, inside: bool| {
        debug_assert_eq!(in_r[el], inside, "reveal rule misclassified element {el}");
        known[el] = if inside { Known::Inside } else { Known::Outside };
    };
    match reveal.first_outside {
        // No prefix ever leaves R, so R is the full ground set.
        None => {
            for &el in order {
                classify(el, true);
            }
        }
        Some(i) => {
            if reveal.covered_at == 0 {
                // Nothing ever covers R from below its size: R is empty.
                for &el in order {
                    classify(el, false);
                }
            } else {
                for (idx, &el) in order.iter().enumerate().take(i) {
                    classify(el, idx + 1 < i);
                }
                for (idx, &el) in order.iter().enumerate().take(n).skip(reveal.covered_at - 1) {
                    classify(el, idx + 1 == reveal.covered_at);
                }
            }
        }
    }
}

/// Pearson statistic `sum (obs - exp)^2 / exp` over matched bins.
pub fn chi_square(observed: &[u64], expected: &[f64]) -> Result<f64> {
    if observed.len() != expected.len() || observed.is_empty() {
        return Err(Error::domain("observed and expected bins must match and be non-empty"));
    }
    if expected.iter().any(|&e| e <= 0.0) {
        return Err(Error::domain("expected bin counts must be positive"));
    }
    Ok(observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| {
            let d = o as f64 - e;
            d * d / e
        })
        .sum())
}
