//! Independent correctness oracles: exhaustive minimization, an exhaustive
//! submodularity check, and Monte-Carlo moment measurements for the sparse
//! difference estimator.
//!
//! Everything here queries instances directly (bypassing any counting
//! wrapper) and shares no code with the incremental data structures it is
//! used to validate.

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gradmaint::OrderTree;
use crate::lovasz::SparseVector;
use crate::oracle::{CountingOracle, MaskSet, Submodular};

/// Largest ground set for exhaustive enumeration.
pub const BRUTE_FORCE_MAX_N: usize = 20;
/// Largest ground set for the exhaustive submodularity check.
pub const CHECK_MAX_N: usize = 12;

#[derive(Debug, Clone)]
pub struct BruteForceResult {
    /// Minimizing subset as a bitmask; numerically smallest on value ties.
    pub minimizer_mask: u32,
    /// The same subset as sorted elements.
    pub minimizer: Vec<usize>,
    pub value: f64,
}

/// Evaluates every subset and returns the minimum. Refuses `n > 20`.
pub fn brute_force_min(inst: &dyn Submodular) -> Result<BruteForceResult> {
    let n = inst.n();
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::domain(format!(
            "brute force supports at most n = {BRUTE_FORCE_MAX_N}, got {n}"
        )));
    }
    let mut best_mask = 0u32;
    let mut best = inst.eval(&MaskSet { n, mask: 0 });
    // Gray-code order: consecutive subsets differ in one element, which
    // keeps locality for oracles that are cheapest near the previous set.
    for i in 1..1u32 << n {
        let mask = i ^ (i >> 1);
        let v = inst.eval(&MaskSet { n, mask: mask as u64 });
        if v < best || (v == best && mask < best_mask) {
            best = v;
            best_mask = mask;
        }
    }
    Ok(BruteForceResult {
        minimizer_mask: best_mask,
        minimizer: (0..n).filter(|&i| best_mask >> i & 1 == 1).collect(),
        value: best,
    })
}

/// Full value table indexed by bitmask. Refuses `n > 20`.
pub fn brute_force_table(inst: &dyn Submodular) -> Result<Vec<f64>> {
    let n = inst.n();
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::domain(format!(
            "brute force supports at most n = {BRUTE_FORCE_MAX_N}, got {n}"
        )));
    }
    Ok((0..1u32 << n).map(|mask| inst.eval(&MaskSet { n, mask: mask as u64 })).collect())
}

/// A diminishing-returns violation: `f(S + i) - f(S) < f(T + i) - f(T)`
/// with `S` inside `T` and `i` outside `T`, given as bitmasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubmodularityWitness {
    pub s_mask: u32,
    pub t_mask: u32,
    pub element: usize,
}

/// Exhaustively checks submodularity for `n <= 12`.
///
/// Uses the pairwise characterization: `f` is submodular iff
/// `f(A + i) + f(A + j) >= f(A + i + j) + f(A)` for all `A` and distinct
/// `i, j` outside `A`. A violation at `(A, i, j)` is reported as the
/// diminishing-returns witness `S = A`, `T = A + j`, element `i`.
pub fn check_submodular(inst: &dyn Submodular) -> Result<Option<SubmodularityWitness>> {
    let n = inst.n();
    if n > CHECK_MAX_N {
        return Err(Error::domain(format!(
            "submodularity check supports at most n = {CHECK_MAX_N}, got {n}"
        )));
    }
    let table = brute_force_table(inst)?;
    for a in 0..1u32 << n {
        for i in 0..n {
            if a >> i & 1 == 1 {
                continue;
            }
            for j in i + 1..n {
                if a >> j & 1 == 1 {
                    continue;
                }
                let (bi, bj) = (1u32 << i, 1u32 << j);
                let lhs = table[(a | bi) as usize] + table[(a | bj) as usize];
                let rhs = table[(a | bi | bj) as usize] + table[a as usize];
                if lhs < rhs {
                    return Ok(Some(SubmodularityWitness {
                        s_mask: a,
                        t_mask: a | bj,
                        element: i,
                    }));
                }
            }
        }
    }
    Ok(None)
}

/// Moment measurements for the one-point difference estimator.
#[derive(Debug, Clone)]
pub struct MomentReport {
    /// Monte-Carlo mean of the estimate, per coordinate.
    pub mean: Vec<f64>,
    /// Exact difference `g(x + e) - g(x)` it should match in expectation.
    pub exact_diff: Vec<f64>,
    /// Monte-Carlo estimate of `E ||z - E z||^2` (variance proxy using the
    /// exact mean).
    pub second_central_moment: f64,
    /// Standard error of each coordinate of the mean.
    pub mean_se: Vec<f64>,
    pub draws: u64,
}

/// Draws `draws` independent difference estimates at `(x, e)` with batch
/// size `ell` and measures their first and second moments against the
/// exactly recomputed difference `g(x + e) - g(x)`.
pub fn estimator_moments(
    oracle: &CountingOracle,
    x: &[f64],
    e: &SparseVector,
    ell: u64,
    draws: u64,
    rng: &mut ChaCha8Rng,
) -> Result<MomentReport> {
    let n = oracle.n();
    let gx = crate::lovasz::full_subgradient(oracle, x)?;
    let mut y = x.to_vec();
    for (i, v) in e.iter() {
        y[i] += v;
    }
    let gy = crate::lovasz::full_subgradient(oracle, &y)?;
    let exact_diff: Vec<f64> = (0..n).map(|i| gy[i] - gx[i]).collect();

    let mut sum = vec![0.0f64; n];
    let mut sq = vec![0.0f64; n];
    let mut central = 0.0f64;
    for _ in 0..draws {
        let mut tree = OrderTree::build(oracle, x)?;
        let est = tree.sample_difference(oracle, e, ell, rng)?;
        let z = est.estimate.to_dense(n);
        for i in 0..n {
            sum[i] += z[i];
            sq[i] += z[i] * z[i];
            let d = z[i] - exact_diff[i];
            central += d * d;
        }
    }
    let d = draws as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / d).collect();
    let mean_se: Vec<f64> = (0..n)
        .map(|i| {
            let var = (sq[i] / d - mean[i] * mean[i]).max(0.0);
            (var / d).sqrt()
        })
        .collect();
    Ok(MomentReport {
        mean,
        exact_diff,
        second_central_moment: central / d,
        mean_se,
        draws,
    })
}
