//! Projected subgradient descent over the unit box and the
//! cardinality-capped box: edit-vector projections, the step schedule,
//! iterate averaging, and a driver generic over how gradients are
//! estimated and how edits are applied to the maintained tree.

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gradmaint::OrderTree;
use crate::lovasz::{best_prefix_set, SparseVector};
use crate::oracle::CountingOracle;

/// Feasible region of the descent iterates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    /// The unit box `[0, 1]^n`.
    Box,
    /// `{x in [0,1]^n : sum x_i <= cap}`.
    SparseCap(f64),
}

/// Fixed step size and iteration budget.
#[derive(Debug, Clone, Copy)]
pub struct StepSchedule {
    pub eta: f64,
    pub iterations: u64,
}

impl StepSchedule {
    pub fn new(eta: f64, iterations: u64) -> Result<Self> {
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::domain("step size must be positive"));
        }
        if iterations == 0 {
            return Err(Error::domain("iteration budget must be at least 1"));
        }
        Ok(StepSchedule { eta, iterations })
    }

    /// `eta = (R/B) sqrt(2/T)`, the rate-optimal fixed step for squared
    /// radius `R^2` and second-moment bound `B^2`, giving averaged-iterate
    /// error at most `R B sqrt(2/T)`.
    pub fn rate_optimal(radius_sq: f64, norm_bound_sq: f64, iterations: u64) -> Result<Self> {
        if !(radius_sq.is_finite() && radius_sq > 0.0) {
            return Err(Error::domain("squared radius must be positive"));
        }
        if !(norm_bound_sq.is_finite() && norm_bound_sq > 0.0) {
            return Err(Error::domain("squared norm bound must be positive"));
        }
        let eta = (radius_sq / norm_bound_sq).sqrt() * (2.0 / iterations as f64).sqrt();
        StepSchedule::new(eta, iterations)
    }

    /// Averaged-iterate error bound `R B sqrt(2/T)` for this budget.
    pub fn error_bound(radius_sq: f64, norm_bound_sq: f64, iterations: u64) -> f64 {
        (radius_sq * norm_bound_sq).sqrt() * (2.0 / iterations as f64).sqrt()
    }
}

/// One projected step: subtract `lambda` uniformly (zero for the box
/// domain), then add the sparse `edit`.
#[derive(Debug, Clone)]
pub struct StepPlan {
    pub lambda: f64,
    pub edit: SparseVector,
}

/// Edit realizing `x_new = clamp(x - eta g)` on the support of `g`.
/// Coordinates off the support are unchanged (their target equals their
/// current value).
pub fn project_box_edit(x: &[f64], g: &SparseVector, eta: f64) -> Result<SparseVector> {
    crate::lovasz::check_box_point(x)?;
    box_edit_with(|c| x[c], x.len(), g, eta)
}

pub(crate) fn box_edit_from_tree(
    tree: &OrderTree,
    g: &SparseVector,
    eta: f64,
) -> Result<SparseVector> {
    box_edit_with(|c| tree.effective(c), tree.n(), g, eta)
}

fn box_edit_with(
    value: impl Fn(usize) -> f64,
    n: usize,
    g: &SparseVector,
    eta: f64,
) -> Result<SparseVector> {
    let mut pairs = Vec::with_capacity(g.nnz());
    for (c, gv) in g.iter() {
        if c >= n {
            return Err(Error::domain(format!("coordinate {c} out of range")));
        }
        let cur = value(c);
        let target = (cur - eta * gv).clamp(0.0, 1.0);
        if target != cur {
            pairs.push((c, target - cur));
        }
    }
    SparseVector::from_pairs(pairs)
}

/// Euclidean projection of `y` onto `{z in [0,1]^n : sum z_i <= cap}`:
/// `z_i = med(0, y_i - lambda, 1)` with `lambda` the smallest nonnegative
/// value achieving the cap. Returns `(z, lambda)`. Exact: scans the
/// breakpoints of the piecewise-linear map `lambda -> sum med(0, y-lambda, 1)`.
pub fn project_sparse_cap(y: &[f64], cap: f64) -> Result<(Vec<f64>, f64)> {
    if !(cap.is_finite() && cap >= 0.0) {
        return Err(Error::domain("cap must be finite and nonnegative"));
    }
    if y.is_empty() || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("projection input must be nonempty and finite"));
    }
    let phi = |lam: f64| -> f64 { y.iter().map(|&v| (v - lam).clamp(0.0, 1.0)).sum() };
    if phi(0.0) <= cap {
        return Ok((y.iter().map(|&v| v.clamp(0.0, 1.0)).collect(), 0.0));
    }
    let mut bps: Vec<f64> = y.iter().flat_map(|&v| [v, v - 1.0]).filter(|&b| b > 0.0).collect();
    bps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    bps.dedup();
    // phi(max breakpoint) = 0 <= cap, so the crossing is bracketed.
    let idx = bps.partition_point(|&b| phi(b) > cap);
    debug_assert!(idx < bps.len());
    let hi = bps[idx];
    let lo = if idx == 0 { 0.0 } else { bps[idx - 1] };
    let (p_lo, p_hi) = (phi(lo), phi(hi));
    let lambda = if p_lo - p_hi <= 0.0 { hi } else { lo + (p_lo - cap) * (hi - lo) / (p_lo - p_hi) };
    let lambda = lambda.clamp(lo, hi);
    Ok((y.iter().map(|&v| (v - lambda).clamp(0.0, 1.0)).collect(), lambda))
}

/// Computes the projected step for `g` at the tree's current point
/// without mutating the tree. For the capped domain the uniform part is
/// returned as `lambda` and the explicit part as a sparse edit against
/// the post-shift point, so applying costs O((k + 1) log n) tree work.
pub fn plan_step(
    tree: &OrderTree,
    g: &SparseVector,
    eta: f64,
    domain: Domain,
) -> Result<StepPlan> {
    match domain {
        Domain::Box => {
            Ok(StepPlan { lambda: 0.0, edit: box_edit_from_tree(tree, g, eta)? })
        }
        Domain::SparseCap(cap) => {
            let targets: Vec<(usize, f64)> =
                g.iter().map(|(c, gv)| (c, tree.effective(c) - eta * gv)).collect();
            let plan = tree.plan_capped_step(&targets, cap)?;
            let mut pairs = Vec::with_capacity(plan.targets.len());
            for &(c, target) in &plan.targets {
                let post_shift = (tree.effective(c) - plan.lambda).max(0.0);
                if target != post_shift {
                    pairs.push((c, target - post_shift));
                }
            }
            Ok(StepPlan { lambda: plan.lambda, edit: SparseVector::from_pairs(pairs)? })
        }
    }
}

/// Supplies gradient estimates and applies chosen steps to the tree.
///
/// Contract: `estimate` returns a sparse vector whose expectation is the
/// exact subgradient at the tree's current point; `advance` moves the
/// tree by the plan (offset first, then the edit) and keeps whatever
/// internal state the next estimate needs.
pub trait GradientProvider {
    fn estimate(
        &mut self,
        oracle: &CountingOracle,
        tree: &mut OrderTree,
        rng: &mut ChaCha8Rng,
    ) -> Result<SparseVector>;

    fn advance(
        &mut self,
        oracle: &CountingOracle,
        tree: &mut OrderTree,
        plan: &StepPlan,
        rng: &mut ChaCha8Rng,
    ) -> Result<()>;
}

/// Deterministic provider: the tree's exactly maintained subgradient.
pub struct ExactProvider;

impl GradientProvider for ExactProvider {
    fn estimate(
        &mut self,
        _oracle: &CountingOracle,
        tree: &mut OrderTree,
        _rng: &mut ChaCha8Rng,
    ) -> Result<SparseVector> {
        tree.sparse_gradient()
    }

    fn advance(
        &mut self,
        oracle: &CountingOracle,
        tree: &mut OrderTree,
        plan: &StepPlan,
        _rng: &mut ChaCha8Rng,
    ) -> Result<()> {
        tree.apply_offset(plan.lambda)?;
        tree.apply_update_exact(oracle, &plan.edit)?;
        Ok(())
    }
}

/// Result of a descent run, before set readout bookkeeping.
#[derive(Debug, Clone)]
pub struct DescentOutcome {
    pub minimizer: Vec<usize>,
    pub value: f64,
    pub average: Vec<f64>,
    pub final_point: Vec<f64>,
    pub iterations: u64,
}

/// Runs projected descent from `x = 0`, averaging iterates, and reads
/// out the best prefix set of both the averaged and the final point
/// (the better of the two readings is returned; costs `2(n+1)` extra
/// queries).
pub fn run_descent(
    oracle: &CountingOracle,
    provider: &mut dyn GradientProvider,
    domain: Domain,
    schedule: StepSchedule,
    rng: &mut ChaCha8Rng,
) -> Result<DescentOutcome> {
    if let Domain::SparseCap(cap) = domain {
        if !(cap.is_finite() && cap >= 0.0) {
            return Err(Error::domain("cap must be finite and nonnegative"));
        }
    }
    let n = oracle.n();
    let mut tree = OrderTree::build(oracle, &vec![0.0; n])?;
    let mut sum = vec![0.0; n];
    for _ in 0..schedule.iterations {
        for (c, v) in tree.point().into_iter().enumerate() {
            sum[c] += v;
        }
        let g = provider.estimate(oracle, &mut tree, rng)?;
        let plan = plan_step(&tree, &g, schedule.eta, domain)?;
        provider.advance(oracle, &mut tree, &plan, rng)?;
        #[cfg(debug_assertions)]
        {
            if let Domain::SparseCap(cap) = domain {
                debug_assert!(
                    tree.sum_effective() <= cap + 1e-9,
                    "iterate left the capped domain"
                );
            }
        }
    }
    let average: Vec<f64> = sum.iter().map(|v| v / schedule.iterations as f64).collect();
    let final_point = tree.point();
    let (set_a, val_a) = best_prefix_set(oracle, &average)?;
    let (set_b, val_b) = best_prefix_set(oracle, &final_point)?;
    let (minimizer, value) = if val_b < val_a { (set_b, val_b) } else { (set_a, val_a) };
    Ok(DescentOutcome { minimizer, value, average, final_point, iterations: schedule.iterations })
}
