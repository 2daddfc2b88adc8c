//! End-to-end minimizers: the deterministic pseudopolynomial solver, the
//! additive-error stochastic solver, their sparse-domain variants, the
//! multiplicative wrapper for nonpositive functions, and the dedicated
//! min-cut relaxation solver.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::descent::{
    run_descent, Domain, ExactProvider, GradientProvider, StepPlan, StepSchedule,
};
use crate::error::{Error, Result};
use crate::gradmaint::OrderTree;
use crate::lovasz::SparseVector;
use crate::oracle::{CountingOracle, CutInstance, ScaledInstance, Submodular, ValueKind};

/// Summary of one solver run.
#[derive(Debug, Clone)]
pub struct RunReport {
    /// Minimizing set, sorted ascending, zero-based.
    pub minimizer: Vec<usize>,
    /// `f(minimizer)`, re-evaluated once at the end of the run.
    pub value: f64,
    /// Total oracle queries, including the final re-evaluation.
    pub eval_calls: u64,
    pub iterations: u64,
    pub batches: u64,
    pub seed: u64,
    pub elapsed: Duration,
}

fn finish_report(
    oracle: &CountingOracle,
    minimizer: Vec<usize>,
    iterations: u64,
    batches: u64,
    seed: u64,
    started: Instant,
) -> Result<RunReport> {
    let value = oracle.evaluate_set(&minimizer)?;
    Ok(RunReport {
        minimizer,
        value,
        eval_calls: oracle.eval_calls(),
        iterations,
        batches,
        seed,
        elapsed: started.elapsed(),
    })
}

fn check_bound(m: f64) -> Result<()> {
    if !(m.is_finite() && m > 0.0) {
        return Err(Error::domain("value bound M must be finite and positive"));
    }
    Ok(())
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps.is_finite() && eps > 0.0 && eps <= 1.0) {
        return Err(Error::domain("eps must lie in (0, 1]"));
    }
    Ok(())
}

fn check_sparsity(s: usize, n: usize) -> Result<()> {
    if s == 0 || s > n {
        return Err(Error::domain(format!("sparsity promise must lie in 1..={n}, got {s}")));
    }
    Ok(())
}

/// Iteration budget `ceil(20 d M^2)` where `d` is the domain dimension
/// (`n`, or the sparsity promise `s`).
fn exact_iterations(d: usize, m: f64) -> u64 {
    (20.0 * d as f64 * m * m).ceil().max(1.0) as u64
}

/// Exact minimizer of an integer-valued instance with `|f(S)| <= M`.
///
/// Runs `20 n M^2` deterministic subgradient steps; the averaged-iterate
/// guarantee then puts the extension gap strictly below 1, and integrality
/// promotes the best prefix readout to an exact minimizer. The step size
/// is the rate-optimal `(R/B) sqrt(2/T)`, which at this budget is
/// `1/(3 sqrt(20) M^2)` independent of `n`.
pub fn exact_sfm(inst: &dyn Submodular, m: f64) -> Result<RunReport> {
    exact_in_domain(inst, m, inst.n(), Domain::Box)
}

/// Exact variant under a promise that some minimizer has at most `s`
/// elements: iterates stay in the capped box and the iteration budget
/// scales with `s` instead of `n`. A false promise silently voids the
/// guarantee (no runtime detection).
pub fn sparse_exact_sfm(inst: &dyn Submodular, m: f64, s: usize) -> Result<RunReport> {
    check_sparsity(s, inst.n())?;
    exact_in_domain(inst, m, s, Domain::SparseCap(s as f64))
}

fn exact_in_domain(inst: &dyn Submodular, m: f64, d: usize, domain: Domain) -> Result<RunReport> {
    check_bound(m)?;
    if inst.value_kind() != ValueKind::Integer {
        return Err(Error::contract("exact minimization requires an integer-valued instance"));
    }
    let started = Instant::now();
    let oracle = CountingOracle::new(inst);
    let iterations = exact_iterations(d, m);
    let schedule = StepSchedule::rate_optimal(d as f64 / 2.0, 9.0 * m * m, iterations)?;
    // The provider is deterministic; the stream is never drawn from.
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let out = run_descent(&oracle, &mut ExactProvider, domain, schedule, &mut rng)?;
    finish_report(&oracle, out.minimizer, iterations, 0, 0, started)
}

/// One draw proportional to `|g_j|`, scaled to `||g||_1 sign(g_j)`; an
/// unbiased 1-sparse estimate of `g`.
fn one_sparse_sample(g: &SparseVector, rng: &mut ChaCha8Rng) -> SparseVector {
    let total = g.l1_norm();
    if total <= 0.0 {
        return SparseVector::zero();
    }
    let mut u = rng.random::<f64>() * total;
    let mut picked = None;
    for (c, v) in g.iter() {
        u -= v.abs();
        if u <= 0.0 {
            picked = Some((c, total * v.signum()));
            break;
        }
    }
    let pair = picked.unwrap_or_else(|| {
        let (c, v) = g.iter().last().expect("nonzero vector has a last entry");
        (c, total * v.signum())
    });
    SparseVector::from_pairs(vec![pair]).expect("single finite entry")
}

/// Gradient estimates maintained across a batch: a fresh full subgradient
/// plus one 1-sparse draw at the batch head, then per-step sampled
/// difference corrections with `ell = t` (step index within the batch).
struct BatchedProvider {
    period: u64,
    step_in_batch: u64,
    accum: SparseVector,
    batches_done: u64,
}

impl BatchedProvider {
    fn new(period: u64) -> Self {
        BatchedProvider {
            period,
            step_in_batch: 0,
            accum: SparseVector::zero(),
            batches_done: 0,
        }
    }
}

impl GradientProvider for BatchedProvider {
    fn estimate(
        &mut self,
        oracle: &CountingOracle,
        tree: &mut OrderTree,
        rng: &mut ChaCha8Rng,
    ) -> Result<SparseVector> {
        if self.step_in_batch == 0 {
            if !tree.grads_valid() {
                tree.refresh_gradients(oracle)?;
            }
            oracle.note_subgradient();
            self.accum = one_sparse_sample(&tree.sparse_gradient()?, rng);
            self.batches_done += 1;
        }
        Ok(self.accum.clone())
    }

    fn advance(
        &mut self,
        oracle: &CountingOracle,
        tree: &mut OrderTree,
        plan: &StepPlan,
        rng: &mut ChaCha8Rng,
    ) -> Result<()> {
        tree.apply_offset(plan.lambda)?;
        let ell = self.step_in_batch + 1;
        let (pos, neg) = plan.edit.split_signs();
        // One-signed halves are sampled separately; the uniform offset
        // changes no relative order, so the two corrections together are
        // an unbiased estimate of the full gradient change of the step.
        let up = tree.sample_difference(oracle, &pos, ell, rng)?;
        let down = tree.sample_difference(oracle, &neg, ell, rng)?;
        self.accum = self.accum.merge_add(&up.estimate).merge_add(&down.estimate);
        self.step_in_batch = (self.step_in_batch + 1) % self.period;
        Ok(())
    }
}

struct BatchedBudget {
    period: u64,
    batches: u64,
    total: u64,
    eta: f64,
}

/// `N = ceil(10 d ln^2 n / eps^2)` steps in batches of `T = ceil(n^(1/3))`,
/// with the rate-optimal step for squared radius `d/2` and second-moment
/// bound `B^2 = 36 + 144 H_T` (initial 1-sparse draw worth at most
/// `||g||_1^2 <= 9`, plus two per-step corrections of variance at most
/// `36/t` each, doubled once more against the mean term).
fn batched_budget(n: usize, d: usize, eps: f64) -> Result<BatchedBudget> {
    let period = (n as f64).cbrt().ceil().max(1.0) as u64;
    let ln_n = (n as f64).ln();
    let steps = (10.0 * d as f64 * ln_n * ln_n / (eps * eps)).ceil().max(1.0) as u64;
    let batches = steps.div_ceil(period);
    let total = batches * period;
    let h: f64 = (1..=period).map(|s| 1.0 / s as f64).sum();
    let b_sq = 36.0 + 144.0 * h;
    let eta = StepSchedule::rate_optimal(d as f64 / 2.0, b_sq, total)?.eta;
    Ok(BatchedBudget { period, batches, total, eta })
}

/// Stochastic minimizer with additive error: for `|f(S)| <= 1` and
/// `0 < eps <= 1`, the returned set satisfies `E f(S) <= OPT + eps`.
/// The value-range precondition is the caller's: it is not detectable
/// from finitely many queries and is deliberately not enforced, so the
/// multiplicative wrapper can probe under-scaled copies.
pub fn approx_sfm(inst: &dyn Submodular, eps: f64, seed: u64) -> Result<RunReport> {
    approx_in_domain(inst, eps, seed, inst.n(), Domain::Box)
}

/// Additive-error variant under an `s`-sparse minimizer promise; the
/// step budget scales with `s` and iterates stay in the capped box.
pub fn sparse_approx_sfm(inst: &dyn Submodular, eps: f64, s: usize, seed: u64) -> Result<RunReport> {
    check_sparsity(s, inst.n())?;
    approx_in_domain(inst, eps, seed, s, Domain::SparseCap(s as f64))
}

fn approx_in_domain(
    inst: &dyn Submodular,
    eps: f64,
    seed: u64,
    d: usize,
    domain: Domain,
) -> Result<RunReport> {
    check_eps(eps)?;
    let started = Instant::now();
    let oracle = CountingOracle::new(inst);
    let budget = batched_budget(inst.n(), d, eps)?;
    let schedule = StepSchedule::new(budget.eta, budget.total)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut provider = BatchedProvider::new(budget.period);
    let out = run_descent(&oracle, &mut provider, domain, schedule, &mut rng)?;
    debug_assert_eq!(provider.batches_done, budget.batches);
    finish_report(&oracle, out.minimizer, budget.total, budget.batches, seed, started)
}

/// Relative-error minimizer for nonpositive instances with `OPT < 0`:
/// tries scales `2^j` for `j = 0, 1, 2, ...`, running the additive solver
/// on `f / 2^j` with `eps = delta / 2`, and stops at the first scale whose
/// returned set certifies `f(S) <= -2^(j-1) (1 + delta)` (hence
/// `|OPT| >= 2^(j-1) (1 + delta)`). The best set seen across scales, by
/// true value, is returned; at the first properly scaled level this gives
/// `E f(S) <= (1 - delta) OPT`.
pub fn multiplicative_approx(inst: &dyn Submodular, delta: f64, seed: u64) -> Result<RunReport> {
    if !(delta.is_finite() && delta > 0.0 && delta < 1.0) {
        return Err(Error::domain("delta must lie in (0, 1)"));
    }
    if inst.m_bound() <= 0.0 {
        return Err(Error::domain(
            "instance bound is zero; a negative minimum is required",
        ));
    }
    let started = Instant::now();
    let outer = CountingOracle::new(inst);
    let max_scale = inst.m_bound().max(1.0).log2().ceil() as u32 + 1;
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut eval_calls = 0u64;
    let mut iterations = 0u64;
    let mut batches = 0u64;
    for j in 0..=max_scale.min(62) {
        let scale = (1u64 << j) as f64;
        let scaled = ScaledInstance::new(inst, scale)?;
        // Same stream at every scale: running on 2f reproduces, scale for
        // scale, the run on f one level down.
        let report = approx_sfm(&scaled, delta / 2.0, seed)?;
        eval_calls += report.eval_calls;
        iterations += report.iterations;
        batches += report.batches;
        let true_value = outer.evaluate_set(&report.minimizer)?;
        if true_value > 0.0 {
            return Err(Error::contract(
                "positive value observed; the instance must be nonpositive",
            ));
        }
        if best.as_ref().is_none_or(|(v, _)| true_value < *v) {
            best = Some((true_value, report.minimizer));
        }
        if true_value <= -(scale / 2.0) * (1.0 + delta) {
            break;
        }
    }
    let (value, minimizer) = best.expect("at least one scale ran");
    if value >= 0.0 {
        return Err(Error::domain(
            "no negative value observed; a negative minimum is required",
        ));
    }
    Ok(RunReport {
        minimizer,
        value,
        eval_calls: eval_calls + outer.eval_calls(),
        iterations,
        batches,
        seed,
        elapsed: started.elapsed(),
    })
}

/// Exact subgradient of the cut relaxation
/// `sum_(a,b) w_ab (y_b - y_a)^+` at the point `x` over internal
/// coordinates (source pinned to 0, sink to 1).
pub fn cut_relaxation_gradient(cut: &CutInstance, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != cut.n() {
        return Err(Error::domain("point dimension does not match the instance"));
    }
    crate::lovasz::check_box_point(x)?;
    let level = |v: usize| -> f64 {
        if v == CutInstance::SOURCE {
            0.0
        } else if v == CutInstance::SINK {
            1.0
        } else {
            x[v]
        }
    };
    let mut g = vec![0.0; cut.n()];
    for (u, v, w) in cut.edges() {
        if level(v) > level(u) {
            if v < cut.n() {
                g[v] += w;
            }
            if u < cut.n() {
                g[u] -= w;
            }
        }
    }
    Ok(g)
}

/// One edge drawn proportional to weight; the returned pair is the
/// 2-sparse stochastic subgradient `(coordinate, value)` entries.
fn sampled_edge_gradient(
    edges: &[(usize, usize, f64)],
    cum: &[f64],
    total: f64,
    x: &[f64],
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<(usize, f64)> {
    let u = rng.random::<f64>() * total;
    let idx = cum.partition_point(|&c| c <= u).min(edges.len() - 1);
    let (a, b, _) = edges[idx];
    let level = |v: usize| -> f64 {
        if v == CutInstance::SOURCE {
            0.0
        } else if v == CutInstance::SINK {
            1.0
        } else {
            x[v]
        }
    };
    let mut out = Vec::with_capacity(2);
    if level(b) > level(a) {
        if b < n {
            out.push((b, total));
        }
        if a < n {
            out.push((a, -total));
        }
    }
    out
}

/// Projected SGD on the explicit cut relaxation with the edge-sampling
/// oracle: `T = ceil(2 n / eps^2)` steps give `E cut(S) <= mincut + eps W`.
/// Values are normalized (`f(empty) = 0`); add
/// [`CutInstance::empty_value`] to recover raw cut weights.
pub fn mincut_sgd(cut: &CutInstance, eps: f64, seed: u64) -> Result<RunReport> {
    check_eps(eps)?;
    let started = Instant::now();
    let oracle = CountingOracle::new(cut);
    let n = cut.n();
    let total_w = cut.total_weight();
    if total_w <= 0.0 {
        let minimizer = Vec::new();
        return finish_report(&oracle, minimizer, 0, 0, seed, started);
    }
    let edges: Vec<(usize, usize, f64)> = cut.edges().collect();
    let mut cum = Vec::with_capacity(edges.len());
    let mut acc = 0.0;
    for &(_, _, w) in &edges {
        acc += w;
        cum.push(acc);
    }
    let iterations = (2.0 * n as f64 / (eps * eps)).ceil() as u64;
    let schedule =
        StepSchedule::rate_optimal(n as f64 / 2.0, 2.0 * total_w * total_w, iterations)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0f64; n];
    let mut sum = vec![0.0f64; n];
    let mut last_touch = vec![0u64; n];
    for it in 0..iterations {
        for (c, v) in sampled_edge_gradient(&edges, &cum, total_w, &x, n, &mut rng) {
            sum[c] += x[c] * (it - last_touch[c]) as f64;
            last_touch[c] = it;
            x[c] = (x[c] - schedule.eta * v).clamp(0.0, 1.0);
        }
    }
    for c in 0..n {
        sum[c] += x[c] * (iterations - last_touch[c]) as f64;
    }
    let average: Vec<f64> = sum.iter().map(|v| v / iterations as f64).collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for cand in [&average, &x] {
        for set in threshold_sets(cand) {
            let v = oracle.evaluate_set(&set)?;
            let better = match &best {
                None => true,
                Some((bv, bs)) => v < *bv || (v == *bv && set.len() < bs.len()),
            };
            if better {
                best = Some((v, set));
            }
        }
    }
    let (_, minimizer) = best.expect("threshold family is nonempty");
    finish_report(&oracle, minimizer, iterations, 0, seed, started)
}

/// All sets `{i : x_i <= theta}` over distinct thresholds, smallest first
/// (the empty set corresponds to a threshold below every coordinate).
fn threshold_sets(x: &[f64]) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap().then(a.cmp(&b)));
    let mut out = vec![Vec::new()];
    let mut cur = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let theta = x[order[i]];
        while i < order.len() && x[order[i]] == theta {
            cur.push(order[i]);
            i += 1;
        }
        let mut set = cur.clone();
        set.sort_unstable();
        out.push(set);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{ModularInstance, TableInstance};
    use crate::verify::brute_force_min;

    fn two_element_table() -> TableInstance {
        TableInstance::new(2, vec![0.0, -1.0, 1.0, 0.0]).unwrap()
    }

    #[test]
    fn exact_finds_the_table_minimizer() {
        let inst = two_element_table();
        let report = exact_sfm(&inst, 1.0).unwrap();
        assert_eq!(report.minimizer, vec![0]);
        assert_eq!(report.value, -1.0);
        assert_eq!(report.iterations, 40);
        assert_eq!(report.value.fract(), 0.0);
    }

    #[test]
    fn exact_on_positive_modular_returns_empty() {
        let inst = ModularInstance::new(vec![1.0, 2.0, 3.0]).unwrap();
        let report = exact_sfm(&inst, 6.0).unwrap();
        assert!(report.minimizer.is_empty());
        assert_eq!(report.value, 0.0);
    }

    #[test]
    fn exact_matches_brute_force_on_seeded_cuts() {
        for seed in 0..5 {
            let cut = CutInstance::random(6, 0.3, 1, seed).unwrap();
            let table = crate::verify::brute_force_table(&cut).unwrap();
            let tight = table.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            let truth = brute_force_min(&cut).unwrap();
            let report = exact_sfm(&cut, tight).unwrap();
            assert_eq!(report.value, truth.value, "seed {seed}");
        }
    }

    #[test]
    fn exact_rejects_real_valued_instances() {
        let inst = ModularInstance::new(vec![0.5, -0.25]).unwrap();
        assert!(exact_sfm(&inst, 1.0).is_err());
    }

    #[test]
    fn approx_zero_function_returns_value_zero() {
        let inst = TableInstance::new(3, vec![0.0; 8]).unwrap();
        let report = approx_sfm(&inst, 0.5, 3).unwrap();
        assert_eq!(report.value, 0.0);
    }

    #[test]
    fn approx_rejects_bad_eps() {
        let inst = two_element_table();
        assert!(approx_sfm(&inst, 0.0, 0).is_err());
        assert!(approx_sfm(&inst, -0.5, 0).is_err());
        assert!(approx_sfm(&inst, 1.5, 0).is_err());
    }

    #[test]
    fn approx_mean_tracks_the_optimum_on_a_small_table() {
        let inst = two_element_table();
        let mut values = Vec::new();
        for seed in 0..10 {
            let report = approx_sfm(&inst, 0.3, seed).unwrap();
            values.push(report.value);
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let sd = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (values.len() as f64 - 1.0))
            .sqrt();
        let slack = 3.0 * sd / (values.len() as f64).sqrt();
        assert!(
            mean <= -1.0 + 0.3 + slack + 1e-12,
            "mean {mean} exceeds -0.7 plus slack {slack}"
        );
    }

    #[test]
    fn approx_batch_count_matches_the_budget() {
        let inst = two_element_table();
        let report = approx_sfm(&inst, 0.5, 1).unwrap();
        let period = (2f64).cbrt().ceil() as u64;
        let steps = (10.0 * 2.0 * (2f64).ln().powi(2) / 0.25).ceil() as u64;
        assert_eq!(report.batches, steps.div_ceil(period));
        assert_eq!(report.iterations, report.batches * period);
    }

    #[test]
    fn sparse_exact_with_full_cap_matches_dense_run() {
        let cut = CutInstance::random(7, 0.4, 3, 11).unwrap();
        let m = cut.m_bound().max(1.0);
        let dense = exact_sfm(&cut, m).unwrap();
        let capped = sparse_exact_sfm(&cut, m, 7).unwrap();
        assert_eq!(dense.minimizer, capped.minimizer);
        assert_eq!(dense.value, capped.value);
        assert_eq!(dense.iterations, capped.iterations);
        assert_eq!(dense.eval_calls, capped.eval_calls);
    }

    #[test]
    fn sparse_approx_with_full_cap_matches_dense_run() {
        let inst = two_element_table();
        let dense = approx_sfm(&inst, 0.4, 9).unwrap();
        let capped = sparse_approx_sfm(&inst, 0.4, 2, 9).unwrap();
        assert_eq!(dense.minimizer, capped.minimizer);
        assert_eq!(dense.eval_calls, capped.eval_calls);
    }

    #[test]
    fn sparse_exact_finds_a_singleton_cut() {
        // Heavy source edge, light inner edge: the unique minimizer is {0}.
        let cut = CutInstance::new(
            1,
            vec![(CutInstance::SOURCE, 0, 5.0), (0, CutInstance::SINK, 1.0)],
        )
        .unwrap();
        let truth = brute_force_min(&cut).unwrap();
        assert_eq!(truth.minimizer, vec![0]);
        let report = sparse_exact_sfm(&cut, cut.m_bound(), 1).unwrap();
        assert_eq!(report.minimizer, truth.minimizer);
        assert_eq!(report.value, truth.value);
    }

    #[test]
    fn sparse_promise_violation_never_beats_the_optimum() {
        // The only minimizer is the full pair; the s = 1 promise is false.
        let inst = ModularInstance::new(vec![-2.0, -2.0]).unwrap();
        let truth = brute_force_min(&inst).unwrap();
        assert_eq!(truth.minimizer, vec![0, 1]);
        let report = sparse_exact_sfm(&inst, 4.0, 1).unwrap();
        assert!(report.value >= truth.value);
    }

    #[test]
    fn multiplicative_halves_the_optimum_bound() {
        let inst = ModularInstance::new(vec![-2.0, -2.0]).unwrap();
        let report = multiplicative_approx(&inst, 0.5, 7).unwrap();
        assert_eq!(report.minimizer, vec![0, 1]);
        assert_eq!(report.value, -4.0);
        assert!(report.value <= -2.0);
    }

    #[test]
    fn multiplicative_is_scale_invariant_at_the_set_level() {
        let inst = ModularInstance::new(vec![-2.0, -2.0]).unwrap();
        let doubled = ScaledInstance::new(&inst, 0.5).unwrap();
        let a = multiplicative_approx(&inst, 0.5, 7).unwrap();
        let b = multiplicative_approx(&doubled, 0.5, 7).unwrap();
        assert_eq!(a.minimizer, b.minimizer);
    }

    #[test]
    fn multiplicative_rejects_zero_and_positive_instances() {
        let zero = TableInstance::new(2, vec![0.0; 4]).unwrap();
        assert!(multiplicative_approx(&zero, 0.5, 0).is_err());
        let positive = ModularInstance::new(vec![1.0, 1.0]).unwrap();
        assert!(multiplicative_approx(&positive, 0.5, 0).is_err());
    }

    #[test]
    fn mincut_two_path_picks_the_light_side() {
        let cut = CutInstance::new(
            1,
            vec![(CutInstance::SOURCE, 0, 2.0), (0, CutInstance::SINK, 3.0)],
        )
        .unwrap();
        assert_eq!(cut.empty_value(), 2.0);
        let report = mincut_sgd(&cut, 0.02, 1).unwrap();
        assert!(report.minimizer.is_empty());
        assert_eq!(report.value + cut.empty_value(), 2.0);
    }

    #[test]
    fn mincut_single_crossing_edge_accepts_any_side() {
        let cut =
            CutInstance::new(1, vec![(CutInstance::SOURCE, CutInstance::SINK, 4.0)]).unwrap();
        let report = mincut_sgd(&cut, 0.1, 0).unwrap();
        assert_eq!(report.value, 0.0);
        assert_eq!(report.value + cut.empty_value(), 4.0);
    }

    #[test]
    fn sampled_edge_gradient_is_unbiased() {
        let cut = CutInstance::new(
            3,
            vec![
                (CutInstance::SOURCE, 0, 2.0),
                (0, 1, 1.0),
                (1, 2, 3.0),
                (2, CutInstance::SINK, 1.0),
                (1, CutInstance::SINK, 2.0),
            ],
        )
        .unwrap();
        let x = vec![0.3, 0.6, 0.2];
        let exact = cut_relaxation_gradient(&cut, &x).unwrap();
        let edges: Vec<_> = cut.edges().collect();
        let mut cum = Vec::new();
        let mut acc = 0.0;
        for &(_, _, w) in &edges {
            acc += w;
            cum.push(acc);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let draws = 20_000;
        let mut mean = vec![0.0f64; 3];
        let mut sq = vec![0.0f64; 3];
        for _ in 0..draws {
            let mut z = vec![0.0f64; 3];
            for (c, v) in
                sampled_edge_gradient(&edges, &cum, cut.total_weight(), &x, 3, &mut rng)
            {
                z[c] = v;
            }
            for c in 0..3 {
                mean[c] += z[c];
                sq[c] += z[c] * z[c];
            }
        }
        for c in 0..3 {
            mean[c] /= draws as f64;
            let var = sq[c] / draws as f64 - mean[c] * mean[c];
            let se = (var / draws as f64).sqrt();
            assert!(
                (mean[c] - exact[c]).abs() <= 4.0 * se + 1e-9,
                "coordinate {c}: mean {} vs exact {} (se {se})",
                mean[c],
                exact[c]
            );
        }
    }

    #[test]
    fn threshold_sets_enumerate_every_level() {
        let sets = threshold_sets(&[0.7, 0.1, 0.7]);
        assert_eq!(sets, vec![vec![], vec![1], vec![0, 1, 2]]);
    }
}
