//! Incremental maintenance of a point `x` in the unit box, the consistent
//! permutation over it, and the subgradient of the Lovász extension along
//! that permutation, under sparse edits.
//!
//! The structure is a treap over the crate-wide order (value descending,
//! coordinate ascending on ties) with deterministic per-coordinate
//! priorities, so its shape and in-order sequence are reproducible. Each
//! node carries its subtree size, subtree gradient sum, and subtree key
//! sum. The gradient sums drive the comparison descent of
//! [`OrderTree::apply_update_exact`]: a subtree whose stored sum equals
//! the true sum (two prefix evaluations via the interval identity
//! `sum g[P[a..b]] = f(P[1..b]) - f(P[1..a-1])`) is pruned, which is sound
//! because a one-signed edit moves every untouched gradient entry in one
//! direction.
//!
//! Values are stored as `key = effective + offset`, where `offset` is a
//! global amount subtracted lazily from every coordinate. Uniform
//! subtraction never reorders coordinates, so bumping the offset changes
//! neither the permutation nor the subgradient; coordinates whose key has
//! sunk below the offset are effectively clamped at zero. This is what
//! makes cardinality-capped projections O(log n) instead of O(n): see
//! [`OrderTree::plan_capped_step`] and [`OrderTree::apply_offset`].

use std::collections::{BTreeSet, HashMap};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lovasz::{Permutation, SparseVector};
use crate::oracle::{CountingOracle, SetQuery, ValueKind};

const NIL: u32 = u32::MAX;

/// Box-membership slack for externally supplied edits; anything inside is
/// snapped exactly onto the boundary.
const BOX_SLACK: f64 = 1e-9;

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
struct Node {
    key: f64,
    grad: f64,
    prio: u64,
    left: u32,
    right: u32,
    size: u32,
    grad_sum: f64,
    key_sum: f64,
}

/// One-point estimate of a subgradient difference `g(x + e) - g(x)`.
#[derive(Debug, Clone)]
pub struct DifferenceEstimate {
    /// Average of `ell` independent one-point estimates; at most `ell`
    /// nonzero entries.
    pub estimate: SparseVector,
    /// Exact value of `||g(x + e) - g(x)||_1`, computed as a byproduct.
    pub l1_mass: f64,
    pub ell: u64,
}

/// Result of solving a cardinality-capped projection against the tree.
#[derive(Debug, Clone)]
pub struct CappedPlan {
    /// Uniform amount to subtract from every coordinate.
    pub lambda: f64,
    /// Final effective values for the edited coordinates (after lambda).
    pub targets: Vec<(usize, f64)>,
}

pub struct OrderTree {
    nodes: Vec<Node>,
    root: u32,
    offset: f64,
    grads_valid: bool,
    nonzero: BTreeSet<usize>,
    kind: ValueKind,
}

impl OrderTree {
    /// Builds the tree at `x` and computes the gradient along the
    /// consistent permutation. Charges `n + 1` oracle queries.
    pub fn build(oracle: &CountingOracle, x: &[f64]) -> Result<Self> {
        crate::lovasz::check_box_point(x)?;
        if x.len() != oracle.n() {
            return Err(Error::domain("point dimension does not match the instance"));
        }
        let nodes = x
            .iter()
            .enumerate()
            .map(|(c, &v)| Node {
                key: v,
                grad: 0.0,
                prio: splitmix64(c as u64 + 1),
                left: NIL,
                right: NIL,
                size: 1,
                grad_sum: 0.0,
                key_sum: v,
            })
            .collect();
        let mut tree = OrderTree {
            nodes,
            root: NIL,
            offset: 0.0,
            grads_valid: false,
            nonzero: BTreeSet::new(),
            kind: oracle.value_kind(),
        };
        for c in 0..x.len() {
            tree.insert_node(c as u32);
        }
        tree.refresh_gradients(oracle)?;
        Ok(tree)
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// True while the stored gradient matches the stored point. Sampling
    /// updates move the point without repairing the gradient and clear
    /// this flag; [`Self::refresh_gradients`] restores it.
    pub fn grads_valid(&self) -> bool {
        self.grads_valid
    }

    /// Current value of coordinate `c`.
    pub fn effective(&self, c: usize) -> f64 {
        (self.nodes[c].key - self.offset).max(0.0)
    }

    /// Materializes the full point.
    pub fn point(&self) -> Vec<f64> {
        (0..self.n()).map(|c| self.effective(c)).collect()
    }

    /// Sum of all coordinates, via the key aggregates.
    pub fn sum_effective(&self) -> f64 {
        let (cnt, ksum) = self.stats_above(self.root, self.offset);
        ksum - self.offset * cnt as f64
    }

    /// The maintained permutation (value descending, coordinate ascending).
    pub fn permutation(&self) -> Permutation {
        let mut order = Vec::with_capacity(self.n());
        self.walk(|c| order.push(c));
        Permutation::new(order).expect("tree order is a permutation")
    }

    /// Stored gradient as a sparse vector over the nonzero list.
    pub fn sparse_gradient(&self) -> Result<SparseVector> {
        if !self.grads_valid {
            return Err(Error::domain("tree gradient is stale; refresh before reading it"));
        }
        SparseVector::from_pairs(
            self.nonzero.iter().map(|&c| (c, self.nodes[c].grad)).collect(),
        )
    }

    /// Stored gradient as a dense vector.
    pub fn dense_gradient(&self) -> Result<Vec<f64>> {
        if !self.grads_valid {
            return Err(Error::domain("tree gradient is stale; refresh before reading it"));
        }
        Ok(self.nodes.iter().map(|n| n.grad).collect())
    }

    /// Coordinates with a nonzero stored gradient entry, ascending.
    pub fn nonzero_coords(&self) -> impl Iterator<Item = usize> + '_ {
        self.nonzero.iter().copied()
    }

    /// Recomputes every gradient entry along the current permutation with
    /// `n + 1` prefix evaluations and rebuilds the aggregates.
    pub fn refresh_gradients(&mut self, oracle: &CountingOracle) -> Result<()> {
        let perm = self.permutation();
        let mut prev = oracle.evaluate_prefix_with_pos(perm.order(), perm.pos_slice(), 0)?;
        for k in 1..=self.n() {
            let cur = oracle.evaluate_prefix_with_pos(perm.order(), perm.pos_slice(), k)?;
            self.nodes[perm.order()[k - 1]].grad = cur - prev;
            prev = cur;
        }
        self.nonzero = (0..self.n()).filter(|&c| self.nodes[c].grad != 0.0).collect();
        self.recompute_sums(self.root);
        self.grads_valid = true;
        Ok(())
    }

    /// Evaluates `f` on the first `k` elements of the maintained
    /// permutation. Charges one oracle query.
    pub fn eval_prefix(&self, oracle: &CountingOracle, k: usize) -> Result<f64> {
        if k > self.n() {
            return Err(Error::domain(format!("prefix length {k} out of range")));
        }
        oracle.evaluate(&TreePrefix { tree: self, k })
    }

    /// `sum of g[P[a..=b]]` (1-based ranks) via the interval identity.
    /// Uses exactly 2 oracle queries and no stored gradient state.
    pub fn interval_sum(&self, oracle: &CountingOracle, a: usize, b: usize) -> Result<f64> {
        if a < 1 || a > b || b > self.n() {
            return Err(Error::domain(format!("invalid rank interval [{a}, {b}]")));
        }
        Ok(self.eval_prefix(oracle, b)? - self.eval_prefix(oracle, a - 1)?)
    }

    /// Applies the sparse edit `e` (any signs; split internally into the
    /// nonnegative and nonpositive parts) and repairs the stored gradient
    /// by comparison descent. Returns the coordinates whose gradient entry
    /// changed. Requires `x + e` to stay inside the unit box.
    pub fn apply_update_exact(
        &mut self,
        oracle: &CountingOracle,
        e: &SparseVector,
    ) -> Result<Vec<usize>> {
        if !self.grads_valid {
            return Err(Error::domain(
                "tree gradient is stale; refresh_gradients before exact updates",
            ));
        }
        let mut up = Vec::new();
        let mut down = Vec::new();
        for (c, d) in e.iter() {
            if c >= self.n() {
                return Err(Error::domain(format!("coordinate {c} out of range")));
            }
            let target = snap_to_box(self.effective(c) + d)?;
            if d > 0.0 {
                up.push((c, target));
            } else {
                down.push((c, target));
            }
        }
        let mut changed = Vec::new();
        for part in [up, down] {
            if !part.is_empty() {
                self.exact_shift(oracle, &part, &mut changed)?;
            }
        }
        changed.sort_unstable();
        changed.dedup();
        Ok(changed)
    }

    /// One-signed exact update to explicit effective targets.
    fn exact_shift(
        &mut self,
        oracle: &CountingOracle,
        targets: &[(usize, f64)],
        changed: &mut Vec<usize>,
    ) -> Result<()> {
        for &(c, t) in targets {
            self.remove_node(c as u32);
            self.nodes[c].key = t + self.offset;
            self.nodes[c].key_sum = self.nodes[c].key;
            self.insert_node(c as u32);
        }
        // Recompute the moved coordinates' entries first: they may have
        // moved in either direction, and the descent's pruning argument
        // only covers the untouched ones.
        for &(c, _) in targets {
            let r = self.rank_of(c as u32);
            let f_r = self.eval_prefix(oracle, r)?;
            let f_r1 = self.eval_prefix(oracle, r - 1)?;
            let g = f_r - f_r1;
            if g != self.nodes[c].grad {
                self.write_grad(c, g);
                self.refresh_sums_on_path(c as u32);
                changed.push(c);
            }
        }
        let tol = self.prune_tolerance();
        let f_lo = self.eval_prefix(oracle, 0)?;
        let f_hi = self.eval_prefix(oracle, self.n())?;
        self.repair(self.root, 1, f_lo, f_hi, oracle, tol, changed)?;
        Ok(())
    }

    fn prune_tolerance(&self) -> f64 {
        match self.kind {
            ValueKind::Integer => 0.0,
            ValueKind::Real => 1e-12,
        }
    }

    /// Top-down comparison descent over ranks `[lo, lo + size - 1]`.
    /// `f_lo_1 = f(P[lo - 1])`, `f_hi = f(P[hi])`. Returns the repaired
    /// subtree gradient sum.
    fn repair(
        &mut self,
        t: u32,
        lo: usize,
        f_lo_1: f64,
        f_hi: f64,
        oracle: &CountingOracle,
        tol: f64,
        changed: &mut Vec<usize>,
    ) -> Result<f64> {
        if t == NIL {
            return Ok(0.0);
        }
        let stored = self.nodes[t as usize].grad_sum;
        if (stored - (f_hi - f_lo_1)).abs() <= tol {
            return Ok(stored);
        }
        let (left, right) = (self.nodes[t as usize].left, self.nodes[t as usize].right);
        let m = lo + self.size(left);
        let f_m_1 = if left == NIL { f_lo_1 } else { self.eval_prefix(oracle, m - 1)? };
        let f_m = if right == NIL { f_hi } else { self.eval_prefix(oracle, m)? };
        let left_sum = self.repair(left, lo, f_lo_1, f_m_1, oracle, tol, changed)?;
        let own = f_m - f_m_1;
        if own != self.nodes[t as usize].grad {
            self.write_grad(t as usize, own);
            changed.push(t as usize);
        }
        let right_sum = self.repair(right, m + 1, f_m, f_hi, oracle, tol, changed)?;
        let sum = left_sum + own + right_sum;
        self.nodes[t as usize].grad_sum = sum;
        Ok(sum)
    }

    /// Moves the point to `x + e` (same-signed sparse `e`) without
    /// repairing the stored gradient, and returns the averaged one-point
    /// estimate of `g(x + e) - g(x)` from `ell` independent draws. Marks
    /// the stored gradient stale.
    ///
    /// Every one-point draw has l1 norm exactly `||g(x + e) - g(x)||_1`
    /// and expectation exactly the true difference; averaging `ell` draws
    /// leaves at most `ell` nonzero entries and divides the variance by
    /// `ell`. Cost is O((k + ell log n) (EO + log n)) for a k-sparse edit.
    pub fn sample_difference(
        &mut self,
        oracle: &CountingOracle,
        e: &SparseVector,
        ell: u64,
        rng: &mut ChaCha8Rng,
    ) -> Result<DifferenceEstimate> {
        if ell == 0 {
            return Err(Error::domain("sample count ell must be positive"));
        }
        let has_pos = e.iter().any(|(_, v)| v > 0.0);
        let has_neg = e.iter().any(|(_, v)| v < 0.0);
        if has_pos && has_neg {
            return Err(Error::domain("sampling edits must be one-signed"));
        }
        let mut moves = Vec::with_capacity(e.nnz());
        for (c, d) in e.iter() {
            if c >= self.n() {
                return Err(Error::domain(format!("coordinate {c} out of range")));
            }
            moves.push((c, snap_to_box(self.effective(c) + d)?));
        }
        if moves.is_empty() {
            return Ok(DifferenceEstimate { estimate: SparseVector::zero(), l1_mass: 0.0, ell });
        }
        self.grads_valid = false;
        self.sample_shift(oracle, &moves, ell, rng)
    }

    fn sample_shift(
        &mut self,
        oracle: &CountingOracle,
        moves: &[(usize, f64)],
        ell: u64,
        rng: &mut ChaCha8Rng,
    ) -> Result<DifferenceEstimate> {
        let k = moves.len();
        let m = self.n() - k; // number of untouched coordinates

        // Old-side bookkeeping, then the rekey, then new-side bookkeeping.
        let mut cache_x: HashMap<usize, f64> = HashMap::new();
        let mut old_rank = Vec::with_capacity(k);
        let mut g_x = Vec::with_capacity(k);
        for &(c, _) in moves {
            let r = self.rank_of(c as u32);
            let f_r = self.cached_plain_prefix(oracle, &mut cache_x, r)?;
            let f_r1 = self.cached_plain_prefix(oracle, &mut cache_x, r - 1)?;
            old_rank.push(r);
            g_x.push(f_r - f_r1);
        }
        for &(c, _) in moves {
            self.remove_node(c as u32);
        }
        // Untouched coordinates sit at the same relative positions in both
        // permutations; bx/by count how many of them precede each touched
        // coordinate before and after the move.
        let mut bx = Vec::with_capacity(k);
        let mut by = Vec::with_capacity(k);
        for &(c, t) in moves {
            bx.push(self.count_before(self.nodes[c].key, c as u32));
            by.push(self.count_before(t + self.offset, c as u32));
        }
        for &(c, t) in moves {
            self.nodes[c].key = t + self.offset;
            self.nodes[c].key_sum = self.nodes[c].key;
            self.insert_node(c as u32);
        }
        let mut new_rank = Vec::with_capacity(k);
        let mut cache_y: HashMap<usize, f64> = HashMap::new();
        let mut d = Vec::with_capacity(k);
        for (i, &(c, _)) in moves.iter().enumerate() {
            let r = self.rank_of(c as u32);
            let f_r = self.cached_tree_prefix(oracle, &mut cache_y, r)?;
            let f_r1 = self.cached_tree_prefix(oracle, &mut cache_y, r - 1)?;
            new_rank.push(r);
            d.push(f_r - f_r1 - g_x[i]);
        }

        let mut bx_sorted = bx.clone();
        bx_sorted.sort_unstable();
        let mut by_sorted = by.clone();
        by_sorted.sort_unstable();
        let mut new_rank_sorted = new_rank.clone();
        new_rank_sorted.sort_unstable();
        let mut touched_old: Vec<(usize, usize)> =
            moves.iter().map(|&(c, _)| c).zip(old_rank.iter().copied()).collect();
        touched_old.sort_unstable();

        // Runs of untouched indices contiguous in both permutations.
        let mut cuts: Vec<usize> = bx_sorted.iter().chain(by_sorted.iter()).copied().collect();
        cuts.push(m);
        cuts.sort_unstable();
        cuts.dedup();
        let mut runs: Vec<(usize, usize)> = Vec::new();
        let mut start = 1usize;
        for &c in &cuts {
            if c >= start {
                runs.push((start, c));
                start = c + 1;
            }
        }

        let xfull = |t: usize| t + count_less(&bx_sorted, t);
        let yfull = |t: usize| t + count_less(&by_sorted, t);

        // Interval mass over untouched indices [p, q], contiguous in both
        // orders: new-side interval sum minus old-side interval sum.
        macro_rules! run_mass {
            ($p:expr, $q:expr, $cx:expr, $cy:expr) => {{
                let (p, q) = ($p, $q);
                let y_hi = self.cached_tree_prefix(oracle, $cy, yfull(q))?;
                let y_lo = self.cached_tree_prefix(oracle, $cy, yfull(p) - 1)?;
                let x_hi = self.cached_old_prefix(
                    oracle,
                    $cx,
                    xfull(q),
                    &touched_old,
                    &new_rank_sorted,
                    &bx_sorted,
                )?;
                let x_lo = self.cached_old_prefix(
                    oracle,
                    $cx,
                    xfull(p) - 1,
                    &touched_old,
                    &new_rank_sorted,
                    &bx_sorted,
                )?;
                (y_hi - y_lo) - (x_hi - x_lo)
            }};
        }

        // Atoms of the difference: explicit entries on the support plus
        // one-signed interval masses.
        enum Atom {
            Coord(usize, f64),
            Run { p: usize, q: usize, mass: f64 },
        }
        let mut atoms = Vec::new();
        for (i, &(c, _)) in moves.iter().enumerate() {
            if d[i] != 0.0 {
                atoms.push(Atom::Coord(c, d[i]));
            }
        }
        for &(p, q) in &runs {
            let mass = run_mass!(p, q, &mut cache_x, &mut cache_y);
            if mass != 0.0 {
                atoms.push(Atom::Run { p, q, mass });
            }
        }
        let l1_mass: f64 = atoms
            .iter()
            .map(|a| match a {
                Atom::Coord(_, v) => v.abs(),
                Atom::Run { mass, .. } => mass.abs(),
            })
            .sum();
        if l1_mass <= 0.0 {
            return Ok(DifferenceEstimate { estimate: SparseVector::zero(), l1_mass: 0.0, ell });
        }

        let mut acc: HashMap<usize, f64> = HashMap::new();
        for _ in 0..ell {
            let mut u = rng.random::<f64>() * l1_mass;
            let mut pick = atoms.len() - 1;
            for (i, a) in atoms.iter().enumerate() {
                let w = match a {
                    Atom::Coord(_, v) => v.abs(),
                    Atom::Run { mass, .. } => mass.abs(),
                };
                if u < w {
                    pick = i;
                    break;
                }
                u -= w;
            }
            let (coord, sign) = match &atoms[pick] {
                &Atom::Coord(c, v) => (c, v.signum()),
                &Atom::Run { p, q, mass } => {
                    let (mut p, mut q, mut mass) = (p, q, mass);
                    // Within a run every per-coordinate difference has the
                    // run's sign, so |left| + |right| = |whole| and we can
                    // descend proportionally with four evaluations a level.
                    while p < q {
                        let mid = (p + q) / 2;
                        let left = run_mass!(p, mid, &mut cache_x, &mut cache_y);
                        let right = mass - left;
                        if rng.random::<f64>() * mass.abs() < left.abs() {
                            q = mid;
                            mass = left;
                        } else {
                            p = mid + 1;
                            mass = right;
                        }
                    }
                    let c = self.select(yfull(p));
                    debug_assert!(new_rank_sorted.binary_search(&yfull(p)).is_err());
                    (c, mass.signum())
                }
            };
            *acc.entry(coord).or_insert(0.0) += sign * l1_mass;
        }
        let estimate = SparseVector::from_pairs(
            acc.into_iter()
                .map(|(c, v)| (c, v / ell as f64))
                .filter(|&(_, v)| v != 0.0)
                .collect(),
        )?;
        Ok(DifferenceEstimate { estimate, l1_mass, ell })
    }

    /// Solves the cardinality-capped projection: given raw targets
    /// `y[c]` for the edited coordinates (other coordinates keep their
    /// current value), finds the smallest `lambda >= 0` such that
    /// `sum_i med(0, y[i] - lambda, 1) <= cap`, where untouched
    /// coordinates contribute `med(0, x[i] - lambda, 1)`.
    ///
    /// Pure arithmetic over the key aggregates; no oracle queries.
    pub fn plan_capped_step(&self, raw_targets: &[(usize, f64)], cap: f64) -> Result<CappedPlan> {
        if !(cap.is_finite() && cap >= 0.0) {
            return Err(Error::domain("cap must be finite and nonnegative"));
        }
        for &(c, y) in raw_targets {
            if c >= self.n() {
                return Err(Error::domain(format!("coordinate {c} out of range")));
            }
            if !y.is_finite() {
                return Err(Error::domain("targets must be finite"));
            }
        }
        let phi = |lambda: f64| -> f64 {
            let theta = self.offset + lambda;
            let (cnt, ksum) = self.stats_above(self.root, theta);
            let mut total = ksum - theta * cnt as f64;
            for &(c, y) in raw_targets {
                total -= (self.nodes[c].key - theta).max(0.0);
                total += med01(y - lambda);
            }
            total
        };
        let finish = |lambda: f64| -> CappedPlan {
            CappedPlan {
                lambda,
                targets: raw_targets.iter().map(|&(c, y)| (c, med01(y - lambda))).collect(),
            }
        };
        if phi(0.0) <= cap {
            return Ok(finish(0.0));
        }
        // phi is continuous, piecewise linear, nonincreasing. Breakpoints
        // come from tree keys (lambda = key - offset) and from the raw
        // targets (lambda = y or y - 1). Bracket the crossing tightly in
        // each family, then interpolate on the joint linear segment.
        let mut lo = 0.0f64;
        let mut hi = f64::NEG_INFINITY;
        for &(_, y) in raw_targets {
            hi = hi.max(y);
        }
        let max_key = self.max_key();
        hi = hi.max(max_key - self.offset).max(0.0) + 1.0;
        debug_assert!(phi(hi) <= cap);
        // Tree family, binary search over ranks. Keys descend with rank,
        // so lambda(r) = max(key(rank r) - offset, 0) descends and
        // phi(lambda(r)) ascends: ranks 1..=a sit on the `phi <= cap`
        // side, ranks a+1.. on the `phi > cap` side.
        {
            let lam = |tree: &Self, r: usize| -> f64 {
                (tree.nodes[tree.select(r)].key - tree.offset).max(0.0)
            };
            let (mut a, mut b) = (0usize, self.n() + 1);
            while b - a > 1 {
                let mid = (a + b) / 2;
                if phi(lam(self, mid)) <= cap {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            if a >= 1 {
                hi = hi.min(lam(self, a));
            }
            if b <= self.n() {
                lo = lo.max(lam(self, b));
            }
        }
        // Target family, explicit values.
        let mut cand: Vec<f64> = Vec::with_capacity(2 * raw_targets.len());
        for &(_, y) in raw_targets {
            for l in [y, y - 1.0] {
                if l > 0.0 {
                    cand.push(l);
                }
            }
        }
        for l in cand {
            if phi(l) <= cap {
                if l < hi {
                    hi = l;
                }
            } else if l > lo {
                lo = l;
            }
        }
        let (plo, phi_hi) = (phi(lo), phi(hi));
        debug_assert!(plo > cap && phi_hi <= cap && hi >= lo);
        let lambda = if plo - phi_hi <= 0.0 {
            hi
        } else {
            lo + (plo - cap) * (hi - lo) / (plo - phi_hi)
        };
        Ok(finish(lambda.clamp(lo, hi)))
    }

    /// Uniformly subtracts `lambda` from every coordinate (clamping at
    /// zero). The permutation and gradient are unchanged: a uniform shift
    /// never reorders, and the subgradient depends only on the order.
    pub fn apply_offset(&mut self, lambda: f64) -> Result<()> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::domain("offset increments must be nonnegative"));
        }
        self.offset += lambda;
        if self.offset > 1e6 {
            self.renormalize();
        }
        Ok(())
    }

    /// Folds the accumulated offset back into the keys (order-preserving)
    /// to keep floating-point resolution healthy on long runs.
    fn renormalize(&mut self) {
        let off = self.offset;
        for node in &mut self.nodes {
            node.key = (node.key - off).max(0.0);
        }
        self.offset = 0.0;
        self.recompute_sums(self.root);
    }

    // ----- internal tree plumbing -----

    fn size(&self, t: u32) -> usize {
        if t == NIL {
            0
        } else {
            self.nodes[t as usize].size as usize
        }
    }

    fn pull(&mut self, t: u32) {
        let (l, r) = (self.nodes[t as usize].left, self.nodes[t as usize].right);
        let mut size = 1u32;
        let mut gsum = self.nodes[t as usize].grad;
        let mut ksum = self.nodes[t as usize].key;
        if l != NIL {
            size += self.nodes[l as usize].size;
            gsum += self.nodes[l as usize].grad_sum;
            ksum += self.nodes[l as usize].key_sum;
        }
        if r != NIL {
            size += self.nodes[r as usize].size;
            gsum += self.nodes[r as usize].grad_sum;
            ksum += self.nodes[r as usize].key_sum;
        }
        let node = &mut self.nodes[t as usize];
        node.size = size;
        node.grad_sum = gsum;
        node.key_sum = ksum;
    }

    /// True if node `a` comes strictly before key `(key, coord)`.
    fn node_before(&self, a: u32, key: f64, coord: u32) -> bool {
        let na = &self.nodes[a as usize];
        na.key > key || (na.key == key && a < coord)
    }

    fn split_before(&mut self, t: u32, key: f64, coord: u32) -> (u32, u32) {
        if t == NIL {
            return (NIL, NIL);
        }
        if self.node_before(t, key, coord) {
            let (l, r) = {
                let right = self.nodes[t as usize].right;
                self.split_before(right, key, coord)
            };
            self.nodes[t as usize].right = l;
            self.pull(t);
            (t, r)
        } else {
            let (l, r) = {
                let left = self.nodes[t as usize].left;
                self.split_before(left, key, coord)
            };
            self.nodes[t as usize].left = r;
            self.pull(t);
            (l, t)
        }
    }

    fn merge(&mut self, a: u32, b: u32) -> u32 {
        if a == NIL {
            return b;
        }
        if b == NIL {
            return a;
        }
        if self.nodes[a as usize].prio > self.nodes[b as usize].prio {
            let ar = self.nodes[a as usize].right;
            let merged = self.merge(ar, b);
            self.nodes[a as usize].right = merged;
            self.pull(a);
            a
        } else {
            let bl = self.nodes[b as usize].left;
            let merged = self.merge(a, bl);
            self.nodes[b as usize].left = merged;
            self.pull(b);
            b
        }
    }

    fn insert_node(&mut self, c: u32) {
        self.nodes[c as usize].left = NIL;
        self.nodes[c as usize].right = NIL;
        self.pull(c);
        let (key, root) = (self.nodes[c as usize].key, self.root);
        let (l, r) = self.split_before(root, key, c);
        let lc = self.merge(l, c);
        self.root = self.merge(lc, r);
    }

    fn remove_node(&mut self, c: u32) {
        let (key, root) = (self.nodes[c as usize].key, self.root);
        let (l, r) = self.split_before(root, key, c);
        let (first, rest) = self.detach_leftmost(r);
        debug_assert_eq!(first, c, "node to remove must sit at its key");
        self.root = self.merge(l, rest);
    }

    fn detach_leftmost(&mut self, t: u32) -> (u32, u32) {
        let l = self.nodes[t as usize].left;
        if l == NIL {
            let r = self.nodes[t as usize].right;
            self.nodes[t as usize].right = NIL;
            self.pull(t);
            return (t, r);
        }
        let (first, rest) = self.detach_leftmost(l);
        self.nodes[t as usize].left = rest;
        self.pull(t);
        (first, t)
    }

    /// 1-based rank of coordinate `c` in the maintained order.
    fn rank_of(&self, c: u32) -> usize {
        let (key, _) = (self.nodes[c as usize].key, ());
        let mut t = self.root;
        let mut acc = 0usize;
        loop {
            debug_assert_ne!(t, NIL, "coordinate must be present in the tree");
            if t == c {
                return acc + self.size(self.nodes[t as usize].left) + 1;
            }
            if self.node_before(t, key, c) {
                acc += self.size(self.nodes[t as usize].left) + 1;
                t = self.nodes[t as usize].right;
            } else {
                t = self.nodes[t as usize].left;
            }
        }
    }

    /// Number of present nodes strictly before key `(key, coord)`.
    fn count_before(&self, key: f64, coord: u32) -> usize {
        let mut t = self.root;
        let mut acc = 0usize;
        while t != NIL {
            if self.node_before(t, key, coord) {
                acc += self.size(self.nodes[t as usize].left) + 1;
                t = self.nodes[t as usize].right;
            } else {
                t = self.nodes[t as usize].left;
            }
        }
        acc
    }

    /// Coordinate at 1-based rank `r`.
    fn select(&self, r: usize) -> usize {
        debug_assert!(r >= 1 && r <= self.n());
        let mut t = self.root;
        let mut r = r;
        loop {
            let left = self.nodes[t as usize].left;
            let ls = self.size(left);
            if r <= ls {
                t = left;
            } else if r == ls + 1 {
                return t as usize;
            } else {
                r -= ls + 1;
                t = self.nodes[t as usize].right;
            }
        }
    }

    /// (count, key sum) over nodes with key strictly above `theta`.
    fn stats_above(&self, t: u32, theta: f64) -> (usize, f64) {
        let mut t = t;
        let mut cnt = 0usize;
        let mut sum = 0.0f64;
        while t != NIL {
            let node = &self.nodes[t as usize];
            if node.key > theta {
                cnt += self.size(node.left) + 1;
                sum += node.key;
                if node.left != NIL {
                    sum += self.nodes[node.left as usize].key_sum;
                }
                t = node.right;
            } else {
                t = node.left;
            }
        }
        (cnt, sum)
    }

    fn max_key(&self) -> f64 {
        let mut t = self.root;
        let mut best = f64::NEG_INFINITY;
        while t != NIL {
            best = best.max(self.nodes[t as usize].key);
            t = self.nodes[t as usize].left;
        }
        best
    }

    fn walk(&self, mut f: impl FnMut(usize)) {
        let mut stack = Vec::new();
        let mut t = self.root;
        loop {
            while t != NIL {
                stack.push(t);
                t = self.nodes[t as usize].left;
            }
            let Some(top) = stack.pop() else { break };
            f(top as usize);
            t = self.nodes[top as usize].right;
        }
    }

    /// Sets a gradient entry and maintains the nonzero list (not the sums).
    fn write_grad(&mut self, c: usize, g: f64) {
        self.nodes[c].grad = g;
        if g != 0.0 {
            self.nonzero.insert(c);
        } else {
            self.nonzero.remove(&c);
        }
    }

    /// Recomputes grad sums along the root-to-`c` search path.
    fn refresh_sums_on_path(&mut self, c: u32) {
        let key = self.nodes[c as usize].key;
        self.refresh_sums_rec(self.root, key, c);
    }

    fn refresh_sums_rec(&mut self, t: u32, key: f64, c: u32) {
        debug_assert_ne!(t, NIL);
        if t != c {
            if self.node_before(t, key, c) {
                let r = self.nodes[t as usize].right;
                self.refresh_sums_rec(r, key, c);
            } else {
                let l = self.nodes[t as usize].left;
                self.refresh_sums_rec(l, key, c);
            }
        }
        self.pull(t);
    }

    fn recompute_sums(&mut self, t: u32) {
        if t == NIL {
            return;
        }
        let (l, r) = (self.nodes[t as usize].left, self.nodes[t as usize].right);
        self.recompute_sums(l);
        self.recompute_sums(r);
        self.pull(t);
    }

    fn cached_plain_prefix(
        &self,
        oracle: &CountingOracle,
        cache: &mut HashMap<usize, f64>,
        r: usize,
    ) -> Result<f64> {
        if let Some(&v) = cache.get(&r) {
            return Ok(v);
        }
        let v = self.eval_prefix(oracle, r)?;
        cache.insert(r, v);
        Ok(v)
    }

    fn cached_tree_prefix(
        &self,
        oracle: &CountingOracle,
        cache: &mut HashMap<usize, f64>,
        r: usize,
    ) -> Result<f64> {
        self.cached_plain_prefix(oracle, cache, r)
    }

    /// `f` on the first `r` elements of the PRE-update permutation,
    /// reconstructed from the post-update tree plus the recorded old
    /// ranks of the touched coordinates.
    fn cached_old_prefix(
        &self,
        oracle: &CountingOracle,
        cache: &mut HashMap<usize, f64>,
        r: usize,
        touched_old: &[(usize, usize)],
        new_rank_sorted: &[usize],
        bx_sorted: &[usize],
    ) -> Result<f64> {
        if let Some(&v) = cache.get(&r) {
            return Ok(v);
        }
        let q = OldPrefix { tree: self, r, touched_old, new_rank_sorted, bx_sorted };
        let v = oracle.evaluate(&q)?;
        cache.insert(r, v);
        Ok(v)
    }
}

fn med01(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

fn snap_to_box(v: f64) -> Result<f64> {
    if !(v.is_finite() && (-BOX_SLACK..=1.0 + BOX_SLACK).contains(&v)) {
        return Err(Error::domain(format!("edit pushes coordinate to {v}, outside [0, 1]")));
    }
    Ok(v.clamp(0.0, 1.0))
}

fn count_less(sorted: &[usize], v: usize) -> usize {
    sorted.partition_point(|&x| x < v)
}

/// Prefix of the maintained permutation, as a set query.
struct TreePrefix<'t> {
    tree: &'t OrderTree,
    k: usize,
}

impl SetQuery for TreePrefix<'_> {
    fn n(&self) -> usize {
        self.tree.n()
    }
    fn len(&self) -> usize {
        self.k
    }
    fn contains(&self, i: usize) -> bool {
        i < self.tree.n() && self.tree.rank_of(i as u32) <= self.k
    }
    fn for_each(&self, f: &mut dyn FnMut(usize)) {
        let mut emitted = 0usize;
        self.tree.walk(|c| {
            if emitted < self.k {
                emitted += 1;
                f(c);
            }
        });
    }
}

/// Prefix of the pre-update permutation, reconstructed after the rekey.
///
/// A touched coordinate belongs to the old prefix `P_x[r]` iff its
/// recorded old rank is at most `r`. An untouched coordinate with
/// untouched-order index `t` (the same in both permutations) belongs iff
/// `t + |{touched with fewer untouched predecessors than t}| <= r`.
struct OldPrefix<'t> {
    tree: &'t OrderTree,
    r: usize,
    touched_old: &'t [(usize, usize)],
    new_rank_sorted: &'t [usize],
    bx_sorted: &'t [usize],
}

impl OldPrefix<'_> {
    fn untouched_index(&self, i: usize) -> usize {
        let rho = self.tree.rank_of(i as u32);
        rho - count_less(self.new_rank_sorted, rho)
    }
}

impl SetQuery for OldPrefix<'_> {
    fn n(&self) -> usize {
        self.tree.n()
    }
    fn len(&self) -> usize {
        self.r
    }
    fn contains(&self, i: usize) -> bool {
        match self.touched_old.binary_search_by_key(&i, |&(c, _)| c) {
            Ok(idx) => self.touched_old[idx].1 <= self.r,
            Err(_) => {
                let t = self.untouched_index(i);
                t + count_less(self.bx_sorted, t) <= self.r
            }
        }
    }
    fn for_each(&self, f: &mut dyn FnMut(usize)) {
        let mut t = 0usize;
        self.tree.walk(|c| {
            match self.touched_old.binary_search_by_key(&c, |&(tc, _)| tc) {
                Ok(idx) => {
                    if self.touched_old[idx].1 <= self.r {
                        f(c);
                    }
                }
                Err(_) => {
                    t += 1;
                    if t + count_less(self.bx_sorted, t) <= self.r {
                        f(c);
                    }
                }
            }
        });
    }
}
