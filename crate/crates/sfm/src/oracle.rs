//! Evaluation oracles for submodular functions on a ground set `{0, .., n-1}`.
//!
//! Every instance is normalized so that `f(empty) = 0` (the raw empty-set
//! value is cached at construction and subtracted from every answer). The
//! one documented exception is [`LowerBoundInstance`] with an empty target
//! set, which is exposed unnormalized and reports `normalized() == false`.
//!
//! All query traffic of a single algorithm run goes through one
//! [`CountingOracle`], whose `eval_calls` counter equals the number of
//! [`CountingOracle::evaluate`]/[`CountingOracle::evaluate_prefix`]
//! invocations. The wrapper is deliberately `!Sync`: a run owns its counter.

use std::cell::Cell;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Whether an instance certifies integer values or only real values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    Integer,
    Real,
}

/// A subset of the ground set, presented by membership and enumeration.
///
/// Oracles answer from whichever access pattern is cheap for them: cut
/// functions probe `contains` per edge endpoint, table lookups fold the
/// members into a bitmask. `len` must equal the number of members.
pub trait SetQuery {
    fn n(&self) -> usize;
    fn len(&self) -> usize;
    fn contains(&self, i: usize) -> bool;
    fn for_each(&self, f: &mut dyn FnMut(usize));
}

/// A set given by an explicit membership mask over the first 64
/// elements; elements beyond the mask width are never members.
pub struct MaskSet {
    pub n: usize,
    pub mask: u64,
}

impl SetQuery for MaskSet {
    fn n(&self) -> usize {
        self.n
    }
    fn len(&self) -> usize {
        self.mask.count_ones() as usize
    }
    fn contains(&self, i: usize) -> bool {
        i < self.n && i < 64 && self.mask >> i & 1 == 1
    }
    fn for_each(&self, f: &mut dyn FnMut(usize)) {
        let mut m = self.mask;
        while m != 0 {
            let i = m.trailing_zeros() as usize;
            f(i);
            m &= m - 1;
        }
    }
}

/// The first `k` elements of a permutation, with O(1) membership via the
/// inverse permutation.
pub struct PrefixSet<'a> {
    pub n: usize,
    pub perm: &'a [usize],
    pub pos: &'a [usize],
    pub k: usize,
}

impl SetQuery for PrefixSet<'_> {
    fn n(&self) -> usize {
        self.n
    }
    fn len(&self) -> usize {
        self.k
    }
    fn contains(&self, i: usize) -> bool {
        self.pos[i] < self.k
    }
    fn for_each(&self, f: &mut dyn FnMut(usize)) {
        for &i in &self.perm[..self.k] {
            f(i);
        }
    }
}

/// A set given by a dense indicator slice.
pub struct IndicatorSet<'a> {
    pub ind: &'a [bool],
}

impl SetQuery for IndicatorSet<'_> {
    fn n(&self) -> usize {
        self.ind.len()
    }
    fn len(&self) -> usize {
        self.ind.iter().filter(|&&b| b).count()
    }
    fn contains(&self, i: usize) -> bool {
        self.ind[i]
    }
    fn for_each(&self, f: &mut dyn FnMut(usize)) {
        for (i, &b) in self.ind.iter().enumerate() {
            if b {
                f(i);
            }
        }
    }
}

/// A normalized submodular evaluation oracle.
pub trait Submodular {
    /// Ground-set size; always at least 1.
    fn n(&self) -> usize;
    fn value_kind(&self) -> ValueKind;
    /// Certified bound `|f(S)| <= m_bound()` for every set `S`.
    fn m_bound(&self) -> f64;
    /// Normalized value `f(S)`; `f(empty) = 0` whenever `normalized()`.
    fn eval(&self, s: &dyn SetQuery) -> f64;
    fn normalized(&self) -> bool {
        true
    }
}

/// Directed cut function of a digraph with distinguished terminals.
///
/// Internal node ids: `0..n` are the ground-set coordinates, `n` is the
/// source `s`, `n + 1` is the sink `t`. `f(S)` is the total weight of
/// edges leaving `S ∪ {s}`, minus the same quantity for the empty set.
#[derive(Debug, Clone)]
pub struct CutInstance {
    n: usize,
    edges: Vec<(u32, u32, f64)>,
    total_weight: f64,
    empty_value: f64,
    kind: ValueKind,
}

impl CutInstance {
    pub const SOURCE: usize = usize::MAX - 1;
    pub const SINK: usize = usize::MAX;

    /// Builds a cut instance over `n` coordinates. Edge endpoints are
    /// coordinates `0..n` or the markers [`Self::SOURCE`] / [`Self::SINK`].
    pub fn new(n: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("ground set must be non-empty"));
        }
        let encode = |v: usize| -> Result<u32> {
            if v < n {
                Ok(v as u32)
            } else if v == Self::SOURCE {
                Ok(n as u32)
            } else if v == Self::SINK {
                Ok(n as u32 + 1)
            } else {
                Err(Error::domain(format!("edge endpoint {v} out of range")))
            }
        };
        let mut enc = Vec::with_capacity(edges.len());
        let mut total = 0.0;
        let mut kind = ValueKind::Integer;
        for (u, v, w) in edges {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::domain("edge weights must be finite and nonnegative"));
            }
            if w.fract() != 0.0 {
                kind = ValueKind::Real;
            }
            let (eu, ev) = (encode(u)?, encode(v)?);
            if eu == ev {
                return Err(Error::domain("self-loops are not allowed"));
            }
            total += w;
            enc.push((eu, ev, w));
        }
        let mut inst = CutInstance { n, edges: enc, total_weight: total, empty_value: 0.0, kind };
        inst.empty_value = inst.raw(&MaskSet { n, mask: 0 });
        Ok(inst)
    }

    /// Seeded random digraph: every candidate edge that can ever be cut
    /// (not into `s`, not out of `t`) appears with probability `density`
    /// and integer weight uniform in `1..=weight_max`.
    pub fn random(n: usize, density: f64, weight_max: u64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&density) {
            return Err(Error::domain("density must lie in [0, 1]"));
        }
        if weight_max == 0 {
            return Err(Error::domain("weight_max must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut nodes: Vec<usize> = (0..n).collect();
        nodes.push(Self::SOURCE);
        nodes.push(Self::SINK);
        let mut edges = Vec::new();
        for &u in &nodes {
            for &v in &nodes {
                if u == v || v == Self::SOURCE || u == Self::SINK {
                    continue;
                }
                if rng.random::<f64>() < density {
                    let w = rng.random_range(1..=weight_max) as f64;
                    edges.push((u, v, w));
                }
            }
        }
        Self::new(n, edges)
    }

    fn node_in(&self, node: u32, s: &dyn SetQuery) -> bool {
        if node as usize == self.n {
            true // source
        } else if node as usize == self.n + 1 {
            false // sink
        } else {
            s.contains(node as usize)
        }
    }

    fn raw(&self, s: &dyn SetQuery) -> f64 {
        let mut out = 0.0;
        for &(u, v, w) in &self.edges {
            if self.node_in(u, s) && !self.node_in(v, s) {
                out += w;
            }
        }
        out
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    /// Raw weight leaving the source alone; `raw cut of S = eval(S) + empty_value`.
    pub fn empty_value(&self) -> f64 {
        self.empty_value
    }

    /// Edges with endpoints in the public encoding (`SOURCE`/`SINK` markers).
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.edges.iter().map(move |&(u, v, w)| {
            let dec = |x: u32| -> usize {
                if x as usize == self.n {
                    Self::SOURCE
                } else if x as usize == self.n + 1 {
                    Self::SINK
                } else {
                    x as usize
                }
            };
            (dec(u), dec(v), w)
        })
    }
}

impl Submodular for CutInstance {
    fn n(&self) -> usize {
        self.n
    }
    fn value_kind(&self) -> ValueKind {
        self.kind
    }
    fn m_bound(&self) -> f64 {
        self.total_weight
    }
    fn eval(&self, s: &dyn SetQuery) -> f64 {
        self.raw(s) - self.empty_value
    }
}

/// Explicit value table over all subsets of a ground set with `n <= 20`.
#[derive(Debug, Clone)]
pub struct TableInstance {
    n: usize,
    values: Vec<f64>,
    m_bound: f64,
    kind: ValueKind,
}

pub const TABLE_MAX_N: usize = 20;

impl TableInstance {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("ground set must be non-empty"));
        }
        if n > TABLE_MAX_N {
            return Err(Error::domain(format!(
                "table instances support at most n = {TABLE_MAX_N}, got {n}"
            )));
        }
        if values.len() != 1 << n {
            return Err(Error::domain(format!(
                "table must have exactly 2^{n} = {} entries, got {}",
                1usize << n,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("table values must be finite"));
        }
        let base = values[0];
        let mut m = 0.0f64;
        let mut kind = ValueKind::Integer;
        for &v in &values {
            m = m.max((v - base).abs());
            if (v - base).fract() != 0.0 {
                kind = ValueKind::Real;
            }
        }
        Ok(TableInstance { n, values, m_bound: m, kind })
    }

    /// Builds the full table from a set function given on bitmasks.
    pub fn from_fn(n: usize, f: impl Fn(u32) -> f64) -> Result<Self> {
        if n > TABLE_MAX_N {
            return Err(Error::domain(format!(
                "table instances support at most n = {TABLE_MAX_N}, got {n}"
            )));
        }
        let values = (0..1u32 << n).map(f).collect();
        Self::new(n, values)
    }
}

impl Submodular for TableInstance {
    fn n(&self) -> usize {
        self.n
    }
    fn value_kind(&self) -> ValueKind {
        self.kind
    }
    fn m_bound(&self) -> f64 {
        self.m_bound
    }
    fn eval(&self, s: &dyn SetQuery) -> f64 {
        let mut mask = 0u32;
        s.for_each(&mut |i| mask |= 1 << i);
        self.values[mask as usize] - self.values[0]
    }
}

/// Additive (modular) function, mostly useful as a test fixture.
#[derive(Debug, Clone)]
pub struct ModularInstance {
    weights: Vec<f64>,
    m_bound: f64,
    kind: ValueKind,
}

impl ModularInstance {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::domain("ground set must be non-empty"));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::domain("weights must be finite"));
        }
        let pos: f64 = weights.iter().filter(|w| **w > 0.0).sum();
        let neg: f64 = weights.iter().filter(|w| **w < 0.0).sum();
        let kind = if weights.iter().all(|w| w.fract() == 0.0) {
            ValueKind::Integer
        } else {
            ValueKind::Real
        };
        Ok(ModularInstance { weights, m_bound: pos.max(-neg), kind })
    }
}

impl Submodular for ModularInstance {
    fn n(&self) -> usize {
        self.weights.len()
    }
    fn value_kind(&self) -> ValueKind {
        self.kind
    }
    fn m_bound(&self) -> f64 {
        self.m_bound
    }
    fn eval(&self, s: &dyn SetQuery) -> f64 {
        let mut sum = 0.0;
        s.for_each(&mut |i| sum += self.weights[i]);
        sum
    }
}

/// The query-complexity gadget: `f(S) = -1` if `S = R`, `0` if `S` and `R`
/// are nested (one strictly contains the other), `1` otherwise.
///
/// For `R = empty` the function value at the empty set is `-1`, so the
/// instance cannot be normalized; it is exposed raw with
/// `normalized() == false`.
#[derive(Debug, Clone)]
pub struct LowerBoundInstance {
    n: usize,
    in_r: Vec<bool>,
    r_size: usize,
}

impl LowerBoundInstance {
    pub fn new(n: usize, r: &[usize]) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("ground set must be non-empty"));
        }
        let mut in_r = vec![false; n];
        for &i in r {
            if i >= n {
                return Err(Error::domain(format!("element {i} out of range for n = {n}")));
            }
            if in_r[i] {
                return Err(Error::domain(format!("duplicate element {i} in target set")));
            }
            in_r[i] = true;
        }
        Ok(LowerBoundInstance { n, in_r, r_size: r.len() })
    }

    pub fn target(&self) -> Vec<usize> {
        (0..self.n).filter(|&i| self.in_r[i]).collect()
    }
}

impl Submodular for LowerBoundInstance {
    fn n(&self) -> usize {
        self.n
    }
    fn value_kind(&self) -> ValueKind {
        ValueKind::Integer
    }
    fn m_bound(&self) -> f64 {
        1.0
    }
    fn eval(&self, s: &dyn SetQuery) -> f64 {
        let size = s.len();
        let mut inter = 0usize;
        s.for_each(&mut |i| {
            if self.in_r[i] {
                inter += 1;
            }
        });
        if size == self.r_size && inter == self.r_size {
            -1.0
        } else if inter == size || inter == self.r_size {
            // S strictly inside R, or R strictly inside S.
            0.0
        } else {
            1.0
        }
    }
    fn normalized(&self) -> bool {
        self.r_size > 0
    }
}

/// View of another instance with all values divided by a positive scale.
pub struct ScaledInstance<'a> {
    inner: &'a dyn Submodular,
    scale: f64,
}

impl<'a> ScaledInstance<'a> {
    pub fn new(inner: &'a dyn Submodular, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::domain("scale must be positive"));
        }
        Ok(ScaledInstance { inner, scale })
    }
}

impl Submodular for ScaledInstance<'_> {
    fn n(&self) -> usize {
        self.inner.n()
    }
    fn value_kind(&self) -> ValueKind {
        ValueKind::Real
    }
    fn m_bound(&self) -> f64 {
        self.inner.m_bound() / self.scale
    }
    fn eval(&self, s: &dyn SetQuery) -> f64 {
        self.inner.eval(s) / self.scale
    }
    fn normalized(&self) -> bool {
        self.inner.normalized()
    }
}

/// Any instance loadable from a file, with static dispatch over the kind.
#[derive(Debug, Clone)]
pub enum AnyInstance {
    Cut(CutInstance),
    Table(TableInstance),
    LowerBound(LowerBoundInstance),
}

impl AnyInstance {
    pub fn as_dyn(&self) -> &dyn Submodular {
        match self {
            AnyInstance::Cut(c) => c,
            AnyInstance::Table(t) => t,
            AnyInstance::LowerBound(l) => l,
        }
    }

    pub fn as_cut(&self) -> Option<&CutInstance> {
        match self {
            AnyInstance::Cut(c) => Some(c),
            _ => None,
        }
    }
}

impl Submodular for AnyInstance {
    fn n(&self) -> usize {
        self.as_dyn().n()
    }
    fn value_kind(&self) -> ValueKind {
        self.as_dyn().value_kind()
    }
    fn m_bound(&self) -> f64 {
        self.as_dyn().m_bound()
    }
    fn eval(&self, s: &dyn SetQuery) -> f64 {
        self.as_dyn().eval(s)
    }
    fn normalized(&self) -> bool {
        self.as_dyn().normalized()
    }
}

/// Query-counting wrapper. One per algorithm run; the run's reported
/// `eval_calls` must equal this counter, which in turn equals the number
/// of `evaluate`/`evaluate_prefix`/`evaluate_set` invocations.
pub struct CountingOracle<'a> {
    inner: &'a dyn Submodular,
    eval_calls: Cell<u64>,
    subgradient_calls: Cell<u64>,
}

impl<'a> CountingOracle<'a> {
    pub fn new(inner: &'a dyn Submodular) -> Self {
        CountingOracle {
            inner,
            eval_calls: Cell::new(0),
            subgradient_calls: Cell::new(0),
        }
    }

    pub fn n(&self) -> usize {
        self.inner.n()
    }

    pub fn value_kind(&self) -> ValueKind {
        self.inner.value_kind()
    }

    pub fn m_bound(&self) -> f64 {
        self.inner.m_bound()
    }

    pub fn normalized(&self) -> bool {
        self.inner.normalized()
    }

    pub fn eval_calls(&self) -> u64 {
        self.eval_calls.get()
    }

    pub fn subgradient_calls(&self) -> u64 {
        self.subgradient_calls.get()
    }

    /// Bumped once per full-subgradient computation.
    pub fn note_subgradient(&self) {
        self.subgradient_calls.set(self.subgradient_calls.get() + 1);
    }

    /// Evaluates `f` on an arbitrary set query. Charges one call.
    pub fn evaluate(&self, s: &dyn SetQuery) -> Result<f64> {
        self.eval_calls.set(self.eval_calls.get() + 1);
        let v = self.inner.eval(s);
        if !v.is_finite() {
            return Err(Error::contract("oracle returned a non-finite value"));
        }
        if self.inner.value_kind() == ValueKind::Integer && v.fract() != 0.0 {
            return Err(Error::contract(format!(
                "integer-valued instance returned non-integer value {v}"
            )));
        }
        Ok(v)
    }

    /// Evaluates `f(P[k])`, the first `k` elements of `perm`. `pos` must be
    /// the inverse permutation. Charges one call (so the `k = 0` call that
    /// pins down the normalization is charged like any other).
    pub fn evaluate_prefix_with_pos(&self, perm: &[usize], pos: &[usize], k: usize) -> Result<f64> {
        if k > perm.len() {
            return Err(Error::domain(format!(
                "prefix length {k} out of range for n = {}",
                perm.len()
            )));
        }
        debug_assert!(perm.len() == self.n() && pos.len() == self.n());
        debug_assert!((0..k).all(|r| pos[perm[r]] == r));
        self.evaluate(&PrefixSet { n: self.n(), perm, pos, k })
    }

    /// Convenience form of [`Self::evaluate_prefix_with_pos`] that builds
    /// the inverse permutation itself.
    pub fn evaluate_prefix(&self, perm: &[usize], k: usize) -> Result<f64> {
        if perm.len() != self.n() {
            return Err(Error::domain(format!(
                "permutation has length {}, expected {}",
                perm.len(),
                self.n()
            )));
        }
        let mut pos = vec![usize::MAX; perm.len()];
        for (r, &i) in perm.iter().enumerate() {
            if i >= perm.len() || pos[i] != usize::MAX {
                return Err(Error::domain("not a permutation of the ground set"));
            }
            pos[i] = r;
        }
        self.evaluate_prefix_with_pos(perm, &pos, k)
    }

    /// Evaluates `f` on an explicit element set. Charges one call.
    pub fn evaluate_set(&self, elements: &[usize]) -> Result<f64> {
        let mut ind = vec![false; self.n()];
        for &i in elements {
            if i >= self.n() {
                return Err(Error::domain(format!("element {i} out of range")));
            }
            ind[i] = true;
        }
        self.evaluate(&IndicatorSet { ind: &ind })
    }
}

pub mod formats;

#[cfg(test)]
mod tests {
    use super::*;

    fn set(n: usize, els: &[usize]) -> MaskSet {
        let mut mask = 0u64;
        for &e in els {
            mask |= 1 << e;
        }
        MaskSet { n, mask }
    }

    #[test]
    fn cut_instance_normalizes_against_empty_set() {
        // s->a weight 2, a->t weight 3, s->t weight 1. f({a}) must be
        // (3 + 1) - (2 + 1) = 1.
        let inst = CutInstance::new(
            1,
            vec![
                (CutInstance::SOURCE, 0, 2.0),
                (0, CutInstance::SINK, 3.0),
                (CutInstance::SOURCE, CutInstance::SINK, 1.0),
            ],
        )
        .unwrap();
        assert_eq!(inst.eval(&set(1, &[0])), 1.0);
        assert_eq!(inst.eval(&set(1, &[])), 0.0);
        assert_eq!(inst.m_bound(), 6.0);
        assert_eq!(inst.value_kind(), ValueKind::Integer);
    }

    #[test]
    fn table_instance_normalizes_and_bounds() {
        // Raw table with f(empty) = 5; normalization shifts everything.
        let inst = TableInstance::new(2, vec![5.0, 4.0, 6.0, 5.0]).unwrap();
        assert_eq!(inst.eval(&set(2, &[])), 0.0);
        assert_eq!(inst.eval(&set(2, &[0])), -1.0);
        assert_eq!(inst.eval(&set(2, &[1])), 1.0);
        assert_eq!(inst.eval(&set(2, &[0, 1])), 0.0);
        assert_eq!(inst.m_bound(), 1.0);
    }

    #[test]
    fn lower_bound_instance_cases() {
        let inst = LowerBoundInstance::new(3, &[0, 2]).unwrap();
        assert_eq!(inst.eval(&set(3, &[0, 2])), -1.0); // S = R
        assert_eq!(inst.eval(&set(3, &[0])), 0.0); // S strictly inside R
        assert_eq!(inst.eval(&set(3, &[0, 1, 2])), 0.0); // R strictly inside S
        assert_eq!(inst.eval(&set(3, &[1])), 1.0); // crossing
        assert_eq!(inst.eval(&set(3, &[])), 0.0); // empty is strictly inside R
        assert!(inst.normalized());
    }

    #[test]
    fn lower_bound_empty_target_is_unnormalized() {
        let inst = LowerBoundInstance::new(2, &[]).unwrap();
        assert!(!inst.normalized());
        assert_eq!(inst.eval(&set(2, &[])), -1.0);
        assert_eq!(inst.eval(&set(2, &[0])), 0.0);
        assert_eq!(inst.eval(&set(2, &[0, 1])), 0.0);
    }

    #[test]
    fn counting_oracle_counts_invocations() {
        let inst = ModularInstance::new(vec![1.0, -2.0]).unwrap();
        let oracle = CountingOracle::new(&inst);
        let perm = [1usize, 0];
        assert_eq!(oracle.evaluate_prefix(&perm, 0).unwrap(), 0.0);
        assert_eq!(oracle.evaluate_prefix(&perm, 1).unwrap(), -2.0);
        assert_eq!(oracle.evaluate_prefix(&perm, 2).unwrap(), -1.0);
        assert_eq!(oracle.evaluate_set(&[0]).unwrap(), 1.0);
        assert_eq!(oracle.eval_calls(), 4);
        assert!(oracle.evaluate_prefix(&perm, 3).is_err());
        assert!(oracle.evaluate_prefix(&[0, 0], 1).is_err());
    }

    #[test]
    fn integer_contract_is_enforced() {
        let inst = TableInstance::new(1, vec![0.0, 0.5]).unwrap();
        assert_eq!(inst.value_kind(), ValueKind::Real);
        // A lying instance: claims integer but produces fractions.
        struct Liar(TableInstance);
        impl Submodular for Liar {
            fn n(&self) -> usize {
                self.0.n()
            }
            fn value_kind(&self) -> ValueKind {
                ValueKind::Integer
            }
            fn m_bound(&self) -> f64 {
                self.0.m_bound()
            }
            fn eval(&self, s: &dyn SetQuery) -> f64 {
                self.0.eval(s)
            }
        }
        let liar = Liar(inst);
        let oracle = CountingOracle::new(&liar);
        assert!(matches!(oracle.evaluate_set(&[0]), Err(Error::Contract(_))));
    }

    #[test]
    fn random_cut_is_deterministic_per_seed() {
        let a = CutInstance::random(6, 0.4, 5, 42).unwrap();
        let b = CutInstance::random(6, 0.4, 5, 42).unwrap();
        let c = CutInstance::random(6, 0.4, 5, 43).unwrap();
        let ea: Vec<_> = a.edges().collect();
        let eb: Vec<_> = b.edges().collect();
        let ec: Vec<_> = c.edges().collect();
        assert_eq!(ea, eb);
        assert_ne!(ea, ec);
        // No edges into the source or out of the sink.
        for (u, v, _) in ea {
            assert_ne!(v, CutInstance::SOURCE);
            assert_ne!(u, CutInstance::SINK);
        }
    }
}
