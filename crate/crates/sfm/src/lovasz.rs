//! The Lovász extension: consistent permutations, extension values,
//! subgradients, and prefix-set rounding.
//!
//! Ties are broken the same way everywhere in this crate: coordinates are
//! ordered by value descending, then by coordinate index ascending. Every
//! structure that maintains an order over a fractional point (including
//! the incremental tree in [`crate::gradmaint`]) uses this rule, so their
//! permutations and subgradients agree exactly.

use crate::error::{Error, Result};
use crate::oracle::CountingOracle;

/// Validates that `x` is a point of the unit box.
pub fn check_box_point(x: &[f64]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::domain("point must have at least one coordinate"));
    }
    for (i, &v) in x.iter().enumerate() {
        if !(v.is_finite() && (0.0..=1.0).contains(&v)) {
            return Err(Error::domain(format!("coordinate {i} = {v} outside [0, 1]")));
        }
    }
    Ok(())
}

/// A permutation of the ground set together with its inverse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    order: Vec<usize>,
    pos: Vec<usize>,
}

impl Permutation {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        let mut pos = vec![usize::MAX; n];
        for (r, &i) in order.iter().enumerate() {
            if i >= n {
                return Err(Error::domain(format!("element {i} out of range for n = {n}")));
            }
            if pos[i] != usize::MAX {
                return Err(Error::domain(format!("element {i} appears twice")));
            }
            pos[i] = r;
        }
        Ok(Permutation { order, pos })
    }

    /// Sorts coordinates by `x` descending, index ascending.
    pub fn consistent_with(x: &[f64]) -> Result<Self> {
        check_box_point(x)?;
        let mut order: Vec<usize> = (0..x.len()).collect();
        order.sort_by(|&a, &b| x[b].partial_cmp(&x[a]).unwrap().then(a.cmp(&b)));
        Permutation::new(order)
    }

    pub fn n(&self) -> usize {
        self.order.len()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Rank of element `i`, 0-based.
    pub fn rank(&self, i: usize) -> usize {
        self.pos[i]
    }

    /// Checks the defining property: `x` is non-increasing along the order.
    pub fn is_consistent_with(&self, x: &[f64]) -> bool {
        self.order.windows(2).all(|w| x[w[0]] >= x[w[1]])
    }

    pub fn prefix(&self, k: usize) -> &[usize] {
        &self.order[..k]
    }

    pub(crate) fn pos_slice(&self) -> &[usize] {
        &self.pos
    }
}

/// A sparse vector: entries sorted by coordinate, without explicit zeros.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn zero() -> Self {
        SparseVector { entries: Vec::new() }
    }

    /// Sorts entries, drops zeros, and rejects duplicate coordinates.
    pub fn from_pairs(mut pairs: Vec<(usize, f64)>) -> Result<Self> {
        pairs.retain(|&(_, v)| v != 0.0);
        pairs.sort_unstable_by_key(|&(i, _)| i);
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::domain(format!("duplicate coordinate {}", w[0].0)));
            }
        }
        if pairs.iter().any(|&(_, v)| !v.is_finite()) {
            return Err(Error::domain("sparse vector entries must be finite"));
        }
        Ok(SparseVector { entries: pairs })
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn l1_norm(&self) -> f64 {
        self.entries.iter().map(|&(_, v)| v.abs()).sum()
    }

    pub fn get(&self, i: usize) -> f64 {
        match self.entries.binary_search_by_key(&i, |&(c, _)| c) {
            Ok(idx) => self.entries[idx].1,
            Err(_) => 0.0,
        }
    }

    /// Splits into the nonnegative and nonpositive parts; their sum is `self`.
    pub fn split_signs(&self) -> (SparseVector, SparseVector) {
        let pos = self.entries.iter().copied().filter(|&(_, v)| v > 0.0).collect();
        let neg = self.entries.iter().copied().filter(|&(_, v)| v < 0.0).collect();
        (SparseVector { entries: pos }, SparseVector { entries: neg })
    }

    /// Entrywise sum, merging by coordinate and dropping exact zeros.
    pub fn merge_add(&self, other: &SparseVector) -> SparseVector {
        let mut out = Vec::with_capacity(self.entries.len() + other.entries.len());
        let (mut a, mut b) = (0usize, 0usize);
        while a < self.entries.len() || b < other.entries.len() {
            let next = match (self.entries.get(a), other.entries.get(b)) {
                (Some(&(ca, va)), Some(&(cb, vb))) => {
                    if ca == cb {
                        a += 1;
                        b += 1;
                        (ca, va + vb)
                    } else if ca < cb {
                        a += 1;
                        (ca, va)
                    } else {
                        b += 1;
                        (cb, vb)
                    }
                }
                (Some(&(ca, va)), None) => {
                    a += 1;
                    (ca, va)
                }
                (None, Some(&(cb, vb))) => {
                    b += 1;
                    (cb, vb)
                }
                (None, None) => unreachable!(),
            };
            if next.1 != 0.0 {
                out.push(next);
            }
        }
        SparseVector { entries: out }
    }

    pub fn scaled(&self, c: f64) -> SparseVector {
        SparseVector {
            entries: self
                .entries
                .iter()
                .map(|&(i, v)| (i, v * c))
                .filter(|&(_, v)| v != 0.0)
                .collect(),
        }
    }

    pub fn to_dense(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for &(i, v) in &self.entries {
            out[i] = v;
        }
        out
    }

    pub fn from_dense(x: &[f64]) -> SparseVector {
        SparseVector {
            entries: x
                .iter()
                .enumerate()
                .filter(|&(_, &v)| v != 0.0)
                .map(|(i, &v)| (i, v))
                .collect(),
        }
    }
}

/// Value of the Lovász extension at `x`. Charges `n` oracle queries.
pub fn lovasz_value(oracle: &CountingOracle, x: &[f64]) -> Result<f64> {
    check_box_point(x)?;
    if x.len() != oracle.n() {
        return Err(Error::domain("point dimension does not match the instance"));
    }
    let perm = Permutation::consistent_with(x)?;
    let n = x.len();
    let mut value = 0.0;
    for k in 1..=n {
        let fk = oracle.evaluate_prefix_with_pos(perm.order(), perm.pos_slice(), k)?;
        let weight = if k < n {
            x[perm.order()[k - 1]] - x[perm.order()[k]]
        } else {
            x[perm.order()[n - 1]]
        };
        value += fk * weight;
    }
    Ok(value)
}

/// Dense Lovász subgradient at `x` under the crate-wide tie rule:
/// `g[P[k]] = f(P[1..k]) - f(P[1..k-1])`. Charges `n + 1` oracle queries.
pub fn full_subgradient(oracle: &CountingOracle, x: &[f64]) -> Result<Vec<f64>> {
    check_box_point(x)?;
    if x.len() != oracle.n() {
        return Err(Error::domain("point dimension does not match the instance"));
    }
    let perm = Permutation::consistent_with(x)?;
    subgradient_along(oracle, &perm)
}

/// Subgradient for any explicitly given consistent permutation.
pub fn subgradient_along(oracle: &CountingOracle, perm: &Permutation) -> Result<Vec<f64>> {
    if perm.n() != oracle.n() {
        return Err(Error::domain("permutation length does not match the instance"));
    }
    oracle.note_subgradient();
    let n = perm.n();
    let mut g = vec![0.0; n];
    let mut prev = oracle.evaluate_prefix_with_pos(perm.order(), perm.pos_slice(), 0)?;
    for k in 1..=n {
        let cur = oracle.evaluate_prefix_with_pos(perm.order(), perm.pos_slice(), k)?;
        g[perm.order()[k - 1]] = cur - prev;
        prev = cur;
    }
    Ok(g)
}

/// Scans all `n + 1` prefixes of the permutation consistent with `x` and
/// returns the minimizing one (smallest prefix on ties) with its value.
/// The returned set is sorted. Charges `n + 1` oracle queries.
pub fn best_prefix_set(oracle: &CountingOracle, x: &[f64]) -> Result<(Vec<usize>, f64)> {
    check_box_point(x)?;
    if x.len() != oracle.n() {
        return Err(Error::domain("point dimension does not match the instance"));
    }
    let perm = Permutation::consistent_with(x)?;
    let n = x.len();
    let mut best_k = 0usize;
    let mut best = oracle.evaluate_prefix_with_pos(perm.order(), perm.pos_slice(), 0)?;
    for k in 1..=n {
        let v = oracle.evaluate_prefix_with_pos(perm.order(), perm.pos_slice(), k)?;
        if v < best {
            best = v;
            best_k = k;
        }
    }
    let mut set: Vec<usize> = perm.prefix(best_k).to_vec();
    set.sort_unstable();
    Ok((set, best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{CountingOracle, Submodular, TableInstance};

    /// f({0}) = -1, f({1}) = 1, f({0,1}) = 0.
    fn two_element() -> TableInstance {
        TableInstance::new(2, vec![0.0, -1.0, 1.0, 0.0]).unwrap()
    }

    #[test]
    fn ties_break_by_coordinate_index() {
        let p = Permutation::consistent_with(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(p.order(), &[0, 1, 2]);
        let p = Permutation::consistent_with(&[0.3, 0.7, 0.3]).unwrap();
        assert_eq!(p.order(), &[1, 0, 2]);
    }

    #[test]
    fn extension_value_matches_hand_computation() {
        let inst = two_element();
        let oracle = CountingOracle::new(&inst);
        // x = (0.8, 0.3): P = (0, 1), value = f({0})(0.8-0.3) + f({0,1})*0.3 = -0.5.
        let v = lovasz_value(&oracle, &[0.8, 0.3]).unwrap();
        assert_eq!(v, -0.5);
        assert_eq!(oracle.eval_calls(), 2);
    }

    #[test]
    fn extension_agrees_with_f_on_vertices() {
        let inst = two_element();
        let oracle = CountingOracle::new(&inst);
        for mask in 0..4u32 {
            let x = [(mask & 1) as f64, (mask >> 1 & 1) as f64];
            let v = lovasz_value(&oracle, &x).unwrap();
            let f = inst.eval(&crate::oracle::MaskSet { n: 2, mask: mask as u64 });
            assert_eq!(v, f, "mask {mask}");
        }
    }

    #[test]
    fn subgradient_matches_hand_computation() {
        let inst = two_element();
        let oracle = CountingOracle::new(&inst);
        assert_eq!(full_subgradient(&oracle, &[0.8, 0.3]).unwrap(), vec![-1.0, 1.0]);
        // Indicator of element 1: order is (1, 0).
        assert_eq!(full_subgradient(&oracle, &[0.0, 1.0]).unwrap(), vec![-1.0, 1.0]);
        assert_eq!(oracle.eval_calls(), 6);
        assert_eq!(oracle.subgradient_calls(), 2);
    }

    #[test]
    fn subgradient_entries_sum_to_full_set_value() {
        let inst = crate::oracle::CutInstance::random(7, 0.5, 4, 9).unwrap();
        let oracle = CountingOracle::new(&inst);
        let x = [0.1, 0.9, 0.4, 0.4, 0.0, 1.0, 0.7];
        let g = full_subgradient(&oracle, &x).unwrap();
        let full = oracle.evaluate_set(&(0..7).collect::<Vec<_>>()).unwrap();
        assert!((g.iter().sum::<f64>() - full).abs() < 1e-12);
    }

    #[test]
    fn best_prefix_finds_the_minimizing_prefix() {
        let inst = two_element();
        let oracle = CountingOracle::new(&inst);
        let (set, value) = best_prefix_set(&oracle, &[0.8, 0.3]).unwrap();
        assert_eq!(set, vec![0]);
        assert_eq!(value, -1.0);
        // The all-zero point scans prefixes of the identity order and
        // still reaches the global minimizer here.
        let (set, value) = best_prefix_set(&oracle, &[0.0, 0.0]).unwrap();
        assert_eq!(set, vec![0]);
        assert_eq!(value, -1.0);
        // All prefixes tie at 0: the smallest one wins.
        let flat = TableInstance::new(2, vec![0.0, 0.0, 1.0, 0.0]).unwrap();
        let oracle = CountingOracle::new(&flat);
        let (set, value) = best_prefix_set(&oracle, &[0.0, 0.0]).unwrap();
        assert!(set.is_empty());
        assert_eq!(value, 0.0);
    }

    #[test]
    fn sparse_vector_basics() {
        let v = SparseVector::from_pairs(vec![(4, 1.5), (1, -2.0), (3, 0.0)]).unwrap();
        assert_eq!(v.nnz(), 2);
        assert_eq!(v.l1_norm(), 3.5);
        assert_eq!(v.get(1), -2.0);
        assert_eq!(v.get(3), 0.0);
        let (pos, neg) = v.split_signs();
        assert_eq!(pos.iter().collect::<Vec<_>>(), vec![(4, 1.5)]);
        assert_eq!(neg.iter().collect::<Vec<_>>(), vec![(1, -2.0)]);
        let w = SparseVector::from_pairs(vec![(1, 2.0), (2, 1.0)]).unwrap();
        let sum = v.merge_add(&w);
        assert_eq!(sum.iter().collect::<Vec<_>>(), vec![(2, 1.0), (4, 1.5)]);
        assert!(SparseVector::from_pairs(vec![(1, 1.0), (1, 2.0)]).is_err());
    }
}
