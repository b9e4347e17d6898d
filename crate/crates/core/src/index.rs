//! Sorted multiplicity index: multiplicity value to the set of node pairs
//! carrying it. Pairs with multiplicity 0 or 1 are never stored.

use std::collections::BTreeMap;

use rand::Rng;
use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::graph::{MultiGraph, VarPair};

#[derive(Debug, Clone, Default)]
pub struct MultiplicityIndex {
    buckets: BTreeMap<usize, Vec<VarPair>>,
    /// pair -> (multiplicity, position inside its bucket)
    slot: FxHashMap<VarPair, (usize, usize)>,
    mass: usize,
}

/// Indexes every pair of `g` with multiplicity at least 2.
pub fn build_index(g: &MultiGraph) -> MultiplicityIndex {
    let mut pairs: Vec<(VarPair, usize)> = g.pairs().filter(|&(_, b)| b >= 2).collect();
    pairs.sort_unstable();
    let mut idx = MultiplicityIndex::default();
    for (p, b) in pairs {
        idx.set_multiplicity(p, b);
    }
    idx
}

/// 1-based rank `ceil(q * len)` into the sorted multiplicities, with `q = 0`
/// clamped to the smallest one.
pub fn percentile_rank(q: f64, len: usize) -> Result<usize> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidArgument(format!("percentile {q} outside [0, 1]")));
    }
    if len == 0 {
        return Err(Error::EmptyIndex);
    }
    // 0.8 * 5 evaluates to 4.000000000000001; absorb that before the ceiling
    let raw = (q * len as f64 - 1e-9).ceil();
    Ok((raw.max(1.0) as usize).min(len))
}

impl MultiplicityIndex {
    /// Moves `pair` to the bucket for `beta`, dropping it when `beta < 2`.
    pub fn set_multiplicity(&mut self, pair: VarPair, beta: usize) {
        if let Some(&(old, pos)) = self.slot.get(&pair) {
            if old == beta {
                return;
            }
            let bucket = self.buckets.get_mut(&old).expect("slot points at a bucket");
            bucket.swap_remove(pos);
            if let Some(&moved) = bucket.get(pos) {
                self.slot.insert(moved, (old, pos));
            }
            if bucket.is_empty() {
                self.buckets.remove(&old);
            }
            self.slot.remove(&pair);
            self.mass -= old;
        }
        if beta >= 2 {
            let bucket = self.buckets.entry(beta).or_default();
            self.slot.insert(pair, (beta, bucket.len()));
            bucket.push(pair);
            self.mass += beta;
        }
    }

    /// Stored multiplicity of `pair`; `None` means 0 or 1.
    pub fn multiplicity(&self, pair: VarPair) -> Option<usize> {
        self.slot.get(&pair).map(|&(b, _)| b)
    }

    /// The distinct stored multiplicities, ascending.
    pub fn multiplicities(&self) -> impl Iterator<Item = usize> + '_ {
        self.buckets.keys().copied()
    }

    pub fn bucket(&self, beta: usize) -> &[VarPair] {
        self.buckets.get(&beta).map_or(&[], Vec::as_slice)
    }

    /// Number of stored pairs.
    pub fn len(&self) -> usize {
        self.slot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slot.is_empty()
    }

    /// Sum of multiplicities over stored pairs (the multi-edge mass).
    pub fn mass(&self) -> usize {
        self.mass
    }

    /// Multiplicity at percentile `q` of the sorted distinct multiplicities.
    pub fn percentile_multiplicity(&self, q: f64) -> Result<usize> {
        let rank = percentile_rank(q, self.buckets.len())?;
        Ok(*self.buckets.keys().nth(rank - 1).expect("rank within bounds"))
    }

    /// A uniformly random pair from the bucket at percentile `q`.
    pub fn select_pair<R: Rng + ?Sized>(&self, q: f64, rng: &mut R) -> Result<(VarPair, usize)> {
        let beta = self.percentile_multiplicity(q)?;
        let bucket = &self.buckets[&beta];
        Ok((bucket[rng.random_range(0..bucket.len())], beta))
    }

    /// Buckets as sorted pair lists, for comparison and display.
    pub fn to_sorted(&self) -> BTreeMap<usize, Vec<VarPair>> {
        self.buckets
            .iter()
            .map(|(&b, pairs)| {
                let mut pairs = pairs.clone();
                pairs.sort_unstable();
                (b, pairs)
            })
            .collect()
    }

    /// Same pairs under the same multiplicities, ignoring bucket order.
    pub fn same_contents(&self, other: &Self) -> bool {
        self.mass == other.mass
            && self.slot.len() == other.slot.len()
            && self
                .slot
                .iter()
                .all(|(p, &(b, _))| other.multiplicity(*p) == Some(b))
    }
}
