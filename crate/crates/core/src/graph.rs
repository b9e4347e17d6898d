//! The labelled multigraph of a PBF.
//!
//! Every monomial with running index `z` contributes an edge `(i, j, z)` for
//! each pair of its variables, so the multiplicity of `{i, j}` equals the
//! number of monomials containing `x_i x_j`. Reducing a pair only touches
//! edges labelled by monomials on that pair, which is what lets
//! [`MultiGraph::update_graph_data`] stay local.

use std::fmt;

use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::index::MultiplicityIndex;
use crate::pbf::{Pbf, TermId, VarId};

/// An unordered pair of distinct variables, stored as `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarPair {
    lo: VarId,
    hi: VarId,
}

impl VarPair {
    /// `None` for a self-pair (`x * x = x` needs no reduction).
    pub fn new(a: VarId, b: VarId) -> Option<Self> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Some(Self { lo: a, hi: b }),
            std::cmp::Ordering::Greater => Some(Self { lo: b, hi: a }),
            std::cmp::Ordering::Equal => None,
        }
    }

    pub fn of(a: u32, b: u32) -> Option<Self> {
        Self::new(VarId(a), VarId(b))
    }

    pub(crate) fn ordered(a: VarId, b: VarId) -> Self {
        Self::new(a, b).expect("pair of distinct variables")
    }

    pub fn lo(self) -> VarId {
        self.lo
    }

    pub fn hi(self) -> VarId {
        self.hi
    }

    pub fn contains(self, v: VarId) -> bool {
        self.lo == v || self.hi == v
    }
}

impl fmt::Display for VarPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}, {}}}", self.lo.0, self.hi.0)
    }
}

impl Serialize for VarPair {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.lo.0, self.hi.0].serialize(s)
    }
}

/// A labelled edge `(i, j, z)` with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub i: VarId,
    pub j: VarId,
    pub z: TermId,
}

impl Edge {
    pub fn new(a: VarId, b: VarId, z: TermId) -> Self {
        let p = VarPair::ordered(a, b);
        Self {
            i: p.lo,
            j: p.hi,
            z,
        }
    }

    pub fn pair(&self) -> VarPair {
        VarPair {
            lo: self.i,
            hi: self.j,
        }
    }
}

impl Serialize for Edge {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.i.0, self.j.0, self.z.0].serialize(s)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MultiGraph {
    adj: FxHashMap<VarPair, FxHashSet<TermId>>,
    edges: usize,
}

/// The edge changes of one pair replacement.
///
/// `removed` holds `(k, i, z)`, `(k, j, z)` for every other variable `k` of
/// each affected monomial `z`, plus the edges `(i, j, z)` themselves; `added`
/// holds the remapped `(k, h, z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphDelta {
    pub pair: VarPair,
    pub fresh: VarId,
    /// Labels on the reduced pair, ascending: the monomials to rewrite.
    pub labels: Vec<TermId>,
    /// Variables sharing an affected monomial with the pair, ascending.
    pub neighbours: Vec<VarId>,
    pub removed: Vec<Edge>,
    pub added: Vec<Edge>,
}

/// Builds the multigraph of `f`; monomials of degree below 2 add no edges.
pub fn build_graph(f: &Pbf) -> MultiGraph {
    let mut g = MultiGraph::default();
    for (z, m) in f.iter() {
        for pair in m.pairs() {
            g.adj.entry(pair).or_default().insert(z);
            g.edges += 1;
        }
    }
    g
}

impl MultiGraph {
    pub fn multiplicity(&self, pair: VarPair) -> usize {
        self.adj.get(&pair).map_or(0, FxHashSet::len)
    }

    pub fn labels(&self, pair: VarPair) -> Option<&FxHashSet<TermId>> {
        self.adj.get(&pair)
    }

    pub fn sorted_labels(&self, pair: VarPair) -> Vec<TermId> {
        let mut out: Vec<TermId> = self
            .adj
            .get(&pair)
            .map(|s| s.iter().copied().collect())
            .unwrap_or_default();
        out.sort_unstable();
        out
    }

    pub fn has_edge(&self, e: Edge) -> bool {
        self.adj.get(&e.pair()).is_some_and(|s| s.contains(&e.z))
    }

    pub fn insert_edge(&mut self, e: Edge) -> bool {
        let fresh = self.adj.entry(e.pair()).or_default().insert(e.z);
        if fresh {
            self.edges += 1;
        }
        fresh
    }

    pub fn remove_edge(&mut self, e: Edge) -> bool {
        let pair = e.pair();
        let Some(labels) = self.adj.get_mut(&pair) else {
            return false;
        };
        let hit = labels.remove(&e.z);
        if hit {
            self.edges -= 1;
            if labels.is_empty() {
                self.adj.remove(&pair);
            }
        }
        hit
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    /// Number of node pairs joined by at least one edge.
    pub fn pair_count(&self) -> usize {
        self.adj.len()
    }

    /// Connected pairs with their multiplicities, in arbitrary order.
    pub fn pairs(&self) -> impl Iterator<Item = (VarPair, usize)> + '_ {
        self.adj.iter().map(|(&p, s)| (p, s.len()))
    }

    pub fn edges_sorted(&self) -> Vec<Edge> {
        let mut out: Vec<Edge> = self
            .adj
            .iter()
            .flat_map(|(&p, s)| s.iter().map(move |&z| Edge::new(p.lo, p.hi, z)))
            .collect();
        out.sort_unstable();
        out
    }

    /// Edge list as a JSON array of `[i, j, z]`, lexicographically sorted.
    pub fn dump_json(&self) -> String {
        serde_json::to_string(&self.edges_sorted()).expect("edge lists always serialize")
    }

    /// Whether this graph is exactly the graph built from scratch for `f`.
    pub fn rebuild_equals(&self, f: &Pbf) -> bool {
        *self == build_graph(f)
    }

    /// Computes the edge changes of replacing `pair` by `fresh`. `f` must
    /// still hold the monomials as they were before the replacement.
    pub fn plan_update(&self, f: &Pbf, pair: VarPair, fresh: VarId) -> Result<GraphDelta> {
        let labels = self.sorted_labels(pair);
        if labels.len() < 2 {
            return Err(Error::MultiplicityTooLow(pair.lo, pair.hi, labels.len()));
        }
        let mut removed = Vec::new();
        let mut added = Vec::new();
        let mut neighbours = Vec::new();
        for &z in &labels {
            let m = f
                .get(z)
                .filter(|m| m.contains_pair(pair))
                .ok_or(Error::CorruptLabel(z, pair.lo, pair.hi))?;
            for &k in m.vars() {
                if pair.contains(k) || k == fresh {
                    continue;
                }
                neighbours.push(k);
                removed.push(Edge::new(k, pair.lo, z));
                removed.push(Edge::new(k, pair.hi, z));
                added.push(Edge::new(k, fresh, z));
            }
            removed.push(Edge::new(pair.lo, pair.hi, z));
        }
        neighbours.sort_unstable();
        neighbours.dedup();
        Ok(GraphDelta {
            pair,
            fresh,
            labels,
            neighbours,
            removed,
            added,
        })
    }

    /// Applies `delta` and re-buckets every touched pair in `index`.
    pub fn apply_delta(&mut self, delta: &GraphDelta, index: &mut MultiplicityIndex) -> Result<()> {
        for &e in &delta.removed {
            if !self.remove_edge(e) {
                return Err(Error::MissingEdge(e.i, e.j, e.z));
            }
        }
        for &e in &delta.added {
            self.insert_edge(e);
        }
        let mut touched = FxHashSet::default();
        for e in delta.removed.iter().chain(&delta.added) {
            let p = e.pair();
            if touched.insert(p) {
                index.set_multiplicity(p, self.multiplicity(p));
            }
        }
        Ok(())
    }

    /// Moves the graph and index past the replacement of `pair` by `fresh`.
    pub fn update_graph_data(
        &mut self,
        index: &mut MultiplicityIndex,
        f: &Pbf,
        pair: VarPair,
        fresh: VarId,
    ) -> Result<GraphDelta> {
        let delta = self.plan_update(f, pair, fresh)?;
        self.apply_delta(&delta, index)?;
        Ok(delta)
    }
}
