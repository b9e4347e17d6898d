//! The monomial-scan reference reducer.
//!
//! Each iteration searches the whole polynomial for the next pair and then
//! scans every monomial to replace it. There is no graph and no caching;
//! this cost profile is what the graph-based reducer is measured against.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::bench::Algorithm;
use crate::error::{Error, Result};
use crate::graph::VarPair;
use crate::lsr::check_deadline;
use crate::pbf::{push_penalty, Pbf, VarId};
use crate::result::{IterationLogEntry, ReductionResult, Substitution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionVariant {
    /// First pair of the lexicographically first highest-degree monomial.
    Sparse,
    /// Most frequent pair among the highest-degree monomials.
    Medium,
    /// Most frequent pair among all monomials.
    Dense,
}

impl SelectionVariant {
    pub const ALL: [SelectionVariant; 3] = [Self::Sparse, Self::Medium, Self::Dense];
}

impl fmt::Display for SelectionVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Sparse => "sparse",
            Self::Medium => "medium",
            Self::Dense => "dense",
        })
    }
}

impl FromStr for SelectionVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sparse" => Ok(Self::Sparse),
            "medium" => Ok(Self::Medium),
            "dense" => Ok(Self::Dense),
            other => Err(Error::InvalidArgument(format!("unknown variant {other:?}"))),
        }
    }
}

/// Picks the next pair to replace. Ties go to the lexicographically
/// smallest pair.
pub fn get_next_var_pair(f: &Pbf, variant: SelectionVariant) -> Result<VarPair> {
    let max_degree = f.degree();
    if max_degree <= 2 {
        return Err(Error::NothingToReduce(2));
    }
    match variant {
        SelectionVariant::Sparse => {
            let first = f
                .iter()
                .map(|(_, m)| m)
                .filter(|m| m.degree() == max_degree)
                .min_by(|a, b| a.vars().cmp(b.vars()))
                .expect("a monomial of maximal degree exists");
            Ok(VarPair::ordered(first.vars()[0], first.vars()[1]))
        }
        SelectionVariant::Medium => {
            let mut counts: FxHashMap<VarPair, usize> = FxHashMap::default();
            for (_, m) in f.iter().filter(|(_, m)| m.degree() == max_degree) {
                for p in m.pairs() {
                    *counts.entry(p).or_default() += 1;
                }
            }
            Ok(argmax(counts.into_iter()))
        }
        SelectionVariant::Dense => {
            // count over every monomial, but only pairs that still sit in a
            // monomial of degree > 2 are candidates
            let mut counts: FxHashMap<VarPair, (usize, bool)> = FxHashMap::default();
            for (_, m) in f.iter() {
                let high = m.degree() > 2;
                for p in m.pairs() {
                    let e = counts.entry(p).or_default();
                    e.0 += 1;
                    e.1 |= high;
                }
            }
            Ok(argmax(
                counts
                    .into_iter()
                    .filter(|(_, (_, high))| *high)
                    .map(|(p, (c, _))| (p, c)),
            ))
        }
    }
}

fn argmax(counts: impl Iterator<Item = (VarPair, usize)>) -> VarPair {
    counts
        .max_by(|(pa, ca), (pb, cb)| ca.cmp(cb).then_with(|| pb.cmp(pa)))
        .map(|(p, _)| p)
        .expect("some pair exists when the degree exceeds 2")
}

/// Replaces `pair` by `h` in every monomial containing it, scanning all of
/// `f`. Returns how many monomials changed.
pub fn replace_var_pair_scan(f: &mut Pbf, pair: VarPair, h: VarId) -> Result<usize> {
    let hits: Vec<_> = f
        .iter()
        .filter(|(_, m)| m.contains_pair(pair))
        .map(|(z, _)| z)
        .collect();
    for &z in &hits {
        f.replace_pair_in_term(z, pair, h)?;
    }
    Ok(hits.len())
}

pub fn quadratise_baseline(f: Pbf, variant: SelectionVariant) -> Result<ReductionResult> {
    quadratise_baseline_with(f, variant, None)
}

pub fn quadratise_baseline_with(
    f: Pbf,
    variant: SelectionVariant,
    deadline: Option<Instant>,
) -> Result<ReductionResult> {
    let name = Algorithm::Baseline(variant).to_string();
    quadratise_with_selector(f, &name, |f| get_next_var_pair(f, variant), deadline)
}

/// The iterative loop with a caller-supplied pair selection, e.g. a
/// scripted order.
pub fn quadratise_with_selector<S>(
    mut f: Pbf,
    algorithm: &str,
    mut select: S,
    deadline: Option<Instant>,
) -> Result<ReductionResult>
where
    S: FnMut(&Pbf) -> Result<VarPair>,
{
    let mut penalty = Pbf::new(f.n_original());
    let mut substitutions = Vec::new();
    let mut log = Vec::new();
    while f.degree() > 2 {
        check_deadline(deadline)?;
        let pair = select(&f)?;
        let h = f.next_var();
        let touched = replace_var_pair_scan(&mut f, pair, h)?;
        if touched == 0 {
            return Err(Error::PairNotPresent(pair.lo(), pair.hi()));
        }
        f.reserve_vars_below(VarId(h.0 + 1));
        push_penalty(&mut penalty, pair, h);
        substitutions.push(Substitution { fresh: h, pair });
        log.push(IterationLogEntry {
            stage: 1,
            pair,
            fresh: h,
            beta_selected: touched,
            touched_monomials: touched,
            multi_edge_mass: 0,
        });
    }
    penalty.reserve_vars_below(f.next_var());
    Ok(ReductionResult {
        algorithm: algorithm.to_string(),
        seed: None,
        n_original: f.n_original(),
        iterations_stage1: substitutions.len(),
        iterations_stage2: 0,
        reduced: f,
        penalty,
        substitutions,
        log,
        mass_trace: Vec::new(),
    })
}
