//! Pseudo-Boolean functions in multilinear form.
//!
//! A [`Pbf`] is a sum of [`Monomial`]s, each a coefficient times a product
//! of distinct binary variables. Every monomial carries a running index
//! ([`TermId`]) that is assigned once and never reused, so the index stays a
//! stable label while the monomial's variable set is rewritten during
//! reduction.

use std::collections::BTreeMap;
use std::fmt;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::combinatorics::binomial;
use crate::error::{Error, Result};
use crate::graph::VarPair;

/// A binary variable. Originals are numbered `1..=n`, auxiliaries follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VarId(pub u32);

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

/// Running index of a monomial inside one [`Pbf`]; starts at 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TermId(pub u32);

impl fmt::Display for TermId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    vars: Vec<VarId>,
    coeff: f64,
}

impl Monomial {
    /// Builds a monomial; variables are sorted, duplicates rejected.
    pub fn new<I: IntoIterator<Item = VarId>>(vars: I, coeff: f64) -> Result<Self> {
        if !coeff.is_finite() {
            return Err(Error::NonFiniteCoefficient(coeff));
        }
        if coeff == 0.0 {
            return Err(Error::ZeroCoefficient);
        }
        let mut vars: Vec<VarId> = vars.into_iter().collect();
        vars.sort_unstable();
        if let Some(w) = vars.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateVariable(w[0]));
        }
        Ok(Self { vars, coeff })
    }

    /// Shorthand for tests and examples: `Monomial::of(&[1, 2, 3], 2.0)`.
    pub fn of(vars: &[u32], coeff: f64) -> Result<Self> {
        Self::new(vars.iter().copied().map(VarId), coeff)
    }

    pub(crate) fn from_sorted(vars: Vec<VarId>, coeff: f64) -> Self {
        debug_assert!(vars.windows(2).all(|w| w[0] < w[1]));
        Self { vars, coeff }
    }

    pub fn vars(&self) -> &[VarId] {
        &self.vars
    }

    pub fn coeff(&self) -> f64 {
        self.coeff
    }

    pub fn degree(&self) -> usize {
        self.vars.len()
    }

    pub fn contains(&self, v: VarId) -> bool {
        self.vars.binary_search(&v).is_ok()
    }

    pub fn contains_pair(&self, pair: VarPair) -> bool {
        self.contains(pair.lo()) && self.contains(pair.hi())
    }

    /// All variable pairs of this monomial, lexicographically ordered.
    pub fn pairs(&self) -> impl Iterator<Item = VarPair> + '_ {
        self.vars.iter().enumerate().flat_map(move |(a, &va)| {
            self.vars[a + 1..]
                .iter()
                .map(move |&vb| VarPair::ordered(va, vb))
        })
    }
}

/// Values for binary variables.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    values: BTreeMap<VarId, bool>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    /// Variables `1..=n` taken from the low bits of `mask` (`x1` is bit 0).
    pub fn from_bits(n: u32, mask: u64) -> Self {
        (1..=n)
            .map(|v| (VarId(v), (mask >> (v - 1)) & 1 == 1))
            .collect()
    }

    /// Variables `1..=values.len()`, nonzero meaning true.
    pub fn from_values(values: &[u8]) -> Self {
        values
            .iter()
            .enumerate()
            .map(|(k, &b)| (VarId(k as u32 + 1), b != 0))
            .collect()
    }

    pub fn set(&mut self, v: VarId, value: bool) {
        self.values.insert(v, value);
    }

    pub fn get(&self, v: VarId) -> Option<bool> {
        self.values.get(&v).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl FromIterator<(VarId, bool)> for Assignment {
    fn from_iter<T: IntoIterator<Item = (VarId, bool)>>(iter: T) -> Self {
        Self {
            values: iter.into_iter().collect(),
        }
    }
}

/// A pseudo-Boolean function as a dictionary of running index to monomial.
///
/// Index sets are unique: adding a monomial whose variable set is already
/// present merges the coefficients, and a merged coefficient of zero drops
/// the term.
#[derive(Debug, Clone)]
pub struct Pbf {
    terms: Vec<Option<Monomial>>,
    index_of: FxHashMap<Vec<VarId>, TermId>,
    live: usize,
    n_original: u32,
    next_var: u32,
}

impl Pbf {
    /// An empty function over the original variables `1..=n`.
    pub fn new(n: u32) -> Self {
        Self {
            terms: Vec::new(),
            index_of: FxHashMap::default(),
            live: 0,
            n_original: n,
            next_var: n + 1,
        }
    }

    /// Builds a function from `(vars, coeff)` pairs, merging duplicates.
    pub fn from_terms<'a, I>(n: u32, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a [u32], f64)>,
    {
        let doc = PbfDoc {
            n,
            terms: terms
                .into_iter()
                .map(|(vars, coeff)| TermDoc {
                    vars: vars.to_vec(),
                    coeff,
                })
                .collect(),
        };
        Self::from_doc(doc)
    }

    pub fn n_original(&self) -> u32 {
        self.n_original
    }

    /// Number of variables in play (originals plus introduced auxiliaries).
    pub fn num_vars(&self) -> u32 {
        self.next_var - 1
    }

    /// Smallest variable id guaranteed not to occur in any term.
    pub fn next_var(&self) -> VarId {
        VarId(self.next_var)
    }

    pub(crate) fn reserve_vars_below(&mut self, v: VarId) {
        self.next_var = self.next_var.max(v.0);
    }

    /// Number of monomials, the constant term included.
    pub fn len(&self) -> usize {
        self.live
    }

    pub fn is_empty(&self) -> bool {
        self.live == 0
    }

    pub fn get(&self, z: TermId) -> Option<&Monomial> {
        self.terms.get(z.0 as usize - 1).and_then(Option::as_ref)
    }

    pub fn term_id(&self, vars: &[VarId]) -> Option<TermId> {
        self.index_of.get(vars).copied()
    }

    /// Monomials in running-index order.
    pub fn iter(&self) -> impl Iterator<Item = (TermId, &Monomial)> {
        self.terms
            .iter()
            .enumerate()
            .filter_map(|(k, m)| m.as_ref().map(|m| (TermId(k as u32 + 1), m)))
    }

    /// Monomials sorted lexicographically by variable set.
    pub fn canonical_terms(&self) -> Vec<&Monomial> {
        let mut out: Vec<&Monomial> = self.iter().map(|(_, m)| m).collect();
        out.sort_by(|a, b| a.vars.cmp(&b.vars));
        out
    }

    /// Adds `m`, merging with an existing monomial of the same index set.
    /// Returns the running index holding the term, or `None` if it cancelled.
    pub fn add_term(&mut self, m: Monomial) -> Option<TermId> {
        if let Some(&last) = m.vars.last() {
            self.next_var = self.next_var.max(last.0 + 1);
        }
        if let Some(&z) = self.index_of.get(&m.vars) {
            let slot = &mut self.terms[z.0 as usize - 1];
            let sum = slot.as_ref().map_or(0.0, |t| t.coeff) + m.coeff;
            if sum == 0.0 {
                self.remove_term(z);
                return None;
            }
            if let Some(t) = slot {
                t.coeff = sum;
            }
            return Some(z);
        }
        let z = TermId(self.terms.len() as u32 + 1);
        self.index_of.insert(m.vars.clone(), z);
        self.terms.push(Some(m));
        self.live += 1;
        Some(z)
    }

    pub fn remove_term(&mut self, z: TermId) -> Option<Monomial> {
        let m = self.terms.get_mut(z.0 as usize - 1)?.take()?;
        self.index_of.remove(&m.vars);
        self.live -= 1;
        Some(m)
    }

    /// Replaces the variable set of term `z`, keeping its coefficient and index.
    pub(crate) fn rewrite_vars(&mut self, z: TermId, vars: Vec<VarId>) -> Result<()> {
        debug_assert!(vars.windows(2).all(|w| w[0] < w[1]));
        if self.index_of.contains_key(&vars) {
            return Err(Error::Invariant(format!(
                "rewriting z{z} would duplicate an existing index set"
            )));
        }
        let slot = self
            .terms
            .get_mut(z.0 as usize - 1)
            .and_then(Option::as_mut)
            .ok_or_else(|| Error::Invariant(format!("no monomial with running index {z}")))?;
        self.index_of.remove(&slot.vars);
        if let Some(&last) = vars.last() {
            self.next_var = self.next_var.max(last.0 + 1);
        }
        self.index_of.insert(vars.clone(), z);
        slot.vars = vars;
        Ok(())
    }

    /// Substitutes `h` for the product of `pair` inside term `z`.
    pub fn replace_pair_in_term(&mut self, z: TermId, pair: VarPair, h: VarId) -> Result<()> {
        let m = self
            .get(z)
            .filter(|m| m.contains_pair(pair))
            .ok_or(Error::CorruptLabel(z, pair.lo(), pair.hi()))?;
        let mut vars: Vec<VarId> = m
            .vars
            .iter()
            .copied()
            .filter(|&v| v != pair.lo() && v != pair.hi())
            .collect();
        let at = vars.partition_point(|&v| v < h);
        vars.insert(at, h);
        self.rewrite_vars(z, vars)
    }

    pub fn degree(&self) -> usize {
        self.iter().map(|(_, m)| m.degree()).max().unwrap_or(0)
    }

    /// Number of monomials of degree exactly `k`.
    pub fn count_degree(&self, k: usize) -> usize {
        self.iter().filter(|(_, m)| m.degree() == k).count()
    }

    /// Degree-k density `t_k / C(n, k)`.
    pub fn density(&self, k: usize, n: u32) -> Result<f64> {
        if k == 0 || k > n as usize {
            return Err(Error::InvalidArgument(format!(
                "density needs 1 <= k <= n, got k={k}, n={n}"
            )));
        }
        let possible = binomial(u64::from(n), k as u64)
            .ok_or_else(|| Error::InvalidArgument(format!("C({n}, {k}) overflows")))?;
        Ok(self.count_degree(k) as f64 / possible as f64)
    }

    pub fn evaluate(&self, a: &Assignment) -> Result<f64> {
        let mut total = 0.0;
        for (_, m) in self.iter() {
            let mut on = true;
            for &v in &m.vars {
                match a.get(v) {
                    Some(true) => {}
                    Some(false) => on = false,
                    None => return Err(Error::MissingVariable(v)),
                }
            }
            if on {
                total += m.coeff;
            }
        }
        Ok(total)
    }

    /// Sum of the positive coefficients, or 1 when there are none.
    pub fn scale_heuristic(&self) -> f64 {
        let s: f64 = self
            .iter()
            .map(|(_, m)| m.coeff)
            .filter(|&c| c > 0.0)
            .sum();
        if s > 0.0 {
            s
        } else {
            1.0
        }
    }

    pub fn to_doc(&self) -> PbfDoc {
        PbfDoc {
            n: self.num_vars(),
            terms: self
                .canonical_terms()
                .into_iter()
                .map(|m| TermDoc {
                    vars: m.vars.iter().map(|v| v.0).collect(),
                    coeff: m.coeff,
                })
                .collect(),
        }
    }

    pub fn from_doc(doc: PbfDoc) -> Result<Self> {
        let mut merged: Vec<(Vec<VarId>, f64)> = Vec::with_capacity(doc.terms.len());
        let mut position: FxHashMap<Vec<VarId>, usize> = FxHashMap::default();
        for t in doc.terms {
            if !t.coeff.is_finite() {
                return Err(Error::NonFiniteCoefficient(t.coeff));
            }
            if let Some(&bad) = t.vars.iter().find(|&&v| v == 0 || v > doc.n) {
                return Err(Error::VariableOutOfRange { var: bad, n: doc.n });
            }
            let mut vars: Vec<VarId> = t.vars.into_iter().map(VarId).collect();
            vars.sort_unstable();
            if let Some(w) = vars.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::DuplicateVariable(w[0]));
            }
            match position.get(&vars) {
                Some(&k) => merged[k].1 += t.coeff,
                None => {
                    position.insert(vars.clone(), merged.len());
                    merged.push((vars, t.coeff));
                }
            }
        }
        let mut f = Pbf::new(doc.n);
        for (vars, coeff) in merged {
            if !coeff.is_finite() {
                return Err(Error::NonFiniteCoefficient(coeff));
            }
            if coeff != 0.0 {
                f.add_term(Monomial::from_sorted(vars, coeff));
            }
        }
        Ok(f)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_doc(serde_json::from_str(text)?)
    }

    /// Canonical JSON: terms sorted by variable set, variables ascending.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_doc()).expect("PBF documents always serialize")
    }
}

/// Equality of the represented polynomial; running indices are ignored.
impl PartialEq for Pbf {
    fn eq(&self, other: &Self) -> bool {
        self.n_original == other.n_original
            && self.next_var == other.next_var
            && self.live == other.live
            && self.iter().all(|(_, m)| {
                other
                    .term_id(&m.vars)
                    .and_then(|z| other.get(z))
                    .is_some_and(|o| o.coeff == m.coeff)
            })
    }
}

impl Serialize for Pbf {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_doc().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Pbf {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = PbfDoc::deserialize(d)?;
        Pbf::from_doc(doc).map_err(serde::de::Error::custom)
    }
}

/// Wire form: `{"n": <int>, "terms": [{"vars": [...], "coeff": <number>}, ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PbfDoc {
    pub n: u32,
    pub terms: Vec<TermDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermDoc {
    pub vars: Vec<u32>,
    pub coeff: f64,
}

/// The substitution gadget `3y + x_i x_j - 2 x_i y - 2 x_j y`, zero exactly
/// when `y = x_i x_j`.
pub fn penalty_term(i: VarId, j: VarId, h: VarId) -> Result<Pbf> {
    if i == j {
        return Err(Error::InvalidArgument(format!(
            "penalty pair needs two distinct variables, got {i} twice"
        )));
    }
    if h == i || h == j {
        return Err(Error::InvalidArgument(format!(
            "auxiliary {h} must differ from {i} and {j}"
        )));
    }
    let pair = VarPair::ordered(i, j);
    let mut p = Pbf::new(i.0.max(j.0).max(h.0));
    push_penalty(&mut p, pair, h);
    Ok(p)
}

/// Appends the penalty gadget for `h = lo * hi` to `p`.
pub(crate) fn push_penalty(p: &mut Pbf, pair: VarPair, h: VarId) {
    let (i, j) = (pair.lo(), pair.hi());
    let sorted = |a: VarId, b: VarId| if a < b { vec![a, b] } else { vec![b, a] };
    p.add_term(Monomial::from_sorted(vec![h], 3.0));
    p.add_term(Monomial::from_sorted(vec![i, j], 1.0));
    p.add_term(Monomial::from_sorted(sorted(i, h), -2.0));
    p.add_term(Monomial::from_sorted(sorted(j, h), -2.0));
}
