//! Brute-force verification of reductions on small instances.
//!
//! Nothing here reuses reducer internals: quadratisation is checked by
//! enumerating every assignment of the original and auxiliary variables,
//! and graph maintenance is checked against from-scratch rebuilds.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::combinatorics::binomial;
use crate::error::{Error, Result};
use crate::graph::{build_graph, Edge, GraphDelta, VarPair};
use crate::index::build_index;
use crate::lsr::{LsrConfig, LsrRun};
use crate::pbf::{penalty_term, Assignment, Pbf, VarId};
use crate::result::ReductionResult;

/// Absolute tolerance for comparing function values.
pub const TOLERANCE: f64 = 1e-9;

/// Default cap on `n + I_f` for exhaustive checks.
pub const DEFAULT_MAX_BITS: usize = 22;

/// Default cap on monomials for per-step graph rebuilds.
pub const DEFAULT_GRAPH_CHECK_MONOMIALS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// Values of `x_1..x_n` and of the auxiliaries in introduction order.
    Assignment { x: Vec<u8>, y: Vec<u8> },
    Step {
        iteration: usize,
        pair: VarPair,
        edge: Option<Edge>,
    },
    Bounds {
        introduced: usize,
        lower: usize,
        upper: usize,
    },
    Multiplicity {
        pair: VarPair,
        multiplicity: usize,
        bound: u128,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl Check {
    pub fn pass(name: &str, detail: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            passed: true,
            detail: detail.into(),
            witness: None,
        }
    }

    pub fn fail(name: &str, detail: impl Into<String>, witness: Witness) -> Self {
        Self {
            name: name.to_string(),
            passed: false,
            detail: detail.into(),
            witness: Some(witness),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub instance_id: String,
    pub checks: Vec<Check>,
    pub passed: usize,
    pub failed: usize,
}

impl VerificationReport {
    pub fn new(instance_id: impl Into<String>) -> Self {
        Self {
            instance_id: instance_id.into(),
            checks: Vec::new(),
            passed: 0,
            failed: 0,
        }
    }

    pub fn push(&mut self, check: Check) {
        if check.passed {
            self.passed += 1;
        } else {
            self.failed += 1;
        }
        self.checks.push(check);
    }

    pub fn extend(&mut self, other: VerificationReport) {
        for c in other.checks {
            self.push(c);
        }
    }

    pub fn ok(&self) -> bool {
        self.failed == 0
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }
}

/// A penalty weight that provably keeps every minimiser consistent:
/// `1 + sum |alpha|` over the non-constant monomials of `f`.
///
/// For nonnegative `f` this equals `scale_heuristic(f) + 1`. With negative
/// coefficients the positive-sum heuristic alone can be too small.
pub fn oracle_penalty_scale(f: &Pbf) -> f64 {
    1.0 + f
        .iter()
        .filter(|(_, m)| m.degree() > 0)
        .map(|(_, m)| m.coeff().abs())
        .sum::<f64>()
}

/// Monomials as bitmasks over bit positions `v - 1`.
struct MaskedPoly {
    terms: Vec<(u64, f64)>,
    /// bit -> indices into `terms` containing it
    by_bit: Vec<Vec<usize>>,
}

impl MaskedPoly {
    fn new(bits: usize) -> Self {
        Self {
            terms: Vec::new(),
            by_bit: vec![Vec::new(); bits],
        }
    }

    fn add(&mut self, f: &Pbf, scale: f64) -> Result<()> {
        for (_, m) in f.iter() {
            let mut mask = 0u64;
            for v in m.vars() {
                let bit = v.0 as usize - 1;
                if bit >= self.by_bit.len() {
                    return Err(Error::Invariant(format!(
                        "{v} lies outside the {} verified bits",
                        self.by_bit.len()
                    )));
                }
                mask |= 1 << bit;
            }
            let k = self.terms.len();
            self.terms.push((mask, m.coeff() * scale));
            for bit in 0..self.by_bit.len() {
                if mask >> bit & 1 == 1 {
                    self.by_bit[bit].push(k);
                }
            }
        }
        Ok(())
    }

    fn eval(&self, state: u64) -> f64 {
        self.terms
            .iter()
            .filter(|(mask, _)| state & mask == *mask)
            .map(|(_, c)| c)
            .sum()
    }

    /// Value change from flipping `bit` in `state`.
    fn flip_delta(&self, state: u64, bit: usize) -> f64 {
        let on = state >> bit & 1 == 0;
        let sign = if on { 1.0 } else { -1.0 };
        let after = state ^ (1 << bit);
        let mut delta = 0.0;
        for &k in &self.by_bit[bit] {
            let (mask, c) = self.terms[k];
            let full = if on { after } else { state };
            if full & mask == mask {
                delta += sign * c;
            }
        }
        delta
    }
}

struct Bits {
    n: usize,
    aux: usize,
}

impl Bits {
    fn witness(&self, state: u64) -> Witness {
        let bit = |b: usize| (state >> b & 1) as u8;
        Witness::Assignment {
            x: (0..self.n).map(bit).collect(),
            y: (self.n..self.n + self.aux).map(bit).collect(),
        }
    }
}

/// Auxiliary values implied by `x` through the substitution chain.
fn consistent_state(result: &ReductionResult, x: u64) -> u64 {
    let mut state = x;
    for s in &result.substitutions {
        let lo = state >> (s.pair.lo().0 - 1) & 1;
        let hi = state >> (s.pair.hi().0 - 1) & 1;
        state |= (lo & hi) << (s.fresh.0 - 1);
    }
    state
}

fn aux_layout(original: &Pbf, result: &ReductionResult) -> Result<Bits> {
    let n = original.n_original() as usize;
    let aux = result.introduced();
    let expected: Vec<u32> = (n as u32 + 1..=(n + aux) as u32).collect();
    let got: Vec<u32> = result.substitutions.iter().map(|s| s.fresh.0).collect();
    if got != expected {
        return Err(Error::Invariant(format!(
            "auxiliaries {got:?} are not numbered {}..={}",
            n + 1,
            n + aux
        )));
    }
    Ok(Bits { n, aux })
}

/// Exhaustively checks `original(x) = min_y (reduced + c * penalty)(x, y)`
/// for every `x`, and that every minimiser sets each auxiliary to the
/// product it stands for.
pub fn check_quadratisation(
    original: &Pbf,
    result: &ReductionResult,
    c: f64,
    max_bits: usize,
) -> Result<VerificationReport> {
    let bits = aux_layout(original, result)?;
    let total = bits.n + bits.aux;
    if total > max_bits.min(63) {
        return Err(Error::BitCapExceeded {
            needed: total,
            cap: max_bits,
        });
    }
    let mut target = MaskedPoly::new(bits.n);
    target.add(original, 1.0)?;
    let mut reduced = MaskedPoly::new(total);
    reduced.add(&result.reduced, 1.0)?;
    reduced.add(&result.penalty, c)?;

    let mut report = VerificationReport::new(instance_id(result));
    let mut value_failure: Option<(String, Witness)> = None;
    let mut consistency_failure: Option<(String, Witness)> = None;

    for x in 0..1u64 << bits.n {
        let want = target.eval(x);
        let cons = consistent_state(result, x);
        let mut state = x;
        let mut val = reduced.eval(state);
        let mut best = (f64::INFINITY, state);
        let mut best_inconsistent = (f64::INFINITY, state);
        for step in 0..1u64 << bits.aux {
            if step > 0 {
                let bit = bits.n + step.trailing_zeros() as usize;
                val += reduced.flip_delta(state, bit);
                state ^= 1 << bit;
            }
            if val < best.0 {
                best = (val, state);
            }
            if state != cons && val < best_inconsistent.0 {
                best_inconsistent = (val, state);
            }
        }
        // the walk accumulates rounding; re-sum the candidates directly
        best.0 = reduced.eval(best.1);
        let at_consistent = reduced.eval(cons);
        if bits.aux > 0 {
            best_inconsistent.0 = reduced.eval(best_inconsistent.1);
        }
        if at_consistent < best.0 {
            best = (at_consistent, cons);
        }
        if best_inconsistent.0 < best.0 {
            best = best_inconsistent;
        }
        if value_failure.is_none() && (best.0 - want).abs() > TOLERANCE {
            value_failure = Some((
                format!("min over auxiliaries is {} but f(x) = {want}", best.0),
                bits.witness(best.1),
            ));
        }
        if consistency_failure.is_none() {
            if (at_consistent - want).abs() > TOLERANCE {
                consistency_failure = Some((
                    format!("consistent auxiliaries give {at_consistent}, f(x) = {want}"),
                    bits.witness(cons),
                ));
            } else if best_inconsistent.0 <= best.0 + TOLERANCE {
                consistency_failure = Some((
                    format!(
                        "inconsistent auxiliaries reach the minimum ({} vs {})",
                        best_inconsistent.0, best.0
                    ),
                    bits.witness(best_inconsistent.1),
                ));
            }
        }
        if value_failure.is_some() && consistency_failure.is_some() {
            break;
        }
    }

    let scope = format!("{} x-assignments, {} auxiliaries, c = {c}", 1u64 << bits.n, bits.aux);
    report.push(match value_failure {
        None => Check::pass("min_equals_original", scope.clone()),
        Some((d, w)) => Check::fail("min_equals_original", d, w),
    });
    report.push(match consistency_failure {
        None => Check::pass("minimiser_consistent", scope),
        Some((d, w)) => Check::fail("minimiser_consistent", d, w),
    });
    Ok(report)
}

/// Opt-in sampled variant for instances above the exhaustive cap: random
/// `x`, and for each either every auxiliary assignment (when at most
/// `max_aux_bits`) or the consistent one, all its single-bit flips and
/// `samples` random ones.
pub fn check_quadratisation_sampled(
    original: &Pbf,
    result: &ReductionResult,
    c: f64,
    samples: usize,
    max_aux_bits: usize,
    seed: u64,
) -> Result<VerificationReport> {
    let bits = aux_layout(original, result)?;
    let total = bits.n + bits.aux;
    if total > 63 {
        return Err(Error::BitCapExceeded {
            needed: total,
            cap: 63,
        });
    }
    let mut target = MaskedPoly::new(bits.n);
    target.add(original, 1.0)?;
    let mut reduced = MaskedPoly::new(total);
    reduced.add(&result.reduced, 1.0)?;
    reduced.add(&result.penalty, c)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x_mask = (1u64 << bits.n) - 1;
    let y_mask = ((1u64 << total) - 1) & !x_mask;

    let mut report = VerificationReport::new(instance_id(result));
    let mut value_failure = None;
    let mut consistency_failure = None;
    for _ in 0..samples {
        let x = rng.random::<u64>() & x_mask;
        let want = target.eval(x);
        let cons = consistent_state(result, x);
        let at_cons = reduced.eval(cons);
        if value_failure.is_none() && (at_cons - want).abs() > TOLERANCE {
            value_failure = Some((
                format!("consistent auxiliaries give {at_cons}, f(x) = {want}"),
                bits.witness(cons),
            ));
        }
        let mut candidates: Vec<u64> = Vec::new();
        if bits.aux <= max_aux_bits {
            candidates.extend((0..1u64 << bits.aux).map(|y| x | y << bits.n));
        } else {
            candidates.extend((bits.n..total).map(|b| cons ^ (1 << b)));
            candidates.extend((0..samples).map(|_| x | (rng.random::<u64>() & y_mask)));
        }
        for s in candidates {
            if s == cons {
                continue;
            }
            let v = reduced.eval(s);
            if consistency_failure.is_none() && v <= want + TOLERANCE {
                consistency_failure = Some((
                    format!("inconsistent auxiliaries give {v} <= f(x) = {want}"),
                    bits.witness(s),
                ));
            }
        }
    }
    let scope = format!("sampled: {samples} x-assignments, {} auxiliaries, c = {c}", bits.aux);
    report.push(match value_failure {
        None => Check::pass("min_equals_original", scope.clone()),
        Some((d, w)) => Check::fail("min_equals_original", d, w),
    });
    report.push(match consistency_failure {
        None => Check::pass("minimiser_consistent", scope),
        Some((d, w)) => Check::fail("minimiser_consistent", d, w),
    });
    Ok(report)
}

fn instance_id(result: &ReductionResult) -> String {
    match result.seed {
        Some(s) => format!("{}/seed={s}", result.algorithm),
        None => result.algorithm.clone(),
    }
}

/// Enumerates the 8 assignments of the penalty gadget: 0 when `y = x_i x_j`,
/// 1 or 3 otherwise.
pub fn check_penalty_property() -> VerificationReport {
    let p = penalty_term(VarId(1), VarId(2), VarId(3)).expect("valid gadget");
    let mut report = VerificationReport::new("penalty-gadget");
    for mask in 0..8u64 {
        let a = Assignment::from_bits(3, mask);
        let (xi, xj, y) = (mask & 1, mask >> 1 & 1, mask >> 2 & 1);
        let v = p.evaluate(&a).expect("all three variables assigned");
        let consistent = xi * xj == y;
        let ok = if consistent { v == 0.0 } else { v == 1.0 || v == 3.0 };
        let name = format!("p({xi},{xj},{y})");
        let detail = format!("value {v}, {}", if consistent { "consistent" } else { "inconsistent" });
        report.push(if ok {
            Check::pass(&name, detail)
        } else {
            Check::fail(
                &name,
                detail,
                Witness::Assignment {
                    x: vec![xi as u8, xj as u8],
                    y: vec![y as u8],
                },
            )
        });
    }
    report
}

/// `[max |m| - 2, sum (|m| - 2)]` over monomials of degree at least 2.
pub fn variable_bounds(f: &Pbf) -> (usize, usize) {
    let degrees = f.iter().map(|(_, m)| m.degree()).filter(|&d| d >= 2);
    let (mut lower, mut upper) = (0, 0);
    for d in degrees {
        lower = lower.max(d - 2);
        upper += d - 2;
    }
    (lower, upper)
}

pub fn check_variable_bounds(original: &Pbf, result: &ReductionResult) -> VerificationReport {
    let (lower, upper) = variable_bounds(original);
    let introduced = result.introduced();
    let mut report = VerificationReport::new(instance_id(result));
    let detail = format!("I_f = {introduced} within [{lower}, {upper}]");
    report.push(if (lower..=upper).contains(&introduced) {
        Check::pass("introduced_within_bounds", detail)
    } else {
        Check::fail(
            "introduced_within_bounds",
            detail,
            Witness::Bounds {
                introduced,
                lower,
                upper,
            },
        )
    });
    report
}

/// Every multiplicity is at most `sum_{k=0}^{deg-2} C(n-2, k)`.
pub fn check_multiplicity_bound(f: &Pbf) -> Check {
    let g = build_graph(f);
    let n = u64::from(f.num_vars());
    let deg = f.degree() as u64;
    let bound: u128 = if n < 2 || deg < 2 {
        0
    } else {
        (0..=deg - 2)
            .map(|k| binomial(n - 2, k).unwrap_or(u128::MAX))
            .fold(0u128, u128::saturating_add)
    };
    let worst = g.pairs().max_by_key(|&(p, b)| (b, std::cmp::Reverse(p)));
    match worst {
        Some((pair, b)) if b as u128 > bound => Check::fail(
            "multiplicity_bound",
            format!("multiplicity {b} exceeds {bound}"),
            Witness::Multiplicity {
                pair,
                multiplicity: b,
                bound,
            },
        ),
        _ => Check::pass("multiplicity_bound", format!("all multiplicities <= {bound}")),
    }
}

/// Whether the multi-edge mass strictly decreases across stage 1.
pub fn check_mass_trace(result: &ReductionResult) -> Check {
    let trace = &result.mass_trace;
    match trace.windows(2).position(|w| w[1] >= w[0]) {
        None => Check::pass("multi_edge_mass_decreasing", format!("{} values", trace.len())),
        Some(k) => {
            let entry = result.log[k];
            Check::fail(
                "multi_edge_mass_decreasing",
                format!("mass {} -> {} at step {k}", trace[k], trace[k + 1]),
                Witness::Step {
                    iteration: k,
                    pair: entry.pair,
                    edge: None,
                },
            )
        }
    }
}

pub fn check_incremental_graph(f: &Pbf, q: f64, seed: u64) -> Result<VerificationReport> {
    check_incremental_graph_with(f, q, seed, DEFAULT_GRAPH_CHECK_MONOMIALS, |_, _| {})
}

#[derive(Default)]
struct FirstFailure(Option<(String, Witness)>);

impl FirstFailure {
    fn record(&mut self, detail: impl FnOnce() -> String, witness: impl FnOnce() -> Witness) {
        if self.0.is_none() {
            self.0 = Some((detail(), witness()));
        }
    }

    fn into_check(self, name: &str, ok_detail: &str) -> Check {
        match self.0 {
            None => Check::pass(name, ok_detail),
            Some((d, w)) => Check::fail(name, d, w),
        }
    }
}

/// Runs stage 1 of LSR and compares the incrementally maintained graph and
/// index with from-scratch rebuilds after every step. `tamper` can alter the
/// planned edge delta of step `k` before it is applied.
pub fn check_incremental_graph_with(
    f: &Pbf,
    q: f64,
    seed: u64,
    max_monomials: usize,
    mut tamper: impl FnMut(usize, &mut GraphDelta),
) -> Result<VerificationReport> {
    if f.len() > max_monomials {
        return Err(Error::InvalidArgument(format!(
            "{} monomials exceed the per-step rebuild cap of {max_monomials}",
            f.len()
        )));
    }
    let mut report = VerificationReport::new(format!("lsr-q{q}/seed={seed}/graph"));
    report.push(check_multiplicity_bound(f));
    let mut run = LsrRun::new(f.clone(), &LsrConfig::new(q, seed))?;
    report.push(if run.graph().rebuild_equals(run.pbf()) && run.index().same_contents(&build_index(run.graph())) {
        Check::pass("initial_build", "graph and index match the polynomial")
    } else {
        Check::fail(
            "initial_build",
            "initial graph differs from rebuild",
            Witness::Step {
                iteration: 0,
                pair: VarPair::of(1, 2).expect("distinct"),
                edge: None,
            },
        )
    });

    let mut thm1 = FirstFailure::default();
    let mut thm2 = FirstFailure::default();
    let mut rebuild = FirstFailure::default();
    let mut index = FirstFailure::default();
    let mut far_edges = FirstFailure::default();
    let mut one_sided = FirstFailure::default();
    let mut mass = FirstFailure::default();
    let mut applies = FirstFailure::default();
    let mut steps = 0usize;

    while !run.stage1_done() {
        let (pair, beta) = run.select()?;
        let step_witness = |edge| Witness::Step {
            iteration: steps,
            pair,
            edge,
        };
        let before_f = run.pbf();
        let before_g = run.graph();
        let labels = before_g.sorted_labels(pair);

        if beta < 2
            || !labels
                .iter()
                .any(|&z| before_f.get(z).is_some_and(|m| m.degree() > 2))
        {
            thm1.record(
                || format!("pair {pair} with multiplicity {beta} has no monomial above degree 2"),
                || step_witness(None),
            );
        }
        let containing: Vec<_> = before_f
            .iter()
            .filter(|(_, m)| m.contains_pair(pair))
            .map(|(z, _)| z)
            .collect();
        if containing != labels {
            thm2.record(
                || format!("monomials with {pair}: {containing:?}, labels: {labels:?}"),
                || step_witness(None),
            );
        }

        let edges_before = before_g.edges_sorted();
        let mut adjacent: [BTreeSet<VarId>; 2] = Default::default();
        for e in &edges_before {
            for (side, end) in [pair.lo(), pair.hi()].into_iter().enumerate() {
                if e.i == end {
                    adjacent[side].insert(e.j);
                } else if e.j == end {
                    adjacent[side].insert(e.i);
                }
            }
        }
        let one_sided_nodes: BTreeSet<VarId> = adjacent[0]
            .symmetric_difference(&adjacent[1])
            .copied()
            .filter(|&v| !pair.contains(v))
            .collect();
        let mass_before = run.multi_edge_mass();

        let k = steps;
        if let Err(e) = run.apply_pair_with(pair, beta, |d| tamper(k, d)) {
            applies.record(|| format!("step failed: {e}"), || step_witness(None));
            break;
        }
        steps += 1;

        let g = run.graph();
        if !g.rebuild_equals(run.pbf()) {
            let fresh = build_graph(run.pbf());
            let have: BTreeSet<Edge> = g.edges_sorted().into_iter().collect();
            let want: BTreeSet<Edge> = fresh.edges_sorted().into_iter().collect();
            let diff = have.symmetric_difference(&want).next().copied();
            rebuild.record(
                || format!("graph after step {k} differs from rebuild"),
                || Witness::Step {
                    iteration: k,
                    pair,
                    edge: diff,
                },
            );
        }
        if !run.index().same_contents(&build_index(g)) {
            index.record(
                || format!("index after step {k} differs from rebuild"),
                || Witness::Step {
                    iteration: k,
                    pair,
                    edge: None,
                },
            );
        }
        for e in &edges_before {
            let touches_pair = pair.contains(e.i) || pair.contains(e.j);
            if !touches_pair && !g.has_edge(*e) {
                far_edges.record(
                    || format!("edge away from {pair} vanished"),
                    || Witness::Step {
                        iteration: k,
                        pair,
                        edge: Some(*e),
                    },
                );
            }
            let one_sided_end = one_sided_nodes.contains(&e.i) || one_sided_nodes.contains(&e.j);
            if one_sided_end && !g.has_edge(*e) {
                one_sided.record(
                    || "edge of a node adjacent to one side only vanished".to_string(),
                    || Witness::Step {
                        iteration: k,
                        pair,
                        edge: Some(*e),
                    },
                );
            }
        }
        let mass_after = run.multi_edge_mass();
        if mass_after >= mass_before {
            mass.record(
                || format!("mass {mass_before} -> {mass_after}"),
                || Witness::Step {
                    iteration: k,
                    pair,
                    edge: None,
                },
            );
        }
    }

    let done = format!("{steps} stage-1 steps");
    report.push(applies.into_check("step_applies", &done));
    report.push(thm1.into_check("multi_edge_implies_high_degree", &done));
    report.push(thm2.into_check("labels_are_exactly_pair_monomials", &done));
    report.push(rebuild.into_check("rebuild_equals", &done));
    report.push(index.into_check("index_matches_graph", &done));
    report.push(far_edges.into_check("far_edges_invariant", &done));
    report.push(one_sided.into_check("one_sided_edges_invariant", &done));
    report.push(mass.into_check("multi_edge_mass_decreasing", &done));
    Ok(report)
}
