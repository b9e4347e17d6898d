//! Local Structure Reduction.
//!
//! Stage 1 repeatedly picks a node pair of multiplicity at least 2 from the
//! sorted multiplicity index (percentile `q` over the distinct
//! multiplicities, uniform within the bucket), updates graph and index
//! locally, then rewrites only the monomials labelled on that pair. Once no
//! pair is shared by two monomials, stage 2 halves each remaining
//! high-degree monomial independently.
//!
//! Within one stage-1 step the graph is updated before the polynomial: the
//! edge remapping reads the affected monomials as they were, and the
//! rewrite then uses the labels captured by that update.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bench::Algorithm;
use crate::error::{Error, Result};
use crate::graph::{build_graph, GraphDelta, MultiGraph, VarPair};
use crate::index::{build_index, MultiplicityIndex};
use crate::pbf::{push_penalty, Pbf, TermId, VarId};
use crate::result::{IterationLogEntry, ReductionResult, Substitution};

#[derive(Debug, Clone)]
pub struct LsrConfig {
    /// Percentile over the sorted distinct multiplicities, in `[0, 1]`.
    pub q: f64,
    pub seed: u64,
    /// Stop once every monomial has at most this degree (2 = quadratise).
    pub target_degree: usize,
    pub deadline: Option<Instant>,
}

impl LsrConfig {
    pub fn new(q: f64, seed: u64) -> Self {
        Self {
            q,
            seed,
            target_degree: 2,
            deadline: None,
        }
    }
}

/// Quadratises `f` with percentile `q`.
pub fn lsr(f: Pbf, q: f64, seed: u64) -> Result<ReductionResult> {
    lsr_with(f, &LsrConfig::new(q, seed))
}

/// Reduces `f` until no monomial exceeds degree `k`.
pub fn reduce_to_degree_k(f: Pbf, q: f64, k: usize, seed: u64) -> Result<ReductionResult> {
    lsr_with(
        f,
        &LsrConfig {
            target_degree: k,
            ..LsrConfig::new(q, seed)
        },
    )
}

pub fn lsr_with(f: Pbf, config: &LsrConfig) -> Result<ReductionResult> {
    let mut run = LsrRun::new(f, config)?;
    run.run_stage1(config.deadline)?;
    run.run_stage2(config.deadline)?;
    Ok(run.finish())
}

/// Rewrites the monomials `labels`, replacing `x_lo x_hi` by `h`. Every
/// other monomial is left untouched.
pub fn replace_var_pair(f: &mut Pbf, labels: &[TermId], pair: VarPair, h: VarId) -> Result<()> {
    for &z in labels {
        f.replace_pair_in_term(z, pair, h)?;
    }
    Ok(())
}

/// [`replace_var_pair`] with the affected monomials read off the edges
/// between the pair's nodes in `g`. Returns those labels.
pub fn replace_var_pair_from_graph(
    g: &MultiGraph,
    f: &mut Pbf,
    pair: VarPair,
    h: VarId,
) -> Result<Vec<TermId>> {
    let labels = g.sorted_labels(pair);
    replace_var_pair(f, &labels, pair, h)?;
    Ok(labels)
}

/// One halving pass over monomial `z`: consecutive variables (ascending id)
/// are paired and each pair replaced by a fresh variable, appending its
/// penalty to `penalty`. An odd variable out stays. The pass pairs no more
/// than needed to reach `target_degree`.
pub fn multi_reduce(
    f: &mut Pbf,
    penalty: &mut Pbf,
    z: TermId,
    fresh: &mut VarId,
    target_degree: usize,
) -> Result<Vec<Substitution>> {
    let target = target_degree.max(2);
    let m = f
        .get(z)
        .ok_or_else(|| Error::Invariant(format!("no monomial with running index {z}")))?;
    let d = m.degree();
    if d <= target {
        return Err(Error::NothingToReduce(target));
    }
    let vars = m.vars().to_vec();
    let pairs = (d / 2).min(d - target);
    let mut next = vars[2 * pairs..].to_vec();
    let mut subs = Vec::with_capacity(pairs);
    for p in 0..pairs {
        let pair = VarPair::ordered(vars[2 * p], vars[2 * p + 1]);
        let h = *fresh;
        fresh.0 += 1;
        push_penalty(penalty, pair, h);
        subs.push(Substitution { fresh: h, pair });
        next.push(h);
    }
    next.sort_unstable();
    f.rewrite_vars(z, next)?;
    f.reserve_vars_below(*fresh);
    penalty.reserve_vars_below(*fresh);
    Ok(subs)
}

/// The state of an LSR run, exposed step by step for instrumentation.
#[derive(Debug)]
pub struct LsrRun {
    f: Pbf,
    graph: MultiGraph,
    index: MultiplicityIndex,
    penalty: Pbf,
    substitutions: Vec<Substitution>,
    log: Vec<IterationLogEntry>,
    mass_trace: Vec<usize>,
    rng: ChaCha8Rng,
    q: f64,
    seed: u64,
    target: usize,
    degree_counts: Vec<usize>,
    max_degree: usize,
    stage1_steps: usize,
    stage2_passes: usize,
}

impl LsrRun {
    pub fn new(f: Pbf, config: &LsrConfig) -> Result<Self> {
        if !(0.0..=1.0).contains(&config.q) {
            return Err(Error::InvalidArgument(format!(
                "percentile {} outside [0, 1]",
                config.q
            )));
        }
        if config.target_degree < 2 {
            return Err(Error::InvalidArgument(format!(
                "target degree {} below 2",
                config.target_degree
            )));
        }
        let mut degree_counts = vec![0usize; f.degree() + 1];
        for (_, m) in f.iter() {
            degree_counts[m.degree()] += 1;
        }
        let max_degree = degree_counts.len() - 1;
        // nothing to do: skip the graph entirely
        let (graph, index) = if max_degree <= config.target_degree {
            (MultiGraph::default(), MultiplicityIndex::default())
        } else {
            let g = build_graph(&f);
            let idx = build_index(&g);
            (g, idx)
        };
        let penalty = Pbf::new(f.n_original());
        Ok(Self {
            f,
            graph,
            index,
            penalty,
            substitutions: Vec::new(),
            log: Vec::new(),
            mass_trace: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            q: config.q,
            seed: config.seed,
            target: config.target_degree,
            degree_counts,
            max_degree,
            stage1_steps: 0,
            stage2_passes: 0,
        })
    }

    /// The working polynomial (penalty terms excluded).
    pub fn pbf(&self) -> &Pbf {
        &self.f
    }

    /// The stage-1 graph; not maintained once stage 2 starts.
    pub fn graph(&self) -> &MultiGraph {
        &self.graph
    }

    pub fn index(&self) -> &MultiplicityIndex {
        &self.index
    }

    pub fn penalty(&self) -> &Pbf {
        &self.penalty
    }

    pub fn substitutions(&self) -> &[Substitution] {
        &self.substitutions
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn multi_edge_mass(&self) -> usize {
        self.index.mass()
    }

    pub fn stage1_done(&self) -> bool {
        self.index.is_empty() || self.max_degree <= self.target
    }

    /// Draws the next pair from the index (advances the RNG).
    pub fn select(&mut self) -> Result<(VarPair, usize)> {
        self.index.select_pair(self.q, &mut self.rng)
    }

    pub fn apply_pair(&mut self, pair: VarPair, beta: usize) -> Result<IterationLogEntry> {
        self.apply_pair_with(pair, beta, |_| {})
    }

    /// Applies one stage-1 replacement. `tamper` sees the planned graph
    /// delta before it is applied; verification code uses it to inject
    /// faults.
    pub fn apply_pair_with(
        &mut self,
        pair: VarPair,
        beta: usize,
        tamper: impl FnOnce(&mut GraphDelta),
    ) -> Result<IterationLogEntry> {
        let h = self.f.next_var();
        let mass = self.index.mass();
        if self.mass_trace.is_empty() {
            self.mass_trace.push(mass);
        }
        let mut delta = self.graph.plan_update(&self.f, pair, h)?;
        tamper(&mut delta);
        self.graph.apply_delta(&delta, &mut self.index)?;
        for &z in &delta.labels {
            let d = self.f.get(z).map_or(0, |m| m.degree());
            self.degree_counts[d] -= 1;
            self.degree_counts[d - 1] += 1;
        }
        replace_var_pair(&mut self.f, &delta.labels, pair, h)?;
        self.f.reserve_vars_below(VarId(h.0 + 1));
        while self.max_degree > 0 && self.degree_counts[self.max_degree] == 0 {
            self.max_degree -= 1;
        }
        push_penalty(&mut self.penalty, pair, h);
        self.substitutions.push(Substitution { fresh: h, pair });
        self.stage1_steps += 1;
        self.mass_trace.push(self.index.mass());
        let entry = IterationLogEntry {
            stage: 1,
            pair,
            fresh: h,
            beta_selected: beta,
            touched_monomials: delta.labels.len(),
            multi_edge_mass: mass,
        };
        self.log.push(entry);
        Ok(entry)
    }

    /// One select-and-replace step; `None` once stage 1 is complete.
    pub fn step(&mut self) -> Result<Option<IterationLogEntry>> {
        if self.stage1_done() {
            return Ok(None);
        }
        let (pair, beta) = self.select()?;
        self.apply_pair(pair, beta).map(Some)
    }

    pub fn run_stage1(&mut self, deadline: Option<Instant>) -> Result<()> {
        while !self.stage1_done() {
            check_deadline(deadline)?;
            self.step()?;
        }
        if self.mass_trace.is_empty() {
            self.mass_trace.push(self.index.mass());
        }
        Ok(())
    }

    /// Halves every monomial above the target degree, processing monomials
    /// in lexicographic order of their variable sets.
    pub fn run_stage2(&mut self, deadline: Option<Instant>) -> Result<()> {
        let mut todo: Vec<(Vec<VarId>, TermId)> = self
            .f
            .iter()
            .filter(|(_, m)| m.degree() > self.target)
            .map(|(z, m)| (m.vars().to_vec(), z))
            .collect();
        todo.sort_unstable();
        let mut fresh = self.f.next_var();
        for (_, z) in todo {
            check_deadline(deadline)?;
            while self.f.get(z).is_some_and(|m| m.degree() > self.target) {
                let subs = multi_reduce(&mut self.f, &mut self.penalty, z, &mut fresh, self.target)?;
                self.stage2_passes += 1;
                for s in subs {
                    self.log.push(IterationLogEntry {
                        stage: 2,
                        pair: s.pair,
                        fresh: s.fresh,
                        beta_selected: 1,
                        touched_monomials: 1,
                        multi_edge_mass: 0,
                    });
                    self.substitutions.push(s);
                }
            }
        }
        self.max_degree = self.f.degree();
        Ok(())
    }

    pub fn finish(mut self) -> ReductionResult {
        let top = VarId(self.f.next_var().0.max(self.penalty.next_var().0));
        self.f.reserve_vars_below(top);
        self.penalty.reserve_vars_below(top);
        ReductionResult {
            algorithm: Algorithm::Lsr { q: self.q }.to_string(),
            seed: Some(self.seed),
            n_original: self.f.n_original(),
            reduced: self.f,
            penalty: self.penalty,
            substitutions: self.substitutions,
            iterations_stage1: self.stage1_steps,
            iterations_stage2: self.stage2_passes,
            log: self.log,
            mass_trace: self.mass_trace,
        }
    }
}

pub(crate) fn check_deadline(deadline: Option<Instant>) -> Result<()> {
    match deadline {
        Some(d) if Instant::now() >= d => Err(Error::TimedOut),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pbf::Monomial;

    fn vars(f: &Pbf) -> Vec<(Vec<u32>, f64)> {
        f.canonical_terms()
            .into_iter()
            .map(|m| (m.vars().iter().map(|v| v.0).collect(), m.coeff()))
            .collect()
    }

    fn triple() -> Pbf {
        Pbf::from_terms(
            4,
            [(&[1u32, 2][..], 1.0), (&[1, 2, 3][..], 1.0), (&[1, 2, 3, 4][..], 1.0)],
        )
        .unwrap()
    }

    #[test]
    fn shared_pair_example_needs_two_variables() {
        let r = lsr(triple(), 1.0, 0).unwrap();
        assert_eq!(r.introduced(), 2);
        assert_eq!(r.substitutions[0].pair, VarPair::of(1, 2).unwrap());
        assert_eq!(r.substitutions[0].fresh, VarId(5));
        assert_eq!(r.substitutions[1].pair, VarPair::of(3, 5).unwrap());
        // y5 + y6 + y6 x4
        assert_eq!(vars(&r.reduced), vec![(vec![4, 6], 1.0), (vec![5], 1.0), (vec![6], 1.0)]);
        assert_eq!(r.iterations_stage1, 2);
        assert_eq!(r.iterations_stage2, 0);
        assert_eq!(r.reduced.num_vars(), 6);
        assert_eq!(r.penalty.num_vars(), 6);
    }

    #[test]
    fn quadratic_input_is_returned_unchanged() {
        let f = Pbf::from_terms(3, [(&[1u32, 2][..], 1.0), (&[2, 3][..], -2.0), (&[1][..], 1.0)])
            .unwrap();
        let r = lsr(f.clone(), 0.5, 3).unwrap();
        assert_eq!(r.reduced, f);
        assert!(r.penalty.is_empty());
        assert_eq!(r.iterations(), 0);
        assert!(r.substitutions.is_empty());
    }

    #[test]
    fn lone_quintic_goes_straight_to_stage_two() {
        let f = Pbf::from_terms(5, [(&[1u32, 2, 3, 4, 5][..], 2.0)]).unwrap();
        let r = lsr(f, 1.0, 0).unwrap();
        assert_eq!(r.iterations_stage1, 0);
        assert_eq!(r.iterations_stage2, 2);
        let subs: Vec<_> = r
            .substitutions
            .iter()
            .map(|s| (s.fresh.0, s.pair.lo().0, s.pair.hi().0))
            .collect();
        // x1..x5 -> y6 y7 x5 -> y7 y8 with y8 = x5 y6
        assert_eq!(subs, vec![(6, 1, 2), (7, 3, 4), (8, 5, 6)]);
        assert_eq!(vars(&r.reduced), vec![(vec![7, 8], 2.0)]);
        assert_eq!(r.penalty.len(), 12);
    }

    #[test]
    fn single_pass_matches_halving_rule() {
        let mut f = Pbf::from_terms(5, [(&[1u32, 2, 3, 4, 5][..], 1.0)]).unwrap();
        let mut p = Pbf::new(5);
        let mut fresh = VarId(6);
        let subs = multi_reduce(&mut f, &mut p, TermId(1), &mut fresh, 2).unwrap();
        assert_eq!(subs.len(), 2);
        assert_eq!(vars(&f), vec![(vec![5, 6, 7], 1.0)]);
        let mut expected = crate::pbf::penalty_term(VarId(1), VarId(2), VarId(6)).unwrap();
        for m in crate::pbf::penalty_term(VarId(3), VarId(4), VarId(7)).unwrap().canonical_terms() {
            expected.add_term(m.clone());
        }
        assert_eq!(vars(&p), vars(&expected));
        assert_eq!(fresh, VarId(8));

        let mut cubic = Pbf::from_terms(3, [(&[1u32, 2, 3][..], 1.0)]).unwrap();
        let mut p = Pbf::new(3);
        let mut fresh = VarId(4);
        multi_reduce(&mut cubic, &mut p, TermId(1), &mut fresh, 2).unwrap();
        assert_eq!(cubic.degree(), 2);
        assert!(matches!(
            multi_reduce(&mut cubic, &mut p, TermId(1), &mut fresh, 2),
            Err(Error::NothingToReduce(2))
        ));
    }

    #[test]
    fn degree_eight_takes_two_passes() {
        let all: Vec<u32> = (1..=8).collect();
        let f = Pbf::from_terms(8, [(&all[..], 1.0)]).unwrap();
        let r = lsr(f, 1.0, 0).unwrap();
        assert_eq!(r.iterations_stage2, 2);
        assert_eq!(r.introduced(), 6);
        assert_eq!(r.reduced.degree(), 2);
    }

    #[test]
    fn table1_first_pair_is_forced() {
        let f = Pbf::from_terms(
            6,
            [
                (&[1u32, 2, 3][..], std::f64::consts::PI),
                (&[2, 4, 5, 6][..], -13.0),
                (&[1, 3][..], 7.0),
            ],
        )
        .unwrap();
        let r = lsr(f, 1.0, 11).unwrap();
        assert_eq!(
            r.substitutions[0],
            Substitution {
                fresh: VarId(7),
                pair: VarPair::of(1, 3).unwrap()
            }
        );
        assert!(r.reduced.degree() <= 2);
    }

    #[test]
    fn replace_touches_only_labelled_monomials() {
        let mut f = Pbf::from_terms(
            6,
            [
                (&[1u32, 2, 3][..], std::f64::consts::PI),
                (&[2, 4, 5, 6][..], -13.0),
                (&[1, 3][..], 7.0),
            ],
        )
        .unwrap();
        let g = build_graph(&f);
        let before = f.get(TermId(2)).unwrap().clone();
        let labels =
            replace_var_pair_from_graph(&g, &mut f, VarPair::of(1, 3).unwrap(), VarId(7)).unwrap();
        assert_eq!(labels, vec![TermId(1), TermId(3)]);
        assert_eq!(f.get(TermId(1)).unwrap(), &Monomial::of(&[2, 7], std::f64::consts::PI).unwrap());
        assert_eq!(f.get(TermId(3)).unwrap(), &Monomial::of(&[7], 7.0).unwrap());
        assert_eq!(f.get(TermId(2)).unwrap(), &before);
        assert_eq!(f.term_id(&[VarId(7)]), Some(TermId(3)));
    }

    #[test]
    fn replace_rejects_corrupt_label() {
        let mut f = Pbf::from_terms(4, [(&[1u32, 2, 3][..], 1.0), (&[3, 4][..], 1.0)]).unwrap();
        let err = replace_var_pair(&mut f, &[TermId(2)], VarPair::of(1, 2).unwrap(), VarId(5));
        assert!(matches!(err, Err(Error::CorruptLabel(TermId(2), _, _))));
    }

    #[test]
    fn degree_k_stops_early() {
        let all: Vec<u32> = (1..=6).collect();
        let f = Pbf::from_terms(6, [(&all[..], 1.0)]).unwrap();
        let r = reduce_to_degree_k(f.clone(), 1.0, 3, 0).unwrap();
        assert_eq!(r.reduced.degree(), 3);
        assert_eq!(r.introduced(), 3);

        let r = reduce_to_degree_k(f.clone(), 1.0, 6, 0).unwrap();
        assert_eq!(r.reduced, f);
        assert!(r.penalty.is_empty());

        assert!(reduce_to_degree_k(f, 1.0, 1, 0).is_err());
    }

    #[test]
    fn degree_two_target_equals_lsr() {
        let f = triple();
        let a = lsr(f.clone(), 0.5, 42).unwrap();
        let b = reduce_to_degree_k(f, 0.5, 2, 42).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn invalid_percentile() {
        assert!(lsr(triple(), 1.2, 0).is_err());
    }

    #[test]
    fn deadline_in_the_past_times_out() {
        let config = LsrConfig {
            deadline: Some(Instant::now()),
            ..LsrConfig::new(1.0, 0)
        };
        assert!(matches!(lsr_with(triple(), &config), Err(Error::TimedOut)));
    }
}
