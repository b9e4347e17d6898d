//! Instance generation, benchmark sweeps and the file-level commands used
//! by the CLI.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baseline::{quadratise_baseline_with, SelectionVariant};
use crate::combinatorics::{binomial, terms_up_to_degree, unrank_combination};
use crate::error::{Error, Result};
use crate::lsr::{lsr_with, LsrConfig};
use crate::oracle::{
    check_incremental_graph, check_mass_trace, check_quadratisation, check_variable_bounds,
    oracle_penalty_scale, VerificationReport, DEFAULT_GRAPH_CHECK_MONOMIALS,
};
use crate::pbf::{Monomial, Pbf};
use crate::result::ReductionResult;

/// Version tag written as the first line of every sweep CSV.
pub const CSV_SCHEMA: &str = "# schema: lsrquad-bench v1";

pub const BENCH_COLUMNS: [&str; 12] = [
    "algorithm",
    "n",
    "terms_before",
    "density_in",
    "wall_time_s",
    "vars_after",
    "d2_out_with_penalty",
    "d2_out_without_penalty",
    "d1_out",
    "iterations",
    "seed",
    "timed_out",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Algorithm {
    Lsr { q: f64 },
    Baseline(SelectionVariant),
}

impl Algorithm {
    /// The seven configurations of the benchmark grid.
    pub const ALL: [Algorithm; 7] = [
        Algorithm::Lsr { q: 0.0 },
        Algorithm::Lsr { q: 0.5 },
        Algorithm::Lsr { q: 0.8 },
        Algorithm::Lsr { q: 1.0 },
        Algorithm::Baseline(SelectionVariant::Sparse),
        Algorithm::Baseline(SelectionVariant::Medium),
        Algorithm::Baseline(SelectionVariant::Dense),
    ];

    pub fn run(&self, f: Pbf, seed: u64, deadline: Option<Instant>) -> Result<ReductionResult> {
        match *self {
            Algorithm::Lsr { q } => lsr_with(
                f,
                &LsrConfig {
                    deadline,
                    ..LsrConfig::new(q, seed)
                },
            ),
            Algorithm::Baseline(v) => quadratise_baseline_with(f, v, deadline),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algorithm::Lsr { q } if (q * 10.0).fract() == 0.0 => write!(f, "lsr-q{q:.1}"),
            Algorithm::Lsr { q } => write!(f, "lsr-q{q}"),
            Algorithm::Baseline(v) => write!(f, "base-{v}"),
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(q) = s.strip_prefix("lsr-q") {
            let q: f64 = q
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad percentile in {s:?}")))?;
            if !(0.0..=1.0).contains(&q) {
                return Err(Error::InvalidArgument(format!("percentile {q} outside [0, 1]")));
            }
            return Ok(Algorithm::Lsr { q });
        }
        if let Some(v) = s.strip_prefix("base-") {
            return Ok(Algorithm::Baseline(v.parse()?));
        }
        Err(Error::InvalidArgument(format!("unknown algorithm {s:?}")))
    }
}

impl TryFrom<String> for Algorithm {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Algorithm> for String {
    fn from(a: Algorithm) -> String {
        a.to_string()
    }
}

fn default_degree() -> usize {
    4
}

fn default_coeff_range() -> [f64; 2] {
    [-10.0, 10.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub n: u32,
    #[serde(default = "default_degree")]
    pub degree: usize,
    /// Target density for every degree class `1..=degree`.
    pub density: f64,
    /// Closed interval for coefficients; exact zeros are redrawn.
    #[serde(default = "default_coeff_range")]
    pub coeff_range: [f64; 2],
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(n: u32, degree: usize, density: f64, seed: u64) -> Self {
        Self {
            n,
            degree,
            density,
            coeff_range: default_coeff_range(),
            seed,
        }
    }

    /// Monomials drawn for degree class `k`: `ceil(density * C(n, k))`.
    pub fn count_for_degree(&self, k: usize) -> Result<u128> {
        let total = binomial(u64::from(self.n), k as u64)
            .ok_or_else(|| Error::InvalidArgument(format!("C({}, {k}) overflows", self.n)))?;
        // relative guard so that e.g. 0.6 * 20 does not round up to 13
        let raw = (self.density * total as f64 * (1.0 - 1e-12)).ceil() as u128;
        Ok(raw.clamp(1, total))
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if self.degree == 0 || self.degree > self.n as usize {
            return bad(format!("degree {} outside 1..={}", self.degree, self.n));
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return bad(format!("density {} outside (0, 1]", self.density));
        }
        let [lo, hi] = self.coeff_range;
        if !lo.is_finite() || !hi.is_finite() || lo > hi || (lo == 0.0 && hi == 0.0) {
            return bad(format!("coefficient range [{lo}, {hi}] is empty or excludes every nonzero value"));
        }
        Ok(())
    }
}

/// A random PBF with `ceil(density * C(n, k))` distinct monomials of each
/// degree `k <= degree`, drawn uniformly without replacement.
pub fn generate(spec: &GeneratorSpec) -> Result<Pbf> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let [lo, hi] = spec.coeff_range;
    let n = u64::from(spec.n);
    let mut f = Pbf::new(spec.n);
    for k in 1..=spec.degree {
        let total = binomial(n, k as u64).expect("validated");
        let count = spec.count_for_degree(k)?;
        let (total, count) = match (usize::try_from(total), usize::try_from(count)) {
            (Ok(t), Ok(c)) => (t, c),
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "degree-{k} class of C({n}, {k}) is too large to sample"
                )))
            }
        };
        let mut ranks = sample(&mut rng, total, count).into_vec();
        ranks.sort_unstable();
        for rank in ranks {
            let vars: Vec<u32> = unrank_combination(n, k as u64, rank as u128)
                .into_iter()
                .map(|v| v as u32 + 1)
                .collect();
            let coeff = loop {
                let c = if lo == hi { lo } else { rng.random_range(lo..=hi) };
                if c != 0.0 {
                    break c;
                }
            };
            f.add_term(Monomial::of(&vars, coeff)?);
        }
    }
    Ok(f)
}

fn default_timeout() -> f64 {
    120.0
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n: Vec<u32>,
    #[serde(default = "default_degree")]
    pub degree: usize,
    pub densities: Vec<f64>,
    pub algorithms: Vec<Algorithm>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
    #[serde(default = "default_coeff_range")]
    pub coeff_range: [f64; 2],
    /// After an algorithm times out at some `n`, record it as timed out for
    /// every larger `n` at the same density and seed without running it.
    #[serde(default)]
    pub skip_after_timeout: bool,
    /// Check the introduced-variable bounds of every completed run.
    #[serde(default = "default_true")]
    pub check_bounds: bool,
}

impl SweepConfig {
    /// Parses TOML, or JSON when the text starts with `{`.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            Ok(serde_json::from_str(text)?)
        } else {
            Ok(toml::from_str(text)?)
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn record_count(&self) -> usize {
        self.n.len() * self.densities.len() * self.algorithms.len() * self.seeds.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub algorithm: String,
    pub n: u32,
    pub terms_before: usize,
    pub density_in: f64,
    pub wall_time_s: f64,
    pub vars_after: Option<u32>,
    pub d2_out_with_penalty: Option<f64>,
    pub d2_out_without_penalty: Option<f64>,
    pub d1_out: Option<f64>,
    pub iterations: Option<usize>,
    pub seed: u64,
    pub timed_out: bool,
}

impl BenchRecord {
    fn completed(algo: Algorithm, f: &Pbf, density: f64, seed: u64, secs: f64, r: &ReductionResult) -> Self {
        Self {
            algorithm: algo.to_string(),
            n: f.n_original(),
            terms_before: f.len(),
            density_in: density,
            wall_time_s: secs,
            vars_after: Some(r.total_vars()),
            d2_out_with_penalty: Some(r.density(2, true)),
            d2_out_without_penalty: Some(r.density(2, false)),
            d1_out: Some(r.density(1, false)),
            iterations: Some(r.iterations()),
            seed,
            timed_out: false,
        }
    }

    fn timed_out(algo: Algorithm, f: &Pbf, density: f64, seed: u64, timeout: f64) -> Self {
        Self {
            algorithm: algo.to_string(),
            n: f.n_original(),
            terms_before: f.len(),
            density_in: density,
            wall_time_s: timeout,
            vars_after: None,
            d2_out_with_penalty: None,
            d2_out_without_penalty: None,
            d1_out: None,
            iterations: None,
            seed,
            timed_out: true,
        }
    }
}

/// Times one reduction; `Ok(None)` on timeout.
pub fn timed_run(
    algo: Algorithm,
    f: Pbf,
    seed: u64,
    timeout: Option<Duration>,
) -> Result<Option<(ReductionResult, f64)>> {
    let start = Instant::now();
    match algo.run(f, seed, timeout.map(|t| start + t)) {
        Ok(r) => Ok(Some((r, start.elapsed().as_secs_f64()))),
        Err(Error::TimedOut) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Runs the cartesian grid `n x density x seed x algorithm` in that order,
/// streaming CSV rows to `out` and returning the records.
pub fn run_sweep<W: Write>(config: &SweepConfig, out: W) -> Result<Vec<BenchRecord>> {
    let mut out = out;
    writeln!(out, "{CSV_SCHEMA}")?;
    let mut csv = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    csv.write_record(BENCH_COLUMNS)?;
    csv.flush()?;

    let timeout = Duration::from_secs_f64(config.timeout_s);
    let mut n_values = config.n.clone();
    n_values.sort_unstable();
    let mut records = Vec::with_capacity(config.record_count());
    let mut timed_out_at: Vec<(usize, usize, usize)> = Vec::new();
    if config.algorithms.is_empty() {
        return Ok(records);
    }
    for &n in &n_values {
        for (di, &density) in config.densities.iter().enumerate() {
            for (si, &seed) in config.seeds.iter().enumerate() {
                let f = generate(&GeneratorSpec {
                    coeff_range: config.coeff_range,
                    ..GeneratorSpec::new(n, config.degree.min(n as usize), density, seed)
                })?;
                for (ai, &algo) in config.algorithms.iter().enumerate() {
                    let key = (di, si, ai);
                    let record = if config.skip_after_timeout && timed_out_at.contains(&key) {
                        BenchRecord::timed_out(algo, &f, density, seed, config.timeout_s)
                    } else {
                        match timed_run(algo, f.clone(), seed, Some(timeout))? {
                            Some((r, secs)) => {
                                if config.check_bounds {
                                    let report = check_variable_bounds(&f, &r);
                                    if !report.ok() {
                                        return Err(Error::Invariant(format!(
                                            "{algo} on n={n} d={density} seed={seed}: {}",
                                            report.checks[0].detail
                                        )));
                                    }
                                }
                                BenchRecord::completed(algo, &f, density, seed, secs, &r)
                            }
                            None => {
                                timed_out_at.push(key);
                                BenchRecord::timed_out(algo, &f, density, seed, config.timeout_s)
                            }
                        }
                    };
                    log::info!(
                        "{} n={} d={} seed={} {:.3}s{}",
                        record.algorithm,
                        n,
                        density,
                        seed,
                        record.wall_time_s,
                        if record.timed_out { " (timed out)" } else { "" }
                    );
                    csv.serialize(&record)?;
                    csv.flush()?;
                    records.push(record);
                }
            }
        }
    }
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ScalingRow {
    pub n: u64,
    pub degree: u64,
    /// Terms of a full-density PBF: `sum_{k=1}^{degree} C(n, k)`.
    pub terms: u128,
}

/// One row per `(n, degree)` with `1 <= degree <= min(n, deg_max)`.
pub fn terms_scaling_report(n_max: u64, deg_max: u64) -> Result<Vec<ScalingRow>> {
    let mut rows = Vec::new();
    for n in 1..=n_max {
        for degree in 1..=deg_max.min(n) {
            let terms = terms_up_to_degree(n, degree)
                .ok_or_else(|| Error::InvalidArgument(format!("term count for n={n} overflows")))?;
            rows.push(ScalingRow { n, degree, terms });
        }
    }
    Ok(rows)
}

pub fn write_scaling_csv<W: Write>(rows: &[ScalingRow], out: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(out);
    csv.write_record(["n", "degree", "terms"])?;
    for r in rows {
        csv.write_record([r.n.to_string(), r.degree.to_string(), r.terms.to_string()])?;
    }
    csv.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReduceSummary {
    pub algorithm: String,
    pub vars_before: u32,
    pub vars_after: u32,
    pub terms_before: usize,
    pub terms_after: usize,
    pub penalty_terms: usize,
    pub d2_with_penalty: f64,
    pub d2_without_penalty: f64,
    pub iterations_stage1: usize,
    pub iterations_stage2: usize,
}

impl fmt::Display for ReduceSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "algorithm:  {}", self.algorithm)?;
        writeln!(f, "variables:  {} -> {}", self.vars_before, self.vars_after)?;
        writeln!(
            f,
            "terms:      {} -> {} (+{} penalty)",
            self.terms_before, self.terms_after, self.penalty_terms
        )?;
        writeln!(
            f,
            "d2:         {:.6} with penalty, {:.6} without",
            self.d2_with_penalty, self.d2_without_penalty
        )?;
        write!(
            f,
            "iterations: {} stage 1, {} stage 2",
            self.iterations_stage1, self.iterations_stage2
        )
    }
}

impl ReduceSummary {
    pub fn new(original: &Pbf, r: &ReductionResult) -> Self {
        Self {
            algorithm: r.algorithm.clone(),
            vars_before: original.num_vars(),
            vars_after: r.total_vars(),
            terms_before: original.len(),
            terms_after: r.reduced.len(),
            penalty_terms: r.penalty.len(),
            d2_with_penalty: r.density(2, true),
            d2_without_penalty: r.density(2, false),
            iterations_stage1: r.iterations_stage1,
            iterations_stage2: r.iterations_stage2,
        }
    }
}

/// Reads a PBF, reduces it and writes the result JSON to `output`.
pub fn reduce_command(input: &Path, algo: Algorithm, seed: u64, output: &Path) -> Result<ReduceSummary> {
    let f = Pbf::from_json(&fs::read_to_string(input)?)?;
    let r = algo.run(f.clone(), seed, None)?;
    let mut text = r.to_json();
    text.push('\n');
    fs::write(output, text)?;
    Ok(ReduceSummary::new(&f, &r))
}

/// Reduces `f` and runs every applicable oracle: exhaustive
/// quadratisation (penalty weight `c`, default [`oracle_penalty_scale`]),
/// variable bounds, and for LSR the stage-1 mass trace plus per-step graph
/// coherence when `f` is small enough.
pub fn verify_instance(
    f: &Pbf,
    algo: Algorithm,
    seed: u64,
    max_bits: usize,
    c: Option<f64>,
) -> Result<VerificationReport> {
    let r = algo.run(f.clone(), seed, None)?;
    let c = c.unwrap_or_else(|| oracle_penalty_scale(f));
    let mut report = check_quadratisation(f, &r, c, max_bits)?;
    report.extend(check_variable_bounds(f, &r));
    if let Algorithm::Lsr { q } = algo {
        report.push(check_mass_trace(&r));
        if f.len() <= DEFAULT_GRAPH_CHECK_MONOMIALS {
            report.extend(check_incremental_graph(f, q, seed)?);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algorithm_names_round_trip() {
        let names: Vec<String> = Algorithm::ALL.iter().map(ToString::to_string).collect();
        assert_eq!(
            names,
            [
                "lsr-q0.0",
                "lsr-q0.5",
                "lsr-q0.8",
                "lsr-q1.0",
                "base-sparse",
                "base-medium",
                "base-dense"
            ]
        );
        for (a, s) in Algorithm::ALL.iter().zip(&names) {
            assert_eq!(&s.parse::<Algorithm>().unwrap(), a);
        }
        assert_eq!(Algorithm::Lsr { q: 0.25 }.to_string(), "lsr-q0.25");
        assert!("lsr-q1.5".parse::<Algorithm>().is_err());
        assert!("base-fast".parse::<Algorithm>().is_err());
    }

    #[test]
    fn full_density_term_count() {
        let f = generate(&GeneratorSpec::new(6, 4, 1.0, 1)).unwrap();
        assert_eq!(f.len(), 56);
        assert_eq!(f.degree(), 4);
    }

    #[test]
    fn minimal_density_gives_one_term_per_degree() {
        let f = generate(&GeneratorSpec::new(10, 4, 1e-6, 3)).unwrap();
        assert_eq!(f.len(), 4);
        for k in 1..=4 {
            assert_eq!(f.count_degree(k), 1);
        }
    }

    #[test]
    fn ceiling_is_not_fooled_by_rounding() {
        let spec = GeneratorSpec::new(6, 3, 0.6, 0);
        assert_eq!(spec.count_for_degree(3).unwrap(), 12);
        assert_eq!(spec.count_for_degree(2).unwrap(), 9);
    }

    #[test]
    fn generation_is_deterministic_and_mixed_sign() {
        let spec = GeneratorSpec::new(10, 4, 0.4, 9);
        let a = generate(&spec).unwrap();
        assert_eq!(a.to_json(), generate(&spec).unwrap().to_json());
        assert!(a.iter().any(|(_, m)| m.coeff() < 0.0));
        assert!(a.iter().any(|(_, m)| m.coeff() > 0.0));
        assert!(a.iter().all(|(_, m)| (-10.0..=10.0).contains(&m.coeff())));
        assert_ne!(a.to_json(), generate(&GeneratorSpec { seed: 10, ..spec }).unwrap().to_json());
    }

    #[test]
    fn invalid_specs() {
        for spec in [
            GeneratorSpec::new(5, 6, 0.5, 0),
            GeneratorSpec::new(5, 3, 0.0, 0),
            GeneratorSpec::new(5, 3, 1.5, 0),
            GeneratorSpec {
                coeff_range: [0.0, 0.0],
                ..GeneratorSpec::new(5, 3, 0.5, 0)
            },
        ] {
            assert!(generate(&spec).is_err(), "{spec:?}");
        }
    }

    #[test]
    fn sweep_grid_size_and_header() {
        let config = SweepConfig::parse(
            r#"
            n = [6, 7]
            densities = [0.4, 1.0]
            algorithms = ["lsr-q1.0", "base-dense", "base-sparse"]
            seeds = [1, 2]
            "#,
        )
        .unwrap();
        assert_eq!(config.degree, 4);
        assert_eq!(config.timeout_s, 120.0);
        let mut buf = Vec::new();
        let records = run_sweep(&config, &mut buf).unwrap();
        assert_eq!(records.len(), 2 * 2 * 3 * 2);
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_SCHEMA));
        assert_eq!(lines.next().unwrap(), BENCH_COLUMNS.join(","));
        assert_eq!(lines.count(), 24);
        for r in &records {
            assert!(!r.timed_out);
            let d2 = r.d2_out_with_penalty.unwrap();
            assert!((0.0..=1.0).contains(&d2));
            assert!(r.vars_after.unwrap() >= r.n);
        }
    }

    #[test]
    fn empty_algorithm_list_gives_header_only() {
        let config = SweepConfig::parse(
            r#"{"n": [5], "densities": [0.5], "algorithms": [], "seeds": [0]}"#,
        )
        .unwrap();
        let mut buf = Vec::new();
        assert!(run_sweep(&config, &mut buf).unwrap().is_empty());
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 2);
    }

    #[test]
    fn zero_timeout_is_recorded_as_sentinel() {
        let config = SweepConfig {
            n: vec![8, 9],
            degree: 4,
            densities: vec![1.0],
            algorithms: vec![Algorithm::Baseline(SelectionVariant::Dense)],
            seeds: vec![0],
            timeout_s: 0.0,
            coeff_range: default_coeff_range(),
            skip_after_timeout: true,
            check_bounds: true,
        };
        let records = run_sweep(&config, std::io::sink()).unwrap();
        assert!(records.iter().all(|r| r.timed_out && r.wall_time_s == 0.0 && r.vars_after.is_none()));
    }

    #[test]
    fn scaling_rows() {
        let rows = terms_scaling_report(6, 6).unwrap();
        let get = |n, d| rows.iter().find(|r| r.n == n && r.degree == d).unwrap().terms;
        assert_eq!(get(6, 4), 56);
        assert_eq!(get(6, 6), 63);
        assert_eq!(get(5, 1), 5);
        assert_eq!(rows.len(), 21);
    }

    #[test]
    fn verify_instance_on_small_random_pbf() {
        let f = generate(&GeneratorSpec::new(6, 4, 0.5, 4)).unwrap();
        for algo in Algorithm::ALL {
            let report = verify_instance(&f, algo, 7, 22, None).unwrap();
            assert!(report.ok(), "{algo}: {}", report.to_json());
        }
    }
}
