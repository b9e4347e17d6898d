use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Result;
use crate::graph::VarPair;
use crate::pbf::{Pbf, VarId};

/// `fresh = lo * hi`, serialized as `[h, i, j]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Substitution {
    pub fresh: VarId,
    pub pair: VarPair,
}

impl Serialize for Substitution {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.fresh.0, self.pair.lo().0, self.pair.hi().0].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Substitution {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [h, i, j] = <[u32; 3]>::deserialize(d)?;
        let pair = VarPair::of(i, j)
            .ok_or_else(|| serde::de::Error::custom(format!("substitution pair ({i}, {j})")))?;
        Ok(Self {
            fresh: VarId(h),
            pair,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationLogEntry {
    pub stage: u8,
    pub pair: VarPair,
    pub fresh: VarId,
    pub beta_selected: usize,
    pub touched_monomials: usize,
    /// Multi-edge mass just before this step (stage 1 only; 0 in stage 2).
    pub multi_edge_mass: usize,
}

/// A quadratic (or degree-k) function plus the unscaled penalty that ties
/// each auxiliary to the product it replaced.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReductionResult {
    pub algorithm: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub n_original: u32,
    pub reduced: Pbf,
    pub penalty: Pbf,
    pub substitutions: Vec<Substitution>,
    pub iterations_stage1: usize,
    pub iterations_stage2: usize,
    #[serde(skip)]
    pub log: Vec<IterationLogEntry>,
    /// Multi-edge mass before each stage-1 step, then after the last one.
    #[serde(skip)]
    pub mass_trace: Vec<usize>,
}

impl ReductionResult {
    /// Number of auxiliary variables introduced.
    pub fn introduced(&self) -> usize {
        self.substitutions.len()
    }

    pub fn total_vars(&self) -> u32 {
        self.n_original + self.introduced() as u32
    }

    pub fn iterations(&self) -> usize {
        self.iterations_stage1 + self.iterations_stage2
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reduction results always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Structural degree-k density of `reduced` (and optionally `penalty`)
    /// over all `total_vars` variables. Index sets present in both count once.
    pub fn density(&self, k: usize, with_penalty: bool) -> f64 {
        let n = self.total_vars();
        if k == 0 || k > n as usize {
            return 0.0;
        }
        let mut count = self.reduced.count_degree(k);
        if with_penalty {
            count += self
                .penalty
                .iter()
                .filter(|(_, m)| m.degree() == k && self.reduced.term_id(m.vars()).is_none())
                .count();
        }
        let possible = crate::combinatorics::binomial(u64::from(n), k as u64).unwrap_or(u128::MAX);
        count as f64 / possible as f64
    }
}
