//! Deterministic synthetic instance generation for benchmarks and
//! property sweeps.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{AttackInstance, JointWeightMatrix};

/// How many tuples support each query.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SupportSpec {
    Fixed(usize),
    Range { lo: usize, hi: usize },
}

/// Distribution of the nonzero joint weights.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightDist {
    Uniform { lo: u64, hi: u64 },
    /// Integer values `1..=max` with probability proportional to
    /// `1 / value^exponent`.
    Zipf { exponent: f64, max: u64 },
}

/// Generator parameters. The same spec always produces the same instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynSpec {
    pub n_tuples: usize,
    pub n_queries: usize,
    pub budget: u64,
    pub support_per_query: SupportSpec,
    pub weight_distribution: WeightDist,
    pub seed: u64,
}

/// Generates an instance: each query's support is drawn without
/// replacement, weights come from the configured distribution, and the
/// clean cardinalities are the per-query weight sums.
pub fn generate(spec: &SynSpec) -> Result<AttackInstance> {
    let (lo, hi) = match spec.support_per_query {
        SupportSpec::Fixed(s) => (s, s),
        SupportSpec::Range { lo, hi } => (lo, hi),
    };
    if lo == 0 || lo > hi {
        return Err(Error::Generation(format!("support range {lo}..={hi} is empty or zero")));
    }
    if hi > spec.n_tuples {
        return Err(Error::Generation(format!(
            "support {hi} exceeds the {} available tuples",
            spec.n_tuples
        )));
    }
    match spec.weight_distribution {
        WeightDist::Uniform { lo, hi } => {
            if lo == 0 || lo > hi {
                return Err(Error::Generation(format!(
                    "uniform weight bounds {lo}..={hi} must be positive and ordered"
                )));
            }
        }
        WeightDist::Zipf { exponent, max } => {
            if max == 0 || exponent.is_nan() || exponent <= 0.0 {
                return Err(Error::Generation(format!(
                    "zipf needs max >= 1 and a positive exponent, got ({exponent}, {max})"
                )));
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let zipf = match spec.weight_distribution {
        WeightDist::Zipf { exponent, max } => Some(
            Zipf::new(max, exponent)
                .map_err(|e| Error::Generation(format!("zipf parameters rejected: {e}")))?,
        ),
        WeightDist::Uniform { .. } => None,
    };

    let mut entries = Vec::new();
    for query in 0..spec.n_queries {
        let size = rng.gen_range(lo..=hi);
        let mut support = rand::seq::index::sample(&mut rng, spec.n_tuples, size).into_vec();
        support.sort_unstable();
        for tuple in support {
            let weight = match spec.weight_distribution {
                WeightDist::Uniform { lo, hi } => rng.gen_range(lo..=hi),
                WeightDist::Zipf { .. } => {
                    zipf.as_ref().expect("zipf configured").sample(&mut rng) as u64
                }
            };
            entries.push((query, tuple, weight));
        }
    }
    let matrix = JointWeightMatrix::from_entries(spec.n_tuples, spec.n_queries, entries)?;
    AttackInstance::from_weights(matrix, spec.budget)
}
