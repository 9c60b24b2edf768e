//! Shared instance builders for the benchmark targets.

use daca_core::syngen::{generate, SupportSpec, SynSpec, WeightDist};
use daca_core::AttackInstance;

/// Workload-heavy synthetic instance used across benches.
pub fn bench_instance(n_tuples: usize, n_queries: usize, budget: u64, seed: u64) -> AttackInstance {
    let spec = SynSpec {
        n_tuples,
        n_queries,
        budget,
        support_per_query: SupportSpec::Range { lo: 20, hi: 50 },
        weight_distribution: WeightDist::Zipf { exponent: 1.2, max: 1000 },
        seed,
    };
    generate(&spec).expect("bench spec is feasible")
}
