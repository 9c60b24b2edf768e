//! The smoothed total-Qerror attack objective and executable checkers for
//! its structural properties.
//!
//! The attack objective sums, over the workload, the smoothed Qerror between
//! the poisoned and clean cardinality of each query:
//!
//! ```text
//! Σ_j max( (C'_j + 1) / (C_j + 1), (C_j + 1) / (C'_j + 1) )
//! ```
//!
//! with `C'_j = C_j + Σ_i β_i·w_ij`. Restricted to deletions the objective
//! is supermodular over tuple sets; restricted to single insertions it is
//! modular. Both facts have executable checkers here so they can be swept
//! as properties rather than taken on faith.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::instance::{validate_strategy, AttackInstance, AttackStrategy};

/// Relative tolerance for floating-point comparisons of objective values.
pub const REL_TOL: f64 = 1e-9;

/// Raw Qerror `max(est/truth, truth/est)`.
///
/// Symmetric and scale-invariant. `qerror(x, 0)` for `x > 0` is infinite;
/// `qerror(0, 0)` is 1 by convention (the smoothed objective never reaches
/// this case, it only affects the raw metric).
pub fn qerror(est: f64, truth: f64) -> f64 {
    debug_assert!(est >= 0.0 && truth >= 0.0, "qerror arguments must be non-negative");
    if est == 0.0 && truth == 0.0 {
        return 1.0;
    }
    f64::max(est / truth, truth / est)
}

/// Smoothed per-query term: Qerror of `poisoned` vs `clean` with both
/// cardinalities shifted by +1 to avoid division by zero.
#[inline]
pub fn smoothed_term(clean: u64, poisoned: u64) -> f64 {
    let c = (clean + 1) as f64;
    let p = (poisoned + 1) as f64;
    f64::max(p / c, c / p)
}

/// Total and per-query smoothed Qerror of a strategy against the clean state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObjectiveValue {
    pub total: f64,
    pub per_query: Vec<f64>,
}

/// Evaluates the smoothed total-Qerror objective of `strategy`.
///
/// The strategy is validated first; every per-query term is ≥ 1 and the
/// empty strategy scores exactly `M`.
pub fn objective_eq3(instance: &AttackInstance, strategy: &AttackStrategy) -> Result<ObjectiveValue> {
    validate_strategy(instance, strategy).into_result()?;
    let per_query: Vec<f64> = (0..instance.n_queries())
        .map(|q| {
            let poisoned = crate::instance::poisoned_cardinality(instance, strategy, q)
                .expect("query index in range");
            smoothed_term(instance.clean_cardinality(q), poisoned)
        })
        .collect();
    let total = per_query.iter().sum();
    Ok(ObjectiveValue { total, per_query })
}

/// Objective of a dense beta vector, without strategy validation.
///
/// Shared fast path for the metaheuristics; betas must already be in range.
pub(crate) fn eval_betas_dense(instance: &AttackInstance, betas: &[i64]) -> f64 {
    debug_assert_eq!(betas.len(), instance.n_tuples());
    let mut total = 0.0;
    for q in 0..instance.n_queries() {
        let mut value = instance.clean_cardinality(q) as i128;
        for &(tuple, weight) in instance.weights().query_entries(q) {
            value += betas[tuple] as i128 * weight as i128;
        }
        let poisoned = u64::try_from(value).expect("betas in range keep cardinalities non-negative");
        total += smoothed_term(instance.clean_cardinality(q), poisoned);
    }
    total
}

/// Delete-only objective of a tuple set (`β = -1` for every member).
///
/// Budget is deliberately ignored: the structural properties quantify over
/// all subsets of the relation.
pub fn delete_only_objective(instance: &AttackInstance, tuples: &BTreeSet<usize>) -> f64 {
    set_objective(instance, tuples, -1)
}

/// Insert-only objective of a tuple set (`β = +1` for every member).
pub fn insert_only_objective(instance: &AttackInstance, tuples: &BTreeSet<usize>) -> f64 {
    set_objective(instance, tuples, 1)
}

fn set_objective(instance: &AttackInstance, tuples: &BTreeSet<usize>, sign: i64) -> f64 {
    let mut delta = vec![0i128; instance.n_queries()];
    for &tuple in tuples {
        assert!(tuple < instance.n_tuples(), "tuple {tuple} out of range");
        for &(query, weight) in instance.weights().tuple_entries(tuple) {
            delta[query] += sign as i128 * weight as i128;
        }
    }
    (0..instance.n_queries())
        .map(|q| {
            let value = instance.clean_cardinality(q) as i128 + delta[q];
            let poisoned = u64::try_from(value).expect("set deltas keep cardinalities non-negative");
            smoothed_term(instance.clean_cardinality(q), poisoned)
        })
        .sum()
}

/// Supermodularity slack of the delete-only objective:
/// `Q(A∪B) + Q(A∩B) - Q(A) - Q(B)`, which is ≥ 0 for every pair of sets.
pub fn check_supermodularity(
    instance: &AttackInstance,
    set_a: &BTreeSet<usize>,
    set_b: &BTreeSet<usize>,
) -> f64 {
    let union: BTreeSet<usize> = set_a.union(set_b).copied().collect();
    let inter: BTreeSet<usize> = set_a.intersection(set_b).copied().collect();
    delete_only_objective(instance, &union) + delete_only_objective(instance, &inter)
        - delete_only_objective(instance, set_a)
        - delete_only_objective(instance, set_b)
}

/// Modularity residual of the insert-only objective:
/// `Q'(A∪B) + Q'(A∩B) - Q'(A) - Q'(B)`, which is 0 for every pair of sets.
pub fn check_modularity(
    instance: &AttackInstance,
    set_a: &BTreeSet<usize>,
    set_b: &BTreeSet<usize>,
) -> f64 {
    let union: BTreeSet<usize> = set_a.union(set_b).copied().collect();
    let inter: BTreeSet<usize> = set_a.intersection(set_b).copied().collect();
    insert_only_objective(instance, &union) + insert_only_objective(instance, &inter)
        - insert_only_objective(instance, set_a)
        - insert_only_objective(instance, set_b)
}

/// Caller-supplied per-query dominance label: which direction of the
/// Qerror ratio a query is expected to move under attack.
///
/// Labels remove the inner `max` from the objective, which is what makes
/// the greedy guarantee carry over to mixed-mode attacks. The library never
/// infers labels; they are an input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dominance {
    /// Poisoning is expected to raise the cardinality: score `(C'+1)/(C+1)`.
    InsertDominated,
    /// Poisoning is expected to lower the cardinality: score `(C+1)/(C'+1)`.
    DeleteDominated,
}

/// Objective with the per-query `max` replaced by caller-supplied dominance
/// labels. When every label matches the realized direction of drift this
/// equals [`objective_eq3`]; mismatched labels score the reciprocal ratio
/// (a value ≤ 1).
pub fn objective_labeled(
    instance: &AttackInstance,
    strategy: &AttackStrategy,
    labels: &[Dominance],
) -> Result<ObjectiveValue> {
    validate_strategy(instance, strategy).into_result()?;
    if labels.len() != instance.n_queries() {
        return Err(crate::error::Error::ShapeMismatch {
            expected: instance.n_queries(),
            actual: labels.len(),
        });
    }
    let per_query: Vec<f64> = (0..instance.n_queries())
        .map(|q| {
            let poisoned = crate::instance::poisoned_cardinality(instance, strategy, q)
                .expect("query index in range");
            let up = (poisoned + 1) as f64 / (instance.clean_cardinality(q) + 1) as f64;
            match labels[q] {
                Dominance::InsertDominated => up,
                Dominance::DeleteDominated => 1.0 / up,
            }
        })
        .collect();
    let total = per_query.iter().sum();
    Ok(ObjectiveValue { total, per_query })
}

/// Per-insertion objective rate of a tuple: `Σ_j w_ij / (C_j + 1)`.
///
/// The insert-only objective is `M + Σ_i β_i · rate_i`, so a single
/// duplicate of the tuple with the largest rate is the optimal one-op
/// insertion.
pub fn insert_rate(instance: &AttackInstance, tuple: usize) -> f64 {
    instance
        .weights()
        .tuple_entries(tuple)
        .iter()
        .map(|&(query, weight)| weight as f64 / (instance.clean_cardinality(query) + 1) as f64)
        .sum()
}
