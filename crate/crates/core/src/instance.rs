//! Core data model: sparse joint-weight matrices, attack instances, and
//! bounded per-tuple attack strategies.
//!
//! An [`AttackInstance`] is everything the attacker holds: the joint weight
//! `w_ij` of every tuple `t_i` against every workload query `q_j`, the clean
//! cardinalities `C_j`, and the operation budget `K`. Cardinalities decompose
//! linearly over the attacked relation's tuples (`C_j = Σ_i w_ij`), which is
//! what makes cardinality drift under tuple edits exactly computable.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of a tuple within the attacked relation. Indices are dense `0..N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TupleId(pub usize);

/// Index of a query within the workload. Indices are dense `0..M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QueryId(pub usize);

impl fmt::Display for TupleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

impl fmt::Display for QueryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{}", self.0)
    }
}

/// Sparse joint-weight matrix `w_ij` between `N` tuples and `M` queries.
///
/// Stored query-major (the objective and the greedy gain loop iterate a
/// query's supporting tuples), with a tuple-major inverted index built once
/// at construction so per-tuple updates touch only `deg(t)` queries.
/// Absent entries mean `w_ij = 0`; stored entries are strictly positive and
/// sorted by the secondary index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointWeightMatrix {
    n_tuples: usize,
    n_queries: usize,
    by_query: Vec<Vec<(usize, u64)>>,
    by_tuple: Vec<Vec<(usize, u64)>>,
}

impl JointWeightMatrix {
    /// Builds a matrix from `(query, tuple, weight)` entries.
    ///
    /// Duplicate `(query, tuple)` pairs are rejected; zero weights are
    /// accepted and dropped (they are indistinguishable from absent entries).
    pub fn from_entries<I>(n_tuples: usize, n_queries: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, u64)>,
    {
        let mut by_query: Vec<Vec<(usize, u64)>> = vec![Vec::new(); n_queries];
        for (query, tuple, weight) in entries {
            if query >= n_queries {
                return Err(Error::QueryOutOfRange { query, n_queries });
            }
            if tuple >= n_tuples {
                return Err(Error::TupleOutOfRange { tuple, n_tuples });
            }
            if weight == 0 {
                continue;
            }
            by_query[query].push((tuple, weight));
        }
        for (query, row) in by_query.iter_mut().enumerate() {
            row.sort_unstable_by_key(|&(tuple, _)| tuple);
            if row.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::Construction(format!(
                    "duplicate weight entry for query {query}"
                )));
            }
        }
        let by_tuple = invert(n_tuples, &by_query);
        Ok(Self { n_tuples, n_queries, by_query, by_tuple })
    }

    pub fn n_tuples(&self) -> usize {
        self.n_tuples
    }

    pub fn n_queries(&self) -> usize {
        self.n_queries
    }

    /// Number of stored (nonzero) entries.
    pub fn nnz(&self) -> usize {
        self.by_query.iter().map(Vec::len).sum()
    }

    /// `(tuple, weight)` entries supporting `query`, sorted by tuple index.
    pub fn query_entries(&self, query: usize) -> &[(usize, u64)] {
        &self.by_query[query]
    }

    /// `(query, weight)` entries of `tuple` from the inverted index.
    pub fn tuple_entries(&self, tuple: usize) -> &[(usize, u64)] {
        &self.by_tuple[tuple]
    }

    /// Per-query weight sums `Σ_i w_ij`.
    pub fn weight_sums(&self) -> Vec<u64> {
        self.by_query
            .iter()
            .map(|row| row.iter().map(|&(_, w)| w).sum())
            .collect()
    }
}

fn invert(n_tuples: usize, by_query: &[Vec<(usize, u64)>]) -> Vec<Vec<(usize, u64)>> {
    let mut by_tuple: Vec<Vec<(usize, u64)>> = vec![Vec::new(); n_tuples];
    for (query, row) in by_query.iter().enumerate() {
        for &(tuple, weight) in row {
            by_tuple[tuple].push((query, weight));
        }
    }
    by_tuple
}

/// The full ground truth an attacker holds about one relation: joint
/// weights, clean per-query cardinalities, and the operation budget.
#[derive(Debug, Clone)]
pub struct AttackInstance {
    weights: JointWeightMatrix,
    clean_cardinalities: Vec<u64>,
    budget: u64,
}

impl AttackInstance {
    /// Builds an instance with explicit cardinalities.
    ///
    /// Requires `C_j >= Σ_i w_ij` for every query so that no valid strategy
    /// can drive a poisoned cardinality negative. Instances built from full
    /// result sets satisfy the stronger equality `C_j = Σ_i w_ij`, checkable
    /// via [`AttackInstance::satisfies_linear_decomposition`].
    pub fn new(
        weights: JointWeightMatrix,
        clean_cardinalities: Vec<u64>,
        budget: u64,
    ) -> Result<Self> {
        if budget == 0 {
            return Err(Error::Construction("budget must be at least 1".into()));
        }
        if weights.n_queries() == 0 || weights.n_tuples() == 0 {
            return Err(Error::Construction(
                "instance needs at least one tuple and one query".into(),
            ));
        }
        if clean_cardinalities.len() != weights.n_queries() {
            return Err(Error::Construction(format!(
                "expected {} cardinalities, got {}",
                weights.n_queries(),
                clean_cardinalities.len()
            )));
        }
        for (query, (&card, sum)) in clean_cardinalities
            .iter()
            .zip(weights.weight_sums())
            .enumerate()
        {
            if card < sum {
                return Err(Error::Construction(format!(
                    "query {query}: cardinality {card} below weight sum {sum}"
                )));
            }
        }
        Ok(Self { weights, clean_cardinalities, budget })
    }

    /// Builds an instance whose cardinalities are the per-query weight sums,
    /// i.e. the linear decomposition holds exactly.
    pub fn from_weights(weights: JointWeightMatrix, budget: u64) -> Result<Self> {
        let cards = weights.weight_sums();
        Self::new(weights, cards, budget)
    }

    /// Whether `C_j = Σ_i w_ij` holds exactly for every query.
    pub fn satisfies_linear_decomposition(&self) -> bool {
        self.clean_cardinalities == self.weights.weight_sums()
    }

    pub fn weights(&self) -> &JointWeightMatrix {
        &self.weights
    }

    pub fn n_tuples(&self) -> usize {
        self.weights.n_tuples()
    }

    pub fn n_queries(&self) -> usize {
        self.weights.n_queries()
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn clean_cardinality(&self, query: usize) -> u64 {
        self.clean_cardinalities[query]
    }

    pub fn clean_cardinalities(&self) -> &[u64] {
        &self.clean_cardinalities
    }

    /// Same instance with a different budget.
    pub fn with_budget(&self, budget: u64) -> Result<Self> {
        Self::new(self.weights.clone(), self.clean_cardinalities.clone(), budget)
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let reader = BufReader::new(File::open(path)?);
        let file: InstanceFile = serde_json::from_reader(reader)?;
        let matrix = JointWeightMatrix::from_entries(file.n_tuples, file.n_queries, file.weights)?;
        Self::new(matrix, file.cardinalities, file.budget)
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let writer = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(writer, &self.to_file())?;
        Ok(())
    }

    fn to_file(&self) -> InstanceFile {
        let mut entries = Vec::with_capacity(self.weights.nnz());
        for query in 0..self.n_queries() {
            for &(tuple, weight) in self.weights.query_entries(query) {
                entries.push((query, tuple, weight));
            }
        }
        InstanceFile {
            n_tuples: self.n_tuples(),
            n_queries: self.n_queries(),
            budget: self.budget,
            cardinalities: self.clean_cardinalities.clone(),
            weights: entries,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    n_tuples: usize,
    n_queries: usize,
    budget: u64,
    cardinalities: Vec<u64>,
    weights: Vec<(usize, usize, u64)>,
}

/// Per-tuple signed operation codes under a shared budget.
///
/// `β = -1` deletes the tuple, `β = k > 0` inserts `k` duplicates, absent
/// tuples are untouched. A strategy is valid for an instance when every
/// `β ∈ {-1, 0, …, K}` and `Σ|β| ≤ K`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AttackStrategy {
    betas: BTreeMap<usize, i64>,
}

impl AttackStrategy {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Collects `(tuple, beta)` pairs; zero betas are dropped, later pairs
    /// overwrite earlier ones for the same tuple.
    pub fn from_betas<I: IntoIterator<Item = (usize, i64)>>(betas: I) -> Self {
        let mut s = Self::default();
        for (tuple, beta) in betas {
            s.set_beta(tuple, beta);
        }
        s
    }

    /// Strategy deleting every tuple in `tuples`.
    pub fn delete_set<I: IntoIterator<Item = usize>>(tuples: I) -> Self {
        Self::from_betas(tuples.into_iter().map(|t| (t, -1)))
    }

    /// Strategy inserting one duplicate of every tuple in `tuples`.
    pub fn insert_set<I: IntoIterator<Item = usize>>(tuples: I) -> Self {
        Self::from_betas(tuples.into_iter().map(|t| (t, 1)))
    }

    pub fn set_beta(&mut self, tuple: usize, beta: i64) {
        if beta == 0 {
            self.betas.remove(&tuple);
        } else {
            self.betas.insert(tuple, beta);
        }
    }

    pub fn beta(&self, tuple: usize) -> i64 {
        self.betas.get(&tuple).copied().unwrap_or(0)
    }

    /// Nonzero `(tuple, beta)` pairs in ascending tuple order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, i64)> + '_ {
        self.betas.iter().map(|(&t, &b)| (t, b))
    }

    pub fn is_empty(&self) -> bool {
        self.betas.is_empty()
    }

    /// Budget consumed: `Σ|β|`.
    pub fn ops_used(&self) -> u64 {
        self.betas.values().map(|b| b.unsigned_abs()).sum()
    }

    pub fn deletions(&self) -> impl Iterator<Item = usize> + '_ {
        self.iter().filter(|&(_, b)| b < 0).map(|(t, _)| t)
    }

    pub fn insertions(&self) -> impl Iterator<Item = (usize, i64)> + '_ {
        self.iter().filter(|&(_, b)| b > 0)
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let reader = BufReader::new(File::open(path)?);
        let file: StrategyFile = serde_json::from_reader(reader)?;
        Ok(Self::from_betas(file.betas))
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let writer = BufWriter::new(File::create(path)?);
        let file = StrategyFile { betas: self.iter().collect() };
        serde_json::to_writer_pretty(writer, &file)?;
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct StrategyFile {
    betas: Vec<(usize, i64)>,
}

/// One violated strategy constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StrategyViolation {
    BudgetExceeded { used: u64, budget: u64 },
    BetaOutOfRange { tuple: usize, beta: i64, budget: u64 },
    TupleOutOfRange { tuple: usize, n_tuples: usize },
}

impl fmt::Display for StrategyViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::BudgetExceeded { used, budget } => {
                write!(f, "budget exceeded: Σ|β| = {used} > K = {budget}")
            }
            Self::BetaOutOfRange { tuple, beta, budget } => {
                write!(f, "tuple {tuple}: β = {beta} outside {{-1, 0, …, {budget}}}")
            }
            Self::TupleOutOfRange { tuple, n_tuples } => {
                write!(f, "tuple {tuple} out of range (relation has {n_tuples} tuples)")
            }
        }
    }
}

/// Outcome of [`validate_strategy`]: either valid or the complete list of
/// violated constraints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrategyVerdict {
    violations: Vec<StrategyViolation>,
}

impl StrategyVerdict {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violations(&self) -> &[StrategyViolation] {
        &self.violations
    }

    /// Converts the verdict into a `Result`, erroring on any violation.
    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidStrategy { violations: self.violations })
        }
    }
}

/// Checks every strategy constraint against `instance` and reports all
/// violations rather than stopping at the first.
pub fn validate_strategy(instance: &AttackInstance, strategy: &AttackStrategy) -> StrategyVerdict {
    let budget = instance.budget();
    let n_tuples = instance.n_tuples();
    let mut violations = Vec::new();
    for (tuple, beta) in strategy.iter() {
        if tuple >= n_tuples {
            violations.push(StrategyViolation::TupleOutOfRange { tuple, n_tuples });
        }
        if beta < -1 || beta > budget as i64 {
            violations.push(StrategyViolation::BetaOutOfRange { tuple, beta, budget });
        }
    }
    let used = strategy.ops_used();
    if used > budget {
        violations.push(StrategyViolation::BudgetExceeded { used, budget });
    }
    StrategyVerdict { violations }
}

/// Cardinality of `query` on the poisoned state: `C_j + Σ_i β_i · w_ij`,
/// in exact integer arithmetic.
pub fn poisoned_cardinality(
    instance: &AttackInstance,
    strategy: &AttackStrategy,
    query: usize,
) -> Result<u64> {
    if query >= instance.n_queries() {
        return Err(Error::QueryOutOfRange { query, n_queries: instance.n_queries() });
    }
    let mut value = instance.clean_cardinality(query) as i128;
    for &(tuple, weight) in instance.weights().query_entries(query) {
        value += strategy.beta(tuple) as i128 * weight as i128;
    }
    Ok(u64::try_from(value).expect("poisoned cardinality is non-negative for valid strategies"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_instance() -> AttackInstance {
        // 3 tuples, 2 queries: q0 <- {t0: 4, t1: 6}, q1 <- {t2: 10}
        let m = JointWeightMatrix::from_entries(3, 2, [(0, 0, 4), (0, 1, 6), (1, 2, 10)]).unwrap();
        AttackInstance::from_weights(m, 3).unwrap()
    }

    #[test]
    fn identity_strategy_keeps_cardinalities() {
        let inst = small_instance();
        let s = AttackStrategy::empty();
        assert_eq!(poisoned_cardinality(&inst, &s, 0).unwrap(), 10);
        assert_eq!(poisoned_cardinality(&inst, &s, 1).unwrap(), 10);
    }

    #[test]
    fn gadget_query_hits_zero_when_both_tuples_deleted() {
        let x = 1_000_000u64;
        let m = JointWeightMatrix::from_entries(2, 1, [(0, 0, x), (0, 1, x)]).unwrap();
        let inst = AttackInstance::from_weights(m, 2).unwrap();
        assert_eq!(inst.clean_cardinality(0), 2 * x);
        let s = AttackStrategy::delete_set([0, 1]);
        assert_eq!(poisoned_cardinality(&inst, &s, 0).unwrap(), 0);
    }

    #[test]
    fn poisoned_cardinality_matches_dense_recomputation() {
        // N=5, M=3 with a mixed strategy, checked against a dense
        // matrix-vector product done by hand.
        let entries = [
            (0, 0, 3u64),
            (0, 2, 5),
            (0, 4, 2),
            (1, 1, 7),
            (1, 2, 1),
            (2, 0, 4),
            (2, 3, 9),
        ];
        let mut dense = [[0i128; 3]; 5];
        for &(q, t, w) in &entries {
            dense[t][q] = w as i128;
        }
        let m = JointWeightMatrix::from_entries(5, 3, entries).unwrap();
        let inst = AttackInstance::from_weights(m, 10).unwrap();
        let s = AttackStrategy::from_betas([(0, -1), (1, 2), (2, 1), (4, -1)]);
        let betas = [-1i128, 2, 1, 0, -1];
        #[allow(clippy::needless_range_loop)]
        for q in 0..3 {
            let mut expect = inst.clean_cardinality(q) as i128;
            for t in 0..5 {
                expect += betas[t] * dense[t][q];
            }
            assert_eq!(poisoned_cardinality(&inst, &s, q).unwrap() as i128, expect);
        }
    }

    #[test]
    fn out_of_range_query_is_an_error() {
        let inst = small_instance();
        let s = AttackStrategy::empty();
        assert!(matches!(
            poisoned_cardinality(&inst, &s, 2),
            Err(Error::QueryOutOfRange { query: 2, n_queries: 2 })
        ));
    }

    #[test]
    fn all_zero_strategy_is_valid() {
        let inst = small_instance();
        assert!(validate_strategy(&inst, &AttackStrategy::empty()).is_valid());
    }

    #[test]
    fn budget_violation_is_reported() {
        let inst = small_instance(); // K = 3
        let s = AttackStrategy::from_betas([(0, 2), (1, 2)]);
        let verdict = validate_strategy(&inst, &s);
        assert_eq!(
            verdict.violations(),
            &[StrategyViolation::BudgetExceeded { used: 4, budget: 3 }]
        );
    }

    #[test]
    fn beta_below_minus_one_is_reported() {
        let inst = small_instance();
        let s = AttackStrategy::from_betas([(0, -2)]);
        let verdict = validate_strategy(&inst, &s);
        assert_eq!(
            verdict.violations(),
            &[StrategyViolation::BetaOutOfRange { tuple: 0, beta: -2, budget: 3 }]
        );
    }

    #[test]
    fn duplicate_weight_entries_are_rejected() {
        let err = JointWeightMatrix::from_entries(2, 1, [(0, 0, 1), (0, 0, 2)]).unwrap_err();
        assert!(matches!(err, Error::Construction(_)));
    }

    #[test]
    fn cardinality_below_weight_sum_is_rejected() {
        let m = JointWeightMatrix::from_entries(2, 1, [(0, 0, 5), (0, 1, 5)]).unwrap();
        assert!(AttackInstance::new(m, vec![9], 1).is_err());
    }

    #[test]
    fn instance_json_round_trips() {
        let inst = small_instance();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("instance.json");
        inst.save_json(&path).unwrap();
        let back = AttackInstance::load_json(&path).unwrap();
        assert_eq!(back.n_tuples(), inst.n_tuples());
        assert_eq!(back.budget(), inst.budget());
        assert_eq!(back.clean_cardinalities(), inst.clean_cardinalities());
        assert_eq!(back.weights(), inst.weights());
    }

    #[test]
    fn strategy_json_round_trips_and_drops_zeros() {
        let s = AttackStrategy::from_betas([(3, -1), (7, 2), (9, 0)]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("strategy.json");
        s.save_json(&path).unwrap();
        let back = AttackStrategy::load_json(&path).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.beta(9), 0);
        assert_eq!(back.ops_used(), 3);
    }
}
