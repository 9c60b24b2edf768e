//! Exact brute-force solvers, curvature estimation, and the graph-derived
//! gadget family.
//!
//! This module is the verification backbone of the crate: it enumerates
//! every candidate strategy on small instances to obtain true optima, it
//! estimates the curvature `κ` that bounds the greedy approximation ratio,
//! and it builds gadget instances from graphs so that the attack optimum
//! can be cross-checked against an independent densest-subgraph solver.
//!
//! Evaluation here deliberately avoids the production objective path: the
//! enumerator keeps its own dense poisoned-cardinality state so that a bug
//! in the shared code cannot cancel out of both sides of a comparison.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::greedy::OpMode;
use crate::instance::{AttackInstance, AttackStrategy, JointWeightMatrix};
use crate::objective::{smoothed_term, ObjectiveValue};

/// Default cap on the number of enumerated candidates.
pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

/// A graph encoded as an attack instance: one tuple per vertex, one query
/// per edge, both endpoints carrying a common weight `x` so that every
/// query's clean cardinality is `2x`.
///
/// With `x` large, fully covering a query (deleting both endpoints) is worth
/// `2x + 1` while half-covering it is worth about 2, so the delete-only
/// optimum must pick a maximum-density vertex set — the source graph is kept
/// for exactly that cross-check.
#[derive(Debug, Clone)]
pub struct DksGadget {
    pub graph: Graph,
    pub k_param: u64,
    pub x_weight: u64,
    pub instance: AttackInstance,
}

/// Builds the gadget instance for a graph. Construction is `O(V·E)`.
pub fn build_dks_gadget(graph: Graph, k_param: u64, x_weight: u64) -> Result<DksGadget> {
    if x_weight == 0 {
        return Err(Error::Construction("gadget weight x must be at least 1".into()));
    }
    if graph.n_edges() == 0 {
        return Err(Error::Construction("gadget graph needs at least one edge".into()));
    }
    let entries: Vec<(usize, usize, u64)> = graph
        .edges()
        .iter()
        .enumerate()
        .flat_map(|(query, &(u, v))| [(query, u, x_weight), (query, v, x_weight)])
        .collect();
    let matrix = JointWeightMatrix::from_entries(graph.n_vertices(), graph.n_edges(), entries)?;
    let instance = AttackInstance::from_weights(matrix, k_param)?;
    debug_assert!(instance
        .clean_cardinalities()
        .iter()
        .all(|&c| c == 2 * x_weight));
    Ok(DksGadget { graph, k_param, x_weight, instance })
}

/// A global optimum with its witness strategy and the number of candidates
/// examined to find it.
#[derive(Debug, Clone)]
pub struct ExactSolution {
    pub optimum: ObjectiveValue,
    pub strategy: AttackStrategy,
    pub enumerated: u64,
}

/// Enumerates every valid strategy of the given mode and returns the global
/// objective optimum.
///
/// The candidate count is computed up front; instances whose count exceeds
/// the cap are rejected with a capacity error carrying that count. Ties are
/// broken toward the lexicographically smallest beta vector.
pub fn brute_force_optimum(instance: &AttackInstance, mode: OpMode) -> Result<ExactSolution> {
    brute_force_optimum_capped(instance, mode, DEFAULT_ENUMERATION_CAP)
}

pub fn brute_force_optimum_capped(
    instance: &AttackInstance,
    mode: OpMode,
    cap: u64,
) -> Result<ExactSolution> {
    let required = candidate_count(instance.n_tuples(), instance.budget(), mode);
    if required > cap as u128 {
        return Err(Error::Capacity { required, cap });
    }

    let mut enumerator = Enumerator::new(instance, mode);
    enumerator.run();
    let best_betas = enumerator.best_betas;

    let optimum = eval_betas_full(instance, &best_betas);
    let strategy =
        AttackStrategy::from_betas(best_betas.into_iter().enumerate());
    Ok(ExactSolution { optimum, strategy, enumerated: enumerator.count })
}

/// Number of valid beta vectors for `n` tuples under budget `k` in `mode`.
fn candidate_count(n: usize, k: u64, mode: OpMode) -> u128 {
    // ways[b] = number of assignments of the tuples seen so far using
    // exactly b budget units
    let k = k as usize;
    let mut ways = vec![0u128; k + 1];
    ways[0] = 1;
    for _ in 0..n {
        let mut next = ways.clone(); // beta = 0
        for b in 0..=k {
            if ways[b] == 0 {
                continue;
            }
            if mode.allows_delete() && b < k {
                next[b + 1] = next[b + 1].saturating_add(ways[b]);
            }
            if mode.allows_insert() {
                for ins in 1..=(k - b) {
                    next[b + ins] = next[b + ins].saturating_add(ways[b]);
                }
            }
        }
        ways = next;
    }
    ways.iter().fold(0u128, |acc, &w| acc.saturating_add(w))
}

struct Enumerator<'a> {
    instance: &'a AttackInstance,
    mode: OpMode,
    budget: u64,
    poisoned: Vec<i64>,
    terms: Vec<f64>,
    total: f64,
    betas: Vec<i64>,
    best_total: f64,
    best_betas: Vec<i64>,
    count: u64,
}

impl<'a> Enumerator<'a> {
    fn new(instance: &'a AttackInstance, mode: OpMode) -> Self {
        let m = instance.n_queries();
        let poisoned: Vec<i64> = instance.clean_cardinalities().iter().map(|&c| c as i64).collect();
        let terms = vec![1.0f64; m];
        let n = instance.n_tuples();
        Self {
            instance,
            mode,
            budget: instance.budget(),
            poisoned,
            total: m as f64,
            terms,
            betas: vec![0; n],
            best_total: f64::NEG_INFINITY,
            best_betas: vec![0; n],
            count: 0,
        }
    }

    fn run(&mut self) {
        self.recurse(0, self.budget);
    }

    fn recurse(&mut self, tuple: usize, remaining: u64) {
        self.record_candidate();
        if remaining == 0 {
            return;
        }
        for t in tuple..self.instance.n_tuples() {
            if self.mode.allows_delete() {
                self.set_beta(t, -1);
                self.recurse(t + 1, remaining - 1);
                self.set_beta(t, 0);
            }
            if self.mode.allows_insert() {
                for ins in 1..=remaining {
                    self.set_beta(t, ins as i64);
                    self.recurse(t + 1, remaining - ins);
                }
                self.set_beta(t, 0);
            }
        }
    }

    fn record_candidate(&mut self) {
        self.count += 1;
        // replace on strictly larger value (relative margin), keep the
        // lexicographically smaller witness on ties
        if self.total > self.best_total * (1.0 + 1e-12) || self.best_total == f64::NEG_INFINITY {
            self.best_total = self.total;
            self.best_betas.copy_from_slice(&self.betas);
        } else if self.total > self.best_total * (1.0 - 1e-12)
            && lex_less(&self.betas, &self.best_betas)
        {
            self.best_betas.copy_from_slice(&self.betas);
        }
    }

    fn set_beta(&mut self, tuple: usize, beta: i64) {
        let delta = beta - self.betas[tuple];
        self.betas[tuple] = beta;
        for &(query, weight) in self.instance.weights().tuple_entries(tuple) {
            self.poisoned[query] += delta * weight as i64;
            let term = smoothed_term(
                self.instance.clean_cardinality(query),
                u64::try_from(self.poisoned[query]).expect("valid betas keep cardinality >= 0"),
            );
            self.total += term - self.terms[query];
            self.terms[query] = term;
        }
    }
}

fn lex_less(a: &[i64], b: &[i64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x != y {
            return x < y;
        }
    }
    false
}

/// From-scratch evaluation of a dense beta vector, independent of the
/// incremental enumerator state.
fn eval_betas_full(instance: &AttackInstance, betas: &[i64]) -> ObjectiveValue {
    let per_query: Vec<f64> = (0..instance.n_queries())
        .map(|q| {
            let mut value = instance.clean_cardinality(q) as i128;
            for &(tuple, weight) in instance.weights().query_entries(q) {
                value += betas[tuple] as i128 * weight as i128;
            }
            smoothed_term(instance.clean_cardinality(q), value as u64)
        })
        .collect();
    ObjectiveValue { total: per_query.iter().sum(), per_query }
}

/// Curvature estimate for the delete-only objective.
#[derive(Debug, Clone, Copy)]
pub struct KappaEstimate {
    pub value: f64,
    /// True when every subset of every `R_x − t` was enumerated, in which
    /// case the estimate is exact.
    pub exhaustive: bool,
}

#[derive(Debug, Clone)]
pub struct KappaOptions {
    /// Subset size cap; defaults to `2K`.
    pub max_subset_size: Option<usize>,
    /// Enumerate exhaustively up to this many tuples, sample beyond.
    pub exhaustive_limit: usize,
    /// Number of sampled subsets when beyond the exhaustive limit.
    pub samples: usize,
    pub seed: u64,
}

impl Default for KappaOptions {
    fn default() -> Self {
        Self { max_subset_size: None, exhaustive_limit: 14, samples: 2000, seed: 0xDACA }
    }
}

/// Estimates the curvature `κ = 1 − min_t min_{A,B} ΔQ(A,t)/ΔQ(B,t)` of the
/// delete-only objective, where `ΔQ(X,t) = Q(X∪{t}) − Q(X)` and the minimum
/// runs over subsets of `R_x − t` with strictly positive denominators.
///
/// Exhaustive over all subsets up to the size cap for small relations;
/// sampled (and flagged as such) beyond. Greedy delete-only achieves at
/// least `(1 − κ)` of the optimum.
pub fn estimate_kappa(instance: &AttackInstance) -> Result<KappaEstimate> {
    estimate_kappa_with(instance, &KappaOptions::default())
}

pub fn estimate_kappa_with(
    instance: &AttackInstance,
    options: &KappaOptions,
) -> Result<KappaEstimate> {
    let n = instance.n_tuples();
    let size_cap = options
        .max_subset_size
        .unwrap_or(2 * instance.budget() as usize)
        .min(n.saturating_sub(1));

    let mut stats = KappaStats::new(instance);
    let exhaustive;
    if n <= options.exhaustive_limit {
        exhaustive = size_cap >= n.saturating_sub(1);
        let mut deleted_sums = vec![0u64; instance.n_queries()];
        let mut members = Vec::new();
        enumerate_subsets(instance, 0, size_cap, &mut members, &mut deleted_sums, &mut stats);
    } else {
        exhaustive = false;
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(options.seed);
        let mut in_subset = vec![false; n];
        stats.observe_subset(&[], &vec![0u64; instance.n_queries()], &in_subset);
        for _ in 0..options.samples {
            let size = rng.gen_range(0..=size_cap);
            let members = rand::seq::index::sample(&mut rng, n, size).into_vec();
            let mut deleted_sums = vec![0u64; instance.n_queries()];
            for &t in &members {
                in_subset[t] = true;
                for &(query, weight) in instance.weights().tuple_entries(t) {
                    deleted_sums[query] += weight;
                }
            }
            stats.observe_subset(&members, &deleted_sums, &in_subset);
            for &t in &members {
                in_subset[t] = false;
            }
        }
    }

    let value = stats.kappa()?;
    Ok(KappaEstimate { value, exhaustive })
}

/// Marginal-gain extrema per tuple, accumulated over observed subsets.
struct KappaStats<'a> {
    instance: &'a AttackInstance,
    min_gain: Vec<f64>,
    max_gain: Vec<f64>,
}

/// Denominators below this threshold are treated as zero and excluded.
const KAPPA_GAIN_FLOOR: f64 = 1e-12;

impl<'a> KappaStats<'a> {
    fn new(instance: &'a AttackInstance) -> Self {
        let n = instance.n_tuples();
        Self { instance, min_gain: vec![f64::INFINITY; n], max_gain: vec![f64::NEG_INFINITY; n] }
    }

    /// Records the marginal deletion gain of every tuple outside the subset.
    #[allow(clippy::needless_range_loop)] // t is a tuple id used against several arrays
    fn observe_subset(&mut self, _members: &[usize], deleted_sums: &[u64], in_subset: &[bool]) {
        for t in 0..self.instance.n_tuples() {
            if in_subset[t] {
                continue;
            }
            let entries = self.instance.weights().tuple_entries(t);
            if entries.is_empty() {
                continue;
            }
            let mut gain = 0.0;
            for &(query, weight) in entries {
                let clean = self.instance.clean_cardinality(query);
                let before = clean - deleted_sums[query];
                gain += smoothed_term(clean, before - weight) - smoothed_term(clean, before);
            }
            self.min_gain[t] = self.min_gain[t].min(gain);
            self.max_gain[t] = self.max_gain[t].max(gain);
        }
    }

    fn kappa(&self) -> Result<f64> {
        let mut min_ratio = f64::INFINITY;
        for t in 0..self.instance.n_tuples() {
            if self.max_gain[t] <= KAPPA_GAIN_FLOOR {
                continue; // no strictly positive denominator for this tuple
            }
            min_ratio = min_ratio.min(self.min_gain[t] / self.max_gain[t]);
        }
        if min_ratio.is_infinite() {
            return Err(Error::Degenerate(
                "no tuple has any effect on any query; curvature is undefined".into(),
            ));
        }
        Ok((1.0 - min_ratio).clamp(0.0, 1.0))
    }
}

fn enumerate_subsets(
    instance: &AttackInstance,
    next: usize,
    remaining: usize,
    members: &mut Vec<usize>,
    deleted_sums: &mut Vec<u64>,
    stats: &mut KappaStats,
) {
    let mut in_subset = vec![false; instance.n_tuples()];
    for &t in members.iter() {
        in_subset[t] = true;
    }
    enumerate_subsets_inner(instance, next, remaining, members, deleted_sums, &mut in_subset, stats);
}

fn enumerate_subsets_inner(
    instance: &AttackInstance,
    next: usize,
    remaining: usize,
    members: &mut Vec<usize>,
    deleted_sums: &mut Vec<u64>,
    in_subset: &mut Vec<bool>,
    stats: &mut KappaStats,
) {
    stats.observe_subset(members, deleted_sums, in_subset);
    if remaining == 0 {
        return;
    }
    for t in next..instance.n_tuples() {
        members.push(t);
        in_subset[t] = true;
        for &(query, weight) in instance.weights().tuple_entries(t) {
            deleted_sums[query] += weight;
        }
        enumerate_subsets_inner(instance, t + 1, remaining - 1, members, deleted_sums, in_subset, stats);
        for &(query, weight) in instance.weights().tuple_entries(t) {
            deleted_sums[query] -= weight;
        }
        in_subset[t] = false;
        members.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greedy::greedy_attack_restricted;
    use crate::objective::objective_eq3;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn instance_from(
        n_tuples: usize,
        n_queries: usize,
        entries: &[(usize, usize, u64)],
        budget: u64,
    ) -> AttackInstance {
        let m = JointWeightMatrix::from_entries(n_tuples, n_queries, entries.iter().copied())
            .unwrap();
        AttackInstance::from_weights(m, budget).unwrap()
    }

    fn random_instance(
        rng: &mut ChaCha8Rng,
        n_tuples: usize,
        n_queries: usize,
        budget: u64,
    ) -> AttackInstance {
        let mut entries = Vec::new();
        for q in 0..n_queries {
            for t in 0..n_tuples {
                if rng.gen_bool(0.4) {
                    entries.push((q, t, rng.gen_range(1..=25)));
                }
            }
        }
        if entries.is_empty() {
            entries.push((0, 0, 1));
        }
        instance_from(n_tuples, n_queries, &entries, budget)
    }

    fn random_graph(rng: &mut ChaCha8Rng, n: usize, edge_prob: f64) -> Graph {
        loop {
            let mut edges = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    if rng.gen_bool(edge_prob) {
                        edges.push((u, v));
                    }
                }
            }
            if !edges.is_empty() {
                return Graph::new(n, edges).unwrap();
            }
        }
    }

    #[test]
    fn single_edge_gadget_optimum_is_two_x_plus_one() {
        let x = 1_000_000u64;
        let graph = Graph::new(2, [(0, 1)]).unwrap();
        let gadget = build_dks_gadget(graph, 2, x).unwrap();
        let exact = brute_force_optimum(&gadget.instance, OpMode::DeleteOnly).unwrap();
        assert_eq!(exact.optimum.per_query[0], (2 * x + 1) as f64);
        let deleted: Vec<usize> = exact.strategy.deletions().collect();
        assert_eq!(deleted, vec![0, 1]);
    }

    #[test]
    fn triangle_gadget_optimum_deletes_one_edge() {
        let x = 1_000_000u64;
        let graph = Graph::new(3, [(0, 1), (0, 2), (1, 2)]).unwrap();
        let gadget = build_dks_gadget(graph, 2, x).unwrap();
        let exact = brute_force_optimum(&gadget.instance, OpMode::DeleteOnly).unwrap();
        let xf = x as f64;
        let expect = (2.0 * xf + 1.0) + 2.0 * (2.0 * xf + 1.0) / (xf + 1.0);
        assert!((exact.optimum.total - expect).abs() <= 1e-9 * expect);
        assert_eq!(exact.strategy.deletions().count(), 2);
    }

    #[test]
    fn clique_gadget_optimum_deletes_exactly_the_clique() {
        // 7 vertices, 9 edges: a 4-clique on {3,4,5,6} plus a triangle on
        // {0,1,2}; the clique is the unique densest 4-vertex subgraph
        let graph = Graph::new(
            7,
            [(0, 1), (1, 2), (0, 2), (3, 4), (3, 5), (3, 6), (4, 5), (4, 6), (5, 6)],
        )
        .unwrap();
        let gadget = build_dks_gadget(graph, 4, 1_000_000).unwrap();
        let exact = brute_force_optimum(&gadget.instance, OpMode::DeleteOnly).unwrap();
        let deleted: Vec<usize> = exact.strategy.deletions().collect();
        assert_eq!(deleted, vec![3, 4, 5, 6]);
        // 6 covered edges at 2x+1 plus 3 untouched edges at 1
        let x = 1_000_000f64;
        let expect = 6.0 * (2.0 * x + 1.0) + 3.0;
        assert!((exact.optimum.total - expect).abs() <= 1e-9 * expect);
    }

    #[test]
    fn gadget_rejects_bad_graphs() {
        assert!(Graph::new(2, [(0, 0)]).is_err());
        let graph = Graph::new(3, []).unwrap();
        assert!(build_dks_gadget(graph, 1, 10).is_err());
    }

    #[test]
    fn single_tuple_delete_only_optimum() {
        let inst = instance_from(1, 1, &[(0, 0, 5)], 1);
        let exact = brute_force_optimum(&inst, OpMode::DeleteOnly).unwrap();
        assert_eq!(exact.optimum.total, 6.0);
        assert_eq!(exact.enumerated, 2); // empty set and {t0}
    }

    #[test]
    fn capacity_error_carries_the_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let inst = random_instance(&mut rng, 40, 3, 8);
        let err = brute_force_optimum_capped(&inst, OpMode::DeleteOnly, 1000).unwrap_err();
        match err {
            Error::Capacity { required, cap } => {
                let expect: u128 = (0..=8).map(|s| crate::graph::binomial(40, s)).sum();
                assert_eq!(required, expect);
                assert_eq!(cap, 1000);
            }
            other => panic!("expected capacity error, got {other:?}"),
        }
    }

    #[test]
    fn enumerated_count_matches_the_dp_prediction() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for mode in [OpMode::DeleteOnly, OpMode::InsertOnly, OpMode::Mixed] {
            let inst = random_instance(&mut rng, 6, 3, 3);
            let exact = brute_force_optimum(&inst, mode).unwrap();
            assert_eq!(exact.enumerated as u128, candidate_count(6, 3, mode));
        }
    }

    #[test]
    fn brute_force_dominates_greedy_in_every_mode() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..15 {
            let inst = random_instance(&mut rng, 7, 4, 3);
            for mode in [OpMode::DeleteOnly, OpMode::InsertOnly, OpMode::Mixed] {
                let exact = brute_force_optimum(&inst, mode).unwrap();
                let (greedy, _) = greedy_attack_restricted(&inst, mode);
                let greedy_val = objective_eq3(&inst, &greedy).unwrap().total;
                assert!(exact.optimum.total >= greedy_val - 1e-9 * greedy_val);
            }
        }
    }

    #[test]
    fn insert_only_greedy_is_optimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..25 {
            let inst = random_instance(&mut rng, 8, 5, 3);
            let exact = brute_force_optimum(&inst, OpMode::InsertOnly).unwrap();
            let (greedy, _) = greedy_attack_restricted(&inst, OpMode::InsertOnly);
            let greedy_val = objective_eq3(&inst, &greedy).unwrap().total;
            let diff = (exact.optimum.total - greedy_val).abs();
            assert!(diff <= 1e-12 * exact.optimum.total);
        }
    }

    #[test]
    fn mixed_optimum_on_gadgets_contains_no_insertions() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let graph = random_graph(&mut rng, 6, 0.5);
            let gadget = build_dks_gadget(graph, 3, 1_000_000).unwrap();
            let exact = brute_force_optimum(&gadget.instance, OpMode::Mixed).unwrap();
            assert_eq!(exact.strategy.insertions().count(), 0);
        }
    }

    #[test]
    fn kappa_is_zero_for_disjoint_equal_weights() {
        // every tuple deletes its own query with the same weight
        let inst = instance_from(4, 4, &[(0, 0, 7), (1, 1, 7), (2, 2, 7), (3, 3, 7)], 2);
        let k = estimate_kappa(&inst).unwrap();
        assert_eq!(k.value, 0.0);
        assert!(k.exhaustive);
    }

    #[test]
    fn kappa_is_zero_for_a_single_tuple() {
        let inst = instance_from(1, 1, &[(0, 0, 5)], 1);
        let k = estimate_kappa(&inst).unwrap();
        assert_eq!(k.value, 0.0);
    }

    #[test]
    fn kappa_errors_on_all_zero_weights() {
        let m = JointWeightMatrix::from_entries(3, 2, []).unwrap();
        let inst = AttackInstance::new(m, vec![4, 4], 2).unwrap();
        assert!(matches!(estimate_kappa(&inst), Err(Error::Degenerate(_))));
    }

    #[test]
    fn greedy_meets_the_curvature_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let inst = random_instance(&mut rng, 8, 4, 3);
            let exact = brute_force_optimum(&inst, OpMode::DeleteOnly).unwrap();
            let (greedy, _) = greedy_attack_restricted(&inst, OpMode::DeleteOnly);
            let greedy_val = objective_eq3(&inst, &greedy).unwrap().total;
            let kappa = estimate_kappa(&inst).unwrap();
            let bound = (1.0 - kappa.value) * exact.optimum.total;
            assert!(
                greedy_val >= bound - 1e-9 * exact.optimum.total,
                "greedy {greedy_val} below (1-κ̂)·OPT = {bound}"
            );
        }
    }

    #[test]
    fn gadget_optimum_matches_the_graph_side_solver() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let graph = random_graph(&mut rng, 8, 0.4);
            let k = rng.gen_range(2..=4u64);
            let gadget = build_dks_gadget(graph, k, 1_000_000).unwrap();
            let exact = brute_force_optimum(&gadget.instance, OpMode::DeleteOnly).unwrap();
            let deleted: Vec<usize> = exact.strategy.deletions().collect();
            let (best_edges, _) = gadget.graph.densest_subset(k as usize).unwrap();
            assert_eq!(gadget.graph.induced_edges(&deleted), best_edges);
        }
    }
}
