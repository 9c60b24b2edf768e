//! Bounded data-drift attacks against cardinality estimators.
//!
//! A training database that drifts by even a handful of tuples can poison
//! every estimator trained on it, because accurate estimators mirror the
//! oracle of their training state. This crate models that threat: it
//! extracts per-tuple joint weights from materialized query results, builds
//! attack strategies (at most `K` tuple deletions or duplications) that
//! maximize the smoothed total Qerror of the poisoned-state oracle against
//! the clean state, and evaluates the damage and two countermeasures.
//!
//! The interesting structure lives in the objective: delete-only attacks
//! are supermodular (greedy achieves a `1 − κ` fraction of the optimum),
//! insert-only attacks are modular (greedy is exactly optimal), and graphs
//! embed into delete-only instances so that the optimum encodes a densest
//! subgraph. [`objective`] ships executable checkers for these facts,
//! [`oracle`] ships the brute-force and graph-side solvers that verify them
//! on small instances, and [`baselines`] provides the metaheuristic
//! reference attackers.

pub mod baselines;
pub mod error;
pub mod evaluate;
pub mod graph;
pub mod greedy;
pub mod ingest;
pub mod instance;
pub mod objective;
pub mod oracle;
pub mod syngen;

pub use baselines::{ga_attack, random_attack, sa_attack, GaParams, SaParams};
pub use error::{Error, Result};
pub use evaluate::{
    ensemble_combine, evaluate, evaluate_oracle, fit_ensemble_weights, noise_defense,
    oracle_estimate, oracle_estimates, Percentiles, QerrorReport,
};
pub use graph::Graph;
pub use greedy::{
    greedy_attack, greedy_attack_configured, greedy_attack_restricted, GainSemantics, GreedyStep,
    GreedyTrace, OpKind, OpMode,
};
pub use ingest::{extract_joint_weights, load_grouped_counts, GroupedRecord, ResultRow};
pub use instance::{
    poisoned_cardinality, validate_strategy, AttackInstance, AttackStrategy, JointWeightMatrix,
    QueryId, StrategyVerdict, StrategyViolation, TupleId,
};
pub use objective::{
    check_modularity, check_supermodularity, objective_eq3, objective_labeled, qerror, Dominance,
    ObjectiveValue,
};
pub use oracle::{
    brute_force_optimum, build_dks_gadget, estimate_kappa, DksGadget, ExactSolution, KappaEstimate,
};
pub use syngen::{generate, SupportSpec, SynSpec, WeightDist};
