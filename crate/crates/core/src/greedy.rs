//! Greedy attack strategy generation.
//!
//! Each step scans every live tuple, scores the single deletion and the
//! single duplicate-insertion of that tuple by its marginal gain on the
//! smoothed total-Qerror objective, applies the best positive-gain
//! operation, and masks deleted tuples so they are never revisited. The
//! loop runs at most `K` steps and exits early once no operation has
//! strictly positive gain (zero-gain operations would waste budget).
//!
//! Gains are cached per tuple and recomputed only for tuples sharing a
//! query with the one just modified, which keeps a full run within
//! `O(|Res| + N·K·M)`.

use std::fmt;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::instance::{AttackInstance, AttackStrategy, TupleId};
use crate::objective::{qerror, smoothed_term};

/// Which operation types a run may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OpMode {
    Mixed,
    DeleteOnly,
    InsertOnly,
}

impl OpMode {
    pub fn allows_delete(self) -> bool {
        !matches!(self, OpMode::InsertOnly)
    }

    pub fn allows_insert(self) -> bool {
        !matches!(self, OpMode::DeleteOnly)
    }
}

impl fmt::Display for OpMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            OpMode::Mixed => "mixed",
            OpMode::DeleteOnly => "delete-only",
            OpMode::InsertOnly => "insert-only",
        };
        f.write_str(s)
    }
}

/// How candidate operations are scored.
///
/// `Objective` scores an operation by the change of the global objective
/// relative to the clean cardinalities, the semantics under which the
/// approximation guarantee is derived. `Local` scores it by the Qerror
/// between the current poisoned cardinality and the candidate poisoned
/// cardinality; it is kept for side-by-side comparison and carries no
/// correctness claims. Local scores are sums of Qerrors (≥ 1 per query),
/// so a local-gain run never exits early.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GainSemantics {
    Objective,
    Local,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpKind {
    Delete,
    Insert,
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OpKind::Delete => "delete",
            OpKind::Insert => "insert",
        })
    }
}

/// One applied operation in a greedy run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GreedyStep {
    pub step: usize,
    pub tuple: TupleId,
    pub op: OpKind,
    pub gain: f64,
    /// Objective value after applying this step.
    pub objective: f64,
}

/// Ordered record of the operations a greedy run applied.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct GreedyTrace {
    pub steps: Vec<GreedyStep>,
}

impl GreedyTrace {
    /// Serializes as JSON lines, one record per step.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for step in &self.steps {
            out.push_str(&serde_json::to_string(step).expect("trace step serializes"));
            out.push('\n');
        }
        out
    }

    pub fn save_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(self.to_jsonl().as_bytes())?;
        Ok(())
    }
}

/// Greedy attack in mixed mode with objective-gain scoring.
pub fn greedy_attack(instance: &AttackInstance) -> (AttackStrategy, GreedyTrace) {
    greedy_attack_configured(instance, OpMode::Mixed, GainSemantics::Objective)
}

/// Greedy attack restricted to one operation type.
pub fn greedy_attack_restricted(
    instance: &AttackInstance,
    mode: OpMode,
) -> (AttackStrategy, GreedyTrace) {
    greedy_attack_configured(instance, mode, GainSemantics::Objective)
}

/// Greedy attack with explicit mode and gain semantics.
pub fn greedy_attack_configured(
    instance: &AttackInstance,
    mode: OpMode,
    gain: GainSemantics,
) -> (AttackStrategy, GreedyTrace) {
    let mut state = GreedyState::new(instance, gain);
    let mut trace = GreedyTrace::default();
    let budget = instance.budget();

    for step in 0..budget {
        let Some((gain_value, op, tuple)) = state.best_candidate(mode) else {
            break;
        };
        if gain == GainSemantics::Objective && gain_value <= 0.0 {
            break;
        }
        state.apply(tuple, op);
        trace.steps.push(GreedyStep {
            step: step as usize,
            tuple: TupleId(tuple),
            op,
            gain: gain_value,
            objective: state.objective(),
        });
    }

    (state.into_strategy(), trace)
}

/// Recompute gains in parallel only past this many dirty tuples; below it
/// the rayon dispatch overhead dominates.
const PAR_THRESHOLD: usize = 4096;

struct GreedyState<'a> {
    instance: &'a AttackInstance,
    gain: GainSemantics,
    poisoned: Vec<u64>,
    beta: Vec<i64>,
    masked: Vec<bool>,
    del_gain: Vec<f64>,
    ins_gain: Vec<f64>,
    /// epoch stamps for dirty-set deduplication
    stamp: Vec<u64>,
    epoch: u64,
}

impl<'a> GreedyState<'a> {
    fn new(instance: &'a AttackInstance, gain: GainSemantics) -> Self {
        let n = instance.n_tuples();
        let mut state = Self {
            instance,
            gain,
            poisoned: instance.clean_cardinalities().to_vec(),
            beta: vec![0; n],
            masked: vec![false; n],
            del_gain: vec![0.0; n],
            ins_gain: vec![0.0; n],
            stamp: vec![0; n],
            epoch: 0,
        };
        for t in 0..n {
            state.del_gain[t] = state.compute_gain(t, OpKind::Delete);
            state.ins_gain[t] = state.compute_gain(t, OpKind::Insert);
        }
        state
    }

    #[inline]
    fn term(&self, query: usize, poisoned: u64) -> f64 {
        smoothed_term(self.instance.clean_cardinality(query), poisoned)
    }

    fn compute_gain(&self, tuple: usize, op: OpKind) -> f64 {
        match self.gain {
            GainSemantics::Objective => self.objective_gain(tuple, op),
            GainSemantics::Local => self.local_gain(tuple, op),
        }
    }

    /// Marginal change of the global objective when applying `op` to `tuple`.
    fn objective_gain(&self, tuple: usize, op: OpKind) -> f64 {
        let mut gain = 0.0;
        for &(query, weight) in self.instance.weights().tuple_entries(tuple) {
            let current = self.poisoned[query];
            let candidate = match op {
                OpKind::Delete => current - weight,
                OpKind::Insert => current + weight,
            };
            gain += self.term(query, candidate) - self.term(query, current);
        }
        gain
    }

    /// Qerror between the current and the candidate poisoned cardinality,
    /// summed over the whole workload (smoothed like the objective).
    fn local_gain(&self, tuple: usize, op: OpKind) -> f64 {
        let entries = self.instance.weights().tuple_entries(tuple);
        let untouched = (self.instance.n_queries() - entries.len()) as f64;
        let mut gain = untouched; // Q(c, c) = 1 per untouched query
        for &(query, weight) in entries {
            let current = self.poisoned[query];
            let candidate = match op {
                OpKind::Delete => current - weight,
                OpKind::Insert => current + weight,
            };
            gain += qerror((candidate + 1) as f64, (current + 1) as f64);
        }
        gain
    }

    /// Best `(gain, op, tuple)` candidate, or `None` when no tuple is
    /// eligible. Ties break toward delete over insert, then the lowest
    /// tuple index, by scanning tuples in order and replacing the best
    /// only on strictly greater gain.
    fn best_candidate(&self, mode: OpMode) -> Option<(f64, OpKind, usize)> {
        let mut best: Option<(f64, OpKind, usize)> = None;
        for t in 0..self.instance.n_tuples() {
            if self.masked[t] {
                continue;
            }
            if mode.allows_delete() && self.beta[t] == 0 {
                let g = self.del_gain[t];
                if best.is_none_or(|(bg, _, _)| g > bg) {
                    best = Some((g, OpKind::Delete, t));
                }
            }
            if mode.allows_insert() {
                let g = self.ins_gain[t];
                if best.is_none_or(|(bg, _, _)| g > bg) {
                    best = Some((g, OpKind::Insert, t));
                }
            }
        }
        best
    }

    fn apply(&mut self, tuple: usize, op: OpKind) {
        match op {
            OpKind::Delete => {
                debug_assert_eq!(self.beta[tuple], 0);
                self.beta[tuple] = -1;
                self.masked[tuple] = true;
                for &(query, weight) in self.instance.weights().tuple_entries(tuple) {
                    self.poisoned[query] -= weight;
                }
            }
            OpKind::Insert => {
                self.beta[tuple] += 1;
                for &(query, weight) in self.instance.weights().tuple_entries(tuple) {
                    self.poisoned[query] += weight;
                }
            }
        }
        self.refresh_neighbors(tuple);
    }

    /// Recomputes cached gains for every tuple sharing a query with `tuple`.
    fn refresh_neighbors(&mut self, tuple: usize) {
        self.epoch += 1;
        let mut dirty = Vec::new();
        for &(query, _) in self.instance.weights().tuple_entries(tuple) {
            for &(other, _) in self.instance.weights().query_entries(query) {
                if self.stamp[other] != self.epoch {
                    self.stamp[other] = self.epoch;
                    if !self.masked[other] {
                        dirty.push(other);
                    }
                }
            }
        }
        if dirty.len() >= PAR_THRESHOLD {
            let updates: Vec<(usize, f64, f64)> = dirty
                .par_iter()
                .map(|&t| {
                    (
                        t,
                        self.compute_gain(t, OpKind::Delete),
                        self.compute_gain(t, OpKind::Insert),
                    )
                })
                .collect();
            for (t, dg, ig) in updates {
                self.del_gain[t] = dg;
                self.ins_gain[t] = ig;
            }
        } else {
            for t in dirty {
                self.del_gain[t] = self.compute_gain(t, OpKind::Delete);
                self.ins_gain[t] = self.compute_gain(t, OpKind::Insert);
            }
        }
    }

    /// Current objective value, recomputed from the poisoned cardinalities.
    fn objective(&self) -> f64 {
        (0..self.instance.n_queries())
            .map(|q| self.term(q, self.poisoned[q]))
            .sum()
    }

    fn into_strategy(self) -> AttackStrategy {
        AttackStrategy::from_betas(self.beta.into_iter().enumerate())
    }
}
