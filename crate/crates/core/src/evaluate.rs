//! Surrogate-oracle evaluation and countermeasures.
//!
//! The surrogate oracle is the idealized estimator that reports the exact
//! cardinality of the poisoned state; evaluating it against the clean
//! cardinalities turns any strategy into a per-query Qerror distribution.
//! Two countermeasures operate on estimate vectors: non-negative Gaussian
//! noise injection, and a linear ensemble over several estimators with
//! weights fit by non-negative least squares on clean held-out pairs.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{poisoned_cardinality, validate_strategy, AttackInstance, AttackStrategy};

/// Nearest-rank percentile summary of a Qerror distribution.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Percentiles {
    pub p50: f64,
    pub p90: f64,
    pub p95: f64,
    pub p99: f64,
    pub max: f64,
}

/// Per-query and aggregate smoothed Qerror of an estimator against the
/// clean cardinalities.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QerrorReport {
    pub per_query: Vec<f64>,
    pub mean: f64,
    pub percentiles: Percentiles,
}

impl QerrorReport {
    /// Aligned-column text table (p50/p90/p95/p99/max plus the mean).
    pub fn table(&self) -> String {
        let p = &self.percentiles;
        let cell = |v: f64| {
            if v >= 1e4 {
                format!("{v:.4e}")
            } else {
                format!("{v:.4}")
            }
        };
        let mut out = String::new();
        out.push_str(&format!(
            "{:>12} {:>12} {:>12} {:>12} {:>12} {:>12}\n",
            "p50", "p90", "p95", "p99", "max", "mean"
        ));
        out.push_str(&format!(
            "{:>12} {:>12} {:>12} {:>12} {:>12} {:>12}\n",
            cell(p.p50),
            cell(p.p90),
            cell(p.p95),
            cell(p.p99),
            cell(p.max),
            cell(self.mean)
        ));
        out
    }
}

/// Smoothed Qerror of one estimate against one clean cardinality.
#[inline]
pub fn smoothed_qerror(estimate: f64, clean: u64) -> f64 {
    let e = estimate + 1.0;
    let c = (clean + 1) as f64;
    f64::max(e / c, c / e)
}

/// What the surrogate oracle reports for `query`: the poisoned cardinality.
pub fn oracle_estimate(
    instance: &AttackInstance,
    strategy: &AttackStrategy,
    query: usize,
) -> Result<u64> {
    validate_strategy(instance, strategy).into_result()?;
    poisoned_cardinality(instance, strategy, query)
}

/// Oracle estimates for the whole workload.
pub fn oracle_estimates(instance: &AttackInstance, strategy: &AttackStrategy) -> Result<Vec<f64>> {
    validate_strategy(instance, strategy).into_result()?;
    (0..instance.n_queries())
        .map(|q| poisoned_cardinality(instance, strategy, q).map(|c| c as f64))
        .collect()
}

/// Builds a Qerror report for arbitrary per-query estimates.
pub fn evaluate(instance: &AttackInstance, estimates: &[f64]) -> Result<QerrorReport> {
    if estimates.len() != instance.n_queries() {
        return Err(Error::ShapeMismatch {
            expected: instance.n_queries(),
            actual: estimates.len(),
        });
    }
    let per_query: Vec<f64> = estimates
        .iter()
        .zip(instance.clean_cardinalities())
        .map(|(&e, &c)| smoothed_qerror(e, c))
        .collect();
    let mean = per_query.iter().sum::<f64>() / per_query.len() as f64;
    let mut sorted = per_query.clone();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("qerrors are comparable"));
    let percentiles = Percentiles {
        p50: nearest_rank(&sorted, 0.50),
        p90: nearest_rank(&sorted, 0.90),
        p95: nearest_rank(&sorted, 0.95),
        p99: nearest_rank(&sorted, 0.99),
        max: *sorted.last().expect("instances have at least one query"),
    };
    Ok(QerrorReport { per_query, mean, percentiles })
}

/// Report for the surrogate oracle under a strategy.
pub fn evaluate_oracle(instance: &AttackInstance, strategy: &AttackStrategy) -> Result<QerrorReport> {
    evaluate(instance, &oracle_estimates(instance, strategy)?)
}

/// Nearest-rank percentile: the `ceil(p·n)`-th order statistic (1-based).
fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = (p * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Adds non-negative Gaussian noise `|α·η|` to every estimate, with
/// `η ~ N(0, σ²)` and `σ` the sample standard deviation of the estimates
/// themselves. Deterministic per seed; the defended estimates never fall
/// below the originals.
pub fn noise_defense(estimates: &[f64], alpha: f64, seed: u64) -> Result<Vec<f64>> {
    if alpha < 0.0 {
        return Err(Error::Config(format!("noise intensity alpha {alpha} must be >= 0")));
    }
    if estimates.len() < 2 {
        return Err(Error::Degenerate(
            "noise defense needs at least 2 estimates to compute a standard deviation".into(),
        ));
    }
    let n = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / n;
    let variance = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sigma = variance.sqrt();
    if sigma == 0.0 {
        return Ok(estimates.to_vec());
    }
    let normal = Normal::new(0.0, sigma).expect("sigma is finite and positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(estimates
        .iter()
        .map(|e| e + (alpha * normal.sample(&mut rng)).abs())
        .collect())
}

/// Weights produced by [`fit_ensemble_weights`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FittedWeights {
    pub weights: Vec<f64>,
    /// True when the fit system was singular and uniform weights were used.
    pub fallback_uniform: bool,
}

/// Weighted summation of estimate sets, clamped at zero.
pub fn ensemble_combine(sets: &[Vec<f64>], weights: &[f64]) -> Result<Vec<f64>> {
    if sets.is_empty() {
        return Err(Error::Config("ensemble needs at least one estimate set".into()));
    }
    if weights.len() != sets.len() {
        return Err(Error::ShapeMismatch { expected: sets.len(), actual: weights.len() });
    }
    let m = sets[0].len();
    for set in sets {
        if set.len() != m {
            return Err(Error::ShapeMismatch { expected: m, actual: set.len() });
        }
    }
    Ok((0..m)
        .map(|j| {
            sets.iter()
                .zip(weights)
                .map(|(set, &w)| w * set[j])
                .sum::<f64>()
                .max(0.0)
        })
        .collect())
}

/// Non-negative least-squares fit of combination weights against held-out
/// truths: minimizes `Σ_j (Σ_k w_k·set_k[j] − truth_j)²` subject to
/// `w_k ≥ 0`.
///
/// The number of sets is small, so the optimal active set is found by
/// enumerating support subsets and solving the normal equations on each.
/// If every nonempty support is singular, falls back to uniform weights and
/// flags it.
pub fn fit_ensemble_weights(sets: &[Vec<f64>], truths: &[f64]) -> Result<FittedWeights> {
    if sets.is_empty() {
        return Err(Error::Config("ensemble needs at least one estimate set".into()));
    }
    let k = sets.len();
    let m = truths.len();
    for set in sets {
        if set.len() != m {
            return Err(Error::ShapeMismatch { expected: m, actual: set.len() });
        }
    }
    if k > 20 {
        return Err(Error::Capacity { required: 1u128 << k, cap: 1 << 20 });
    }

    let residual_of = |weights: &[f64]| -> f64 {
        (0..m)
            .map(|j| {
                let combined: f64 = sets.iter().zip(weights).map(|(s, &w)| w * s[j]).sum();
                (combined - truths[j]).powi(2)
            })
            .sum()
    };

    // empty support: all-zero weights, always feasible
    let mut best = (residual_of(&vec![0.0; k]), vec![0.0; k]);
    let mut any_nonempty_solvable = false;

    for support_mask in 1u32..(1 << k) {
        let support: Vec<usize> = (0..k).filter(|i| support_mask >> i & 1 == 1).collect();
        let Some(solution) = solve_normal_equations(sets, truths, &support) else {
            continue;
        };
        any_nonempty_solvable = true;
        if solution.iter().any(|&w| w < -1e-12) {
            continue;
        }
        let mut weights = vec![0.0; k];
        for (&idx, &w) in support.iter().zip(&solution) {
            weights[idx] = w.max(0.0);
        }
        let residual = residual_of(&weights);
        if residual < best.0 {
            best = (residual, weights);
        }
    }

    if !any_nonempty_solvable {
        return Ok(FittedWeights { weights: vec![1.0 / k as f64; k], fallback_uniform: true });
    }
    Ok(FittedWeights { weights: best.1, fallback_uniform: false })
}

/// Solves `(GᵀG)w = Gᵀy` restricted to the given support columns; `None`
/// when the system is singular.
#[allow(clippy::needless_range_loop)] // elimination reads row `col` while writing row `row`
fn solve_normal_equations(sets: &[Vec<f64>], truths: &[f64], support: &[usize]) -> Option<Vec<f64>> {
    let s = support.len();
    let m = truths.len();
    let mut a = vec![vec![0.0f64; s + 1]; s];
    for (ri, &i) in support.iter().enumerate() {
        for (ci, &j) in support.iter().enumerate() {
            a[ri][ci] = (0..m).map(|q| sets[i][q] * sets[j][q]).sum();
        }
        a[ri][s] = (0..m).map(|q| sets[i][q] * truths[q]).sum();
    }
    // Gaussian elimination with partial pivoting
    let scale: f64 = a
        .iter()
        .flat_map(|row| row[..s].iter())
        .fold(0.0f64, |acc, &v| acc.max(v.abs()))
        .max(1.0);
    for col in 0..s {
        let pivot = (col..s).max_by(|&r1, &r2| {
            a[r1][col].abs().partial_cmp(&a[r2][col].abs()).expect("finite")
        })?;
        if a[pivot][col].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(col, pivot);
        for row in col + 1..s {
            let factor = a[row][col] / a[col][col];
            for c in col..=s {
                a[row][c] -= factor * a[col][c];
            }
        }
    }
    let mut w = vec![0.0; s];
    for col in (0..s).rev() {
        let mut v = a[col][s];
        for c in col + 1..s {
            v -= a[col][c] * w[c];
        }
        w[col] = v / a[col][col];
    }
    Some(w)
}
