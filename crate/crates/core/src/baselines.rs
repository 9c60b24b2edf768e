//! Reference attackers: random, simulated annealing, and a genetic
//! algorithm, all maximizing the same smoothed total-Qerror objective under
//! the same budget. They exist to calibrate how much of the objective the
//! greedy attack captures; all three are deterministic for a fixed seed.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greedy::OpMode;
use crate::instance::{AttackInstance, AttackStrategy};
use crate::objective::{eval_betas_dense, smoothed_term};

/// Simulated-annealing parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SaParams {
    pub initial_temp: f64,
    pub cooling: f64,
    pub iterations: usize,
}

impl SaParams {
    /// Defaults scaled to the instance: the initial temperature matches the
    /// objective scale (`M`), and the iteration budget is comparable to the
    /// greedy scan work (`10·N·K`).
    pub fn defaults(instance: &AttackInstance) -> Self {
        Self {
            initial_temp: instance.n_queries() as f64,
            cooling: 0.995,
            iterations: 10 * instance.n_tuples() * instance.budget() as usize,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return Err(Error::Config(format!("sa cooling {} not in (0, 1)", self.cooling)));
        }
        if self.iterations == 0 {
            return Err(Error::Config("sa iterations must be at least 1".into()));
        }
        if self.initial_temp.is_nan() || self.initial_temp <= 0.0 {
            return Err(Error::Config("sa initial_temp must be positive".into()));
        }
        Ok(())
    }
}

/// Genetic-algorithm parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaParams {
    pub population: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
}

impl Default for GaParams {
    fn default() -> Self {
        Self { population: 50, generations: 200, crossover_rate: 0.9, mutation_rate: 0.1 }
    }
}

impl GaParams {
    fn validate(&self) -> Result<()> {
        if self.population == 0 || self.generations == 0 {
            return Err(Error::Config("ga population and generations must be at least 1".into()));
        }
        for (name, rate) in [("crossover_rate", self.crossover_rate), ("mutation_rate", self.mutation_rate)] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::Config(format!("ga {name} {rate} not in [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Draws `K` uniform operations: each picks a uniform tuple and a uniform
/// legal operation on it (delete if untouched, insert if not deleted).
pub fn random_attack(instance: &AttackInstance, seed: u64) -> AttackStrategy {
    random_attack_in_mode(instance, OpMode::Mixed, seed)
}

/// Random attack restricted to one operation type.
pub fn random_attack_in_mode(instance: &AttackInstance, mode: OpMode, seed: u64) -> AttackStrategy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let betas = random_betas(instance, mode, &mut rng);
    AttackStrategy::from_betas(betas.into_iter().enumerate())
}

fn random_betas(instance: &AttackInstance, mode: OpMode, rng: &mut ChaCha8Rng) -> Vec<i64> {
    let n = instance.n_tuples();
    let k = instance.budget();
    let mut beta = vec![0i64; n];
    let mut untouched = n; // beta == 0
    let mut not_deleted = n; // beta >= 0
    let mut used = 0u64;
    while used < k {
        let deletes_possible = mode.allows_delete() && untouched > 0;
        let inserts_possible = mode.allows_insert() && not_deleted > 0;
        if !deletes_possible && !inserts_possible {
            break;
        }
        let t = rng.gen_range(0..n);
        let can_delete = mode.allows_delete() && beta[t] == 0;
        let can_insert = mode.allows_insert() && beta[t] >= 0;
        let op_delete = match (can_delete, can_insert) {
            (true, true) => rng.gen_bool(0.5),
            (true, false) => true,
            (false, true) => false,
            (false, false) => continue,
        };
        if op_delete {
            beta[t] = -1;
            untouched -= 1;
            not_deleted -= 1;
        } else {
            if beta[t] == 0 {
                untouched -= 1;
            }
            beta[t] += 1;
        }
        used += 1;
    }
    beta
}

/// Simulated annealing over strategy space.
///
/// A move changes one tuple's `β` by ±1 within validity; worse moves are
/// accepted with probability `exp(Δ/T)` under a geometric cooling schedule.
/// Returns the best strategy seen.
pub fn sa_attack(instance: &AttackInstance, params: &SaParams, seed: u64) -> Result<AttackStrategy> {
    sa_attack_in_mode(instance, OpMode::Mixed, params, seed).map(|(s, _)| s)
}

/// Simulated annealing with mode restriction; also returns the objective
/// value after every accepted move.
pub fn sa_attack_in_mode(
    instance: &AttackInstance,
    mode: OpMode,
    params: &SaParams,
    seed: u64,
) -> Result<(AttackStrategy, Vec<f64>)> {
    params.validate()?;
    let n = instance.n_tuples();
    let k = instance.budget() as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut beta = random_betas(instance, mode, &mut rng);
    let mut poisoned = apply_betas(instance, &beta);
    let mut used: i64 = beta.iter().map(|b| b.abs()).sum();
    let mut current = eval_betas_dense(instance, &beta);
    let mut best = (beta.clone(), current);
    let mut accepted = Vec::new();
    let mut temp = params.initial_temp;

    for _ in 0..params.iterations {
        let t = rng.gen_range(0..n);
        let dir: i64 = if rng.gen_bool(0.5) { 1 } else { -1 };
        let next = beta[t] + dir;
        let in_range = next >= -1
            && next <= k
            && (mode.allows_delete() || next >= 0)
            && (mode.allows_insert() || next <= 0);
        let next_used = used - beta[t].abs() + next.abs();
        if in_range && next_used <= k {
            let mut delta = 0.0;
            for &(query, weight) in instance.weights().tuple_entries(t) {
                let cur = poisoned[query];
                let cand = if dir > 0 { cur + weight } else { cur - weight };
                delta += smoothed_term(instance.clean_cardinality(query), cand)
                    - smoothed_term(instance.clean_cardinality(query), cur);
            }
            let accept = delta >= 0.0 || rng.gen::<f64>() < (delta / temp).exp();
            if accept {
                beta[t] = next;
                used = next_used;
                for &(query, weight) in instance.weights().tuple_entries(t) {
                    if dir > 0 {
                        poisoned[query] += weight;
                    } else {
                        poisoned[query] -= weight;
                    }
                }
                current += delta;
                if current > best.1 {
                    // resync against drift before recording a new best
                    current = eval_betas_dense(instance, &beta);
                    if current > best.1 {
                        best = (beta.clone(), current);
                    }
                }
                accepted.push(current);
            }
        }
        temp *= params.cooling;
    }

    let strategy =
        AttackStrategy::from_betas(best.0.into_iter().enumerate());
    Ok((strategy, accepted))
}

fn apply_betas(instance: &AttackInstance, betas: &[i64]) -> Vec<u64> {
    let mut poisoned = instance.clean_cardinalities().to_vec();
    for (t, &b) in betas.iter().enumerate() {
        if b == 0 {
            continue;
        }
        for &(query, weight) in instance.weights().tuple_entries(t) {
            let v = poisoned[query] as i128 + b as i128 * weight as i128;
            poisoned[query] = u64::try_from(v).expect("valid betas keep cardinalities non-negative");
        }
    }
    poisoned
}

/// Genetic algorithm over valid strategies.
///
/// Chromosomes are beta vectors; uniform crossover is followed by budget
/// repair (dropping the lowest-`|β|` entries until `Σ|β| ≤ K`), mutation
/// perturbs one beta by ±1 within range, and elitism carries the best
/// chromosome forward. Parent selection is a size-2 tournament.
pub fn ga_attack(instance: &AttackInstance, params: &GaParams, seed: u64) -> Result<AttackStrategy> {
    ga_attack_in_mode(instance, OpMode::Mixed, params, seed)
}

pub fn ga_attack_in_mode(
    instance: &AttackInstance,
    mode: OpMode,
    params: &GaParams,
    seed: u64,
) -> Result<AttackStrategy> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut population = initial_population(instance, mode, params.population, &mut rng);
    let mut fitness = eval_population(instance, &population);

    for _ in 0..params.generations {
        let elite = argmax(&fitness);
        let mut next = Vec::with_capacity(params.population);
        next.push(population[elite].clone());
        while next.len() < params.population {
            let a = tournament(&fitness, &mut rng);
            let mut child = if rng.gen::<f64>() < params.crossover_rate {
                let b = tournament(&fitness, &mut rng);
                crossover(&population[a], &population[b], &mut rng)
            } else {
                population[a].clone()
            };
            repair_budget(&mut child, instance.budget());
            if rng.gen::<f64>() < params.mutation_rate {
                mutate(&mut child, instance.budget(), mode, &mut rng);
                repair_budget(&mut child, instance.budget());
            }
            next.push(child);
        }
        population = next;
        fitness = eval_population(instance, &population);
    }

    let best = argmax(&fitness);
    let betas = std::mem::take(&mut population[best]);
    Ok(AttackStrategy::from_betas(betas.into_iter().enumerate()))
}

pub(crate) fn initial_population(
    instance: &AttackInstance,
    mode: OpMode,
    size: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<i64>> {
    (0..size).map(|_| random_betas(instance, mode, rng)).collect()
}

fn eval_population(instance: &AttackInstance, population: &[Vec<i64>]) -> Vec<f64> {
    population
        .par_iter()
        .map(|betas| eval_betas_dense(instance, betas))
        .collect()
}

fn argmax(fitness: &[f64]) -> usize {
    let mut best = 0;
    for (i, &f) in fitness.iter().enumerate() {
        if f > fitness[best] {
            best = i;
        }
    }
    best
}

fn tournament(fitness: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let a = rng.gen_range(0..fitness.len());
    let b = rng.gen_range(0..fitness.len());
    if fitness[b] > fitness[a] {
        b
    } else {
        a
    }
}

fn crossover(a: &[i64], b: &[i64], rng: &mut ChaCha8Rng) -> Vec<i64> {
    a.iter()
        .zip(b)
        .map(|(&ga, &gb)| if rng.gen_bool(0.5) { ga } else { gb })
        .collect()
}

/// Zeroes the smallest-|β| entries (ties toward the smallest index) until
/// the strategy fits the budget.
fn repair_budget(betas: &mut [i64], budget: u64) {
    let mut used: u64 = betas.iter().map(|b| b.unsigned_abs()).sum();
    while used > budget {
        let victim = betas
            .iter()
            .enumerate()
            .filter(|(_, b)| **b != 0)
            .min_by_key(|(t, b)| (b.unsigned_abs(), *t))
            .map(|(t, _)| t)
            .expect("over-budget vector has a nonzero entry");
        used -= betas[victim].unsigned_abs();
        betas[victim] = 0;
    }
}

fn mutate(betas: &mut [i64], budget: u64, mode: OpMode, rng: &mut ChaCha8Rng) {
    let t = rng.gen_range(0..betas.len());
    let dir: i64 = if rng.gen_bool(0.5) { 1 } else { -1 };
    let next = betas[t] + dir;
    let in_range = next >= -1
        && next <= budget as i64
        && (mode.allows_delete() || next >= 0)
        && (mode.allows_insert() || next <= 0);
    if in_range {
        betas[t] = next;
    }
}
