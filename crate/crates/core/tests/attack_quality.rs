//! Comparison sweeps between the greedy attack and the metaheuristic
//! baselines on seeded instances. These mirror the reported ordering of
//! attack effectiveness: greedy above SA and GA, all far above random.

use daca_core::baselines::{
    ga_attack_in_mode, random_attack_in_mode, sa_attack_in_mode, GaParams, SaParams,
};
use daca_core::greedy::{greedy_attack, greedy_attack_restricted, OpMode};
use daca_core::instance::AttackInstance;
use daca_core::objective::objective_eq3;
use daca_core::oracle::build_dks_gadget;
use daca_core::syngen::{generate, SupportSpec, SynSpec, WeightDist};
use daca_core::{AttackStrategy, Graph};

fn objective_of(instance: &AttackInstance, strategy: &AttackStrategy) -> f64 {
    objective_eq3(instance, strategy).unwrap().total
}

/// Skewed instances: most of a query's cardinality sits on few tuples, the
/// regime where data drift hurts estimators most.
fn skewed_instance(seed: u64) -> AttackInstance {
    generate(&SynSpec {
        n_tuples: 200,
        n_queries: 20,
        budget: 8,
        support_per_query: SupportSpec::Range { lo: 2, hi: 6 },
        weight_distribution: WeightDist::Zipf { exponent: 2.0, max: 10_000 },
        seed,
    })
    .unwrap()
}

fn example_gadget(budget: u64) -> AttackInstance {
    // 4-clique {3,4,5,6} plus triangle {0,1,2}; 7 vertices, 9 edges
    let graph = Graph::new(
        7,
        [(0, 1), (1, 2), (0, 2), (3, 4), (3, 5), (3, 6), (4, 5), (4, 6), (5, 6)],
    )
    .unwrap();
    build_dks_gadget(graph, budget, 1_000_000).unwrap().instance
}

#[test]
fn delete_only_greedy_beats_baselines_on_95_percent_of_instances() {
    let mut wins = 0;
    let trials = 100;
    for seed in 0..trials {
        let instance = skewed_instance(seed);
        let (greedy, _) = greedy_attack_restricted(&instance, OpMode::DeleteOnly);
        let greedy_val = objective_of(&instance, &greedy);

        let sa_params = SaParams::defaults(&instance);
        let ga_params = GaParams::default();
        let random = random_attack_in_mode(&instance, OpMode::DeleteOnly, seed);
        let (sa, _) = sa_attack_in_mode(&instance, OpMode::DeleteOnly, &sa_params, seed).unwrap();
        let ga = ga_attack_in_mode(&instance, OpMode::DeleteOnly, &ga_params, seed).unwrap();

        let best_baseline = [&random, &sa, &ga]
            .iter()
            .map(|s| objective_of(&instance, s))
            .fold(f64::NEG_INFINITY, f64::max);
        if greedy_val >= best_baseline - 1e-9 {
            wins += 1;
        }
    }
    assert!(wins >= 95, "greedy beat all baselines on only {wins}/{trials} instances");
}

#[test]
fn random_mean_is_far_below_greedy_on_the_gadget() {
    let instance = example_gadget(4);
    let (greedy, _) = greedy_attack(&instance);
    let greedy_val = objective_of(&instance, &greedy);
    let mean_random: f64 = (0..100)
        .map(|seed| {
            let s = random_attack_in_mode(&instance, OpMode::Mixed, seed);
            objective_of(&instance, &s)
        })
        .sum::<f64>()
        / 100.0;
    assert!(
        mean_random * 10.0 < greedy_val,
        "random mean {mean_random} not far below greedy {greedy_val}"
    );
}

#[test]
fn sa_rarely_beats_greedy_on_the_gadget() {
    let instance = example_gadget(4);
    let (greedy, _) = greedy_attack(&instance);
    let greedy_val = objective_of(&instance, &greedy);
    let params = SaParams::defaults(&instance);
    let mut at_most_greedy = 0;
    for seed in 0..50 {
        let sa = sa_attack_in_mode(&instance, OpMode::Mixed, &params, seed).unwrap().0;
        if objective_of(&instance, &sa) <= greedy_val + 1e-9 {
            at_most_greedy += 1;
        }
    }
    assert!(at_most_greedy >= 45, "SA beat greedy on {}/50 gadget seeds", 50 - at_most_greedy);
}

#[test]
fn ga_lands_between_random_and_greedy_on_most_gadget_seeds() {
    let instance = example_gadget(4);
    let (greedy, _) = greedy_attack(&instance);
    let greedy_val = objective_of(&instance, &greedy);
    let params = GaParams { population: 30, generations: 60, ..GaParams::default() };
    let mut between = 0;
    for seed in 0..50 {
        let random_val =
            objective_of(&instance, &random_attack_in_mode(&instance, OpMode::Mixed, seed));
        let ga = ga_attack_in_mode(&instance, OpMode::Mixed, &params, seed).unwrap();
        let ga_val = objective_of(&instance, &ga);
        if ga_val >= random_val - 1e-9 && ga_val <= greedy_val + 1e-9 {
            between += 1;
        }
    }
    assert!(between > 25, "GA between random and greedy on only {between}/50 seeds");
}
