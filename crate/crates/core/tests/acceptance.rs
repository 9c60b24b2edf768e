//! Acceptance suite. Each test implements one numbered criterion at its
//! stated tolerance, prints one PASS/FAIL line, and fails the build if the
//! criterion is not met. Run with `cargo test --test acceptance` (add
//! `-- --nocapture` to see the lines for passing criteria too).

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use daca_core::baselines::{ga_attack, random_attack, sa_attack, GaParams, SaParams};
use daca_core::evaluate::{evaluate, evaluate_oracle, noise_defense, oracle_estimates};
use daca_core::graph::Graph;
use daca_core::greedy::{greedy_attack, greedy_attack_restricted, OpMode};
use daca_core::instance::{AttackInstance, AttackStrategy, JointWeightMatrix};
use daca_core::objective::{check_modularity, check_supermodularity, objective_eq3};
use daca_core::oracle::{brute_force_optimum, build_dks_gadget, estimate_kappa};
use daca_core::syngen::{generate, SupportSpec, SynSpec, WeightDist};

fn report(id: u32, name: &str, pass: bool, details: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("[criterion {id:02}] {verdict} — {name}: {details}");
    assert!(pass, "criterion {id} ({name}) failed: {details}");
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

fn random_small_instance(
    rng: &mut ChaCha8Rng,
    max_tuples: usize,
    max_queries: usize,
    max_budget: u64,
) -> AttackInstance {
    let n = rng.gen_range(4..=max_tuples);
    let m = rng.gen_range(2..=max_queries);
    let k = rng.gen_range(1..=max_budget);
    let mut entries = Vec::new();
    for q in 0..m {
        for t in 0..n {
            if rng.gen_bool(0.45) {
                entries.push((q, t, rng.gen_range(1..=50)));
            }
        }
    }
    if entries.is_empty() {
        entries.push((0, 0, 1));
    }
    let matrix = JointWeightMatrix::from_entries(n, m, entries).unwrap();
    AttackInstance::from_weights(matrix, k).unwrap()
}

#[test]
fn criterion_01_gadget_exactness() {
    let start = Instant::now();
    let x = 1_000_000u64;
    let expected = (2 * x + 1) as f64;

    let graph = Graph::new(2, [(0, 1)]).unwrap();
    let gadget = build_dks_gadget(graph, 2, x).unwrap();

    let exact = brute_force_optimum(&gadget.instance, OpMode::DeleteOnly).unwrap();
    let (greedy, _) = greedy_attack_restricted(&gadget.instance, OpMode::DeleteOnly);
    let greedy_value = objective_eq3(&gadget.instance, &greedy).unwrap();

    let elapsed = start.elapsed();
    let pass = exact.optimum.per_query[0] == expected
        && greedy_value.per_query[0] == expected
        && elapsed < Duration::from_secs(1);
    report(
        1,
        "gadget exactness",
        pass,
        format!(
            "brute={} greedy={} expected={expected} elapsed={elapsed:?}",
            exact.optimum.per_query[0], greedy_value.per_query[0]
        ),
    );
}

#[test]
fn criterion_02_dks_correspondence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x02);
    let mut matches = 0;
    let trials = 25;
    for _ in 0..trials {
        let v = rng.gen_range(5..=12);
        let prob = rng.gen_range(0.25..0.55);
        let graph = random_graph(&mut rng, v, prob);
        let k = rng.gen_range(2..=5u64);
        let gadget = build_dks_gadget(graph, k, 1_000_000).unwrap();
        let exact = brute_force_optimum(&gadget.instance, OpMode::DeleteOnly).unwrap();
        let deleted: Vec<usize> = exact.strategy.deletions().collect();
        let (best_edges, _) = gadget.graph.densest_subset(k as usize).unwrap();
        if deleted.len() as u64 <= k && gadget.graph.induced_edges(&deleted) == best_edges {
            matches += 1;
        }
    }
    let elapsed = start.elapsed();
    let pass = matches == trials && elapsed < Duration::from_secs(60);
    report(
        2,
        "DKS correspondence",
        pass,
        format!("{matches}/{trials} optima match the graph-side solver, elapsed={elapsed:?}"),
    );
}

#[test]
fn criterion_03_insert_only_optimality() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x03);
    let mut exact_matches = 0;
    let trials = 200;
    let mut worst_rel = 0.0f64;
    for _ in 0..trials {
        let instance = random_small_instance(&mut rng, 12, 6, 4);
        let optimum = brute_force_optimum(&instance, OpMode::InsertOnly).unwrap();
        let (greedy, _) = greedy_attack_restricted(&instance, OpMode::InsertOnly);
        let greedy_value = objective_eq3(&instance, &greedy).unwrap().total;
        let rel = (optimum.optimum.total - greedy_value).abs() / optimum.optimum.total;
        worst_rel = worst_rel.max(rel);
        if rel <= 1e-12 {
            exact_matches += 1;
        }
    }
    let elapsed = start.elapsed();
    let pass = exact_matches == trials && elapsed < Duration::from_secs(120);
    report(
        3,
        "insert-only optimality",
        pass,
        format!("{exact_matches}/{trials} equal, worst rel diff={worst_rel:.2e}, elapsed={elapsed:?}"),
    );
}

#[test]
fn criterion_04_delete_only_approximation() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x04);
    let mut satisfied = 0;
    let trials = 100;
    let mut worst_margin = f64::INFINITY;
    for _ in 0..trials {
        let instance = random_small_instance(&mut rng, 10, 6, 4);
        let optimum = brute_force_optimum(&instance, OpMode::DeleteOnly).unwrap();
        let (greedy, _) = greedy_attack_restricted(&instance, OpMode::DeleteOnly);
        let greedy_value = objective_eq3(&instance, &greedy).unwrap().total;
        let kappa = estimate_kappa(&instance).unwrap();
        let bound = (1.0 - kappa.value) * optimum.optimum.total;
        worst_margin = worst_margin.min(greedy_value - bound);
        if greedy_value >= bound - 1e-9 * optimum.optimum.total {
            satisfied += 1;
        }
    }
    let elapsed = start.elapsed();
    let pass = satisfied == trials && elapsed < Duration::from_secs(300);
    report(
        4,
        "delete-only (1-kappa) approximation",
        pass,
        format!("{satisfied}/{trials} meet the bound, worst margin={worst_margin:.3e}, elapsed={elapsed:?}"),
    );
}

#[test]
fn criterion_05_supermodularity() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x05);
    let trials = 10_000;
    let mut ok = 0;
    let mut worst = f64::INFINITY;
    for _ in 0..trials {
        let instance = random_small_instance(&mut rng, 10, 6, 4);
        let n = instance.n_tuples();
        let a: BTreeSet<usize> = (0..n).filter(|_| rng.gen_bool(0.4)).collect();
        let b: BTreeSet<usize> = (0..n).filter(|_| rng.gen_bool(0.4)).collect();
        let slack = check_supermodularity(&instance, &a, &b);
        worst = worst.min(slack);
        if slack >= -1e-9 {
            ok += 1;
        }
    }
    report(
        5,
        "supermodularity of delete-only objective",
        ok == trials,
        format!("{ok}/{trials} slacks >= -1e-9, worst slack={worst:.3e}"),
    );
}

#[test]
fn criterion_06_modularity() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x06);
    let trials = 10_000;
    let mut ok = 0;
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let instance = random_small_instance(&mut rng, 10, 6, 4);
        let n = instance.n_tuples();
        let a: BTreeSet<usize> = (0..n).filter(|_| rng.gen_bool(0.4)).collect();
        let b: BTreeSet<usize> = (0..n).filter(|_| rng.gen_bool(0.4)).collect();
        let residual = check_modularity(&instance, &a, &b).abs();
        worst = worst.max(residual);
        if residual <= 1e-9 {
            ok += 1;
        }
    }
    report(
        6,
        "modularity of insert-only objective",
        ok == trials,
        format!("{ok}/{trials} residuals <= 1e-9, worst residual={worst:.3e}"),
    );
}

#[test]
fn criterion_07_insertion_domination() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x07);
    let trials = 50;
    let mut insertion_free = 0;
    for _ in 0..trials {
        let v = rng.gen_range(5..=8);
        let prob = rng.gen_range(0.3..0.6);
        let graph = random_graph(&mut rng, v, prob);
        let k = rng.gen_range(2..=3u64);
        // x = 10^6 dominates K·M (M ≤ 28 here)
        let gadget = build_dks_gadget(graph, k, 1_000_000).unwrap();
        assert!(1_000_000 > k * gadget.instance.n_queries() as u64);
        let exact = brute_force_optimum(&gadget.instance, OpMode::Mixed).unwrap();
        let (greedy, _) = greedy_attack(&gadget.instance);
        if exact.strategy.insertions().count() == 0 && greedy.insertions().count() == 0 {
            insertion_free += 1;
        }
    }
    report(
        7,
        "insertion domination on gadgets",
        insertion_free == trials,
        format!("{insertion_free}/{trials} mixed optima and greedy runs are insertion-free"),
    );
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values[values.len() / 2]
}

#[test]
fn criterion_08_baseline_ordering() {
    let start = Instant::now();
    let trials = 100u64;
    let mut greedy_vals = Vec::new();
    let mut sa_vals = Vec::new();
    let mut random_vals = Vec::new();
    let mut ga_beaten = 0;
    for seed in 0..trials {
        let instance = generate(&SynSpec {
            n_tuples: 500,
            n_queries: 50,
            budget: 25,
            support_per_query: SupportSpec::Range { lo: 2, hi: 8 },
            weight_distribution: WeightDist::Zipf { exponent: 1.5, max: 10_000 },
            seed,
        })
        .unwrap();
        let value = |s: &AttackStrategy| objective_eq3(&instance, s).unwrap().total;
        let (greedy, _) = greedy_attack(&instance);
        let greedy_val = value(&greedy);
        greedy_vals.push(greedy_val);
        sa_vals.push(value(&sa_attack(&instance, &SaParams::defaults(&instance), seed).unwrap()));
        random_vals.push(value(&random_attack(&instance, seed)));
        let ga_val = value(&ga_attack(&instance, &GaParams::default(), seed).unwrap());
        if greedy_val >= ga_val - 1e-9 {
            ga_beaten += 1;
        }
    }
    let (mg, ms, mr) = (median(greedy_vals), median(sa_vals), median(random_vals));
    let elapsed = start.elapsed();
    let pass = mg >= ms && ms >= mr && ga_beaten >= 90 && elapsed < Duration::from_secs(600);
    report(
        8,
        "baseline ordering",
        pass,
        format!(
            "medians greedy={mg:.1} >= sa={ms:.1} >= random={mr:.1}; greedy >= ga on {ga_beaten}/{trials}; elapsed={elapsed:?}"
        ),
    );
}

#[test]
fn criterion_09_complexity_scaling() {
    let base = generate(&SynSpec {
        n_tuples: 2000,
        n_queries: 200,
        budget: 25,
        support_per_query: SupportSpec::Range { lo: 20, hi: 50 },
        weight_distribution: WeightDist::Zipf { exponent: 1.2, max: 1000 },
        seed: 0x09,
    })
    .unwrap();
    let budgets = [25u64, 50, 100, 200];
    let reps = 15;

    // warmup
    for &k in &budgets {
        let instance = base.with_budget(k).unwrap();
        std::hint::black_box(greedy_attack(&instance));
    }

    // interleave repetitions so ambient load drifts hit every budget alike
    let mut samples: Vec<Vec<f64>> = vec![Vec::new(); budgets.len()];
    for _ in 0..reps {
        for (i, &k) in budgets.iter().enumerate() {
            let instance = base.with_budget(k).unwrap();
            let t = Instant::now();
            let (strategy, trace) = greedy_attack(&instance);
            samples[i].push(t.elapsed().as_secs_f64());
            std::hint::black_box(&strategy);
            assert_eq!(trace.steps.len() as u64, k, "run exhausted its budget");
        }
    }
    let times: Vec<f64> = samples.into_iter().map(median).collect();

    // least-squares fit time = a + b·K
    let ks: Vec<f64> = budgets.iter().map(|&k| k as f64).collect();
    let n = ks.len() as f64;
    let mean_k = ks.iter().sum::<f64>() / n;
    let mean_t = times.iter().sum::<f64>() / n;
    let sxx: f64 = ks.iter().map(|k| (k - mean_k).powi(2)).sum();
    let sxy: f64 = ks.iter().zip(&times).map(|(k, t)| (k - mean_k) * (t - mean_t)).sum();
    let slope = sxy / sxx;
    let intercept = mean_t - slope * mean_k;
    let ss_res: f64 = ks
        .iter()
        .zip(&times)
        .map(|(k, t)| (t - (intercept + slope * k)).powi(2))
        .sum();
    let ss_tot: f64 = times.iter().map(|t| (t - mean_t).powi(2)).sum();
    let r_squared = 1.0 - ss_res / ss_tot;

    report(
        9,
        "greedy wall-clock linear in K",
        r_squared >= 0.95 && slope > 0.0,
        format!("times={times:?} slope={slope:.3e}s/op R²={r_squared:.4}"),
    );
}

#[test]
fn criterion_10_oracle_identity() {
    let mut worst = 0.0f64;
    let mut all_ones = true;
    let mut identity_ok = true;
    let mut cases = 0;

    let mut check = |instance: &AttackInstance| {
        cases += 1;
        let clean = evaluate_oracle(instance, &AttackStrategy::empty()).unwrap();
        all_ones &= clean.per_query.iter().all(|&q| q == 1.0);
        let (strategy, _) = greedy_attack(instance);
        let attacked = evaluate_oracle(instance, &strategy).unwrap();
        let objective = objective_eq3(instance, &strategy).unwrap().total;
        let rel =
            (attacked.mean * instance.n_queries() as f64 - objective).abs() / objective.max(1.0);
        worst = worst.max(rel);
        identity_ok &= rel <= 1e-9;
    };

    let mut rng = ChaCha8Rng::seed_from_u64(0x10);
    for _ in 0..19 {
        check(&random_small_instance(&mut rng, 30, 12, 8));
    }
    let graph = random_graph(&mut rng, 7, 0.5);
    check(&build_dks_gadget(graph, 3, 1_000_000).unwrap().instance);

    report(
        10,
        "oracle identity",
        all_ones && identity_ok,
        format!("{cases} instances, clean reports all-ones={all_ones}, worst mean·M vs objective rel diff={worst:.2e}"),
    );
}

#[test]
fn criterion_11_noise_defense_tradeoff() {
    // gadget-shaped instance (two supported tuples per query, weights far
    // above K·M) with heterogeneous weights so the clean estimates have
    // nonzero spread
    let instance = generate(&SynSpec {
        n_tuples: 40,
        n_queries: 20,
        budget: 10,
        support_per_query: SupportSpec::Fixed(2),
        weight_distribution: WeightDist::Uniform { lo: 1_000_000, hi: 2_000_000 },
        seed: 0x11,
    })
    .unwrap();
    let (strategy, _) = greedy_attack(&instance);
    let attacked = oracle_estimates(&instance, &strategy).unwrap();
    let undefended_mean = evaluate(&instance, &attacked).unwrap().mean;

    let grid = [0.05, 0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0];
    let seed = 7;
    let defended_means: Vec<f64> = grid
        .iter()
        .map(|&alpha| {
            let defended = noise_defense(&attacked, alpha, seed).unwrap();
            evaluate(&instance, &defended).unwrap().mean
        })
        .collect();
    let best_defended = defended_means.iter().copied().fold(f64::INFINITY, f64::min);

    let clean: Vec<f64> = instance.clean_cardinalities().iter().map(|&c| c as f64).collect();
    let clean_mean = |alpha: f64| {
        let defended = noise_defense(&clean, alpha, seed).unwrap();
        evaluate(&instance, &defended).unwrap().mean
    };
    let collapse = clean_mean(2.0) > clean_mean(0.1);

    let pass = best_defended < undefended_mean && collapse;
    report(
        11,
        "noise-defense tradeoff",
        pass,
        format!(
            "undefended mean={undefended_mean:.3e}, best defended={best_defended:.3e}, clean mean alpha=0.1 -> {:.4}, alpha=2.0 -> {:.4}",
            clean_mean(0.1),
            clean_mean(2.0)
        ),
    );
}
