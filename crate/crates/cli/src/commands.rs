//! Implementations of the six subcommands. Every file-producing command
//! writes a manifest next to its primary output; outputs are byte-identical
//! across reruns with the same inputs and seed.

use std::collections::BTreeSet;
use std::path::PathBuf;

use anyhow::Context;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use daca_core::baselines::{
    ga_attack_in_mode, random_attack_in_mode, sa_attack_in_mode, GaParams, SaParams,
};
use daca_core::evaluate::{
    ensemble_combine, evaluate, fit_ensemble_weights, noise_defense, oracle_estimates,
};
use daca_core::graph::Graph;
use daca_core::greedy::{greedy_attack_configured, GainSemantics, OpMode};
use daca_core::ingest::{instance_from_grouped_csv, instance_from_result_csv};
use daca_core::instance::{AttackInstance, AttackStrategy};
use daca_core::objective::objective_eq3;
use daca_core::oracle::{
    brute_force_optimum_capped, build_dks_gadget, estimate_kappa, DEFAULT_ENUMERATION_CAP,
};
use daca_core::syngen::{generate, SupportSpec, SynSpec, WeightDist};

use crate::config::FileConfig;
use crate::manifest::ManifestBuilder;

pub struct ExtractArgs {
    pub result_csv: PathBuf,
    pub n_tuples: usize,
    pub n_queries: usize,
    pub budget: u64,
    pub grouped: bool,
    pub out: PathBuf,
}

#[derive(Serialize)]
struct ExtractSnapshot {
    n_tuples: usize,
    n_queries: usize,
    budget: u64,
    grouped: bool,
}

pub fn cmd_extract(args: ExtractArgs) -> anyhow::Result<i32> {
    let manifest = ManifestBuilder::new("extract")
        .input(&args.result_csv)
        .output(&args.out)
        .config(&ExtractSnapshot {
            n_tuples: args.n_tuples,
            n_queries: args.n_queries,
            budget: args.budget,
            grouped: args.grouped,
        });
    let instance = if args.grouped {
        instance_from_grouped_csv(&args.result_csv, args.n_tuples, args.n_queries, args.budget)?
    } else {
        instance_from_result_csv(&args.result_csv, args.n_tuples, args.n_queries, args.budget)?
    };
    instance.save_json(&args.out)?;
    manifest.write(&args.out)?;
    println!(
        "extracted instance: {} tuples x {} queries, {} nonzero weights -> {}",
        instance.n_tuples(),
        instance.n_queries(),
        instance.weights().nnz(),
        args.out.display()
    );
    Ok(0)
}

pub struct GenerateArgs {
    pub n_tuples: Option<usize>,
    pub n_queries: Option<usize>,
    pub budget: Option<u64>,
    pub support: Option<SupportSpec>,
    pub weights: Option<WeightDist>,
    pub seed: Option<u64>,
    pub out: PathBuf,
}

pub fn cmd_generate(args: GenerateArgs, config: &FileConfig) -> anyhow::Result<i32> {
    let section = &config.generate;
    let spec = SynSpec {
        n_tuples: args
            .n_tuples
            .or(section.n_tuples)
            .context("--n-tuples is required (flag or [generate] section)")?,
        n_queries: args
            .n_queries
            .or(section.n_queries)
            .context("--n-queries is required (flag or [generate] section)")?,
        budget: args
            .budget
            .or(section.budget)
            .context("--budget is required (flag or [generate] section)")?,
        support_per_query: args
            .support
            .or(section.support)
            .unwrap_or(SupportSpec::Range { lo: 2, hi: 4 }),
        weight_distribution: args
            .weights
            .or(section.weights)
            .unwrap_or(WeightDist::Uniform { lo: 1, hi: 100 }),
        seed: args.seed.or(section.seed).unwrap_or(0),
    };
    let manifest = ManifestBuilder::new("generate")
        .output(&args.out)
        .seed(spec.seed)
        .config(&spec);
    let instance = generate(&spec)?;
    instance.save_json(&args.out)?;
    manifest.write(&args.out)?;
    println!(
        "generated instance: {} tuples x {} queries, budget {} -> {}",
        instance.n_tuples(),
        instance.n_queries(),
        instance.budget(),
        args.out.display()
    );
    Ok(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Greedy,
    Random,
    Sa,
    Ga,
}

pub struct AttackArgs {
    pub instance: PathBuf,
    pub algo: Option<Algo>,
    pub mode: Option<OpMode>,
    pub budget: Option<u64>,
    pub seed: Option<u64>,
    pub gain: Option<GainSemantics>,
    pub sa_initial_temp: Option<f64>,
    pub sa_cooling: Option<f64>,
    pub sa_iterations: Option<usize>,
    pub ga_population: Option<usize>,
    pub ga_generations: Option<usize>,
    pub ga_crossover_rate: Option<f64>,
    pub ga_mutation_rate: Option<f64>,
    pub out: PathBuf,
}

#[derive(Serialize)]
struct AttackSnapshot {
    algo: Algo,
    mode: OpMode,
    budget: u64,
    seed: u64,
    gain: GainSemantics,
    #[serde(skip_serializing_if = "Option::is_none")]
    sa: Option<SaParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ga: Option<GaParams>,
}

fn parse_mode(text: &str) -> anyhow::Result<OpMode> {
    match text {
        "mixed" => Ok(OpMode::Mixed),
        "delete-only" => Ok(OpMode::DeleteOnly),
        "insert-only" => Ok(OpMode::InsertOnly),
        other => anyhow::bail!("unknown mode {other:?} (mixed|delete-only|insert-only)"),
    }
}

pub fn cmd_attack(args: AttackArgs, config: &FileConfig) -> anyhow::Result<i32> {
    let instance = AttackInstance::load_json(&args.instance)?;
    let budget = args.budget.or(config.attack.budget).unwrap_or(instance.budget());
    let instance = instance.with_budget(budget)?;

    let algo = args.algo.unwrap_or(match config.attack.algo.as_deref() {
        Some("greedy") | None => Algo::Greedy,
        Some("random") => Algo::Random,
        Some("sa") => Algo::Sa,
        Some("ga") => Algo::Ga,
        Some(other) => anyhow::bail!("unknown algo {other:?} in config"),
    });
    let mode = match args.mode {
        Some(mode) => mode,
        None => match &config.attack.mode {
            Some(text) => parse_mode(text)?,
            None => OpMode::Mixed,
        },
    };
    let gain = args.gain.unwrap_or(match config.attack.gain.as_deref() {
        Some("local") => GainSemantics::Local,
        _ => GainSemantics::Objective,
    });
    let seed = args.seed.or(config.attack.seed).unwrap_or(0);

    let defaults = SaParams::defaults(&instance);
    let sa_params = SaParams {
        initial_temp: args
            .sa_initial_temp
            .or(config.sa.initial_temp)
            .unwrap_or(defaults.initial_temp),
        cooling: args.sa_cooling.or(config.sa.cooling).unwrap_or(defaults.cooling),
        iterations: args.sa_iterations.or(config.sa.iterations).unwrap_or(defaults.iterations),
    };
    let ga_defaults = GaParams::default();
    let ga_params = GaParams {
        population: args.ga_population.or(config.ga.population).unwrap_or(ga_defaults.population),
        generations: args
            .ga_generations
            .or(config.ga.generations)
            .unwrap_or(ga_defaults.generations),
        crossover_rate: args
            .ga_crossover_rate
            .or(config.ga.crossover_rate)
            .unwrap_or(ga_defaults.crossover_rate),
        mutation_rate: args
            .ga_mutation_rate
            .or(config.ga.mutation_rate)
            .unwrap_or(ga_defaults.mutation_rate),
    };

    let snapshot = AttackSnapshot {
        algo,
        mode,
        budget,
        seed,
        gain,
        sa: (algo == Algo::Sa).then(|| sa_params.clone()),
        ga: (algo == Algo::Ga).then(|| ga_params.clone()),
    };
    let manifest = ManifestBuilder::new("attack")
        .input(&args.instance)
        .output(&args.out)
        .seed(seed)
        .config(&snapshot);

    let mut trace = None;
    let strategy = match algo {
        Algo::Greedy => {
            let (strategy, greedy_trace) = greedy_attack_configured(&instance, mode, gain);
            trace = Some(greedy_trace);
            strategy
        }
        Algo::Random => random_attack_in_mode(&instance, mode, seed),
        Algo::Sa => sa_attack_in_mode(&instance, mode, &sa_params, seed)?.0,
        Algo::Ga => ga_attack_in_mode(&instance, mode, &ga_params, seed)?,
    };

    strategy.save_json(&args.out)?;
    let mut manifest = manifest;
    if let Some(trace) = &trace {
        let trace_path = args.out.with_extension("trace.jsonl");
        trace.save_jsonl(&trace_path)?;
        manifest = manifest.output(&trace_path);
    }
    manifest.write(&args.out)?;

    let objective = objective_eq3(&instance, &strategy)?;
    println!(
        "attack ({algo:?}, {mode}): {} ops, objective {:.6} (clean baseline {}) -> {}",
        strategy.ops_used(),
        objective.total,
        instance.n_queries(),
        args.out.display()
    );
    Ok(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DefenseKind {
    None,
    Noise,
    Ensemble,
}

pub struct EvaluateArgs {
    pub instance: PathBuf,
    pub strategy: PathBuf,
    pub defense: DefenseKind,
    pub alpha: Option<f64>,
    pub noise_seed: Option<u64>,
    pub sets: Vec<PathBuf>,
    pub weights: Option<Vec<f64>>,
    pub fit: bool,
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct EvaluateSnapshot {
    defense: DefenseKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    noise_seed: Option<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    extra_sets: Vec<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ensemble_weights: Option<Vec<f64>>,
}

pub fn cmd_evaluate(args: EvaluateArgs, config: &FileConfig) -> anyhow::Result<i32> {
    let instance = AttackInstance::load_json(&args.instance)?;
    let strategy = AttackStrategy::load_json(&args.strategy)?;
    let attacked = oracle_estimates(&instance, &strategy)?;

    let (estimates, used_weights) = match args.defense {
        DefenseKind::None => (attacked, None),
        DefenseKind::Noise => {
            let alpha = args
                .alpha
                .or(config.defense.alpha)
                .context("--alpha is required for the noise defense")?;
            let seed = args.noise_seed.or(config.defense.seed).unwrap_or(0);
            (noise_defense(&attacked, alpha, seed)?, None)
        }
        DefenseKind::Ensemble => {
            let mut sets = vec![attacked];
            for path in &args.sets {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading estimate set {}", path.display()))?;
                let set: Vec<f64> = serde_json::from_str(&text)
                    .with_context(|| format!("parsing estimate set {}", path.display()))?;
                sets.push(set);
            }
            let weights = if args.fit {
                let truths: Vec<f64> =
                    instance.clean_cardinalities().iter().map(|&c| c as f64).collect();
                let fitted = fit_ensemble_weights(&sets, &truths)?;
                if fitted.fallback_uniform {
                    eprintln!("warning: singular ensemble fit system, using uniform weights");
                }
                fitted.weights
            } else if let Some(weights) = args.weights.clone() {
                weights
            } else {
                anyhow::bail!("ensemble defense needs --weights or --fit");
            };
            (ensemble_combine(&sets, &weights)?, Some(weights))
        }
    };

    let report = evaluate(&instance, &estimates)?;
    print!("{}", report.table());

    if let Some(out) = &args.out {
        std::fs::write(out, serde_json::to_string_pretty(&report)?)?;
        ManifestBuilder::new("evaluate")
            .input(&args.instance)
            .input(&args.strategy)
            .output(out)
            .config(&EvaluateSnapshot {
                defense: args.defense,
                alpha: args.alpha.or(config.defense.alpha),
                noise_seed: args.noise_seed.or(config.defense.seed),
                extra_sets: args.sets.clone(),
                ensemble_weights: used_weights,
            })
            .write(out)?;
    } else {
        println!("{}", serde_json::to_string_pretty(&report)?);
    }
    Ok(0)
}

pub struct ReduceDksArgs {
    pub edgelist: PathBuf,
    pub k: u64,
    pub x: u64,
    pub out: PathBuf,
}

#[derive(Serialize)]
struct ReduceSnapshot {
    k: u64,
    x: u64,
    n_vertices: usize,
    n_edges: usize,
}

pub fn cmd_reduce_dks(args: ReduceDksArgs) -> anyhow::Result<i32> {
    let graph = Graph::from_edge_list_file(&args.edgelist)?;
    let snapshot = ReduceSnapshot {
        k: args.k,
        x: args.x,
        n_vertices: graph.n_vertices(),
        n_edges: graph.n_edges(),
    };
    let gadget = build_dks_gadget(graph, args.k, args.x)?;
    gadget.instance.save_json(&args.out)?;
    ManifestBuilder::new("reduce-dks")
        .input(&args.edgelist)
        .output(&args.out)
        .config(&snapshot)
        .write(&args.out)?;
    println!(
        "gadget instance: {} tuples (vertices) x {} queries (edges), weight x={} -> {}",
        gadget.instance.n_tuples(),
        gadget.instance.n_queries(),
        args.x,
        args.out.display()
    );
    Ok(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Property {
    Supermodular,
    Modular,
    GreedyVsOptimal,
    Kappa,
}

pub struct VerifyArgs {
    pub instance: PathBuf,
    pub property: Property,
    pub trials: usize,
    pub seed: u64,
    pub cap: Option<u64>,
}

pub fn cmd_verify(args: VerifyArgs) -> anyhow::Result<i32> {
    let instance = AttackInstance::load_json(&args.instance)?;
    let tol = 1e-9;
    let mut all_pass = true;

    match args.property {
        Property::Supermodular => {
            // slack normalized by the objective scale so huge-weight
            // instances are judged at the same relative tolerance
            let worst = sweep_pairs(&instance, args.trials, args.seed, |inst, a, b| {
                let union: BTreeSet<usize> = a.union(b).copied().collect();
                let inter: BTreeSet<usize> = a.intersection(b).copied().collect();
                let scale = daca_core::objective::delete_only_objective(inst, &union)
                    + daca_core::objective::delete_only_objective(inst, &inter);
                daca_core::objective::check_supermodularity(inst, a, b) / scale
            })
            .into_iter()
            .fold(f64::INFINITY, f64::min);
            let pass = worst >= -tol;
            all_pass &= pass;
            println!(
                "supermodular: trials={}, worst relative slack = {worst:.3e} (tolerance >= -1e-9) -> {}",
                args.trials,
                verdict(pass)
            );
        }
        Property::Modular => {
            let worst = sweep_pairs(&instance, args.trials, args.seed, |inst, a, b| {
                let union: BTreeSet<usize> = a.union(b).copied().collect();
                let inter: BTreeSet<usize> = a.intersection(b).copied().collect();
                let scale = daca_core::objective::insert_only_objective(inst, &union)
                    + daca_core::objective::insert_only_objective(inst, &inter);
                daca_core::objective::check_modularity(inst, a, b).abs() / scale
            })
            .into_iter()
            .fold(0.0f64, f64::max);
            let pass = worst <= tol;
            all_pass &= pass;
            println!(
                "modular: trials={}, worst relative |residual| = {worst:.3e} (tolerance <= 1e-9) -> {}",
                args.trials,
                verdict(pass)
            );
        }
        Property::GreedyVsOptimal => {
            let cap = args.cap.unwrap_or(DEFAULT_ENUMERATION_CAP);

            let insert_opt = brute_force_optimum_capped(&instance, OpMode::InsertOnly, cap)?;
            let (greedy, _) =
                greedy_attack_configured(&instance, OpMode::InsertOnly, GainSemantics::Objective);
            let greedy_val = objective_eq3(&instance, &greedy)?.total;
            let rel = (insert_opt.optimum.total - greedy_val).abs() / insert_opt.optimum.total;
            let pass = rel <= 1e-12;
            all_pass &= pass;
            println!(
                "insert-only: greedy = {greedy_val:.6}, optimum = {:.6}, rel diff = {rel:.3e} -> {}",
                insert_opt.optimum.total,
                verdict(pass)
            );

            let delete_opt = brute_force_optimum_capped(&instance, OpMode::DeleteOnly, cap)?;
            let (greedy, _) =
                greedy_attack_configured(&instance, OpMode::DeleteOnly, GainSemantics::Objective);
            let greedy_val = objective_eq3(&instance, &greedy)?.total;
            let kappa = estimate_kappa(&instance)?;
            let bound = (1.0 - kappa.value) * delete_opt.optimum.total;
            let ratio = greedy_val / delete_opt.optimum.total;
            let pass = greedy_val >= bound - tol * delete_opt.optimum.total;
            all_pass &= pass;
            println!(
                "delete-only: greedy/OPT = {ratio:.6} vs (1-kappa) = {:.6} (kappa {} {:.6}) -> {}",
                1.0 - kappa.value,
                if kappa.exhaustive { "exact" } else { "sampled" },
                kappa.value,
                verdict(pass)
            );

            let mixed_opt = brute_force_optimum_capped(&instance, OpMode::Mixed, cap)?;
            let (greedy, _) =
                greedy_attack_configured(&instance, OpMode::Mixed, GainSemantics::Objective);
            let greedy_val = objective_eq3(&instance, &greedy)?.total;
            let pass = mixed_opt.optimum.total >= greedy_val - tol * greedy_val;
            all_pass &= pass;
            println!(
                "mixed: optimum = {:.6} >= greedy = {greedy_val:.6} ({} candidates) -> {}",
                mixed_opt.optimum.total,
                mixed_opt.enumerated,
                verdict(pass)
            );
        }
        Property::Kappa => {
            let kappa = estimate_kappa(&instance)?;
            println!(
                "kappa: {:.6} ({}), greedy delete-only guarantee (1-kappa) = {:.6} -> PASS",
                kappa.value,
                if kappa.exhaustive { "exact" } else { "sampled lower estimate" },
                1.0 - kappa.value
            );
        }
    }

    Ok(if all_pass { 0 } else { 1 })
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn sweep_pairs(
    instance: &AttackInstance,
    trials: usize,
    seed: u64,
    check: impl Fn(&AttackInstance, &BTreeSet<usize>, &BTreeSet<usize>) -> f64,
) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = instance.n_tuples();
    (0..trials)
        .map(|_| {
            let a: BTreeSet<usize> = (0..n).filter(|_| rng.gen_bool(0.4)).collect();
            let b: BTreeSet<usize> = (0..n).filter(|_| rng.gen_bool(0.4)).collect();
            check(instance, &a, &b)
        })
        .collect()
}
