//! `daca` — attack-pipeline CLI: extract joint weights from result sets,
//! generate attack strategies, evaluate their Qerror impact and defenses,
//! build graph-reduction gadget instances, and verify the objective's
//! structural properties.
//!
//! Exit codes: 0 success, 1 property-verification failure, 2 input error,
//! 3 enumeration-capacity error.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use commands::{Algo, DefenseKind, Property};
use config::FileConfig;
use daca_core::greedy::{GainSemantics, OpMode};

#[derive(Parser)]
#[command(name = "daca", version, about = "Bounded data-drift attacks on cardinality estimators")]
struct Cli {
    /// TOML config file; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads (also via DACA_THREADS); defaults to available cores
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Emit errors to stderr as JSON
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum ModeArg {
    Mixed,
    DeleteOnly,
    InsertOnly,
}

impl From<ModeArg> for OpMode {
    fn from(mode: ModeArg) -> Self {
        match mode {
            ModeArg::Mixed => OpMode::Mixed,
            ModeArg::DeleteOnly => OpMode::DeleteOnly,
            ModeArg::InsertOnly => OpMode::InsertOnly,
        }
    }
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum GainArg {
    Objective,
    Local,
}

impl From<GainArg> for GainSemantics {
    fn from(gain: GainArg) -> Self {
        match gain {
            GainArg::Objective => GainSemantics::Objective,
            GainArg::Local => GainSemantics::Local,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build an instance from a query_id,tuple_pk result-set CSV
    Extract {
        /// Result rows CSV (`query_id,tuple_pk`; `.gz` accepted). With
        /// --grouped: `query_id,tuple_pk,count`
        result_csv: PathBuf,
        #[arg(long)]
        n_tuples: usize,
        #[arg(long)]
        n_queries: usize,
        /// Attack budget stored in the instance
        #[arg(long, default_value_t = 1)]
        budget: u64,
        /// Input is already grouped into per-(query, tuple) counts
        #[arg(long)]
        grouped: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a deterministic synthetic instance
    Generate {
        #[arg(long)]
        n_tuples: Option<usize>,
        #[arg(long)]
        n_queries: Option<usize>,
        #[arg(long)]
        budget: Option<u64>,
        /// Tuples per query: `S` or `LO..HI`
        #[arg(long, value_parser = config::parse_support)]
        support: Option<daca_core::syngen::SupportSpec>,
        /// Weight distribution: `uniform:LO,HI` or `zipf:EXPONENT,MAX`
        #[arg(long, value_parser = config::parse_weights)]
        weights: Option<daca_core::syngen::WeightDist>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute an attack strategy for an instance
    Attack {
        instance: PathBuf,
        #[arg(long, value_enum)]
        algo: Option<Algo>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Overrides the instance budget
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Greedy gain scoring (`local` mirrors the per-step Qerror variant)
        #[arg(long, value_enum)]
        gain: Option<GainArg>,
        #[arg(long)]
        sa_initial_temp: Option<f64>,
        #[arg(long)]
        sa_cooling: Option<f64>,
        #[arg(long)]
        sa_iterations: Option<usize>,
        #[arg(long)]
        ga_population: Option<usize>,
        #[arg(long)]
        ga_generations: Option<usize>,
        #[arg(long)]
        ga_crossover_rate: Option<f64>,
        #[arg(long)]
        ga_mutation_rate: Option<f64>,
        /// Strategy output path; greedy also writes `<out>.trace.jsonl`
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate the surrogate oracle under a strategy, optionally defended
    Evaluate {
        instance: PathBuf,
        strategy: PathBuf,
        #[arg(long, value_enum, default_value = "none")]
        defense: DefenseKind,
        /// Noise intensity for the noise defense
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        noise_seed: Option<u64>,
        /// Extra estimate-set JSON files for the ensemble (oracle is set 0)
        #[arg(long, value_delimiter = ',')]
        sets: Vec<PathBuf>,
        /// Explicit ensemble weights, one per set
        #[arg(long, value_delimiter = ',')]
        weights: Option<Vec<f64>>,
        /// Fit ensemble weights by non-negative least squares on the clean
        /// cardinalities
        #[arg(long)]
        fit: bool,
        /// Report JSON output path (table always goes to stdout)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Encode a graph edge list as a gadget instance (one query per edge)
    ReduceDks {
        /// Edge-list file: first line `V E`, then `E` lines `u v`
        edgelist: PathBuf,
        #[arg(long)]
        k: u64,
        /// Common joint weight per endpoint
        #[arg(long, default_value_t = 1_000_000)]
        x: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check structural properties of an instance's objective
    Verify {
        instance: PathBuf,
        #[arg(long, value_enum)]
        property: Property,
        /// Random (A, B) pairs for the supermodular/modular sweeps
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Enumeration cap override for greedy-vs-optimal
        #[arg(long)]
        cap: Option<u64>,
    },
}

fn main() {
    let cli = Cli::parse();
    let json_errors = cli.json;
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            let (code, kind) = classify(&err);
            if json_errors {
                let payload = serde_json::json!({
                    "error": { "kind": kind, "message": format!("{err:#}") }
                });
                eprintln!("{payload}");
            } else {
                eprintln!("error: {err:#}");
            }
            std::process::exit(code);
        }
    }
}

fn classify(err: &anyhow::Error) -> (i32, &'static str) {
    if let Some(core_err) = err.downcast_ref::<daca_core::Error>() {
        if matches!(core_err, daca_core::Error::Capacity { .. }) {
            return (3, "capacity");
        }
    }
    (2, "input")
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    let threads = cli
        .threads
        .or_else(|| std::env::var("DACA_THREADS").ok().and_then(|s| s.parse().ok()));
    if let Some(threads) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().ok();
    }
    let config = FileConfig::load(cli.config.as_deref())?;

    match cli.command {
        Command::Extract { result_csv, n_tuples, n_queries, budget, grouped, out } => {
            commands::cmd_extract(commands::ExtractArgs {
                result_csv,
                n_tuples,
                n_queries,
                budget,
                grouped,
                out,
            })
        }
        Command::Generate { n_tuples, n_queries, budget, support, weights, seed, out } => {
            commands::cmd_generate(
                commands::GenerateArgs { n_tuples, n_queries, budget, support, weights, seed, out },
                &config,
            )
        }
        Command::Attack {
            instance,
            algo,
            mode,
            budget,
            seed,
            gain,
            sa_initial_temp,
            sa_cooling,
            sa_iterations,
            ga_population,
            ga_generations,
            ga_crossover_rate,
            ga_mutation_rate,
            out,
        } => commands::cmd_attack(
            commands::AttackArgs {
                instance,
                algo,
                mode: mode.map(OpMode::from),
                budget,
                seed,
                gain: gain.map(GainSemantics::from),
                sa_initial_temp,
                sa_cooling,
                sa_iterations,
                ga_population,
                ga_generations,
                ga_crossover_rate,
                ga_mutation_rate,
                out,
            },
            &config,
        ),
        Command::Evaluate {
            instance,
            strategy,
            defense,
            alpha,
            noise_seed,
            sets,
            weights,
            fit,
            out,
        } => commands::cmd_evaluate(
            commands::EvaluateArgs {
                instance,
                strategy,
                defense,
                alpha,
                noise_seed,
                sets,
                weights,
                fit,
                out,
            },
            &config,
        ),
        Command::ReduceDks { edgelist, k, x, out } => {
            commands::cmd_reduce_dks(commands::ReduceDksArgs { edgelist, k, x, out })
        }
        Command::Verify { instance, property, trials, seed, cap } => {
            commands::cmd_verify(commands::VerifyArgs { instance, property, trials, seed, cap })
        }
    }
}
