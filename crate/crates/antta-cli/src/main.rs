//! antta — simulate threshold recruitment in ant colonies, sweep colony
//! sizes, and query the exact oracle.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 timeout,
//! 3 unsatisfiable (from `validate`).

mod build;
mod sweep;

use std::fs::File;
use std::path::PathBuf;
use std::process::ExitCode;

use antta_core::engine::write_trajectory_csv;
use antta_core::scenario::read_scenario_file;
use antta_core::{
    default_max_rounds, expected_hitting_time, recruit_probability, run, run_idle_distribution,
    satisfiability, EngineError, RunOptions, RunResult,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

use build::{resolve, IdleFraction, RunMode, ScenarioKind};
use sweep::SweepConfig;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_TIMEOUT: u8 = 2;
pub const EXIT_UNSAT: u8 = 3;

#[derive(Parser)]
#[command(
    name = "antta",
    version,
    about = "Ant task-allocation simulator: threshold recruitment, idle-ant \
             speedup sweeps, and an exact small-instance oracle"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one seeded trial and print its termination round.
    Run(RunArgs),
    /// Run trials across a grid of colony sizes and fit the scaling law.
    Sweep(SweepArgs),
    /// Exact analytical queries (no simulation).
    Oracle {
        #[command(subcommand)]
        query: OracleQuery,
    },
    /// Check a scenario file for satisfiability.
    Validate {
        /// Path to a scenario JSON file.
        #[arg(long)]
        scenario: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// upper-worst | lowerbound-chain | idle-distribution-lb | file:PATH
    #[arg(long)]
    scenario: String,
    /// Total colony size, idle ants included.
    #[arg(long)]
    n: Option<usize>,
    /// Task count (lowerbound-chain only; other kinds fix it).
    #[arg(long)]
    t: Option<usize>,
    /// Interactions per ant per round.
    #[arg(long = "R", default_value_t = 1)]
    rate: usize,
    /// Recruitment threshold (1 <= th <= R).
    #[arg(long, default_value_t = 1)]
    th: usize,
    /// Idle fraction per task as a rational, e.g. 1/10.
    #[arg(long)]
    idle: Option<String>,
    #[arg(long)]
    seed: u64,
    /// Round cap; defaults to ceil(50 n ln(n+1)).
    #[arg(long)]
    max_rounds: Option<u64>,
    /// Write the per-round trajectory CSV here.
    #[arg(long)]
    trajectory: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    format: OutputFormat,
    /// Run an unsatisfiable scenario anyway (it will time out).
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON sweep config; exclusive with the individual flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// upper-worst | lowerbound-chain | idle-distribution-lb | file:PATH
    #[arg(long)]
    scenario: Option<String>,
    /// Comma-separated strictly increasing colony sizes.
    #[arg(long = "n-values", value_delimiter = ',')]
    n_values: Vec<usize>,
    #[arg(long)]
    t: Option<usize>,
    #[arg(long = "R")]
    rate: Option<usize>,
    #[arg(long)]
    th: Option<usize>,
    /// Idle fraction per task as a rational, e.g. 1/10.
    #[arg(long)]
    idle: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_rounds: Option<u64>,
    /// Output prefix: writes PREFIX.csv and PREFIX.json. Stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum OracleQuery {
    /// P[Binomial(R, w/(n-1)) >= th]: the per-round recruitment probability.
    RecruitP {
        /// Recruiting (working or idle) ants in the next task.
        #[arg(long)]
        w: usize,
        #[arg(long)]
        n: usize,
        #[arg(long = "R", default_value_t = 1)]
        rate: usize,
        #[arg(long, default_value_t = 1)]
        th: usize,
    },
    /// Expected rounds to meet the demand, from the absorbing count chain.
    HittingTime {
        /// Path to a scenario JSON file.
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long = "R", default_value_t = 1)]
        rate: usize,
        #[arg(long, default_value_t = 1)]
        th: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Text,
    Csv,
    Json,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // --help/--version land here too; they are not usage errors.
            let code = if err.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    if let Err(message) = configure_threads() {
        eprintln!("error: {message}");
        return ExitCode::from(EXIT_USAGE);
    }
    let code = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => match sweep_config_from(args) {
            Ok(config) => sweep::cmd_sweep(config),
            Err(message) => {
                eprintln!("error: {message}");
                EXIT_USAGE
            }
        },
        Command::Oracle { query } => cmd_oracle(query),
        Command::Validate { scenario } => cmd_validate(&scenario),
    };
    ExitCode::from(code)
}

/// ANTTA_THREADS caps the worker pool; default is machine parallelism.
fn configure_threads() -> Result<(), String> {
    match std::env::var("ANTTA_THREADS") {
        Err(_) => Ok(()),
        Ok(text) => {
            let threads: usize = text
                .parse()
                .map_err(|_| format!("ANTTA_THREADS must be a number, got {text:?}"))?;
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global()
                .map_err(|e| e.to_string())
        }
    }
}

fn cmd_run(args: RunArgs) -> u8 {
    let kind = match ScenarioKind::parse(&args.scenario) {
        Ok(kind) => kind,
        Err(message) => {
            eprintln!("error: {message}");
            return EXIT_USAGE;
        }
    };
    let idle = match args.idle.as_deref().map(IdleFraction::parse).transpose() {
        Ok(idle) => idle.flatten(),
        Err(message) => {
            eprintln!("error: {message}");
            return EXIT_USAGE;
        }
    };
    let resolved = match resolve(&kind, args.n, args.t, args.rate, args.th, idle) {
        Ok(resolved) => resolved,
        Err(message) => {
            eprintln!("error: {message}");
            return EXIT_USAGE;
        }
    };

    let n = resolved.params.colony_size;
    let options = RunOptions::new(args.max_rounds.unwrap_or_else(|| default_max_rounds(n)))
        .with_trajectory(args.trajectory.is_some())
        .with_force(args.force);
    let outcome = match &resolved.mode {
        RunMode::Allocation => {
            run(&resolved.scenario, &resolved.params, args.seed, &options)
        }
        RunMode::Distribution(goal) => {
            run_idle_distribution(&resolved.scenario, goal, &resolved.params, args.seed, &options)
        }
    };
    let result = match outcome {
        Ok(result) => result,
        Err(EngineError::Unsatisfiable { verdict }) => {
            println!("{}", serde_json::to_string(&verdict).unwrap());
            eprintln!("error: scenario is unsatisfiable; pass --force to run it anyway");
            return EXIT_USAGE;
        }
        Err(err) => {
            eprintln!("error: {err}");
            return EXIT_USAGE;
        }
    };

    if let Some(path) = &args.trajectory {
        let rows = result.trajectory.as_deref().unwrap_or_default();
        let written = File::create(path)
            .map_err(|e| e.to_string())
            .and_then(|mut file| write_trajectory_csv(&mut file, rows).map_err(|e| e.to_string()));
        if let Err(message) = written {
            eprintln!("error: cannot write trajectory {}: {message}", path.display());
            return EXIT_USAGE;
        }
    }

    print_run_result(&args, &resolved.label, n, &result);
    if result.terminated {
        EXIT_OK
    } else {
        EXIT_TIMEOUT
    }
}

fn print_run_result(args: &RunArgs, label: &str, n: usize, result: &RunResult) {
    let first_switch = result.first_switch_round;
    match args.format {
        OutputFormat::Text => {
            let switch = first_switch.map_or(String::from("-"), |r| r.to_string());
            println!(
                "scenario={label} n={n} seed={} rounds={} terminated={} first_switch={switch}",
                args.seed, result.rounds, result.terminated
            );
        }
        OutputFormat::Csv => {
            let switch = first_switch.map_or(String::new(), |r| r.to_string());
            println!("scenario,n,seed,terminated,rounds,first_switch");
            println!(
                "{label},{n},{},{},{},{switch}",
                args.seed, result.terminated, result.rounds
            );
        }
        OutputFormat::Json => {
            let doc = serde_json::json!({
                "scenario": label,
                "n": n,
                "seed": args.seed,
                "terminated": result.terminated,
                "rounds": result.rounds,
                "first_switch_round": first_switch,
            });
            println!("{doc}");
        }
    }
}

fn sweep_config_from(args: SweepArgs) -> Result<SweepConfig, String> {
    if let Some(path) = &args.config {
        let flags_given = args.scenario.is_some()
            || !args.n_values.is_empty()
            || args.t.is_some()
            || args.rate.is_some()
            || args.th.is_some()
            || args.idle.is_some()
            || args.trials.is_some()
            || args.seed.is_some()
            || args.max_rounds.is_some();
        if flags_given {
            return Err("--config is exclusive with the individual sweep flags \
                        (--out is still honored)"
                .into());
        }
        let mut config = sweep::read_config_file(path)?;
        if args.out.is_some() {
            config.output_path = args.out;
        }
        return Ok(config);
    }

    let scenario = args.scenario.ok_or("either --config or --scenario is required")?;
    let (scenario_kind, scenario_path) = match ScenarioKind::parse(&scenario)? {
        ScenarioKind::File(path) => (String::from("file"), Some(path)),
        kind => (kind.label(), None),
    };
    let idle_fraction_per_task = args
        .idle
        .as_deref()
        .map(IdleFraction::parse)
        .transpose()?
        .flatten()
        .map(|f| (f.numerator, f.denominator));
    Ok(SweepConfig {
        scenario_kind,
        scenario_path,
        n_values: args.n_values,
        t: args.t,
        rate: args.rate.unwrap_or(1),
        th: args.th.unwrap_or(1),
        idle_fraction_per_task,
        trials: args.trials.ok_or("--trials is required")?,
        master_seed: args.seed.ok_or("--seed is required")?,
        max_rounds: args.max_rounds,
        output_path: args.out,
    })
}

fn cmd_oracle(query: OracleQuery) -> u8 {
    match query {
        OracleQuery::RecruitP { w, n, rate, th } => {
            if n < 2 || w >= n || th < 1 || th > rate {
                eprintln!(
                    "error: need n >= 2, w <= n-1 and 1 <= th <= R; \
                     got w={w} n={n} R={rate} th={th}"
                );
                return EXIT_USAGE;
            }
            let p = recruit_probability(w, n, rate, th);
            let doc = serde_json::json!({ "w": w, "n": n, "R": rate, "th": th, "probability": p });
            println!("{doc}");
            EXIT_OK
        }
        OracleQuery::HittingTime { scenario, rate, th } => {
            let loaded = match read_scenario_file(&scenario) {
                Ok(loaded) => loaded,
                Err(err) => {
                    eprintln!("error: {err}");
                    return EXIT_USAGE;
                }
            };
            let params = match antta_core::ModelParams::new(
                loaded.total_ants(),
                loaded.task_count(),
                rate,
                th,
            ) {
                Ok(params) => params,
                Err(err) => {
                    eprintln!("error: {err}");
                    return EXIT_USAGE;
                }
            };
            match expected_hitting_time(&loaded, &params) {
                Ok(expected) => {
                    let doc = serde_json::json!({
                        "n": loaded.total_ants(),
                        "t": loaded.task_count(),
                        "R": rate,
                        "th": th,
                        "expected_rounds": expected,
                    });
                    println!("{doc}");
                    EXIT_OK
                }
                Err(err) => {
                    eprintln!("error: {err}");
                    EXIT_USAGE
                }
            }
        }
    }
}

fn cmd_validate(path: &std::path::Path) -> u8 {
    let scenario = match read_scenario_file(path) {
        Ok(scenario) => scenario,
        Err(err) => {
            eprintln!("error: {err}");
            return EXIT_USAGE;
        }
    };
    let verdict = satisfiability(&scenario);
    println!("{}", serde_json::to_string(&verdict).unwrap());
    if verdict.satisfiable {
        EXIT_OK
    } else {
        EXIT_UNSAT
    }
}
