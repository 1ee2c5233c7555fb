//! Experiment CLI: single runs and multi-seed campaigns over the builtin
//! benchmark problems, writing reproducible artifacts.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use modebi::bench::{self, BenchProblem};
use modebi::harness::{run_algorithm, run_campaign, write_artifacts, Algorithm};
use modebi::problem::ProblemSpec;
use modebi::{AlgoConfig, Error};

#[derive(Parser)]
#[command(name = "modebi", version, about = "Surrogate-assisted constrained multi-objective optimization runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One run of one algorithm on one problem.
    Run(RunArgs),
    /// The same run repeated over a list of seeds, with a cross-seed summary.
    Campaign(CampaignArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Builtin problem name (bnh, toy-regulator).
    #[arg(long, conflicts_with = "problem_file")]
    problem: Option<String>,
    /// Problem JSON document; its name picks the builtin evaluator.
    #[arg(long)]
    problem_file: Option<PathBuf>,
    /// Algorithm id: gde3, modebi-s1, modebi-s2 or modebi-s3.
    #[arg(long)]
    algo: String,
    /// Simulation budget in (design, corner) evaluations.
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    pop_size: Option<usize>,
    /// JSON file overriding any algorithm-configuration defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for artifacts; nothing is written without it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct CampaignArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated seed list, e.g. 1,2,3,4,5.
    #[arg(long, value_delimiter = ',', required = true)]
    seeds: Vec<u64>,
}

fn load_problem(common: &CommonArgs) -> Result<BenchProblem, Error> {
    match (&common.problem, &common.problem_file) {
        (Some(name), None) => bench::by_name(name),
        (None, Some(path)) => {
            let text = fs::read_to_string(path)?;
            bench::from_spec(serde_json::from_str::<ProblemSpec>(&text)?)
        }
        _ => Err(Error::InvalidConfig(
            "exactly one of --problem / --problem-file is required".into(),
        )),
    }
}

fn load_config(common: &CommonArgs, seed: u64) -> Result<AlgoConfig, Error> {
    let mut config: AlgoConfig = match &common.config {
        Some(path) => serde_json::from_str(&fs::read_to_string(path)?)?,
        None => AlgoConfig::default(),
    };
    // Flags override the config file.
    if let Some(b) = common.budget {
        config.budget = b;
    }
    if let Some(b) = common.batch_size {
        config.batch_size = b;
    }
    if let Some(n) = common.pop_size {
        config.pop_size = n;
    }
    config.seed = seed;
    config.validate()?;
    Ok(config)
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run(args) => {
            let problem = load_problem(&args.common)?;
            let algorithm = Algorithm::from_name(&args.common.algo)?;
            let config = load_config(&args.common, args.seed)?;
            let result = run_algorithm(&problem, algorithm, &config)?;
            if let Some(dir) = &args.common.out {
                write_artifacts(dir, &result)?;
            }
            println!("{}", serde_json::to_string_pretty(&result.summary)?);
            Ok(())
        }
        Command::Campaign(args) => {
            let problem = load_problem(&args.common)?;
            let algorithm = Algorithm::from_name(&args.common.algo)?;
            let config = load_config(&args.common, 0)?;
            let summary = run_campaign(
                &problem,
                algorithm,
                &config,
                &args.seeds,
                args.common.out.as_deref(),
            )?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(())
        }
    }
}

/// Distinct exit codes per error family so scripts can branch on failures.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::UnknownAlgorithm(_) => 2,
        Error::UnknownProblem(_) => 3,
        Error::InvalidConfig(_) | Error::InvalidProblem(_) | Error::Json(_) => 4,
        Error::Io(_) => 5,
        Error::BudgetTooSmall { .. } => 6,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
