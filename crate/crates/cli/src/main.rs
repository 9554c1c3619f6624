//! `cloudlap`: experiments on random geometric graphs over sampled manifolds.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgMatches, CommandFactory, FromArgMatches, Parser, Subcommand};
use cloudlap::CloudError;
use serde::Serialize;
use serde_json::{Map, Value};

use config::*;
use output::Artifacts;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, bad config, unwritable output: exit code 1.
    Usage(String),
    /// The run itself failed: exit code 2.
    Experiment(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Experiment(m) => write!(f, "experiment failed: {m}"),
        }
    }
}

impl From<CloudError> for CliError {
    fn from(e: CloudError) -> Self {
        use CloudError::*;
        match e {
            InvalidParameter(_)
            | Unsupported(_)
            | ConstraintViolation { .. }
            | SizeLimit { .. }
            | ShapeMismatch { .. }
            | Io(_)
            | Json(_) => CliError::Usage(e.to_string()),
            _ => CliError::Experiment(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "cloudlap", version, about = "Graph Laplacians on sampled manifolds")]
struct Cli {
    /// JSON file with settings; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Print the planned cells and exit.
    #[arg(long, global = true)]
    dry_run: bool,
    /// Worker threads (falls back to CLOUDLAP_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a point cloud.
    Sample(SampleConfig),
    /// Build the eps-graph and report degrees.
    Graph(GraphConfig),
    /// Low eigenpairs of the graph Laplacian.
    Eigs(EigsConfig),
    /// Regularity statistics of low eigenvectors across n.
    Regularity(RegularityConfig),
    /// Eigenpair convergence rates across n.
    Converge(ConvergeConfig),
    /// Consistency of the nonlocal operators as eps shrinks.
    Nonlocal(NonlocalConfig),
    /// Coupled random walks and their stopping times.
    Couple(CoupleConfig),
    /// Concentration of degrees, counts and double convolutions.
    Concentration(ConcentrationConfig),
}

fn resolve<T: Serialize + serde::de::DeserializeOwned>(
    flags: T,
    matches: &ArgMatches,
    file: &Map<String, Value>,
) -> Result<(T, Value), CliError> {
    let merged = config::merge(flags, matches, file)?;
    let value = serde_json::to_value(&merged).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok((merged, value))
}

fn threads(flag: Option<usize>) -> Result<usize, CliError> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("CLOUDLAP_THREADS") {
            Ok(s) => Some(
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| CliError::Usage(format!("CLOUDLAP_THREADS='{s}' is not a count")))?,
            ),
            Err(_) => None,
        },
    };
    if n == Some(0) {
        return Err(CliError::Usage("thread count must be positive".into()));
    }
    if let Some(n) = n {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(rayon::current_num_threads())
}

macro_rules! dispatch {
    ($cli:expr, $sub:expr, $file:expr, $( $variant:ident => $plan:expr, $run:path ;)*) => {
        match $cli.command {
            $(Command::$variant(flags) => {
                let (c, value) = resolve(flags, $sub, $file)?;
                (stringify!($variant), value, Box::new(move |dry: bool, out: &mut Option<Artifacts>| {
                    if dry {
                        let plan: Result<Value, CliError> = $plan(&c);
                        println!("{}", serde_json::to_string_pretty(&plan?).expect("plan serializes"));
                        Ok(true)
                    } else {
                        $run(&c, out.as_mut().expect("output directory"))
                    }
                }) as Box<dyn FnOnce(bool, &mut Option<Artifacts>) -> Result<bool, CliError>>)
            })*
        }
    };
}

fn run() -> Result<bool, CliError> {
    let matches = match Cli::command().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind::*;
            let code = match e.kind() {
                DisplayHelp | DisplayVersion | DisplayHelpOnMissingArgumentOrSubcommand => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let cli = Cli::from_arg_matches(&matches).map_err(|e| CliError::Usage(e.to_string()))?;
    let (_, sub) = matches.subcommand().expect("subcommand is required");
    let mut file = match &cli.config {
        Some(p) => config::load_file(p)?,
        None => Map::new(),
    };
    // settings that belong to the invocation rather than the experiment
    for key in ["command", "out", "threads", "dry_run"] {
        file.remove(key);
    }
    let nthreads = threads(cli.threads)?;
    let dry = cli.dry_run;
    let out_dir = cli.out.clone();

    let ok = |v: Value| -> Result<Value, CliError> { Ok(v) };
    let (name, value, job) = dispatch!(cli, sub, &file,
        Sample => |c| ok(commands::plan_sample(c)), commands::run_sample;
        Graph => |c| ok(commands::plan_graph(c)), commands::run_graph;
        Eigs => |c| ok(commands::plan_eigs(c)), commands::run_eigs;
        Regularity => commands::plan_regularity, commands::run_regularity;
        Converge => commands::plan_converge, commands::run_converge;
        Nonlocal => |c| ok(commands::plan_nonlocal(c)), commands::run_nonlocal;
        Couple => commands::plan_couple, commands::run_couple;
        Concentration => |c| ok(commands::plan_concentration(c)), commands::run_concentration;
    );
    let command = name.to_lowercase();
    if dry {
        return job(true, &mut None);
    }
    let start = Instant::now();
    let mut out = Some(Artifacts::create(&out_dir)?);
    let pass = job(false, &mut out)?;
    out.take()
        .expect("artifacts")
        .finish(&command, &value, pass, start.elapsed(), nthreads)?;
    println!("{command}: {}", if pass { "pass" } else { "fail" });
    Ok(pass)
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("cloudlap: {e}");
            match e {
                CliError::Usage(_) => ExitCode::from(1),
                CliError::Experiment(_) => ExitCode::from(2),
            }
        }
    }
}
