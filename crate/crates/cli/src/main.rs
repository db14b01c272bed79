//! `polarium <subcommand> [--config FILE] [--seed N] [--out DIR] [flags]`
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 runtime error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use polarium_cli::config::parse_object;
use polarium_cli::{run_experiment, ConfigError, Kind};
use serde_json::{Map, Value};

const OUT_ENV: &str = "POLARIUM_OUT";

#[derive(Parser)]
#[command(
    name = "polarium",
    version,
    about = "Biased-assimilation opinion dynamics and recommender polarization experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One individual facing a fixed environment; sweeps starting opinions.
    SingleAgent(SingleAgentArgs),
    /// Biased dynamics on a graph read from an edge-list file.
    Dynamics(DynamicsArgs),
    /// Two-island network against the regime prediction.
    TwoIsland(TwoIslandArgs),
    /// Monte Carlo polarization estimate for a random-walk recommender.
    Recsys(RecsysArgs),
    /// Randomized property checks of the dynamics and metrics.
    TheoremSuite(SuiteArgs),
}

#[derive(Args)]
struct Common {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides POLARIUM_OUT and the config).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SingleAgentArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    w: Option<f64>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    /// Comma-separated starting opinions.
    #[arg(long, value_delimiter = ',')]
    x0: Option<Vec<f64>>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<u64>,
}

#[derive(Args)]
struct DynamicsArgs {
    #[command(flatten)]
    common: Common,
    /// Edge-list file.
    #[arg(long)]
    graph: Option<String>,
    /// Common bias for every node.
    #[arg(long)]
    biases: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<u64>,
    #[arg(long)]
    record_every: Option<u64>,
}

#[derive(Args)]
struct TwoIslandArgs {
    #[command(flatten)]
    common: Common,
    /// Nodes per island.
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    ps: Option<f64>,
    #[arg(long)]
    pd: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    x0: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<u64>,
    #[arg(long)]
    record_every: Option<u64>,
    #[arg(long)]
    shuffle_swaps: Option<u64>,
}

#[derive(Args)]
struct RecsysArgs {
    #[command(flatten)]
    common: Common,
    /// salsa, ppr or icf.
    #[arg(long)]
    algo: Option<String>,
    /// Items per color.
    #[arg(long)]
    n: Option<u64>,
    /// Users (default 2n).
    #[arg(long)]
    m: Option<u64>,
    /// Expected items per user.
    #[arg(long)]
    k: Option<f64>,
    /// uniform, beta:A or twopoint:D.
    #[arg(long)]
    dist: Option<String>,
    /// Probe opinion.
    #[arg(long)]
    xi: Option<f64>,
    /// biased or unbiased:P.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    trials: Option<u64>,
    /// Walks per recommendation, or "exact".
    #[arg(long = "T")]
    walks: Option<String>,
    #[arg(long)]
    trials_per_graph: Option<u64>,
}

#[derive(Args)]
struct SuiteArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    instances: Option<u64>,
    #[arg(long)]
    counterexample_trials: Option<u64>,
    #[arg(long)]
    max_nodes: Option<u64>,
}

/// Flag values to merge over the config file's keys.
#[derive(Default)]
struct Overrides(Vec<(&'static str, Value)>);

impl Overrides {
    fn set(&mut self, key: &'static str, value: Option<impl Into<Value>>) -> &mut Self {
        if let Some(v) = value {
            self.0.push((key, v.into()));
        }
        self
    }
}

impl Command {
    fn split(self) -> (Kind, Common, Overrides) {
        let mut o = Overrides::default();
        match self {
            Command::SingleAgent(a) => {
                o.set("w", a.w)
                    .set("s", a.s)
                    .set("b", a.b)
                    .set("x0", a.x0)
                    .set("tol", a.tol)
                    .set("max_iters", a.max_iters);
                (Kind::SingleAgent, a.common, o)
            }
            Command::Dynamics(a) => {
                o.set("graph", a.graph)
                    .set("biases", a.biases)
                    .set("tol", a.tol)
                    .set("max_iters", a.max_iters)
                    .set("record_every", a.record_every);
                (Kind::GeneralDynamics, a.common, o)
            }
            Command::TwoIsland(a) => {
                o.set("n", a.n)
                    .set("ps", a.ps)
                    .set("pd", a.pd)
                    .set("b", a.b)
                    .set("x0", a.x0)
                    .set("tol", a.tol)
                    .set("max_iters", a.max_iters)
                    .set("record_every", a.record_every)
                    .set("shuffle_swaps", a.shuffle_swaps);
                (Kind::TwoIsland, a.common, o)
            }
            Command::Recsys(a) => {
                o.set("algo", a.algo)
                    .set("n", a.n)
                    .set("m", a.m)
                    .set("k", a.k)
                    .set("dist", a.dist)
                    .set("xi", a.xi)
                    .set("mode", a.mode)
                    .set("trials", a.trials)
                    .set("T", a.walks)
                    .set("trials_per_graph", a.trials_per_graph);
                (Kind::Recsys, a.common, o)
            }
            Command::TheoremSuite(a) => {
                o.set("instances", a.instances)
                    .set("counterexample_trials", a.counterexample_trials)
                    .set("max_nodes", a.max_nodes);
                (Kind::TheoremSuite, a.common, o)
            }
        }
    }
}

enum Failure {
    Usage(String),
    Runtime(String),
}

fn load(kind: Kind, common: &Common, overrides: Overrides) -> Result<polarium_cli::ExperimentConfig, Failure> {
    let usage = |e: String| Failure::Usage(e);
    let mut map = match &common.config {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            match serde_json::from_str::<Value>(&text) {
                Ok(Value::Object(mut map)) => {
                    // the graph file is named relative to the config file
                    if let (Some(Value::String(graph)), Some(dir)) = (map.get_mut("graph"), path.parent()) {
                        if Path::new(graph.as_str()).is_relative() {
                            *graph = dir.join(graph.as_str()).to_string_lossy().into_owned();
                        }
                    }
                    map
                }
                Ok(_) => return Err(usage(format!("{}: configuration must be a JSON object", path.display()))),
                Err(e) => return Err(usage(format!("{}: malformed JSON: {e}", path.display()))),
            }
        }
        None => Map::new(),
    };
    for (key, value) in overrides.0 {
        map.insert(key.to_owned(), value);
    }
    if let Some(seed) = common.seed {
        map.insert("seed".into(), seed.into());
    }
    parse_object(&map, Some(kind)).map_err(|e: ConfigError| usage(e.to_string()))
}

/// Flag, then environment, then config, then `results/<kind>`.
fn output_dir(common: &Common, config: &polarium_cli::ExperimentConfig, env: Option<OsString>) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| env.filter(|v| !v.is_empty()).map(PathBuf::from))
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| Path::new("results").join(config.experiment.kind().name()))
}

fn execute(cli: Cli) -> Result<(), Failure> {
    let (kind, common, overrides) = cli.command.split();
    let config = load(kind, &common, overrides)?;
    let out = output_dir(&common, &config, std::env::var_os(OUT_ENV));
    match run_experiment(&config, &out) {
        Ok(manifest) => {
            println!("{kind}: wrote {} output files and manifest.json to {}", manifest.outputs.len(), out.display());
            Ok(())
        }
        Err(e) if e.is_validation() => Err(Failure::Usage(e.to_string())),
        Err(e) => Err(Failure::Runtime(e.to_string())),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
