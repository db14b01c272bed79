//! Experiment dispatch, output files and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use polarium_core::recsys::{estimate_polarization, Color};
use polarium_core::{
    build_two_island, classify_two_island, gdi, is_polarizing, ndi, run_until_convergence, single_agent_step,
    BiasProfile, Component, EnvironmentParams, OpinionState, RegimeVerdict, SeedStreams, Trajectory, WeightedGraph,
};
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{
    DynamicsConfig, Experiment, ExperimentConfig, InitialOpinions, Kind, RecsysConfig, SingleAgentConfig,
    TwoIslandConfig,
};
use crate::emit::{self, EmitError, Records};
use crate::suite::{run_suite, CheckResult};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum RunError {
    /// Input that fails a precondition, found before any computation.
    #[error("invalid {kind} input: {message}")]
    Invalid { kind: Kind, message: String },
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot create output directory {path}: {source}")]
    CreateDir { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Emit(#[from] EmitError),
    #[error("{kind} experiment failed: {message}")]
    Experiment { kind: Kind, message: String },
}

impl RunError {
    /// Validation failures as opposed to I/O or computation failures.
    pub fn is_validation(&self) -> bool {
        matches!(self, RunError::Invalid { .. })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub version: String,
    pub duration_seconds: f64,
    /// SHA-256 of every output file except the manifest, by file name.
    pub outputs: BTreeMap<String, String>,
}

/// Output files of one run, in memory until everything has been computed.
type Outputs = Vec<(&'static str, Vec<u8>)>;

/// Runs the experiment and writes its outputs plus `manifest.json` into
/// `out_dir`, which is created if missing.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<RunManifest, RunError> {
    let start = Instant::now();
    let seeds = SeedStreams::new(config.seed);
    let outputs = match &config.experiment {
        Experiment::SingleAgent(c) => single_agent(c)?,
        Experiment::GeneralDynamics(c) => dynamics(c, &seeds)?,
        Experiment::TwoIsland(c) => two_island(c, &seeds)?,
        Experiment::Recsys(c) => recsys(c, &seeds)?,
        Experiment::TheoremSuite(c) => theorem_suite(&run_suite(c, config.seed)),
    };
    fs::create_dir_all(out_dir).map_err(|source| RunError::CreateDir { path: out_dir.to_owned(), source })?;
    let mut checksums = BTreeMap::new();
    for (name, bytes) in &outputs {
        let path = out_dir.join(name);
        fs::write(&path, bytes).map_err(|source| EmitError { path, source })?;
        checksums.insert((*name).to_owned(), hex::encode(Sha256::digest(bytes)));
    }
    let manifest = RunManifest {
        config: config.clone(),
        version: env!("CARGO_PKG_VERSION").to_owned(),
        duration_seconds: start.elapsed().as_secs_f64(),
        outputs: checksums,
    };
    emit::write_json(&manifest, &out_dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

fn failed(kind: Kind) -> impl Fn(String) -> RunError {
    move |message| RunError::Experiment { kind, message }
}

fn invalid(kind: Kind) -> impl Fn(String) -> RunError {
    move |message| RunError::Invalid { kind, message }
}

/// Iterates the single-agent map until the step falls below `tol`.
fn single_agent_limit(p: &EnvironmentParams, x0: f64, tol: f64, max_iters: u64) -> (f64, u64, bool) {
    let mut x = x0;
    for t in 1..=max_iters {
        let next = single_agent_step(p, x).expect("opinion stays in range");
        let change = (next - x).abs();
        x = next;
        if change < tol {
            return (x, t, true);
        }
    }
    (x, max_iters, false)
}

/// Which extreme a start escapes to, or `None` if it never gets close.
fn escape_side(p: &EnvironmentParams, x0: f64, max_iters: u64) -> Option<bool> {
    let mut x = x0;
    for _ in 0..=max_iters {
        if x > 1.0 - 1e-6 {
            return Some(true);
        }
        if x < 1e-6 {
            return Some(false);
        }
        x = single_agent_step(p, x).expect("opinion stays in range");
    }
    None
}

/// Empirical threshold from simulated limits: the boundary between starts
/// that escape to 0 and to 1 (refined by bisection) for `b > 1`, the mean
/// limit for `b < 1`, and none at `b = 1`.
fn empirical_threshold(c: &SingleAgentConfig, sweep: &[(f64, f64, bool)]) -> Option<f64> {
    let p = c.params();
    if c.b < 1.0 {
        let limits: Vec<f64> = sweep.iter().filter(|r| r.2).map(|r| r.1).collect();
        return (!limits.is_empty()).then(|| limits.iter().sum::<f64>() / limits.len() as f64);
    }
    if c.b == 1.0 {
        return None;
    }
    let mut starts: Vec<f64> = sweep.iter().map(|r| r.0).collect();
    starts.sort_by(f64::total_cmp);
    let sides: Vec<Option<bool>> = starts.iter().map(|&x| escape_side(&p, x, c.max_iters)).collect();
    let k = sides.windows(2).position(|w| w[0] == Some(false) && w[1] == Some(true))?;
    let (mut lo, mut hi) = (starts[k], starts[k + 1]);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match escape_side(&p, mid, c.max_iters) {
            Some(true) => hi = mid,
            Some(false) => lo = mid,
            None => return Some(mid),
        }
    }
    Some(0.5 * (lo + hi))
}

#[derive(Serialize)]
struct SingleAgentSummary {
    w: f64,
    s: f64,
    b: f64,
    /// Closed-form threshold; absent at `b = 1`.
    threshold: Option<f64>,
    empirical_threshold: Option<f64>,
    all_converged: bool,
}

fn single_agent(c: &SingleAgentConfig) -> Result<Outputs, RunError> {
    let p = c.params();
    let mut sweep_rows = Records::new(&["x0", "limit", "iterations", "converged"]);
    let mut sweep = Vec::with_capacity(c.x0.len());
    for &x0 in &c.x0 {
        let (limit, iterations, converged) = single_agent_limit(&p, x0, c.tol, c.max_iters);
        sweep_rows.push(vec![x0.into(), limit.into(), iterations.into(), converged.into()]);
        sweep.push((x0, limit, converged));
    }
    let summary = SingleAgentSummary {
        w: c.w,
        s: c.s,
        b: c.b,
        threshold: p.threshold().ok(),
        empirical_threshold: empirical_threshold(c, &sweep),
        all_converged: sweep.iter().all(|r| r.2),
    };
    Ok(vec![("sweep.csv", emit::to_csv(&sweep_rows)), ("summary.json", emit::to_json(&summary))])
}

/// `t,node,opinion` rows and `t,ndi,gdi` rows for every recorded state.
fn trajectory_tables(graph: &WeightedGraph, traj: &Trajectory) -> (Records, Records) {
    let mut opinions = Records::new(&["t", "node", "opinion"]);
    let mut metrics = Records::new(&["t", "ndi", "gdi"]);
    for state in &traj.states {
        let t = state.time_step();
        for (node, &x) in state.opinions().iter().enumerate() {
            opinions.push(vec![t.into(), node.into(), x.into()]);
        }
        let ndi = ndi(graph, state.opinions()).expect("sizes match");
        metrics.push(vec![t.into(), ndi.into(), gdi(state.opinions()).into()]);
    }
    (opinions, metrics)
}

#[derive(Serialize)]
struct DynamicsSummary {
    nodes: usize,
    converged: bool,
    iterations: u64,
    final_opinions: Vec<f64>,
    /// Nodes whose update hit a zero denominator at least once.
    degeneracy_flags: Vec<usize>,
    ndi_initial: f64,
    ndi_final: f64,
    polarizing: bool,
}

/// Loads the graph and checks sizes before anything is iterated.
fn prepare_dynamics(
    c: &DynamicsConfig,
    seeds: &SeedStreams,
) -> Result<(WeightedGraph, BiasProfile, OpinionState), RunError> {
    let bad = invalid(Kind::GeneralDynamics);
    let text = fs::read_to_string(&c.graph).map_err(|source| RunError::Read { path: c.graph.clone(), source })?;
    let graph = WeightedGraph::parse_edge_list(&text).map_err(|e| bad(format!("{}: {e}", c.graph.display())))?;
    let n = graph.node_count();
    if n == 0 {
        return Err(bad(format!("{}: graph has no nodes", c.graph.display())));
    }
    if !graph.is_connected() {
        return Err(bad(format!("{}: graph is not connected", c.graph.display())));
    }
    let biases = c.biases.profile(n).map_err(&bad)?;
    let x0 = match &c.x0 {
        InitialOpinions::Given(v) if v.len() != n => {
            return Err(bad(format!("x0 has {} entries but the graph has {n} nodes", v.len())));
        }
        InitialOpinions::Given(v) => OpinionState::new(v.clone()).map_err(|e| bad(e.to_string()))?,
        InitialOpinions::Random => OpinionState::random(n, &mut seeds.rng(Component::InitialState, 0)),
    };
    Ok((graph, biases, x0))
}

fn dynamics(c: &DynamicsConfig, seeds: &SeedStreams) -> Result<Outputs, RunError> {
    let (graph, biases, x0) = prepare_dynamics(c, seeds)?;
    let traj = run_until_convergence(&graph, &x0, &biases, &c.convergence())
        .map_err(|e| failed(Kind::GeneralDynamics)(e.to_string()))?;
    let (opinions, metrics) = trajectory_tables(&graph, &traj);
    let summary = DynamicsSummary {
        nodes: graph.node_count(),
        converged: traj.converged,
        iterations: traj.iterations,
        final_opinions: traj.final_state().opinions().to_vec(),
        degeneracy_flags: traj.degenerate_nodes.iter().copied().collect(),
        ndi_initial: ndi(&graph, traj.initial().opinions()).expect("sizes match"),
        ndi_final: ndi(&graph, traj.final_state().opinions()).expect("sizes match"),
        polarizing: is_polarizing(&graph, traj.initial(), traj.final_state()).expect("sizes match"),
    };
    Ok(vec![
        ("trajectory.csv", emit::to_csv(&opinions)),
        ("metrics.csv", emit::to_csv(&metrics)),
        ("summary.json", emit::to_json(&summary)),
    ])
}

#[derive(Serialize)]
struct TwoIslandSummary {
    nodes_per_island: usize,
    homophily: f64,
    b: f64,
    x0: f64,
    #[serde(flatten)]
    verdict: RegimeVerdict,
    converged: bool,
    iterations: u64,
    /// Island means of the final state.
    observed_limit: (f64, f64),
    /// Every node within 1e-6 of its island's predicted limit.
    matches_prediction: bool,
    ndi_initial: f64,
    ndi_final: f64,
    polarizing: bool,
    degeneracy_flags: Vec<usize>,
}

fn two_island(c: &TwoIslandConfig, seeds: &SeedStreams) -> Result<Outputs, RunError> {
    let params = c.params();
    let fail = failed(Kind::TwoIsland);
    let net = build_two_island(&params, c.shuffle_swaps, &mut seeds.rng(Component::Shuffle, 0))
        .map_err(|e| fail(e.to_string()))?;
    let verdict = classify_two_island(&params, c.b).map_err(|e| fail(e.to_string()))?;
    let x0 = net.mirrored_state(c.x0).map_err(|e| fail(e.to_string()))?;
    let biases = BiasProfile::uniform(net.graph.node_count(), c.b).map_err(|e| fail(e.to_string()))?;
    let traj = run_until_convergence(&net.graph, &x0, &biases, &c.convergence()).map_err(|e| fail(e.to_string()))?;
    let last = traj.final_state().opinions();
    let matches_prediction = net.first().all(|i| (last[i] - verdict.predicted_limit.0).abs() < 1e-6)
        && net.second().all(|i| (last[i] - verdict.predicted_limit.1).abs() < 1e-6);
    let (opinions, metrics) = trajectory_tables(&net.graph, &traj);
    let summary = TwoIslandSummary {
        nodes_per_island: c.n,
        homophily: params.homophily(),
        b: c.b,
        x0: c.x0,
        verdict,
        converged: traj.converged,
        iterations: traj.iterations,
        observed_limit: net.island_means(traj.final_state()),
        matches_prediction,
        ndi_initial: ndi(&net.graph, traj.initial().opinions()).expect("sizes match"),
        ndi_final: ndi(&net.graph, last).expect("sizes match"),
        polarizing: is_polarizing(&net.graph, traj.initial(), traj.final_state()).expect("sizes match"),
        degeneracy_flags: traj.degenerate_nodes.iter().copied().collect(),
    };
    Ok(vec![
        ("trajectory.csv", emit::to_csv(&opinions)),
        ("metrics.csv", emit::to_csv(&metrics)),
        ("summary.json", emit::to_json(&summary)),
    ])
}

fn recsys(c: &RecsysConfig, seeds: &SeedStreams) -> Result<Outputs, RunError> {
    let (estimate, records) =
        estimate_polarization(&c.estimate_config(), seeds).map_err(|e| failed(Kind::Recsys)(e.to_string()))?;
    let mut trials =
        Records::new(&["trial", "graph", "probe_degree", "probe_red_fraction", "item", "color", "accepted"]);
    for r in &records {
        let color = match r.color {
            Color::Red => "RED",
            Color::Blue => "BLUE",
        };
        trials.push(vec![
            r.trial.into(),
            r.graph.into(),
            r.probe_degree.into(),
            r.probe_red_fraction.into(),
            r.item.into(),
            color.into(),
            r.accepted.into(),
        ]);
    }
    Ok(vec![("estimate.json", emit::to_json(&estimate)), ("trials.csv", emit::to_csv(&trials))])
}

#[derive(Serialize)]
struct SuiteSummary<'a> {
    all_passed: bool,
    checks: &'a [CheckResult],
}

fn theorem_suite(checks: &[CheckResult]) -> Outputs {
    let mut table = Records::new(&["check", "instances", "violations", "passed", "detail"]);
    for c in checks {
        table.push(vec![
            c.name.into(),
            c.instances.into(),
            c.violations.into(),
            c.passed.into(),
            c.detail.clone().into(),
        ]);
    }
    let summary = SuiteSummary { all_passed: checks.iter().all(|c| c.passed), checks };
    vec![("checks.csv", emit::to_csv(&table)), ("summary.json", emit::to_json(&summary))]
}
