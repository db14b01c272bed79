//! Strict JSON experiment configuration.
//!
//! A config is a flat JSON object: the common keys `kind`, `seed` and `out`
//! plus the keys of one experiment kind. Unknown keys, type mismatches and
//! range violations are all collected before anything runs.

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use polarium_core::recsys::{
    AcceptanceMode, Algorithm, EstimateConfig, GenerativeParams, OpinionDistribution, RecommenderConfig, WalkBudget,
};
use polarium_core::{BiasProfile, ConvergenceSpec, EnvironmentParams, TwoIslandParams};
use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    SingleAgent,
    GeneralDynamics,
    TwoIsland,
    Recsys,
    TheoremSuite,
}

impl Kind {
    pub const ALL: [Kind; 5] =
        [Kind::SingleAgent, Kind::GeneralDynamics, Kind::TwoIsland, Kind::Recsys, Kind::TheoremSuite];

    pub fn name(self) -> &'static str {
        match self {
            Kind::SingleAgent => "single-agent",
            Kind::GeneralDynamics => "general-dynamics",
            Kind::TwoIsland => "two-island",
            Kind::Recsys => "recsys",
            Kind::TheoremSuite => "theorem-suite",
        }
    }

    fn keys(self) -> &'static [&'static str] {
        match self {
            Kind::SingleAgent => &["w", "s", "b", "x0", "tol", "max_iters"],
            Kind::GeneralDynamics => &["graph", "biases", "x0", "tol", "max_iters", "record_every"],
            Kind::TwoIsland => &["n", "ps", "pd", "b", "x0", "tol", "max_iters", "record_every", "shuffle_swaps"],
            Kind::Recsys => &["algo", "n", "m", "k", "dist", "xi", "mode", "trials", "T", "trials_per_graph"],
            Kind::TheoremSuite => &["instances", "counterexample_trials", "max_nodes"],
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dynamics" => Ok(Kind::GeneralDynamics),
            _ => Kind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| format!("unknown experiment kind {s:?}")),
        }
    }
}

const COMMON_KEYS: [&str; 3] = ["kind", "seed", "out"];

/// Every problem found in a config, in key order.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid configuration:\n  - {}", .errors.join("\n  - "))]
pub struct ConfigError {
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingleAgentConfig {
    pub w: f64,
    pub s: f64,
    pub b: f64,
    /// Starting opinions to sweep.
    pub x0: Vec<f64>,
    pub tol: f64,
    pub max_iters: u64,
}

impl SingleAgentConfig {
    pub fn params(&self) -> EnvironmentParams {
        EnvironmentParams::new(self.w, self.s, self.b).expect("validated")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum InitialOpinions {
    Given(Vec<f64>),
    /// Drawn uniformly from the seed.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Biases {
    Uniform(f64),
    PerNode(Vec<f64>),
}

impl Biases {
    pub fn profile(&self, n: usize) -> Result<BiasProfile, String> {
        let profile = match self {
            Biases::Uniform(b) => BiasProfile::uniform(n, *b),
            Biases::PerNode(v) => {
                if v.len() != n {
                    return Err(format!("biases has {} entries but the graph has {n} nodes", v.len()));
                }
                BiasProfile::new(v.clone())
            }
        };
        profile.map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicsConfig {
    /// Edge-list file, relative paths resolved against the config file.
    pub graph: PathBuf,
    pub biases: Biases,
    pub x0: InitialOpinions,
    pub tol: f64,
    pub max_iters: u64,
    pub record_every: u64,
}

impl DynamicsConfig {
    pub fn convergence(&self) -> ConvergenceSpec {
        ConvergenceSpec::new(self.tol, self.max_iters)
            .and_then(|c| c.with_record_every(self.record_every))
            .expect("validated")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoIslandConfig {
    /// Nodes per island.
    pub n: usize,
    pub ps: f64,
    pub pd: f64,
    pub b: f64,
    pub x0: f64,
    pub tol: f64,
    pub max_iters: u64,
    pub record_every: u64,
    pub shuffle_swaps: usize,
}

impl TwoIslandConfig {
    pub fn params(&self) -> TwoIslandParams {
        TwoIslandParams::symmetric(self.n, self.ps, self.pd).expect("validated")
    }

    pub fn convergence(&self) -> ConvergenceSpec {
        ConvergenceSpec::new(self.tol, self.max_iters)
            .and_then(|c| c.with_record_every(self.record_every))
            .expect("validated")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecsysConfig {
    pub algo: Algorithm,
    pub n: usize,
    pub m: usize,
    pub k: f64,
    pub dist: OpinionDistribution,
    pub xi: f64,
    pub mode: AcceptanceMode,
    pub trials: u64,
    #[serde(rename = "T")]
    pub walks: WalkBudget,
    pub trials_per_graph: u64,
}

impl RecsysConfig {
    pub fn estimate_config(&self) -> EstimateConfig {
        EstimateConfig {
            generative: GenerativeParams { n: self.n, m: self.m, k: self.k, dist: self.dist },
            recommender: RecommenderConfig { algorithm: self.algo, walks: self.walks },
            probe_opinion: self.xi,
            mode: self.mode,
            trials: self.trials,
            trials_per_graph: self.trials_per_graph,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteConfig {
    /// Random instances per property check.
    pub instances: u64,
    /// Search budget for the averaging counterexample.
    pub counterexample_trials: u64,
    /// Largest random graph.
    pub max_nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Experiment {
    SingleAgent(SingleAgentConfig),
    GeneralDynamics(DynamicsConfig),
    TwoIsland(TwoIslandConfig),
    Recsys(RecsysConfig),
    TheoremSuite(SuiteConfig),
}

impl Experiment {
    pub fn kind(&self) -> Kind {
        match self {
            Experiment::SingleAgent(_) => Kind::SingleAgent,
            Experiment::GeneralDynamics(_) => Kind::GeneralDynamics,
            Experiment::TwoIsland(_) => Kind::TwoIsland,
            Experiment::Recsys(_) => Kind::Recsys,
            Experiment::TheoremSuite(_) => Kind::TheoremSuite,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Output directory named in the config, if any.
    pub out: Option<PathBuf>,
    pub experiment: Experiment,
}

/// Parses JSON text. `kind` (from the subcommand) must agree with any
/// `kind` key in the text; one of the two has to be present.
pub fn parse_config(text: &str, kind: Option<Kind>) -> Result<ExperimentConfig, ConfigError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| ConfigError { errors: vec![format!("malformed JSON: {e}")] })?;
    match value {
        Value::Object(map) => parse_object(&map, kind),
        _ => Err(ConfigError { errors: vec!["configuration must be a JSON object".into()] }),
    }
}

/// Same as [`parse_config`] for an already decoded object.
pub fn parse_object(map: &Map<String, Value>, kind: Option<Kind>) -> Result<ExperimentConfig, ConfigError> {
    let mut r = Reader { map, errors: Vec::new() };
    let kind = match (r.string("kind"), kind) {
        (Some(named), hint) => match named.parse::<Kind>() {
            Ok(k) if hint.is_none_or(|h| h == k) => Some(k),
            Ok(k) => {
                r.errors.push(format!("kind: config says {k} but the subcommand is {}", hint.expect("checked")));
                None
            }
            Err(e) => {
                r.errors.push(format!("kind: {e}"));
                hint
            }
        },
        (None, Some(k)) => Some(k),
        (None, None) => {
            r.errors.push("kind: missing (give a subcommand or a \"kind\" key)".into());
            None
        }
    };
    let seed = r.u64("seed").unwrap_or(0);
    let out = r.string("out").map(PathBuf::from);
    let Some(kind) = kind else {
        return Err(ConfigError { errors: r.errors });
    };
    let allowed: BTreeSet<&str> = COMMON_KEYS.iter().chain(kind.keys()).copied().collect();
    for key in map.keys() {
        if !allowed.contains(key.as_str()) {
            r.errors.push(format!("{key}: unknown key for {kind} (allowed: {})", kind.keys().join(", ")));
        }
    }
    let experiment = match kind {
        Kind::SingleAgent => r.single_agent().map(Experiment::SingleAgent),
        Kind::GeneralDynamics => r.dynamics().map(Experiment::GeneralDynamics),
        Kind::TwoIsland => r.two_island().map(Experiment::TwoIsland),
        Kind::Recsys => r.recsys().map(Experiment::Recsys),
        Kind::TheoremSuite => r.suite().map(Experiment::TheoremSuite),
    };
    match experiment {
        Some(experiment) if r.errors.is_empty() => Ok(ExperimentConfig { seed, out, experiment }),
        _ => Err(ConfigError { errors: r.errors }),
    }
}

/// Typed access to config keys that records every failure.
struct Reader<'a> {
    map: &'a Map<String, Value>,
    errors: Vec<String>,
}

impl Reader<'_> {
    fn fail(&mut self, key: &str, msg: impl fmt::Display) {
        self.errors.push(format!("{key}: {msg}"));
    }

    fn number(&mut self, key: &str) -> Option<f64> {
        match self.map.get(key)? {
            Value::Number(n) => n.as_f64(),
            other => {
                self.fail(key, format!("expected a number, got {other}"));
                None
            }
        }
    }

    fn u64(&mut self, key: &str) -> Option<u64> {
        match self.map.get(key)? {
            Value::Number(n) if n.as_u64().is_some() => n.as_u64(),
            other => {
                self.fail(key, format!("expected a non-negative integer, got {other}"));
                None
            }
        }
    }

    fn string(&mut self, key: &str) -> Option<String> {
        match self.map.get(key)? {
            Value::String(s) => Some(s.clone()),
            other => {
                self.fail(key, format!("expected a string, got {other}"));
                None
            }
        }
    }

    fn numbers(&mut self, key: &str) -> Option<Vec<f64>> {
        match self.map.get(key)? {
            Value::Array(items) if items.iter().all(Value::is_number) => {
                Some(items.iter().map(|v| v.as_f64().expect("checked")).collect())
            }
            other => {
                self.fail(key, format!("expected an array of numbers, got {other}"));
                None
            }
        }
    }

    /// A parsed string value, with the parse error recorded.
    fn parsed<T: FromStr>(&mut self, key: &str) -> Option<T>
    where
        T::Err: fmt::Display,
    {
        let raw = match self.map.get(key)? {
            Value::String(s) => s.clone(),
            Value::Number(n) => n.to_string(),
            other => {
                self.fail(key, format!("expected a string, got {other}"));
                return None;
            }
        };
        raw.parse().map_err(|e: T::Err| self.fail(key, e)).ok()
    }

    fn required<T>(&mut self, key: &str, value: Option<T>) -> Option<T> {
        if value.is_none() && !self.map.contains_key(key) {
            self.fail(key, "required");
        }
        value
    }

    fn positive(&mut self, key: &str, value: f64) {
        if !(value.is_finite() && value > 0.0) {
            self.fail(key, format!("{value} must be positive"));
        }
    }

    fn at_least_one(&mut self, key: &str, value: u64) {
        if value == 0 {
            self.fail(key, "must be at least 1");
        }
    }

    fn unit(&mut self, key: &str, value: f64) {
        if !(0.0..=1.0).contains(&value) {
            self.fail(key, format!("{value} must lie in [0, 1]"));
        }
    }

    fn convergence(&mut self, default_tol: f64) -> (f64, u64) {
        let tol = self.number("tol").unwrap_or(default_tol);
        let max_iters = self.u64("max_iters").unwrap_or(1_000_000);
        self.positive("tol", tol);
        self.at_least_one("max_iters", max_iters);
        (tol, max_iters)
    }

    fn single_agent(&mut self) -> Option<SingleAgentConfig> {
        let w = self.number("w").unwrap_or(1.0);
        let s = self.number("s");
        let s = self.required("s", s);
        let b = self.number("b");
        let b = self.required("b", b);
        let x0 = self.numbers("x0").unwrap_or_else(|| (1..=99).map(|k| k as f64 / 100.0).collect());
        let (tol, max_iters) = self.convergence(1e-12);
        if x0.is_empty() {
            self.fail("x0", "needs at least one starting opinion");
        }
        for &x in &x0 {
            self.unit("x0", x);
        }
        let (s, b) = (s?, b?);
        if let Err(e) = EnvironmentParams::new(w, s, b) {
            self.errors.push(e.to_string());
        }
        Some(SingleAgentConfig { w, s, b, x0, tol, max_iters })
    }

    fn dynamics(&mut self) -> Option<DynamicsConfig> {
        let graph = self.string("graph");
        let graph = self.required("graph", graph).map(PathBuf::from);
        let biases = match self.map.get("biases") {
            None => Some(Biases::Uniform(0.0)),
            Some(Value::Number(n)) => n.as_f64().map(Biases::Uniform),
            Some(_) => self.numbers("biases").map(Biases::PerNode),
        };
        if let Some(b) = &biases {
            let values = match b {
                Biases::Uniform(v) => vec![*v],
                Biases::PerNode(v) => v.clone(),
            };
            if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                self.fail("biases", "every bias must be a non-negative number");
            }
        }
        let x0 = match self.map.get("x0") {
            None => Some(InitialOpinions::Random),
            Some(Value::String(s)) if s == "random" => Some(InitialOpinions::Random),
            Some(_) => self.numbers("x0").map(InitialOpinions::Given),
        };
        if let Some(InitialOpinions::Given(v)) = &x0 {
            if v.iter().any(|x| !(0.0..=1.0).contains(x)) {
                self.fail("x0", "every opinion must lie in [0, 1]");
            }
        }
        let (tol, max_iters) = self.convergence(1e-10);
        let record_every = self.u64("record_every").unwrap_or(1);
        self.at_least_one("record_every", record_every);
        Some(DynamicsConfig { graph: graph?, biases: biases?, x0: x0?, tol, max_iters, record_every })
    }

    fn two_island(&mut self) -> Option<TwoIslandConfig> {
        let n = self.u64("n").unwrap_or(50) as usize;
        let ps = self.number("ps").unwrap_or(0.4);
        let pd = self.number("pd").unwrap_or(0.2);
        let b = self.number("b");
        let b = self.required("b", b);
        let x0 = self.number("x0").unwrap_or(0.7);
        let (tol, max_iters) = self.convergence(1e-10);
        let record_every = self.u64("record_every").unwrap_or(1);
        let shuffle_swaps = self.u64("shuffle_swaps").unwrap_or(0) as usize;
        self.at_least_one("record_every", record_every);
        self.unit("x0", x0);
        let network = TwoIslandParams { n1: n, n2: n, p_same: ps, p_diff: pd };
        for p in network.problems() {
            self.errors.push(format!("two-island network: {p}"));
        }
        let b = b?;
        if !(b.is_finite() && b > 0.0) {
            self.fail("b", format!("{b} must be positive"));
        }
        Some(TwoIslandConfig { n, ps, pd, b, x0, tol, max_iters, record_every, shuffle_swaps })
    }

    fn recsys(&mut self) -> Option<RecsysConfig> {
        let algo =
            self.parsed::<Algorithm>("algo").or_else(|| (!self.map.contains_key("algo")).then_some(Algorithm::Salsa));
        let n = self.u64("n").unwrap_or(2000) as usize;
        let m = self.u64("m").map(|m| m as usize).unwrap_or(2 * n);
        let k = self.number("k").unwrap_or(100.0);
        let dist = self
            .parsed::<OpinionDistribution>("dist")
            .or_else(|| (!self.map.contains_key("dist")).then_some(OpinionDistribution::Uniform));
        let xi = self.number("xi").unwrap_or(0.75);
        let mode = self
            .parsed::<AcceptanceMode>("mode")
            .or_else(|| (!self.map.contains_key("mode")).then_some(AcceptanceMode::Biased));
        let trials = self.u64("trials").unwrap_or(1000);
        let walks =
            self.parsed::<WalkBudget>("T").or_else(|| (!self.map.contains_key("T")).then_some(WalkBudget::Exact));
        let trials_per_graph = self.u64("trials_per_graph").unwrap_or(1);
        // range checks run even when a string field failed to parse
        let config = RecsysConfig {
            algo: algo.unwrap_or(Algorithm::Salsa),
            n,
            m,
            k,
            dist: dist.unwrap_or(OpinionDistribution::Uniform),
            xi,
            mode: mode.unwrap_or(AcceptanceMode::Biased),
            trials,
            walks: walks.unwrap_or(WalkBudget::Exact),
            trials_per_graph,
        };
        for p in config.estimate_config().problems() {
            self.errors.push(p);
        }
        (algo.is_some() && dist.is_some() && mode.is_some() && walks.is_some()).then_some(config)
    }

    fn suite(&mut self) -> Option<SuiteConfig> {
        let instances = self.u64("instances").unwrap_or(10_000);
        let counterexample_trials = self.u64("counterexample_trials").unwrap_or(100_000);
        let max_nodes = self.u64("max_nodes").unwrap_or(50) as usize;
        self.at_least_one("instances", instances);
        self.at_least_one("counterexample_trials", counterexample_trials);
        if max_nodes < 3 {
            self.fail("max_nodes", "must be at least 3");
        }
        Some(SuiteConfig { instances, counterexample_trials, max_nodes })
    }
}
