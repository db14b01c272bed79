//! Randomized property checks over the dynamics and metrics.
//!
//! Each check draws from its own seed substream and reports how many
//! instances it examined and how many violated the property.

use polarium_core::{
    biased_step, degroot_step, flocking_step, gdi, is_majorized, ndi, random_connected_graph, single_agent_step,
    BiasProfile, Component, EnvironmentParams, OpinionState, SeedStreams,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::SuiteConfig;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub instances: u64,
    pub violations: u64,
    pub passed: bool,
    /// Free-form note, e.g. where a counterexample was found.
    pub detail: Option<String>,
}

impl CheckResult {
    fn from_violations(name: &'static str, instances: u64, violations: u64) -> Self {
        Self { name, instances, violations, passed: violations == 0, detail: None }
    }
}

/// Relative slack for monotonicity comparisons.
fn slack(value: f64) -> f64 {
    1e-12 * value.max(1.0)
}

fn stream(seed: u64, check: u64) -> ChaCha8Rng {
    SeedStreams::new(seed).rng(Component::Suite, check)
}

fn random_subset(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let size = rng.random_range(1..=n);
    rand::seq::index::sample(rng, n, size).into_vec()
}

/// One DeGroot step never raises NDI on random connected weighted graphs.
pub fn ndi_under_degroot(instances: u64, max_nodes: usize, seed: u64) -> CheckResult {
    let mut rng = stream(seed, 1);
    let mut violations = 0;
    for _ in 0..instances {
        let n = rng.random_range(2..=max_nodes);
        let g = random_connected_graph(n, rng.random::<f64>() * 0.3, 10.0, 10.0, &mut rng);
        let x = OpinionState::random(n, &mut rng);
        let before = ndi(&g, x.opinions()).expect("sizes match");
        let after = ndi(&g, degroot_step(&g, &x).expect("sizes match").opinions()).expect("sizes match");
        if after > before + slack(before) {
            violations += 1;
        }
    }
    CheckResult::from_violations("ndi_monotone_under_degroot", instances, violations)
}

/// One flocking step never raises GDI.
pub fn gdi_under_flocking(instances: u64, max_nodes: usize, seed: u64) -> CheckResult {
    let mut rng = stream(seed, 2);
    let mut violations = 0;
    for _ in 0..instances {
        let n = rng.random_range(1..=max_nodes);
        let x = OpinionState::random(n, &mut rng);
        let subset = random_subset(&mut rng, n);
        let y = flocking_step(&x, &subset, rng.random::<f64>()).expect("valid subset");
        let (before, after) = (gdi(x.opinions()), gdi(y.opinions()));
        if after > before + slack(before) {
            violations += 1;
        }
    }
    CheckResult::from_violations("gdi_monotone_under_flocking", instances, violations)
}

/// The input of a flocking step majorizes its output and sums agree.
pub fn flocking_majorization(instances: u64, max_nodes: usize, seed: u64) -> CheckResult {
    let mut rng = stream(seed, 3);
    let mut violations = 0;
    for _ in 0..instances {
        let n = rng.random_range(1..=max_nodes);
        let x = OpinionState::random(n, &mut rng);
        let subset = random_subset(&mut rng, n);
        let y = flocking_step(&x, &subset, rng.random::<f64>()).expect("valid subset");
        let sum_x: f64 = x.opinions().iter().sum();
        let sum_y: f64 = y.opinions().iter().sum();
        if !is_majorized(y.opinions(), x.opinions()).expect("same length") || (sum_x - sum_y).abs() > 1e-12 {
            violations += 1;
        }
    }
    CheckResult::from_violations("flocking_output_majorized", instances, violations)
}

/// Searches for a DeGroot step that strictly raises GDI. Passes when one is
/// found within the budget; `instances` is the number of trials used.
pub fn gdi_degroot_counterexample(budget: u64, seed: u64) -> CheckResult {
    let mut rng = stream(seed, 4);
    for trial in 0..budget {
        let n = rng.random_range(3..=8);
        let g = random_connected_graph(n, 0.3, 10.0, 1.0, &mut rng);
        let x = OpinionState::random(n, &mut rng);
        let y = degroot_step(&g, &x).expect("sizes match");
        let (before, after) = (gdi(x.opinions()), gdi(y.opinions()));
        if after > before {
            return CheckResult {
                name: "gdi_can_rise_under_degroot",
                instances: trial + 1,
                violations: 0,
                passed: true,
                detail: Some(format!("n = {n}: gdi {before:.6e} -> {after:.6e}")),
            };
        }
    }
    CheckResult {
        name: "gdi_can_rise_under_degroot",
        instances: budget,
        violations: 0,
        passed: false,
        detail: Some("no counterexample found".into()),
    }
}

/// A zero bias profile reproduces DeGroot exactly.
pub fn zero_bias_reduction(instances: u64, max_nodes: usize, seed: u64) -> CheckResult {
    let mut rng = stream(seed, 5);
    let mut violations = 0;
    for _ in 0..instances {
        let n = rng.random_range(1..=max_nodes);
        let g = random_connected_graph(n, rng.random::<f64>() * 0.3, 10.0, 10.0, &mut rng);
        let x = OpinionState::random(n, &mut rng);
        let biased = biased_step(&g, &x, &BiasProfile::uniform(n, 0.0).expect("zero bias")).expect("sizes match");
        if biased.state != degroot_step(&g, &x).expect("sizes match") {
            violations += 1;
        }
    }
    CheckResult::from_violations("zero_bias_is_degroot", instances, violations)
}

/// Iterates the single-agent map until a stop condition or the step budget.
fn iterate_single_agent(p: &EnvironmentParams, mut x: f64, max_steps: u64, done: impl Fn(f64) -> bool) -> f64 {
    for _ in 0..max_steps {
        if done(x) {
            break;
        }
        x = single_agent_step(p, x).expect("opinion stays in range");
    }
    x
}

/// Strong bias escapes the threshold to the nearer extreme; weak bias
/// returns to it. One instance per grid start.
pub fn single_agent_threshold() -> CheckResult {
    let s_grid = (1..=9).map(|k| k as f64 / 10.0);
    let mut instances = 0;
    let mut violations = 0;
    for s in s_grid {
        for b in [1.5, 2.0, 3.0] {
            let p = EnvironmentParams::new(1.0, s, b).expect("valid grid");
            let xh = p.threshold().expect("b != 1");
            let up = iterate_single_agent(&p, xh + 1e-3, 1_000_000, |x| x > 1.0 - 1e-6);
            let down = iterate_single_agent(&p, xh - 1e-3, 1_000_000, |x| x < 1e-6);
            instances += 2;
            violations += u64::from(up <= 1.0 - 1e-6) + u64::from(down >= 1e-6);
        }
        for b in [0.2, 0.5, 0.9] {
            let p = EnvironmentParams::new(1.0, s, b).expect("valid grid");
            let xh = p.threshold().expect("b != 1");
            for x0 in [0.01, 0.5, 0.99] {
                let mut x = x0;
                for _ in 0..1_000_000 {
                    let next = single_agent_step(&p, x).expect("opinion stays in range");
                    let settled = (next - x).abs() < 1e-15;
                    x = next;
                    if settled {
                        break;
                    }
                }
                instances += 1;
                violations += u64::from((x - xh).abs() >= 1e-6);
            }
        }
    }
    CheckResult::from_violations("single_agent_threshold", instances, violations)
}

/// Runs every check in a fixed order.
pub fn run_suite(config: &SuiteConfig, seed: u64) -> Vec<CheckResult> {
    let SuiteConfig { instances, counterexample_trials, max_nodes } = *config;
    vec![
        ndi_under_degroot(instances, max_nodes, seed),
        gdi_under_flocking(instances, max_nodes, seed),
        flocking_majorization(instances, max_nodes, seed),
        gdi_degroot_counterexample(counterexample_trials, seed),
        zero_bias_reduction(instances, max_nodes, seed),
        single_agent_threshold(),
    ]
}
