//! Opinion update processes.
//!
//! Every step function is pure: it reads the state at time `t` and returns
//! a fresh state at `t + 1`, updating all nodes simultaneously.

use std::collections::BTreeSet;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use thiserror::Error;

use crate::graph::{BiasProfile, GraphError, OpinionState, WeightedGraph};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("node {0} has no neighbors and zero self weight; its update divides by zero")]
    ZeroWeightNode(usize),
    #[error("graph is not connected")]
    NotConnected,
    #[error("invalid environment: {0}")]
    InvalidEnvironment(String),
    #[error("polarization threshold is undefined at b = 1")]
    ThresholdUndefinedAtUnitBias,
    #[error("opinion {0} is outside [0, 1]")]
    OpinionOutOfRange(f64),
    #[error("flocking subset is empty")]
    EmptySubset,
    #[error("flocking epsilon {0} is outside [0, 1]")]
    InvalidEpsilon(f64),
    #[error("invalid convergence spec: {0}")]
    InvalidConvergenceSpec(String),
    #[error("urn of node {0} is empty")]
    EmptyUrn(usize),
}

/// `x^b` with the conventions used by the biased update: `0^0 = 1` and
/// `0^b = 0` for `b > 0`. Positive arguments go through `exp(b ln x)`, with
/// the log argument floored at the smallest positive normal.
pub(crate) fn assimilation_power(x: f64, b: f64) -> f64 {
    if b == 0.0 {
        1.0
    } else if x <= 0.0 {
        0.0
    } else {
        (b * x.max(f64::MIN_POSITIVE).ln()).exp()
    }
}

fn check_state(graph: &WeightedGraph, state: &OpinionState) -> Result<(), DynamicsError> {
    graph.check_len(state.len())?;
    Ok(())
}

/// One synchronous DeGroot averaging step:
/// `x_i <- (w_ii x_i + s_i) / (w_ii + d_i)`.
pub fn degroot_step(graph: &WeightedGraph, state: &OpinionState) -> Result<OpinionState, DynamicsError> {
    check_state(graph, state)?;
    let x = state.opinions();
    let next = (0..graph.node_count()).map(|i| degroot_node(graph, x, i)).collect::<Result<Vec<_>, _>>()?;
    Ok(OpinionState::from_trusted(next, state.time_step() + 1))
}

fn degroot_node(graph: &WeightedGraph, x: &[f64], i: usize) -> Result<f64, DynamicsError> {
    let w = graph.self_weight_unchecked(i);
    let d = graph.degree_unchecked(i);
    let total = w + d;
    if total <= 0.0 {
        return Err(DynamicsError::ZeroWeightNode(i));
    }
    let s = graph.neighbor_sum_unchecked(i, x);
    Ok(((w * x[i] + s) / total).clamp(0.0, 1.0))
}

/// `up / (up + down)`, or `None` when both vanish. The smaller side is
/// divided out and complemented, so swapping `up` and `down` yields the
/// exact complement `1 - v`; mirror-image states stay mirror images.
pub(crate) fn mirror_safe_ratio(up: f64, down: f64) -> Option<f64> {
    let total = up + down;
    if total > 0.0 {
        let v = if up >= down { up / total } else { 1.0 - down / total };
        Some(v.clamp(0.0, 1.0))
    } else {
        None
    }
}

/// Result of a biased step: the new state plus the nodes whose update had a
/// zero denominator and were therefore held fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasedStep {
    pub state: OpinionState,
    pub degenerate: Vec<usize>,
}

/// One synchronous step of the biased assimilation update
///
/// `x_i <- (w_ii x_i + x_i^b s_i) / (w_ii + x_i^b s_i + (1 - x_i)^b (d_i - s_i))`.
///
/// It is evaluated as `up / (up + down)` with `up = w_ii x_i + x_i^b s_i` and
/// `down = w_ii (1 - x_i) + (1 - x_i)^b sum_j w_ij (1 - x_j)`, which is the
/// same quantity without the cancellation in `d_i - s_i` near consensus at
/// one, and which maps a mirrored state (`x -> 1 - x`) to its exact mirror.
///
/// Nodes with `b_i = 0` use the DeGroot expression verbatim, so an all-zero
/// profile reproduces [`degroot_step`] bit for bit. A node whose denominator
/// vanishes (only possible with `w_ii = 0` at an extreme opinion) keeps its
/// opinion and is reported in [`BiasedStep::degenerate`].
pub fn biased_step(
    graph: &WeightedGraph,
    state: &OpinionState,
    biases: &BiasProfile,
) -> Result<BiasedStep, DynamicsError> {
    check_state(graph, state)?;
    graph.check_len(biases.len())?;
    let x = state.opinions();
    let mut next = Vec::with_capacity(x.len());
    let mut degenerate = Vec::new();
    for (i, &b) in biases.biases().iter().enumerate() {
        if b == 0.0 {
            next.push(degroot_node(graph, x, i)?);
            continue;
        }
        let w = graph.self_weight_unchecked(i);
        let (s, s_bar) = graph.neighbor_support_unchecked(i, x);
        let up = w * x[i] + assimilation_power(x[i], b) * s;
        let down = w * (1.0 - x[i]) + assimilation_power(1.0 - x[i], b) * s_bar;
        match mirror_safe_ratio(up, down) {
            Some(v) => next.push(v),
            None => {
                degenerate.push(i);
                next.push(x[i]);
            }
        }
    }
    Ok(BiasedStep { state: OpinionState::from_trusted(next, state.time_step() + 1), degenerate })
}

/// A single individual exposed to a fixed environment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvironmentParams {
    /// Weight on the individual's own opinion.
    pub self_weight: f64,
    /// Time-invariant average opinion of the environment, in `(0, 1)`.
    pub env_opinion: f64,
    pub bias: f64,
}

impl EnvironmentParams {
    pub fn new(self_weight: f64, env_opinion: f64, bias: f64) -> Result<Self, DynamicsError> {
        let mut problems = Vec::new();
        if !(self_weight.is_finite() && self_weight >= 0.0) {
            problems.push(format!("self weight {self_weight} must be >= 0"));
        }
        if !(env_opinion > 0.0 && env_opinion < 1.0) {
            problems.push(format!("environment opinion {env_opinion} must lie in (0, 1)"));
        }
        if !(bias.is_finite() && bias >= 0.0) {
            problems.push(format!("bias {bias} must be >= 0"));
        }
        if problems.is_empty() {
            Ok(Self { self_weight, env_opinion, bias })
        } else {
            Err(DynamicsError::InvalidEnvironment(problems.join("; ")))
        }
    }

    /// The threshold `x̂(s, b)` for these parameters.
    pub fn threshold(&self) -> Result<f64, DynamicsError> {
        polarization_threshold(self.env_opinion, self.bias)
    }
}

/// `x <- (w x + x^b s) / (w + x^b s + (1 - x)^b (1 - s))`.
pub fn single_agent_step(params: &EnvironmentParams, x: f64) -> Result<f64, DynamicsError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(DynamicsError::OpinionOutOfRange(x));
    }
    let EnvironmentParams { self_weight: w, env_opinion: s, bias: b } = *params;
    let toward_one = assimilation_power(x, b) * s;
    let toward_zero = assimilation_power(1.0 - x, b) * (1.0 - s);
    // s in (0, 1) keeps at least one of the two terms positive.
    Ok(((w * x + toward_one) / (w + toward_one + toward_zero)).clamp(0.0, 1.0))
}

/// Fixed point `x̂(s, b) = s^{1/(1-b)} / (s^{1/(1-b)} + (1-s)^{1/(1-b)})` of
/// the single-agent map, evaluated as a logistic of the log-ratio so that
/// exponents blowing up near `b = 1` cannot overflow.
pub fn polarization_threshold(s: f64, b: f64) -> Result<f64, DynamicsError> {
    if !(s > 0.0 && s < 1.0) {
        return Err(DynamicsError::InvalidEnvironment(format!("environment opinion {s} must lie in (0, 1)")));
    }
    if !(b.is_finite() && b >= 0.0) {
        return Err(DynamicsError::InvalidEnvironment(format!("bias {b} must be >= 0")));
    }
    if b == 1.0 {
        return Err(DynamicsError::ThresholdUndefinedAtUnitBias);
    }
    if b == 0.0 {
        return Ok(s);
    }
    let exponent = 1.0 / (1.0 - b);
    let log_ratio = exponent * ((1.0 - s).ln() - s.ln());
    Ok(1.0 / (1.0 + log_ratio.exp()))
}

/// One flocking update: members of `subset` move a fraction `epsilon`
/// toward the subset's mean opinion; everyone else is unchanged.
/// Repeated indices in `subset` count once.
pub fn flocking_step(state: &OpinionState, subset: &[usize], epsilon: f64) -> Result<OpinionState, DynamicsError> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(DynamicsError::InvalidEpsilon(epsilon));
    }
    let mut members: Vec<usize> = subset.to_vec();
    members.sort_unstable();
    members.dedup();
    if members.is_empty() {
        return Err(DynamicsError::EmptySubset);
    }
    let n = state.len();
    if let Some(&bad) = members.iter().find(|&&i| i >= n) {
        return Err(GraphError::NodeOutOfRange { node: bad, n }.into());
    }
    let x = state.opinions();
    let mean = members.iter().map(|&i| x[i]).sum::<f64>() / members.len() as f64;
    let mut next = x.to_vec();
    for &i in &members {
        next[i] = ((1.0 - epsilon) * x[i] + epsilon * mean).clamp(0.0, 1.0);
    }
    Ok(OpinionState::from_trusted(next, state.time_step() + 1))
}

/// Contraction factor and the sequence of subsets `S(t)` for a flocking run.
#[derive(Debug, Clone, PartialEq)]
pub struct FlockingParams {
    pub epsilon: f64,
    pub schedule: Vec<Vec<usize>>,
}

impl FlockingParams {
    pub fn new(epsilon: f64, schedule: Vec<Vec<usize>>, n: usize) -> Result<Self, DynamicsError> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(DynamicsError::InvalidEpsilon(epsilon));
        }
        for subset in &schedule {
            if subset.is_empty() {
                return Err(DynamicsError::EmptySubset);
            }
            if let Some(&node) = subset.iter().find(|&&i| i >= n) {
                return Err(GraphError::NodeOutOfRange { node, n }.into());
            }
        }
        Ok(Self { epsilon, schedule })
    }
}

/// Applies the whole schedule, returning every state including the initial one.
pub fn run_flocking(initial: &OpinionState, params: &FlockingParams) -> Result<Vec<OpinionState>, DynamicsError> {
    let mut states = vec![initial.clone()];
    for subset in &params.schedule {
        let next = flocking_step(states.last().expect("non-empty"), subset, params.epsilon)?;
        states.push(next);
    }
    Ok(states)
}

/// Stopping rule for iterated dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceSpec {
    /// Stop once the sup-norm of a one-step change drops below this.
    pub tolerance: f64,
    pub max_iters: u64,
    /// Keep every `record_every`-th state in the trajectory (the initial and
    /// final states are always kept).
    pub record_every: u64,
}

impl Default for ConvergenceSpec {
    fn default() -> Self {
        Self { tolerance: 1e-10, max_iters: 1_000_000, record_every: 1 }
    }
}

impl ConvergenceSpec {
    pub fn new(tolerance: f64, max_iters: u64) -> Result<Self, DynamicsError> {
        Self { tolerance, max_iters, record_every: 1 }.validated()
    }

    pub fn with_record_every(mut self, every: u64) -> Result<Self, DynamicsError> {
        self.record_every = every;
        self.validated()
    }

    fn validated(self) -> Result<Self, DynamicsError> {
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(DynamicsError::InvalidConvergenceSpec(format!("tolerance {} must be > 0", self.tolerance)));
        }
        if self.max_iters == 0 {
            return Err(DynamicsError::InvalidConvergenceSpec("max_iters must be >= 1".into()));
        }
        if self.record_every == 0 {
            return Err(DynamicsError::InvalidConvergenceSpec("record_every must be >= 1".into()));
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Recorded states in time order, starting with the initial state and
    /// ending with the final one.
    pub states: Vec<OpinionState>,
    pub converged: bool,
    pub iterations: u64,
    /// Nodes that hit a zero denominator at least once.
    pub degenerate_nodes: BTreeSet<usize>,
}

impl Trajectory {
    pub fn initial(&self) -> &OpinionState {
        self.states.first().expect("trajectory always holds the initial state")
    }

    pub fn final_state(&self) -> &OpinionState {
        self.states.last().expect("trajectory always holds the final state")
    }
}

/// Iterates [`biased_step`] until the one-step change falls below the
/// tolerance or `max_iters` steps have run. Non-convergence is reported
/// through [`Trajectory::converged`], never as an error.
pub fn run_until_convergence(
    graph: &WeightedGraph,
    initial: &OpinionState,
    biases: &BiasProfile,
    spec: &ConvergenceSpec,
) -> Result<Trajectory, DynamicsError> {
    let spec = spec.validated()?;
    check_state(graph, initial)?;
    graph.check_len(biases.len())?;
    if !graph.is_connected() {
        return Err(DynamicsError::NotConnected);
    }
    let mut states = vec![initial.clone()];
    let mut current = initial.clone();
    let mut degenerate_nodes = BTreeSet::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut last_recorded = 0;
    while iterations < spec.max_iters {
        let step = biased_step(graph, &current, biases)?;
        degenerate_nodes.extend(step.degenerate);
        iterations += 1;
        let change = step.state.sup_distance(&current);
        current = step.state;
        if iterations % spec.record_every == 0 {
            states.push(current.clone());
            last_recorded = iterations;
        }
        if change < spec.tolerance {
            converged = true;
            break;
        }
    }
    if last_recorded != iterations {
        states.push(current);
    }
    Ok(Trajectory { states, converged, iterations, degenerate_nodes })
}

/// Ball counts per node for the urn interpretation of the `b = 1` update.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UrnState {
    red: Vec<u64>,
    blue: Vec<u64>,
}

impl UrnState {
    pub fn new(red: Vec<u64>, blue: Vec<u64>) -> Result<Self, DynamicsError> {
        if red.len() != blue.len() {
            return Err(GraphError::DimensionMismatch { expected: red.len(), found: blue.len() }.into());
        }
        if let Some(i) = red.iter().zip(&blue).position(|(r, b)| r + b == 0) {
            return Err(DynamicsError::EmptyUrn(i));
        }
        Ok(Self { red, blue })
    }

    pub fn len(&self) -> usize {
        self.red.len()
    }

    pub fn is_empty(&self) -> bool {
        self.red.is_empty()
    }

    pub fn red(&self) -> &[u64] {
        &self.red
    }

    pub fn blue(&self) -> &[u64] {
        &self.blue
    }

    pub fn total(&self, node: usize) -> u64 {
        self.red[node] + self.blue[node]
    }

    /// Fraction of RED balls per node, the urn counterpart of an opinion.
    pub fn red_fractions(&self) -> Vec<f64> {
        self.red.iter().zip(&self.blue).map(|(&r, &b)| r as f64 / (r + b) as f64).collect()
    }
}

/// One synchronous round of the `b = 1` urn dynamic.
///
/// Each node picks a neighbor with probability proportional to the edge
/// weight and draws one ball from that neighbor's urn and one from its own
/// (both from the pre-step contents). On a color match both go into its urn
/// and one ball is discarded uniformly at random; otherwise nothing changes.
/// Nodes without neighbors are left alone.
pub fn urn_step<R: Rng + ?Sized>(
    urns: &UrnState,
    graph: &WeightedGraph,
    rng: &mut R,
) -> Result<UrnState, DynamicsError> {
    graph.check_len(urns.len())?;
    let mut next = urns.clone();
    for i in 0..urns.len() {
        let weights = graph.neighbor_weights(i);
        if weights.is_empty() {
            continue;
        }
        let pick = WeightedIndex::new(weights).expect("edge weights are positive");
        let j = graph.neighbor_indices(i)[pick.sample(rng)];
        let theirs_red = rng.random_range(0..urns.total(j)) < urns.red[j];
        let mine_red = rng.random_range(0..urns.total(i)) < urns.red[i];
        if theirs_red != mine_red {
            continue;
        }
        let total = urns.total(i) + 1;
        let red_after_add = urns.red[i] + u64::from(mine_red);
        let discard_red = rng.random_range(0..total) < red_after_add;
        next.red[i] = red_after_add - u64::from(discard_red);
        next.blue[i] = urns.total(i) - next.red[i];
    }
    Ok(next)
}
