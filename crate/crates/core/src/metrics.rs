//! Divergence measures over opinion vectors.

use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphError, OpinionState, WeightedGraph};

/// Absolute slack used by [`is_majorized`] for sum equality and prefix
/// comparisons.
pub const MAJORIZATION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("unknown convex function {0:?}; expected one of square, abs, expm1")]
    UnknownConvexFn(String),
    #[error("vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
}

/// Network disagreement index: `sum over edges of w_ij (x_i - x_j)^2`,
/// each edge counted once.
pub fn ndi(graph: &WeightedGraph, opinions: &[f64]) -> Result<f64, MetricsError> {
    graph.check_len(opinions.len())?;
    Ok(graph.edges().map(|(i, j, w)| w * (opinions[i] - opinions[j]).powi(2)).sum())
}

/// Global disagreement index: `sum_{i<j} (x_i - x_j)^2`.
///
/// Evaluated through the identity `sum_{i<j} (x_i - x_j)^2 = n sum_i (x_i - mean)^2`,
/// which is linear-time and avoids cancellation.
pub fn gdi(opinions: &[f64]) -> f64 {
    let n = opinions.len();
    if n < 2 {
        return 0.0;
    }
    let mean = opinions.iter().sum::<f64>() / n as f64;
    n as f64 * opinions.iter().map(|x| (x - mean).powi(2)).sum::<f64>()
}

/// Convex functions available to [`convex_divergence`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConvexFn {
    Square,
    Abs,
    /// `e^d - 1`
    Expm1,
}

impl ConvexFn {
    pub const ALL: [ConvexFn; 3] = [ConvexFn::Square, ConvexFn::Abs, ConvexFn::Expm1];

    pub fn eval(self, d: f64) -> f64 {
        match self {
            ConvexFn::Square => d * d,
            ConvexFn::Abs => d.abs(),
            ConvexFn::Expm1 => d.exp_m1(),
        }
    }
}

impl FromStr for ConvexFn {
    type Err = MetricsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "square" => Ok(ConvexFn::Square),
            "abs" => Ok(ConvexFn::Abs),
            "expm1" => Ok(ConvexFn::Expm1),
            other => Err(MetricsError::UnknownConvexFn(other.to_string())),
        }
    }
}

/// `sum_{i<j} h(|x_i - x_j|)`.
pub fn convex_divergence(opinions: &[f64], h: ConvexFn) -> f64 {
    let mut total = 0.0;
    for (i, &a) in opinions.iter().enumerate() {
        for &b in &opinions[i + 1..] {
            total += h.eval((a - b).abs());
        }
    }
    total
}

/// True when `candidate` is majorized by `reference`: after sorting both in
/// decreasing order every prefix sum of `candidate` is at most the matching
/// prefix sum of `reference`, and the totals agree. Comparisons allow an
/// absolute slack of [`MAJORIZATION_TOLERANCE`]; equal prefixes count as
/// majorized.
pub fn is_majorized(candidate: &[f64], reference: &[f64]) -> Result<bool, MetricsError> {
    if candidate.len() != reference.len() {
        return Err(MetricsError::LengthMismatch(candidate.len(), reference.len()));
    }
    let sorted_desc = |v: &[f64]| {
        let mut s = v.to_vec();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    };
    let c = sorted_desc(candidate);
    let r = sorted_desc(reference);
    let mut prefix_c = 0.0;
    let mut prefix_r = 0.0;
    for (a, b) in c.iter().zip(&r) {
        prefix_c += a;
        prefix_r += b;
        if prefix_c > prefix_r + MAJORIZATION_TOLERANCE {
            return Ok(false);
        }
    }
    Ok((prefix_c - prefix_r).abs() <= MAJORIZATION_TOLERANCE)
}

/// NDI and GDI of one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub time_step: u64,
    pub ndi: f64,
    pub gdi: f64,
}

impl DivergenceReport {
    pub fn of(graph: &WeightedGraph, state: &OpinionState) -> Result<Self, MetricsError> {
        Ok(Self { time_step: state.time_step(), ndi: ndi(graph, state.opinions())?, gdi: gdi(state.opinions()) })
    }
}

/// A process is polarizing when its final NDI exceeds the initial NDI.
pub fn is_polarizing(graph: &WeightedGraph, initial: &OpinionState, last: &OpinionState) -> Result<bool, MetricsError> {
    Ok(ndi(graph, last.opinions())? > ndi(graph, initial.opinions())?)
}
