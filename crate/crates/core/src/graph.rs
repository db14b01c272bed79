//! Weighted undirected graphs and the vectors that live on their nodes.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("node {node} out of range for a graph with {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("dimension mismatch: expected length {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("self-loop on node {0}; self-influence belongs in the self weight")]
    SelfLoop(usize),
    #[error("edge ({i}, {j}) has weight {weight}; edge weights must be finite and > 0")]
    BadEdgeWeight { i: usize, j: usize, weight: f64 },
    #[error("node {node} has self weight {weight}; self weights must be finite and >= 0")]
    BadSelfWeight { node: usize, weight: f64 },
    #[error("edge ({i}, {j}) given more than once")]
    DuplicateEdge { i: usize, j: usize },
    #[error("graph must have at least one node")]
    Empty,
    #[error("opinion {value} at index {index} is outside [0, 1]")]
    OpinionOutOfRange { index: usize, value: f64 },
    #[error("bias {value} at index {index} must be finite and >= 0")]
    NegativeBias { index: usize, value: f64 },
    #[error("edge list line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// An undirected graph with strictly positive edge weights and a
/// non-negative self weight on every node.
///
/// Adjacency is stored as per-node neighbor lists sorted by index, with a
/// parallel weight array. The value is immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    neighbors: Vec<Vec<usize>>,
    weights: Vec<Vec<f64>>,
    self_weights: Vec<f64>,
    degrees: Vec<f64>,
    edge_count: usize,
}

/// Collects edges and self weights, validating as it goes.
#[derive(Debug, Clone)]
pub struct GraphBuilder {
    n: usize,
    edges: BTreeMap<(usize, usize), f64>,
    self_weights: Vec<f64>,
}

impl GraphBuilder {
    pub fn new(n: usize) -> Self {
        Self { n, edges: BTreeMap::new(), self_weights: vec![0.0; n] }
    }

    pub fn edge(mut self, i: usize, j: usize, weight: f64) -> Result<Self, GraphError> {
        self.add_edge(i, j, weight)?;
        Ok(self)
    }

    pub fn self_weight(mut self, node: usize, weight: f64) -> Result<Self, GraphError> {
        self.set_self_weight(node, weight)?;
        Ok(self)
    }

    pub fn add_edge(&mut self, i: usize, j: usize, weight: f64) -> Result<(), GraphError> {
        self.check_node(i)?;
        self.check_node(j)?;
        if i == j {
            return Err(GraphError::SelfLoop(i));
        }
        if !(weight.is_finite() && weight > 0.0) {
            return Err(GraphError::BadEdgeWeight { i, j, weight });
        }
        let key = (i.min(j), i.max(j));
        if self.edges.insert(key, weight).is_some() {
            return Err(GraphError::DuplicateEdge { i: key.0, j: key.1 });
        }
        Ok(())
    }

    pub fn set_self_weight(&mut self, node: usize, weight: f64) -> Result<(), GraphError> {
        self.check_node(node)?;
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(GraphError::BadSelfWeight { node, weight });
        }
        self.self_weights[node] = weight;
        Ok(())
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains_key(&(i.min(j), i.max(j)))
    }

    fn check_node(&self, node: usize) -> Result<(), GraphError> {
        if node >= self.n {
            Err(GraphError::NodeOutOfRange { node, n: self.n })
        } else {
            Ok(())
        }
    }

    pub fn build(self) -> Result<WeightedGraph, GraphError> {
        if self.n == 0 {
            return Err(GraphError::Empty);
        }
        let mut neighbors = vec![Vec::new(); self.n];
        let mut weights = vec![Vec::new(); self.n];
        // BTreeMap iteration is ordered by (min, max), which keeps every
        // neighbor list sorted without a separate pass.
        for (&(i, j), &w) in &self.edges {
            neighbors[i].push(j);
            weights[i].push(w);
        }
        for (&(i, j), &w) in &self.edges {
            neighbors[j].push(i);
            weights[j].push(w);
        }
        for node in 0..self.n {
            let mut pairs: Vec<(usize, f64)> =
                neighbors[node].iter().copied().zip(weights[node].iter().copied()).collect();
            pairs.sort_by_key(|&(j, _)| j);
            neighbors[node] = pairs.iter().map(|&(j, _)| j).collect();
            weights[node] = pairs.iter().map(|&(_, w)| w).collect();
        }
        let degrees = weights.iter().map(|ws| ws.iter().sum()).collect();
        Ok(WeightedGraph { neighbors, weights, self_weights: self.self_weights, degrees, edge_count: self.edges.len() })
    }
}

impl WeightedGraph {
    pub fn node_count(&self) -> usize {
        self.neighbors.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Weight of edge `(i, j)`, or `None` when the nodes are not adjacent.
    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        let row = self.neighbors.get(i)?;
        row.binary_search(&j).ok().map(|pos| self.weights[i][pos])
    }

    pub fn self_weight(&self, node: usize) -> Result<f64, GraphError> {
        self.check_node(node)?;
        Ok(self.self_weights[node])
    }

    /// Neighbors of `node` with their edge weights, in increasing index order.
    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.neighbors[node].iter().copied().zip(self.weights[node].iter().copied())
    }

    pub fn neighbor_indices(&self, node: usize) -> &[usize] {
        &self.neighbors[node]
    }

    pub fn neighbor_weights(&self, node: usize) -> &[f64] {
        &self.weights[node]
    }

    /// Every edge once, as `(i, j, w)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.node_count())
            .flat_map(move |i| self.neighbors(i).filter(move |&(j, _)| j > i).map(move |(j, w)| (i, j, w)))
    }

    /// Sum of incident edge weights; the self weight is not included.
    pub fn weighted_degree(&self, node: usize) -> Result<f64, GraphError> {
        self.check_node(node)?;
        Ok(self.degrees[node])
    }

    pub(crate) fn degree_unchecked(&self, node: usize) -> f64 {
        self.degrees[node]
    }

    pub(crate) fn self_weight_unchecked(&self, node: usize) -> f64 {
        self.self_weights[node]
    }

    /// Weighted sum of neighbor opinions, `sum_j w_ij x_j`.
    pub fn neighbor_opinion_sum(&self, node: usize, opinions: &[f64]) -> Result<f64, GraphError> {
        self.check_node(node)?;
        self.check_len(opinions.len())?;
        Ok(self.neighbor_sum_unchecked(node, opinions))
    }

    pub(crate) fn neighbor_sum_unchecked(&self, node: usize, values: &[f64]) -> f64 {
        self.neighbors[node].iter().zip(&self.weights[node]).map(|(&j, &w)| w * values[j]).sum()
    }

    /// `(sum_j w_ij x_j, sum_j w_ij (1 - x_j))` with compensated summation,
    /// so the result does not depend on neighbor order in practice and a
    /// node and its mirror image (`x -> 1 - x`) see swapped, bitwise equal
    /// sums.
    pub(crate) fn neighbor_support_unchecked(&self, node: usize, x: &[f64]) -> (f64, f64) {
        let mut toward_one = CompensatedSum::default();
        let mut toward_zero = CompensatedSum::default();
        for (&j, &w) in self.neighbors[node].iter().zip(&self.weights[node]) {
            toward_one.add(w * x[j]);
            toward_zero.add(w * (1.0 - x[j]));
        }
        (toward_one.value(), toward_zero.value())
    }

    /// Applies the weighted Laplacian: entry i is `d_i v_i - sum_j w_ij v_j`.
    pub fn laplacian_apply(&self, vec: &[f64]) -> Result<Vec<f64>, GraphError> {
        self.check_len(vec.len())?;
        Ok((0..self.node_count()).map(|i| self.degrees[i] * vec[i] - self.neighbor_sum_unchecked(i, vec)).collect())
    }

    pub fn is_connected(&self) -> bool {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut visited = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.neighbors[u] {
                if !seen[v] {
                    seen[v] = true;
                    visited += 1;
                    queue.push_back(v);
                }
            }
        }
        visited == n
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<(), GraphError> {
        if len != self.node_count() {
            Err(GraphError::DimensionMismatch { expected: self.node_count(), found: len })
        } else {
            Ok(())
        }
    }

    fn check_node(&self, node: usize) -> Result<(), GraphError> {
        if node >= self.node_count() {
            Err(GraphError::NodeOutOfRange { node, n: self.node_count() })
        } else {
            Ok(())
        }
    }

    /// Parses the edge-list text format.
    ///
    /// One record per line: `i j w` for an edge or `self i w` for a self
    /// weight. Blank lines and lines starting with `#` are skipped. The node
    /// count is the largest index seen plus one.
    pub fn parse_edge_list(text: &str) -> Result<Self, GraphError> {
        enum Record {
            Edge(usize, usize, f64),
            SelfWeight(usize, f64),
        }
        let mut records = Vec::new();
        let mut max_node = None::<usize>;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| GraphError::Parse { line: line_no, message };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let index = |s: &str| s.parse::<usize>().map_err(|e| parse_err(format!("bad node index {s:?}: {e}")));
            let real = |s: &str| s.parse::<f64>().map_err(|e| parse_err(format!("bad weight {s:?}: {e}")));
            let record = match fields.as_slice() {
                ["self", i, w] => Record::SelfWeight(index(i)?, real(w)?),
                [i, j, w] => Record::Edge(index(i)?, index(j)?, real(w)?),
                _ => return Err(parse_err(format!("expected `i j w` or `self i w`, got {line:?}"))),
            };
            let top = match record {
                Record::Edge(i, j, _) => i.max(j),
                Record::SelfWeight(i, _) => i,
            };
            max_node = Some(max_node.map_or(top, |m| m.max(top)));
            records.push((line_no, record));
        }
        let n = max_node.map_or(0, |m| m + 1);
        let mut builder = GraphBuilder::new(n);
        for (line, record) in records {
            let res = match record {
                Record::Edge(i, j, w) => builder.add_edge(i, j, w),
                Record::SelfWeight(i, w) => builder.set_self_weight(i, w),
            };
            res.map_err(|e| GraphError::Parse { line, message: e.to_string() })?;
        }
        builder.build()
    }

    /// Serialises to the edge-list text format accepted by [`Self::parse_edge_list`].
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (i, j, w) in self.edges() {
            out.push_str(&format!("{i} {j} {w}\n"));
        }
        for (i, &w) in self.self_weights.iter().enumerate() {
            if w != 0.0 {
                out.push_str(&format!("self {i} {w}\n"));
            }
        }
        out
    }
}

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.carry
    }
}

/// Random connected graph: a uniform random recursive tree plus each
/// remaining pair independently with probability `extra_edge_prob`.
/// Edge weights are uniform on `(0, max_weight]` and self weights uniform on
/// `[0, max_self_weight]`.
pub fn random_connected_graph<R: Rng + ?Sized>(
    n: usize,
    extra_edge_prob: f64,
    max_weight: f64,
    max_self_weight: f64,
    rng: &mut R,
) -> WeightedGraph {
    let mut builder = GraphBuilder::new(n);
    let draw_weight = |rng: &mut R| max_weight * (1.0 - rng.random::<f64>());
    for v in 1..n {
        let u = rng.random_range(0..v);
        let w = draw_weight(rng);
        builder.add_edge(u, v, w).expect("tree edges are fresh");
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if !builder.has_edge(i, j) && rng.random::<f64>() < extra_edge_prob {
                let w = draw_weight(rng);
                builder.add_edge(i, j, w).expect("fresh edge");
            }
        }
    }
    for i in 0..n {
        let w = max_self_weight * rng.random::<f64>();
        builder.set_self_weight(i, w).expect("valid self weight");
    }
    builder.build().expect("n > 0")
}

/// Opinions `x(t)` at a given time step, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OpinionState {
    opinions: Vec<f64>,
    time_step: u64,
}

impl OpinionState {
    pub fn new(opinions: Vec<f64>) -> Result<Self, GraphError> {
        Self::at(opinions, 0)
    }

    pub fn at(opinions: Vec<f64>, time_step: u64) -> Result<Self, GraphError> {
        if let Some((index, &value)) = opinions.iter().enumerate().find(|(_, &x)| !(0.0..=1.0).contains(&x)) {
            return Err(GraphError::OpinionOutOfRange { index, value });
        }
        Ok(Self { opinions, time_step })
    }

    /// Callers guarantee every entry is in `[0, 1]`.
    pub(crate) fn from_trusted(opinions: Vec<f64>, time_step: u64) -> Self {
        debug_assert!(opinions.iter().all(|x| (0.0..=1.0).contains(x)));
        Self { opinions, time_step }
    }

    pub fn uniform(n: usize, value: f64) -> Result<Self, GraphError> {
        Self::new(vec![value; n])
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self::from_trusted((0..n).map(|_| rng.random::<f64>()).collect(), 0)
    }

    pub fn opinions(&self) -> &[f64] {
        &self.opinions
    }

    pub fn time_step(&self) -> u64 {
        self.time_step
    }

    pub fn len(&self) -> usize {
        self.opinions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.opinions.is_empty()
    }

    pub fn into_opinions(self) -> Vec<f64> {
        self.opinions
    }

    /// Largest absolute per-node difference to `other`.
    pub fn sup_distance(&self, other: &OpinionState) -> f64 {
        self.opinions.iter().zip(&other.opinions).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

impl fmt::Display for OpinionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t={} {:?}", self.time_step, self.opinions)
    }
}

/// Per-node bias parameters `b_i >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasProfile {
    biases: Vec<f64>,
}

impl BiasProfile {
    pub fn new(biases: Vec<f64>) -> Result<Self, GraphError> {
        if let Some((index, &value)) = biases.iter().enumerate().find(|(_, &b)| !(b.is_finite() && b >= 0.0)) {
            return Err(GraphError::NegativeBias { index, value });
        }
        Ok(Self { biases })
    }

    pub fn uniform(n: usize, bias: f64) -> Result<Self, GraphError> {
        Self::new(vec![bias; n])
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn len(&self) -> usize {
        self.biases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.biases.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn triangle() -> WeightedGraph {
        GraphBuilder::new(3).edge(0, 1, 1.0).unwrap().edge(1, 2, 1.0).unwrap().edge(0, 2, 1.0).unwrap().build().unwrap()
    }

    #[test]
    fn weighted_degree_examples() {
        let isolated = GraphBuilder::new(2).build().unwrap();
        assert_eq!(isolated.weighted_degree(0).unwrap(), 0.0);
        let single = GraphBuilder::new(2).edge(0, 1, 1.0).unwrap().build().unwrap();
        assert_eq!(single.weighted_degree(1).unwrap(), 1.0);
        assert_eq!(triangle().weighted_degree(2).unwrap(), 2.0);
        assert_eq!(triangle().weighted_degree(3), Err(GraphError::NodeOutOfRange { node: 3, n: 3 }));
    }

    #[test]
    fn self_weight_not_in_degree() {
        let g = GraphBuilder::new(2).edge(0, 1, 2.5).unwrap().self_weight(0, 7.0).unwrap().build().unwrap();
        assert_eq!(g.weighted_degree(0).unwrap(), 2.5);
        assert_eq!(g.self_weight(0).unwrap(), 7.0);
    }

    #[test]
    fn neighbor_opinion_sum_examples() {
        let g = GraphBuilder::new(3).edge(0, 1, 2.0).unwrap().edge(0, 2, 1.0).unwrap().build().unwrap();
        assert_eq!(g.neighbor_opinion_sum(0, &[0.3, 0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(g.neighbor_opinion_sum(0, &[0.3, 1.0, 1.0]).unwrap(), g.weighted_degree(0).unwrap());
        assert_eq!(g.neighbor_opinion_sum(0, &[0.9, 0.5, 1.0]).unwrap(), 2.0);
        assert_eq!(
            g.neighbor_opinion_sum(0, &[0.1, 0.2]),
            Err(GraphError::DimensionMismatch { expected: 3, found: 2 })
        );
    }

    #[test]
    fn laplacian_examples() {
        let g = GraphBuilder::new(2).edge(0, 1, 1.0).unwrap().build().unwrap();
        assert_eq!(g.laplacian_apply(&[1.0, 0.0]).unwrap(), vec![1.0, -1.0]);
        let t = GraphBuilder::new(4)
            .edge(0, 1, 3.0)
            .unwrap()
            .edge(1, 2, 2.0)
            .unwrap()
            .edge(2, 3, 5.0)
            .unwrap()
            .build()
            .unwrap();
        assert_eq!(t.laplacian_apply(&[4.0; 4]).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert_eq!(GraphBuilder::new(2).edge(0, 0, 1.0).unwrap_err(), GraphError::SelfLoop(0));
        assert!(matches!(GraphBuilder::new(2).edge(0, 1, 0.0), Err(GraphError::BadEdgeWeight { .. })));
        assert!(matches!(GraphBuilder::new(2).edge(0, 1, -1.0), Err(GraphError::BadEdgeWeight { .. })));
        assert!(matches!(
            GraphBuilder::new(2).edge(0, 1, 1.0).unwrap().edge(1, 0, 2.0),
            Err(GraphError::DuplicateEdge { i: 0, j: 1 })
        ));
        assert!(matches!(GraphBuilder::new(2).self_weight(1, -0.5), Err(GraphError::BadSelfWeight { .. })));
        assert_eq!(GraphBuilder::new(0).build().unwrap_err(), GraphError::Empty);
    }

    #[test]
    fn connectivity() {
        assert!(triangle().is_connected());
        let g = GraphBuilder::new(4).edge(0, 1, 1.0).unwrap().edge(2, 3, 1.0).unwrap().build().unwrap();
        assert!(!g.is_connected());
        assert!(GraphBuilder::new(1).build().unwrap().is_connected());
    }

    #[test]
    fn edge_list_parsing() {
        let text = "# comment\n0 1 2.5\n1 2 1\n\nself 2 0.5\n";
        let g = WeightedGraph::parse_edge_list(text).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.weight(1, 0), Some(2.5));
        assert_eq!(g.self_weight(2).unwrap(), 0.5);
        assert_eq!(WeightedGraph::parse_edge_list(&g.to_edge_list()).unwrap(), g);

        let err = WeightedGraph::parse_edge_list("0 1 1\n1 x 1\n").unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 2, .. }));
        let err = WeightedGraph::parse_edge_list("0 1 0\n").unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 1, .. }));
    }

    #[test]
    fn opinion_state_validation() {
        assert!(OpinionState::new(vec![0.0, 1.0, 0.5]).is_ok());
        assert_eq!(
            OpinionState::new(vec![0.2, 1.5]).unwrap_err(),
            GraphError::OpinionOutOfRange { index: 1, value: 1.5 }
        );
        assert!(OpinionState::new(vec![f64::NAN]).is_err());
        assert!(BiasProfile::new(vec![0.0, 2.0]).is_ok());
        assert!(BiasProfile::new(vec![-0.1]).is_err());
    }

    proptest! {
        #[test]
        fn weights_are_symmetric(seed in any::<u64>(), n in 1usize..30) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_connected_graph(n, 0.2, 10.0, 10.0, &mut rng);
            prop_assert!(g.is_connected());
            for (i, j, w) in g.edges() {
                prop_assert!(w > 0.0);
                prop_assert_eq!(g.weight(i, j), Some(w));
                prop_assert_eq!(g.weight(j, i), Some(w));
            }
        }

        #[test]
        fn laplacian_quadratic_form_matches_edge_sum(seed in any::<u64>(), n in 1usize..40) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_connected_graph(n, 0.15, 10.0, 10.0, &mut rng);
            let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let lx = g.laplacian_apply(&x).unwrap();
            let quad: f64 = x.iter().zip(&lx).map(|(a, b)| a * b).sum();
            let edge_sum: f64 = g.edges().map(|(i, j, w)| w * (x[i] - x[j]).powi(2)).sum();
            prop_assert!((quad - edge_sum).abs() <= 1e-12 * edge_sum.max(1.0));
        }

        #[test]
        fn laplacian_kills_constants_with_integer_weights(seed in any::<u64>(), n in 1usize..30, c in 0u32..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut b = GraphBuilder::new(n);
            for v in 1..n {
                let u = rng.random_range(0..v);
                b.add_edge(u, v, rng.random_range(1..20) as f64).unwrap();
            }
            let g = b.build().unwrap();
            let lx = g.laplacian_apply(&vec![c as f64; n]).unwrap();
            prop_assert!(lx.iter().all(|&v| v == 0.0));
        }
    }
}
