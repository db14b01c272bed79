//! Two-island networks and the regime theory of the biased update on them.
//!
//! On a two-island network with unit weights, zero self weights, a common
//! bias `b` and mirror-image initial opinions (`x0` on the first island,
//! `1 - x0` on the second), every node of an island carries the same
//! opinion forever and the islands stay complementary. The dynamics then
//! collapse to the scalar recurrence [`island_update_map`], whose fixed
//! points are the roots of `f(y; b) = h` (see [`f_function`]).

use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{assimilation_power, mirror_safe_ratio};
use crate::graph::{GraphBuilder, GraphError, OpinionState, WeightedGraph};

/// Bracket top for the fixed-point bisection.
pub const FIXED_POINT_UPPER: f64 = 1.0 - 1e-12;
/// Absolute tolerance of the fixed-point bisection.
pub const FIXED_POINT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IslandError {
    #[error("invalid two-island parameters: {}", .0.join("; "))]
    InvalidParams(Vec<String>),
    #[error("degree targets cannot be realised: {0}")]
    Infeasible(String),
    #[error("bias {b} and homophily {h} are outside the persistent-disagreement regime 1 > b >= 2/(h+1)")]
    OutsideDisagreementRegime { b: f64, h: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("no prediction for unequal islands ({n1} vs {n2} nodes)")]
    NoPrediction { n1: usize, n2: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// `(n1, n2, p_s, p_d)` with `p_s > p_d` and integral degree targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoIslandParams {
    pub n1: usize,
    pub n2: usize,
    pub p_same: f64,
    pub p_diff: f64,
}

fn integral(value: f64) -> Option<usize> {
    let r = value.round();
    ((value - r).abs() <= 1e-9 * value.abs().max(1.0) && r >= 0.0).then_some(r as usize)
}

impl TwoIslandParams {
    pub fn new(n1: usize, n2: usize, p_same: f64, p_diff: f64) -> Result<Self, IslandError> {
        let params = Self { n1, n2, p_same, p_diff };
        let problems = params.problems();
        if problems.is_empty() {
            Ok(params)
        } else {
            Err(IslandError::InvalidParams(problems))
        }
    }

    pub fn symmetric(n: usize, p_same: f64, p_diff: f64) -> Result<Self, IslandError> {
        Self::new(n, n, p_same, p_diff)
    }

    /// Every violated constraint, not just the first.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.n1 == 0 || self.n2 == 0 {
            out.push("island sizes must be positive".to_string());
        }
        for (name, p) in [("p_s", self.p_same), ("p_d", self.p_diff)] {
            if !(p > 0.0 && p < 1.0) {
                out.push(format!("{name} = {p} must lie in (0, 1)"));
            }
        }
        if self.p_same.partial_cmp(&self.p_diff) != Some(std::cmp::Ordering::Greater) {
            out.push(format!("homophily requires p_s > p_d (got p_s = {}, p_d = {})", self.p_same, self.p_diff));
        }
        for (label, value) in [
            ("n1*p_s", self.n1 as f64 * self.p_same),
            ("n2*p_s", self.n2 as f64 * self.p_same),
            ("n1*p_d", self.n1 as f64 * self.p_diff),
            ("n2*p_d", self.n2 as f64 * self.p_diff),
        ] {
            if integral(value).is_none() {
                out.push(format!("{label} = {value} is not an integer"));
            }
        }
        out
    }

    /// Degree of homophily `p_s / p_d`. When the degrees are integral it is
    /// taken as their ratio so that it matches the built graph exactly
    /// (0.6 / 0.2 on its own rounds below 3).
    pub fn homophily(&self) -> f64 {
        match (integral(self.n1 as f64 * self.p_same), integral(self.n2 as f64 * self.p_diff)) {
            (Some(within), Some(cross)) if cross > 0 => within as f64 / cross as f64,
            _ => self.p_same / self.p_diff,
        }
    }

    fn degree(value: f64) -> usize {
        integral(value).expect("validated at construction")
    }

    /// Neighbors a first-island node has inside its island.
    pub fn within_degree_1(&self) -> usize {
        Self::degree(self.n1 as f64 * self.p_same)
    }

    pub fn within_degree_2(&self) -> usize {
        Self::degree(self.n2 as f64 * self.p_same)
    }

    /// Neighbors a first-island node has on the second island.
    pub fn cross_degree_1(&self) -> usize {
        Self::degree(self.n2 as f64 * self.p_diff)
    }

    pub fn cross_degree_2(&self) -> usize {
        Self::degree(self.n1 as f64 * self.p_diff)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Island {
    First,
    Second,
}

/// A built two-island network. Nodes `0..n1` form the first island and
/// `n1..n1+n2` the second.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoIsland {
    pub params: TwoIslandParams,
    pub graph: WeightedGraph,
}

impl TwoIsland {
    pub fn island_of(&self, node: usize) -> Island {
        if node < self.params.n1 {
            Island::First
        } else {
            Island::Second
        }
    }

    pub fn first(&self) -> std::ops::Range<usize> {
        0..self.params.n1
    }

    pub fn second(&self) -> std::ops::Range<usize> {
        self.params.n1..self.params.n1 + self.params.n2
    }

    /// `x0` on the first island, `1 - x0` on the second.
    pub fn mirrored_state(&self, x0: f64) -> Result<OpinionState, GraphError> {
        let mut x = vec![x0; self.params.n1];
        x.extend(std::iter::repeat_n(1.0 - x0, self.params.n2));
        OpinionState::new(x)
    }

    /// Mean opinion on each island.
    pub fn island_means(&self, state: &OpinionState) -> (f64, f64) {
        let x = state.opinions();
        let mean = |r: std::ops::Range<usize>| {
            let len = r.len() as f64;
            x[r].iter().sum::<f64>() / len
        };
        (mean(self.first()), mean(self.second()))
    }
}

fn circulant_offsets(n: usize, degree: usize) -> Result<Vec<usize>, IslandError> {
    if degree > n.saturating_sub(1) {
        return Err(IslandError::Infeasible(format!(
            "within-island degree {degree} exceeds island size {n} minus one"
        )));
    }
    if degree % 2 == 1 && n % 2 == 1 {
        return Err(IslandError::Infeasible(format!(
            "an odd within-island degree {degree} needs an even island size, got {n}"
        )));
    }
    let mut offsets: Vec<usize> = (1..=degree / 2).collect();
    if degree % 2 == 1 {
        offsets.push(n / 2);
    }
    Ok(offsets)
}

/// Builds a two-island network with unit edge weights and zero self
/// weights. Within an island node `i` links to the nodes at the nearest
/// cyclic offsets; across islands first-island node `i` links to the
/// contiguous block `i*c1 .. i*c1 + c1` (mod `n2`) of the second island.
/// `shuffle_swaps` degree- and class-preserving double-edge swaps are then
/// attempted with `rng`; with zero swaps the result is fully deterministic.
pub fn build_two_island<R: Rng + ?Sized>(
    params: &TwoIslandParams,
    shuffle_swaps: usize,
    rng: &mut R,
) -> Result<TwoIsland, IslandError> {
    let problems = params.problems();
    if !problems.is_empty() {
        return Err(IslandError::InvalidParams(problems));
    }
    let (n1, n2) = (params.n1, params.n2);
    let c1 = params.cross_degree_1();
    if c1 > n2 || params.cross_degree_2() > n1 {
        return Err(IslandError::Infeasible("cross-island degree exceeds the other island's size".into()));
    }
    let mut classes: [Vec<(usize, usize)>; 3] = Default::default();
    for (island, (offset, size, degree)) in
        [(0, n1, params.within_degree_1()), (n1, n2, params.within_degree_2())].into_iter().enumerate()
    {
        for &k in &circulant_offsets(size, degree)? {
            for i in 0..size {
                let j = (i + k) % size;
                // the diametric offset would otherwise add each edge twice
                if 2 * k == size && j < i {
                    continue;
                }
                classes[island].push((offset + i.min(j), offset + i.max(j)));
            }
        }
    }
    for i in 0..n1 {
        for t in 0..c1 {
            classes[2].push((i, n1 + (i * c1 + t) % n2));
        }
    }
    if shuffle_swaps > 0 {
        shuffle_preserving_degrees(&mut classes, shuffle_swaps, rng);
    }
    let mut builder = GraphBuilder::new(n1 + n2);
    for &(i, j) in classes.iter().flatten() {
        builder.add_edge(i, j, 1.0)?;
    }
    Ok(TwoIsland { params: *params, graph: builder.build()? })
}

fn shuffle_preserving_degrees<R: Rng + ?Sized>(classes: &mut [Vec<(usize, usize)>; 3], swaps: usize, rng: &mut R) {
    let key = |a: usize, b: usize| (a.min(b), a.max(b));
    let mut present: HashSet<(usize, usize)> = classes.iter().flatten().map(|&(a, b)| key(a, b)).collect();
    for _ in 0..swaps {
        let class = rng.random_range(0..3);
        let edges = &mut classes[class];
        if edges.len() < 2 {
            continue;
        }
        let e1 = rng.random_range(0..edges.len());
        let e2 = rng.random_range(0..edges.len());
        if e1 == e2 {
            continue;
        }
        let (a, b) = edges[e1];
        let (mut c, mut d) = edges[e2];
        // cross edges keep their (first, second) orientation; within-island
        // edges may be flipped
        if class < 2 && rng.random::<bool>() {
            std::mem::swap(&mut c, &mut d);
        }
        if a == d || c == b || present.contains(&key(a, d)) || present.contains(&key(c, b)) {
            continue;
        }
        present.remove(&key(a, b));
        present.remove(&key(c, d));
        present.insert(key(a, d));
        present.insert(key(c, b));
        edges[e1] = if class < 2 { key(a, d) } else { (a, d) };
        edges[e2] = if class < 2 { key(c, b) } else { (c, b) };
    }
}

/// One step of the symmetry-reduced recurrence for a first-island node
/// when the second island holds `1 - x`:
///
/// `x^b (h x + 1 - x) / (x^b (h x + 1 - x) + (1 - x)^b (h (1 - x) + x))`.
pub fn island_update_map(x: f64, b: f64, h: f64) -> Result<f64, IslandError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(IslandError::InvalidArgument(format!("opinion {x} outside [0, 1]")));
    }
    if !(b.is_finite() && b >= 0.0) || !(h.is_finite() && h > 0.0) {
        return Err(IslandError::InvalidArgument(format!("need b >= 0 and h > 0, got b = {b}, h = {h}")));
    }
    Ok(island_map_unchecked(x, b, h))
}

pub(crate) fn island_map_unchecked(x: f64, b: f64, h: f64) -> f64 {
    let up = assimilation_power(x, b) * (h * x + (1.0 - x));
    let down = assimilation_power(1.0 - x, b) * (h * (1.0 - x) + x);
    mirror_safe_ratio(up, down).unwrap_or(x)
}

/// `f(y; b)`: the value of the homophily `h` for which `y` is a fixed point
/// of [`island_update_map`].
///
/// Piecewise: 1 when `b = 1`, 0 when `b = 2`, `2/b - 1` at `y = 1/2`, and
/// otherwise the ratio below, evaluated in the equivalent form
/// `(y (1-y)^{b-1} - y^{b-1} (1-y)) / (y^b - (1-y)^b)`, which stays finite
/// on `(0, 1)` and yields the correct limits at the endpoints. For `b < 1`
/// the endpoints evaluate to `+inf`.
pub fn f_function(y: f64, b: f64) -> Result<f64, IslandError> {
    if !(0.0..=1.0).contains(&y) || !(b.is_finite() && b > 0.0) {
        return Err(IslandError::InvalidArgument(format!("f needs y in [0, 1] and b > 0, got y = {y}, b = {b}")));
    }
    Ok(f_unchecked(y, b))
}

fn f_unchecked(y: f64, b: f64) -> f64 {
    if b == 1.0 {
        return 1.0;
    }
    if b == 2.0 {
        return 0.0;
    }
    if y == 0.5 {
        return 2.0 / b - 1.0;
    }
    let z = 1.0 - y;
    let num = y * z.powf(b - 1.0) - y.powf(b - 1.0) * z;
    let den = y.powf(b) - z.powf(b);
    // + 0.0 folds a -0.0 at y = 0 into 0.0
    num / den + 0.0
}

fn in_disagreement_band(b: f64, h: f64) -> bool {
    b < 1.0 && b * (h + 1.0) >= 2.0 * (1.0 - 1e-12)
}

/// The unique `x̂` in `[1/2, 1)` with `f(x̂; b) = h`, for `1 > b >= 2/(h+1)`.
///
/// Bisection on `[1/2, 1 - 1e-12]` using that `f` increases strictly there
/// when `b < 1`. If the root lies above the bracket the bracket top is
/// returned, which is still within the tolerance of the true root.
pub fn solve_fixed_point(b: f64, h: f64) -> Result<f64, IslandError> {
    if !(b > 0.0 && h.is_finite() && h > 1.0) || !in_disagreement_band(b, h) {
        return Err(IslandError::OutsideDisagreementRegime { b, h });
    }
    let mut lo = 0.5;
    let mut hi = FIXED_POINT_UPPER;
    if f_unchecked(lo, b) >= h {
        return Ok(lo);
    }
    if f_unchecked(hi, b) < h {
        return Ok(hi);
    }
    while hi - lo > FIXED_POINT_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        // +inf compares above any finite h
        if f_unchecked(mid, b) < h {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Polarization,
    PersistentDisagreement,
    Consensus,
}

/// Predicted long-run behaviour on a symmetric two-island network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeVerdict {
    pub regime: Regime,
    /// Limits on the first and second island.
    pub predicted_limit: (f64, f64),
    /// Present exactly in the persistent-disagreement regime.
    pub x_hat: Option<f64>,
}

/// `b >= 1`: polarization to `(1, 0)`; `1 > b >= 2/(h+1)`: persistent
/// disagreement at `(x̂, 1 - x̂)`; `b < 2/(h+1)`: consensus at one half.
pub fn classify_regime(b: f64, h: f64) -> Result<RegimeVerdict, IslandError> {
    if !(b.is_finite() && b > 0.0) || !(h.is_finite() && h > 1.0) {
        return Err(IslandError::InvalidArgument(format!(
            "classification needs b > 0 and h > 1, got b = {b}, h = {h}"
        )));
    }
    Ok(if b >= 1.0 {
        RegimeVerdict { regime: Regime::Polarization, predicted_limit: (1.0, 0.0), x_hat: None }
    } else if in_disagreement_band(b, h) {
        let x_hat = solve_fixed_point(b, h)?;
        RegimeVerdict {
            regime: Regime::PersistentDisagreement,
            predicted_limit: (x_hat, 1.0 - x_hat),
            x_hat: Some(x_hat),
        }
    } else {
        RegimeVerdict { regime: Regime::Consensus, predicted_limit: (0.5, 0.5), x_hat: None }
    })
}

/// [`classify_regime`] for concrete parameters; refuses unequal islands,
/// which fall outside the theorem's hypotheses.
pub fn classify_two_island(params: &TwoIslandParams, b: f64) -> Result<RegimeVerdict, IslandError> {
    if params.n1 != params.n2 {
        return Err(IslandError::NoPrediction { n1: params.n1, n2: params.n2 });
    }
    classify_regime(b, params.homophily())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// f in the form it is usually written, used as an independent check.
    fn f_reference(y: f64, b: f64) -> f64 {
        ((y).powf(2.0 - b) - (1.0 - y).powf(2.0 - b)) / (y * (1.0 - y).powf(1.0 - b) - y.powf(1.0 - b) * (1.0 - y))
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(11)
    }

    #[test]
    fn builder_degree_counts() {
        let p = TwoIslandParams::symmetric(10, 0.4, 0.2).unwrap();
        let ti = build_two_island(&p, 0, &mut rng()).unwrap();
        for node in 0..20 {
            let (mut within, mut cross) = (0, 0);
            for (j, w) in ti.graph.neighbors(node) {
                assert_eq!(w, 1.0);
                if ti.island_of(j) == ti.island_of(node) {
                    within += 1;
                } else {
                    cross += 1;
                }
            }
            assert_eq!((within, cross), (4, 2), "node {node}");
            assert_eq!(ti.graph.self_weight(node).unwrap(), 0.0);
        }
    }

    #[test]
    fn builder_handles_odd_degrees_and_unequal_islands() {
        // within degree 5 on 10 nodes uses the diametric offset
        let p = TwoIslandParams::new(10, 20, 0.5, 0.1).unwrap();
        let ti = build_two_island(&p, 0, &mut rng()).unwrap();
        for node in 0..30 {
            let within = ti.graph.neighbors(node).filter(|&(j, _)| ti.island_of(j) == ti.island_of(node)).count();
            let cross = ti.graph.weighted_degree(node).unwrap() as usize - within;
            if node < 10 {
                assert_eq!((within, cross), (5, 2));
            } else {
                assert_eq!((within, cross), (10, 1));
            }
        }
        assert!(matches!(classify_two_island(&p, 0.5), Err(IslandError::NoPrediction { n1: 10, n2: 20 })));
    }

    #[test]
    fn shuffles_preserve_degrees() {
        let p = TwoIslandParams::symmetric(20, 0.3, 0.1).unwrap();
        let base = build_two_island(&p, 0, &mut rng()).unwrap();
        let shuffled = build_two_island(&p, 2000, &mut rng()).unwrap();
        assert_ne!(base.graph, shuffled.graph);
        for node in 0..40 {
            let within = shuffled
                .graph
                .neighbors(node)
                .filter(|&(j, _)| shuffled.island_of(j) == shuffled.island_of(node))
                .count();
            assert_eq!(within, 6);
            assert_eq!(shuffled.graph.weighted_degree(node).unwrap(), 8.0);
        }
    }

    #[test]
    fn params_are_validated() {
        assert!(matches!(TwoIslandParams::symmetric(10, 0.2, 0.4), Err(IslandError::InvalidParams(_))));
        let err = TwoIslandParams::symmetric(2, 0.5, 0.5).unwrap_err();
        assert!(err.to_string().contains("p_s > p_d"));
        let err = TwoIslandParams::symmetric(10, 0.45, 0.2).unwrap_err();
        assert!(err.to_string().contains("not an integer"));
        // odd degree on an odd island cannot be realised
        let p = TwoIslandParams::symmetric(5, 0.6, 0.2).unwrap();
        assert!(matches!(build_two_island(&p, 0, &mut rng()), Err(IslandError::Infeasible(_))));
    }

    #[test]
    fn homophily_examples() {
        assert_eq!(TwoIslandParams::symmetric(10, 0.4, 0.2).unwrap().homophily(), 2.0);
        assert_eq!(TwoIslandParams::symmetric(10, 0.6, 0.1).unwrap().homophily(), 6.0);
        assert_eq!(TwoIslandParams::symmetric(50, 0.6, 0.2).unwrap().homophily(), 3.0);
        let mut last = f64::INFINITY;
        for ps in [0.5, 0.4, 0.3, 0.25, 0.21, 0.2001] {
            let h = TwoIslandParams { n1: 10, n2: 10, p_same: ps, p_diff: 0.2 }.homophily();
            assert!(h > 1.0 && h < last);
            last = h;
        }
    }

    #[test]
    fn island_map_examples() {
        for (b, h) in [(0.3, 2.0), (1.0, 5.0), (2.5, 1.5)] {
            assert_eq!(island_update_map(0.5, b, h).unwrap(), 0.5);
            assert_eq!(island_update_map(1.0, b, h).unwrap(), 1.0);
        }
        for x in [0.5, 0.6, 0.8, 0.99] {
            let y = island_update_map(x, 0.7, 3.0).unwrap();
            assert!((0.5..=1.0).contains(&y));
        }
        assert!(island_update_map(1.5, 1.0, 2.0).is_err());
    }

    #[test]
    fn f_examples() {
        for y in [0.0, 0.2, 0.5, 0.9, 1.0] {
            assert_eq!(f_function(y, 1.0).unwrap(), 1.0);
            assert_eq!(f_function(y, 2.0).unwrap(), 0.0);
        }
        assert_eq!(f_function(0.5, 0.5).unwrap(), 3.0);
        // 50-digit reference value: 1 + 1.5 * sqrt(2)
        assert!((f_function(2.0 / 3.0, 0.5).unwrap() - 3.121_320_343_559_642_6).abs() < 1e-12);
        assert_eq!(f_function(1.0, 0.5).unwrap(), f64::INFINITY);
        assert_eq!(f_function(0.0, 0.5).unwrap(), f64::INFINITY);
        assert!(f_function(0.3, 0.0).is_err());
    }

    #[test]
    fn f_agrees_with_reference_form() {
        for b in [0.1, 0.3, 0.5, 0.8, 1.5, 3.0, 4.5] {
            for k in 1..100 {
                let y = k as f64 / 100.0;
                if y == 0.5 {
                    continue;
                }
                let a = f_function(y, b).unwrap();
                let r = f_reference(y, b);
                assert!((a - r).abs() <= 1e-9 * r.abs().max(1.0), "y={y} b={b}: {a} vs {r}");
            }
        }
    }

    #[test]
    fn f_is_continuous_at_half() {
        for b in [0.3, 0.5, 0.8, 1.5, 3.0] {
            let target = 2.0 / b - 1.0;
            // offsets small enough that the quadratic term is below 1e-8
            for d in [1e-5, 1e-6, 1e-7] {
                assert!((f_function(0.5 + d, b).unwrap() - target).abs() < 1e-8);
                assert!((f_function(0.5 - d, b).unwrap() - target).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn f_strictly_increasing_for_small_bias() {
        for b in [0.3, 0.5, 0.8] {
            let mut prev = f_function(0.5, b).unwrap();
            for k in 1..=499 {
                let y = 0.5 + k as f64 * 0.001;
                let v = f_function(y, b).unwrap();
                assert!(v > prev, "b={b} y={y}");
                prev = v;
            }
        }
    }

    #[test]
    fn f_at_most_one_for_large_bias() {
        for b in [1.0, 1.5, 2.0, 3.0] {
            for k in 0..1000 {
                let y = k as f64 / 1000.0;
                assert!(f_function(y, b).unwrap() <= 1.0 + 1e-12, "b={b} y={y}");
            }
        }
    }

    #[test]
    fn fixed_point_examples() {
        let h = 3.0;
        assert_eq!(solve_fixed_point(2.0 / (h + 1.0), h).unwrap(), 0.5);
        let h = f_function(2.0 / 3.0, 0.5).unwrap();
        let x = solve_fixed_point(0.5, h).unwrap();
        assert!((x - 2.0 / 3.0).abs() < 1e-10);
        assert!((f_function(x, 0.5).unwrap() - h).abs() < 1e-9);
        // 50-digit bisection reference
        assert!((solve_fixed_point(0.5, 4.0).unwrap() - 0.872_677_996_249_965).abs() < 1e-11);
        assert!(solve_fixed_point(1.0, 4.0).is_err());
        assert!(solve_fixed_point(0.1, 2.0).is_err());
    }

    #[test]
    fn fixed_point_is_fixed_under_the_map() {
        let mut r = ChaCha8Rng::seed_from_u64(99);
        let mut checked = 0;
        while checked < 100 {
            let h = 1.0 + 20.0 * r.random::<f64>();
            let b = r.random::<f64>();
            if b * (h + 1.0) < 2.0 || b >= 1.0 {
                continue;
            }
            let x = solve_fixed_point(b, h).unwrap();
            assert!((0.5..1.0).contains(&x));
            assert!((island_update_map(x, b, h).unwrap() - x).abs() < 1e-9, "b={b} h={h}");
            checked += 1;
        }
    }

    #[test]
    fn classification_examples() {
        let v = classify_regime(1.0, 2.0).unwrap();
        assert_eq!((v.regime, v.predicted_limit, v.x_hat), (Regime::Polarization, (1.0, 0.0), None));
        let v = classify_regime(0.5, 4.0).unwrap();
        assert_eq!(v.regime, Regime::PersistentDisagreement);
        let xh = v.x_hat.unwrap();
        assert!(xh > 0.5 && xh < 1.0);
        assert_eq!(v.predicted_limit.0 + v.predicted_limit.1, 1.0);
        let v = classify_regime(0.1, 2.0).unwrap();
        assert_eq!((v.regime, v.predicted_limit), (Regime::Consensus, (0.5, 0.5)));
        assert!(classify_regime(0.0, 2.0).is_err());
        assert!(classify_regime(0.5, 1.0).is_err());
    }
}
