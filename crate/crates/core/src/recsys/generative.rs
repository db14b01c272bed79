use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Beta, Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::RecsysError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Color {
    Red,
    Blue,
}

/// Distribution of user opinions. Each entry is symmetric about one half
/// with positive variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum OpinionDistribution {
    Uniform,
    /// Beta(alpha, alpha).
    Beta(f64),
    /// One half plus or minus `delta`, each with probability one half.
    TwoPoint(f64),
}

impl OpinionDistribution {
    pub fn variance(&self) -> f64 {
        match *self {
            OpinionDistribution::Uniform => 1.0 / 12.0,
            OpinionDistribution::Beta(a) => 1.0 / (4.0 * (2.0 * a + 1.0)),
            OpinionDistribution::TwoPoint(d) => d * d,
        }
    }

    pub fn validate(&self) -> Result<(), RecsysError> {
        let ok = match *self {
            OpinionDistribution::Uniform => true,
            OpinionDistribution::Beta(a) => a.is_finite() && a > 0.0,
            OpinionDistribution::TwoPoint(d) => d > 0.0 && d <= 0.5,
        };
        if ok {
            Ok(())
        } else {
            Err(RecsysError::InvalidDistribution(self.to_string()))
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            OpinionDistribution::Uniform => rng.random::<f64>(),
            OpinionDistribution::Beta(a) => Beta::new(a, a).expect("validated alpha").sample(rng),
            OpinionDistribution::TwoPoint(d) => {
                if rng.random::<bool>() {
                    0.5 + d
                } else {
                    0.5 - d
                }
            }
        }
    }
}

impl fmt::Display for OpinionDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OpinionDistribution::Uniform => write!(f, "uniform"),
            OpinionDistribution::Beta(a) => write!(f, "beta:{a}"),
            OpinionDistribution::TwoPoint(d) => write!(f, "twopoint:{d}"),
        }
    }
}

impl FromStr for OpinionDistribution {
    type Err = RecsysError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || RecsysError::InvalidDistribution(s.to_string());
        let dist = match s.split_once(':') {
            None if s == "uniform" => OpinionDistribution::Uniform,
            Some(("beta", a)) => OpinionDistribution::Beta(a.parse().map_err(|_| bad())?),
            Some(("twopoint", d)) => OpinionDistribution::TwoPoint(d.parse().map_err(|_| bad())?),
            _ => return Err(bad()),
        };
        dist.validate().map_err(|_| bad())?;
        Ok(dist)
    }
}

impl TryFrom<String> for OpinionDistribution {
    type Error = RecsysError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<OpinionDistribution> for String {
    fn from(d: OpinionDistribution) -> String {
        d.to_string()
    }
}

/// `n` items per color, `m` users, `k` expected items per user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerativeParams {
    pub n: usize,
    pub m: usize,
    pub k: f64,
    pub dist: OpinionDistribution,
}

impl GenerativeParams {
    pub fn new(n: usize, m: usize, k: f64, dist: OpinionDistribution) -> Result<Self, RecsysError> {
        let p = Self { n, m, k, dist };
        let problems = p.problems();
        if problems.is_empty() {
            Ok(p)
        } else {
            Err(RecsysError::InvalidParams(problems))
        }
    }

    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.n == 0 {
            out.push("n (items per color) must be positive".into());
        }
        if self.m == 0 {
            out.push("m (users) must be positive".into());
        }
        if !(self.k > 0.0 && self.k < self.n as f64) {
            out.push(format!("k = {} must satisfy 0 < k < n = {}", self.k, self.n));
        }
        if self.dist.validate().is_err() {
            out.push(format!("opinion distribution {} is invalid", self.dist));
        }
        out
    }
}

/// Unweighted user-item ownership graph with colored items.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteGraph {
    items_per_color: usize,
    user_items: Vec<Vec<usize>>,
    item_users: Vec<Vec<usize>>,
    opinions: Vec<f64>,
}

impl BipartiteGraph {
    pub fn new(items_per_color: usize) -> Self {
        Self {
            items_per_color,
            user_items: Vec::new(),
            item_users: vec![Vec::new(); 2 * items_per_color],
            opinions: Vec::new(),
        }
    }

    /// Appends a user with latent opinion `opinion` owning `items`.
    pub fn add_user(&mut self, opinion: f64, mut items: Vec<usize>) -> Result<usize, RecsysError> {
        items.sort_unstable();
        items.dedup();
        if let Some(&bad) = items.iter().find(|&&j| j >= self.item_count()) {
            return Err(RecsysError::NodeOutOfRange(super::Node::Item(bad)));
        }
        let u = self.user_items.len();
        for &j in &items {
            self.item_users[j].push(u);
        }
        self.user_items.push(items);
        self.opinions.push(opinion);
        Ok(u)
    }

    /// Removes the most recently added user, undoing [`Self::add_user`].
    pub fn remove_last_user(&mut self) {
        if let Some(items) = self.user_items.pop() {
            let u = self.user_items.len();
            for j in items {
                let popped = self.item_users[j].pop();
                debug_assert_eq!(popped, Some(u));
            }
            self.opinions.pop();
        }
    }

    pub fn items_per_color(&self) -> usize {
        self.items_per_color
    }

    pub fn user_count(&self) -> usize {
        self.user_items.len()
    }

    pub fn item_count(&self) -> usize {
        2 * self.items_per_color
    }

    pub fn edge_count(&self) -> usize {
        self.user_items.iter().map(Vec::len).sum()
    }

    pub fn item_color(&self, item: usize) -> Color {
        if item < self.items_per_color {
            Color::Red
        } else {
            Color::Blue
        }
    }

    pub fn user_items(&self, user: usize) -> &[usize] {
        &self.user_items[user]
    }

    pub fn item_users(&self, item: usize) -> &[usize] {
        &self.item_users[item]
    }

    pub fn opinion(&self, user: usize) -> f64 {
        self.opinions[user]
    }

    /// Number of RED items the user owns.
    pub fn red_owned(&self, user: usize) -> usize {
        self.user_items[user].partition_point(|&j| j < self.items_per_color)
    }

    /// Fraction of owned items that are RED; `None` for a user with no items.
    pub fn red_fraction(&self, user: usize) -> Option<f64> {
        let d = self.user_items[user].len();
        (d > 0).then(|| self.red_owned(user) as f64 / d as f64)
    }
}

/// Items for one user of opinion `x`: each RED item independently with
/// probability `x k / n`, each BLUE item with `(1 - x) k / n`. The number of
/// items of each color is drawn first and the subset is then uniform, which
/// has the same law as independent coin flips.
pub fn sample_user_items<R: Rng + ?Sized>(n: usize, k: f64, x: f64, rng: &mut R) -> Vec<usize> {
    let mut items = Vec::new();
    for (offset, p) in [(0, x * k / n as f64), (n, (1.0 - x) * k / n as f64)] {
        let count = Binomial::new(n as u64, p.clamp(0.0, 1.0)).expect("probability in [0, 1]").sample(rng) as usize;
        items.extend(index::sample(rng, n, count).into_iter().map(|j| j + offset));
    }
    items.sort_unstable();
    items
}

pub fn sample_bipartite_graph<R: Rng + ?Sized>(
    params: &GenerativeParams,
    rng: &mut R,
) -> Result<BipartiteGraph, RecsysError> {
    let problems = params.problems();
    if !problems.is_empty() {
        return Err(RecsysError::InvalidParams(problems));
    }
    let mut graph = BipartiteGraph::new(params.n);
    for _ in 0..params.m {
        let x = params.dist.sample(rng);
        let items = sample_user_items(params.n, params.k, x, rng);
        graph.add_user(x, items)?;
    }
    Ok(graph)
}

/// Observed average, its predicted value and the z-score of the difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitStat {
    pub observed: f64,
    pub expected: f64,
    pub std_error: f64,
    pub z: f64,
}

impl LimitStat {
    /// `observed = sum of per-user contributions`, whose standard error
    /// follows from the users being independent.
    fn from_contributions(contrib: &[f64], expected: f64) -> Self {
        let m = contrib.len() as f64;
        let observed: f64 = contrib.iter().sum();
        let mean = observed / m;
        let var = contrib.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
        let std_error = (m * var).sqrt();
        Self::new(observed, expected, std_error)
    }

    fn new(observed: f64, expected: f64, std_error: f64) -> Self {
        let z = if std_error > 0.0 { (observed - expected) / std_error } else { 0.0 };
        Self { observed, expected, std_error, z }
    }
}

/// Empirical degree and co-ownership averages against their large-`n` limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    /// Mean `|N(i)|` over users, predicted `k`.
    pub user_degree: LimitStat,
    /// Mean `|N(j)|` over items, predicted `m k / 2n`.
    pub item_degree: LimitStat,
    /// Mean co-ownership `M_jj'` over same-color pairs, predicted `m k^2 (1/4 + Var) / n^2`.
    pub same_color_coownership: LimitStat,
    /// Mean `M_jj'` over RED-BLUE pairs, predicted `m k^2 (1/4 - Var) / n^2`.
    pub cross_color_coownership: LimitStat,
}

impl LimitReport {
    pub fn stats(&self) -> [(&'static str, LimitStat); 4] {
        [
            ("user_degree", self.user_degree),
            ("item_degree", self.item_degree),
            ("same_color_coownership", self.same_color_coownership),
            ("cross_color_coownership", self.cross_color_coownership),
        ]
    }

    /// Averages independent reports; standard errors combine in quadrature.
    pub fn pooled(reports: &[LimitReport]) -> Option<LimitReport> {
        if reports.is_empty() {
            return None;
        }
        let g = reports.len() as f64;
        let pool = |pick: fn(&LimitReport) -> LimitStat| {
            let observed = reports.iter().map(|r| pick(r).observed).sum::<f64>() / g;
            let expected = reports.iter().map(|r| pick(r).expected).sum::<f64>() / g;
            let se = reports.iter().map(|r| pick(r).std_error.powi(2)).sum::<f64>().sqrt() / g;
            LimitStat::new(observed, expected, se)
        };
        Some(LimitReport {
            user_degree: pool(|r| r.user_degree),
            item_degree: pool(|r| r.item_degree),
            same_color_coownership: pool(|r| r.same_color_coownership),
            cross_color_coownership: pool(|r| r.cross_color_coownership),
        })
    }
}

/// Compares a generated graph with the limiting degree and co-ownership
/// values. All four averages are sums of independent per-user terms, so
/// their standard errors come straight from the per-user spread.
pub fn limiting_quantities(graph: &BipartiteGraph, params: &GenerativeParams) -> LimitReport {
    let n = graph.items_per_color() as f64;
    let m = graph.user_count() as f64;
    let k = params.k;
    let var = params.dist.variance();
    let users = 0..graph.user_count();
    let degrees: Vec<f64> = users.clone().map(|u| graph.user_items(u).len() as f64).collect();
    let user_degree = LimitStat::new(degrees.iter().sum::<f64>() / m, k, sample_sd(&degrees) / m.sqrt());
    let item_contrib: Vec<f64> = degrees.iter().map(|d| d / (2.0 * n)).collect();
    let item_degree = LimitStat::from_contributions(&item_contrib, m * k / (2.0 * n));
    let same_pairs = n * (n - 1.0);
    let same: Vec<f64> = users
        .clone()
        .map(|u| {
            let r = graph.red_owned(u) as f64;
            let b = graph.user_items(u).len() as f64 - r;
            (r * (r - 1.0) / 2.0 + b * (b - 1.0) / 2.0) / same_pairs
        })
        .collect();
    let cross: Vec<f64> = users
        .map(|u| {
            let r = graph.red_owned(u) as f64;
            let b = graph.user_items(u).len() as f64 - r;
            r * b / (n * n)
        })
        .collect();
    LimitReport {
        user_degree,
        item_degree,
        same_color_coownership: LimitStat::from_contributions(&same, m * k * k * (0.25 + var) / (n * n)),
        cross_color_coownership: LimitStat::from_contributions(&cross, m * k * k * (0.25 - var) / (n * n)),
    }
}

fn sample_sd(v: &[f64]) -> f64 {
    let len = v.len() as f64;
    let mean = v.iter().sum::<f64>() / len;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (len - 1.0).max(1.0)).sqrt()
}
