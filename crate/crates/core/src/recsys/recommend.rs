use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::walk::argmax_lowest;
use super::{sample_walk, walk_distribution, BipartiteGraph, Node, RecsysError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Salsa,
    Ppr,
    Icf,
}

impl FromStr for Algorithm {
    type Err = RecsysError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "salsa" => Ok(Algorithm::Salsa),
            "ppr" => Ok(Algorithm::Ppr),
            "icf" => Ok(Algorithm::Icf),
            other => Err(RecsysError::InvalidParams(vec![format!(
                "unknown algorithm {other:?}; expected salsa, ppr or icf"
            )])),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Salsa => "salsa",
            Algorithm::Ppr => "ppr",
            Algorithm::Icf => "icf",
        })
    }
}

/// Number of walks behind an argmax recommender. `Exact` takes the argmax of
/// the exact endpoint distribution, the limit of infinitely many walks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum WalkBudget {
    Sampled(u64),
    #[default]
    Exact,
}

impl FromStr for WalkBudget {
    type Err = RecsysError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "exact" {
            return Ok(WalkBudget::Exact);
        }
        match s.parse::<u64>() {
            Ok(t) if t >= 1 => Ok(WalkBudget::Sampled(t)),
            _ => Err(RecsysError::InvalidParams(vec![format!(
                "walk count {s:?} must be a positive integer or \"exact\""
            )])),
        }
    }
}

impl fmt::Display for WalkBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WalkBudget::Sampled(t) => write!(f, "{t}"),
            WalkBudget::Exact => f.write_str("exact"),
        }
    }
}

impl TryFrom<String> for WalkBudget {
    type Error = RecsysError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<WalkBudget> for String {
    fn from(b: WalkBudget) -> String {
        b.to_string()
    }
}

/// Recommender choice; argmax ties always go to the lowest item index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecommenderConfig {
    pub algorithm: Algorithm,
    #[serde(default)]
    pub walks: WalkBudget,
}

impl RecommenderConfig {
    pub fn new(algorithm: Algorithm, walks: WalkBudget) -> Result<Self, RecsysError> {
        if walks == WalkBudget::Sampled(0) {
            return Err(RecsysError::InvalidParams(vec!["walk count must be at least 1".into()]));
        }
        Ok(Self { algorithm, walks })
    }
}

fn check_user(graph: &BipartiteGraph, user: usize) -> Result<(), RecsysError> {
    if user >= graph.user_count() {
        return Err(RecsysError::NodeOutOfRange(Node::User(user)));
    }
    if graph.user_items(user).is_empty() {
        return Err(RecsysError::IsolatedUser(user));
    }
    Ok(())
}

fn as_item(node: Node) -> usize {
    match node {
        Node::Item(j) => j,
        Node::User(_) => unreachable!("odd-length walk from a user ends on an item"),
    }
}

/// Endpoint of a single three-step walk from `user`.
pub fn simple_salsa<R: Rng + ?Sized>(graph: &BipartiteGraph, user: usize, rng: &mut R) -> Result<usize, RecsysError> {
    check_user(graph, user)?;
    Ok(as_item(sample_walk(graph, Node::User(user), 3, rng)?))
}

fn argmax_of_walks<R: Rng + ?Sized>(
    graph: &BipartiteGraph,
    start: Node,
    steps: usize,
    walks: WalkBudget,
    rng: &mut R,
) -> Result<usize, RecsysError> {
    match walks {
        WalkBudget::Exact => Ok(walk_distribution(graph, start, steps)?.argmax()),
        WalkBudget::Sampled(t) => {
            let mut counts = vec![0u64; graph.item_count()];
            for _ in 0..t {
                counts[as_item(sample_walk(graph, start, steps, rng)?)] += 1;
            }
            Ok(argmax_lowest(&counts))
        }
    }
}

/// Most frequent endpoint of three-step walks from `user`.
pub fn simple_ppr<R: Rng + ?Sized>(
    graph: &BipartiteGraph,
    user: usize,
    walks: WalkBudget,
    rng: &mut R,
) -> Result<usize, RecsysError> {
    check_user(graph, user)?;
    argmax_of_walks(graph, Node::User(user), 3, walks, rng)
}

/// Picks one owned item uniformly, then returns the most frequent endpoint
/// of two-step walks from it.
pub fn simple_icf<R: Rng + ?Sized>(
    graph: &BipartiteGraph,
    user: usize,
    walks: WalkBudget,
    rng: &mut R,
) -> Result<usize, RecsysError> {
    check_user(graph, user)?;
    let owned = graph.user_items(user);
    let seed = owned[rng.random_range(0..owned.len())];
    argmax_of_walks(graph, Node::Item(seed), 2, walks, rng)
}

pub fn recommend<R: Rng + ?Sized>(
    graph: &BipartiteGraph,
    user: usize,
    config: &RecommenderConfig,
    rng: &mut R,
) -> Result<usize, RecsysError> {
    match config.algorithm {
        Algorithm::Salsa => simple_salsa(graph, user, rng),
        Algorithm::Ppr => simple_ppr(graph, user, config.walks, rng),
        Algorithm::Icf => simple_icf(graph, user, config.walks, rng),
    }
}
