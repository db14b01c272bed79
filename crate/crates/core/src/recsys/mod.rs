//! Random-walk recommenders on a user-item bipartite graph and their effect
//! on a user's opinion.
//!
//! Items `0..n` are RED and `n..2n` are BLUE. A user's opinion is the
//! (latent) fraction of RED items they own; the generative model wires each
//! user to each RED item with probability `x k / n` and to each BLUE item
//! with probability `(1 - x) k / n`.

mod estimate;
mod generative;
mod recommend;
mod walk;

use thiserror::Error;

pub use estimate::{
    accept, estimate_polarization, AcceptanceMode, EstimateConfig, PolarizationEstimate, TrialRecord, Verdict,
    MIN_VERDICT_SAMPLES,
};
pub use generative::{
    limiting_quantities, sample_bipartite_graph, sample_user_items, BipartiteGraph, Color, GenerativeParams,
    LimitReport, LimitStat, OpinionDistribution,
};
pub use recommend::{recommend, simple_icf, simple_ppr, simple_salsa, Algorithm, RecommenderConfig, WalkBudget};
pub use walk::{mean_two_step_by_color, sample_walk, walk_distribution, Node, Side, WalkDistribution};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecsysError {
    #[error("invalid parameters: {}", .0.join("; "))]
    InvalidParams(Vec<String>),
    #[error("invalid opinion distribution {0:?}")]
    InvalidDistribution(String),
    #[error("invalid acceptance mode {0:?}")]
    InvalidMode(String),
    #[error("user {0} owns no items")]
    IsolatedUser(usize),
    #[error("random walk reaches {0:?}, which has no neighbors")]
    DeadEnd(Node),
    #[error("{0:?} is out of range")]
    NodeOutOfRange(Node),
}
