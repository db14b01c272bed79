//! Opinion formation under biased assimilation.
//!
//! The crate is organised around a handful of pure building blocks:
//!
//! * [`graph`]: sparse weighted undirected graphs and opinion vectors.
//! * [`dynamics`]: DeGroot averaging, the biased update, the single-agent
//!   environment model, flocking, and the stochastic urn dynamic.
//! * [`metrics`]: network and global disagreement indices, convex
//!   divergences and the majorization order.
//! * [`islands`]: two-island networks, the symmetry-reduced scalar map and
//!   the regime classifier (polarization / persistent disagreement /
//!   consensus).
//! * [`recsys`]: a generative user-item model and three random-walk
//!   recommenders, with Monte Carlo estimation of their polarizing effect.
//!
//! All randomness is injected through explicit `Rng` arguments; [`seeds`]
//! derives independent deterministic streams from one root seed.

pub mod dynamics;
pub mod graph;
pub mod islands;
pub mod metrics;
pub mod recsys;
pub mod seeds;

pub use dynamics::{
    biased_step, degroot_step, flocking_step, polarization_threshold, run_until_convergence, single_agent_step,
    urn_step, ConvergenceSpec, DynamicsError, EnvironmentParams, FlockingParams, Trajectory, UrnState,
};
pub use graph::{random_connected_graph, BiasProfile, GraphBuilder, GraphError, OpinionState, WeightedGraph};
pub use islands::{
    build_two_island, classify_regime, classify_two_island, f_function, island_update_map, solve_fixed_point,
    IslandError, Regime, RegimeVerdict, TwoIsland, TwoIslandParams,
};
pub use metrics::{convex_divergence, gdi, is_majorized, is_polarizing, ndi, ConvexFn, DivergenceReport};
pub use seeds::{Component, SeedStreams};
