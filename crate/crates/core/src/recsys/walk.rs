use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{BipartiteGraph, RecsysError};

/// A node of the bipartite graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Node {
    User(usize),
    Item(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Users,
    Items,
}

/// Exact law of a walk endpoint, indexed by node within `side`.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkDistribution {
    pub side: Side,
    pub probs: Vec<f64>,
}

impl WalkDistribution {
    /// Index of the largest probability; the lowest index wins ties.
    pub fn argmax(&self) -> usize {
        argmax_lowest(&self.probs)
    }
}

pub(crate) fn argmax_lowest<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn neighbors(graph: &BipartiteGraph, node: Node) -> &[usize] {
    match node {
        Node::User(u) => graph.user_items(u),
        Node::Item(j) => graph.item_users(j),
    }
}

fn check_node(graph: &BipartiteGraph, node: Node) -> Result<(), RecsysError> {
    let ok = match node {
        Node::User(u) => u < graph.user_count(),
        Node::Item(j) => j < graph.item_count(),
    };
    if ok {
        Ok(())
    } else {
        Err(RecsysError::NodeOutOfRange(node))
    }
}

/// Exact distribution of a `steps`-step uniform random walk from `start`.
///
/// Mass is pushed along edges one step at a time, touching only nodes that
/// currently hold probability. Nodes never reached keep probability zero;
/// reaching a node with no neighbors before the last step is an error.
pub fn walk_distribution(graph: &BipartiteGraph, start: Node, steps: usize) -> Result<WalkDistribution, RecsysError> {
    check_node(graph, start)?;
    let (mut side, mut probs) = match start {
        Node::User(u) => {
            let mut p = vec![0.0; graph.user_count()];
            p[u] = 1.0;
            (Side::Users, p)
        }
        Node::Item(j) => {
            let mut p = vec![0.0; graph.item_count()];
            p[j] = 1.0;
            (Side::Items, p)
        }
    };
    let mut frontier = vec![match start {
        Node::User(u) | Node::Item(u) => u,
    }];
    for _ in 0..steps {
        let (next_side, next_len) = match side {
            Side::Users => (Side::Items, graph.item_count()),
            Side::Items => (Side::Users, graph.user_count()),
        };
        let mut next = vec![0.0; next_len];
        let mut touched = Vec::new();
        for &v in &frontier {
            let node = match side {
                Side::Users => Node::User(v),
                Side::Items => Node::Item(v),
            };
            let nbrs = neighbors(graph, node);
            if nbrs.is_empty() {
                return Err(RecsysError::DeadEnd(node));
            }
            let share = probs[v] / nbrs.len() as f64;
            for &w in nbrs {
                if next[w] == 0.0 {
                    touched.push(w);
                }
                next[w] += share;
            }
        }
        touched.sort_unstable();
        touched.dedup();
        frontier = touched;
        probs = next;
        side = next_side;
    }
    Ok(WalkDistribution { side, probs })
}

/// Endpoint of one sampled walk.
pub fn sample_walk<R: Rng + ?Sized>(
    graph: &BipartiteGraph,
    start: Node,
    steps: usize,
    rng: &mut R,
) -> Result<Node, RecsysError> {
    check_node(graph, start)?;
    let mut node = start;
    for _ in 0..steps {
        let nbrs = neighbors(graph, node);
        if nbrs.is_empty() {
            return Err(RecsysError::DeadEnd(node));
        }
        let next = nbrs[rng.random_range(0..nbrs.len())];
        node = match node {
            Node::User(_) => Node::Item(next),
            Node::Item(_) => Node::User(next),
        };
    }
    Ok(node)
}

/// Mean two-step probability `P[j ->2 j']` over ordered pairs of distinct
/// owned items, split into same-color and cross-color pairs. Items without
/// owners are skipped.
pub fn mean_two_step_by_color(graph: &BipartiteGraph) -> Result<(f64, f64), RecsysError> {
    let n = graph.items_per_color();
    let owned: Vec<usize> = (0..graph.item_count()).filter(|&j| !graph.item_users(j).is_empty()).collect();
    let red_owned = owned.iter().filter(|&&j| j < n).count() as f64;
    let blue_owned = owned.len() as f64 - red_owned;
    let (mut same, mut cross) = (0.0, 0.0);
    for &j in &owned {
        let dist = walk_distribution(graph, Node::Item(j), 2)?;
        let (mut s, mut c) = (0.0, 0.0);
        for (jp, &p) in dist.probs.iter().enumerate() {
            if jp == j {
                continue;
            }
            if (jp < n) == (j < n) {
                s += p;
            } else {
                c += p;
            }
        }
        same += s;
        cross += c;
    }
    let same_pairs = red_owned * (red_owned - 1.0) + blue_owned * (blue_owned - 1.0);
    let cross_pairs = 2.0 * red_owned * blue_owned;
    Ok((same / same_pairs, cross / cross_pairs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recsys::{sample_bipartite_graph, GenerativeParams, OpinionDistribution};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny() -> BipartiteGraph {
        // user 0 owns item 0; user 1 owns items 1 and 2; user 2 owns items 1 and 3
        let mut g = BipartiteGraph::new(2);
        g.add_user(0.5, vec![0]).unwrap();
        g.add_user(0.5, vec![1, 2]).unwrap();
        g.add_user(0.5, vec![1, 3]).unwrap();
        g
    }

    #[test]
    fn single_item_user_reaches_it() {
        let d = walk_distribution(&tiny(), Node::User(0), 1).unwrap();
        assert_eq!(d.side, Side::Items);
        assert_eq!(d.probs, vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn two_steps_from_single_owner_item() {
        let d = walk_distribution(&tiny(), Node::Item(2), 2).unwrap();
        assert_eq!(d.probs, vec![0.0, 0.5, 0.5, 0.0]);
    }

    #[test]
    fn three_steps_by_hand() {
        // user 1 -> {1, 2}; item 1 -> {1, 2}, item 2 -> {1}; users back to items
        let d = walk_distribution(&tiny(), Node::User(1), 3).unwrap();
        assert_eq!(d.probs, vec![0.0, 0.5, 0.375, 0.125]);
    }

    #[test]
    fn zero_steps_is_identity() {
        let d = walk_distribution(&tiny(), Node::User(2), 0).unwrap();
        assert_eq!(d.side, Side::Users);
        assert_eq!(d.probs, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn dead_end_is_named() {
        let mut g = tiny();
        g.add_user(0.5, vec![]).unwrap();
        assert_eq!(walk_distribution(&g, Node::User(3), 3), Err(RecsysError::DeadEnd(Node::User(3))));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(sample_walk(&g, Node::User(3), 1, &mut rng), Err(RecsysError::DeadEnd(Node::User(3))));
        assert!(walk_distribution(&g, Node::Item(9), 1).is_err());
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax_lowest(&[0.1, 0.4, 0.4, 0.1]), 1);
        assert_eq!(argmax_lowest(&[3, 3, 3]), 0);
    }

    #[test]
    fn same_color_two_step_exceeds_cross_color() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let params = GenerativeParams::new(300, 600, 30.0, OpinionDistribution::Uniform).unwrap();
        let g = sample_bipartite_graph(&params, &mut rng).unwrap();
        let (same, cross) = mean_two_step_by_color(&g).unwrap();
        assert!(same > cross, "same {same} cross {cross}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn walks_are_normalized_and_respect_parity(seed in any::<u64>(), steps in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let params = GenerativeParams::new(40, 60, 6.0, OpinionDistribution::Uniform).unwrap();
            let g = sample_bipartite_graph(&params, &mut rng).unwrap();
            let user = (0..g.user_count()).find(|&u| !g.user_items(u).is_empty()).unwrap();
            let d = walk_distribution(&g, Node::User(user), steps).unwrap();
            prop_assert!((d.probs.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert_eq!(d.side, if steps % 2 == 1 { Side::Items } else { Side::Users });
            let item = g.user_items(user)[0];
            let d = walk_distribution(&g, Node::Item(item), 2).unwrap();
            prop_assert_eq!(d.side, Side::Items);
            prop_assert!((d.probs.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            match sample_walk(&g, Node::User(user), 3, &mut rng).unwrap() {
                Node::Item(_) => {}
                other => prop_assert!(false, "walk ended on {:?}", other),
            }
        }
    }
}
