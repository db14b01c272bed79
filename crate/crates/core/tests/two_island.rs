//! Full-graph simulations of two-island networks against the scalar
//! recurrence and the regime classifier.

use polarium_core::{
    build_two_island, classify_regime, island_update_map, ndi, run_until_convergence, solve_fixed_point, BiasProfile,
    ConvergenceSpec, OpinionState, Regime, TwoIsland, TwoIslandParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn network(p_same: f64, p_diff: f64, swaps: usize, seed: u64) -> TwoIsland {
    let params = TwoIslandParams::symmetric(50, p_same, p_diff).unwrap();
    build_two_island(&params, swaps, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

/// One network per regime: h = 2 for p_same = 0.4, p_diff = 0.2 and h = 4
/// for p_same = 0.4, p_diff = 0.1.
fn regime_points() -> Vec<(f64, TwoIsland)> {
    vec![
        (1.0, network(0.4, 0.2, 0, 0)),
        (1.5, network(0.4, 0.2, 0, 0)),
        (0.5, network(0.4, 0.1, 0, 0)),
        (0.1, network(0.4, 0.2, 0, 0)),
    ]
}

fn spec() -> ConvergenceSpec {
    ConvergenceSpec::default()
}

fn run(net: &TwoIsland, x0: f64, b: f64) -> Vec<OpinionState> {
    let biases = BiasProfile::uniform(net.graph.node_count(), b).unwrap();
    let traj = run_until_convergence(&net.graph, &net.mirrored_state(x0).unwrap(), &biases, &spec()).unwrap();
    assert!(traj.converged);
    traj.states
}

#[test]
fn simulated_limits_match_the_classifier() {
    for (b, net) in regime_points() {
        let h = net.params.homophily();
        let verdict = classify_regime(b, h).unwrap();
        for x0 in [0.55, 0.7, 0.9] {
            let states = run(&net, x0, b);
            let last = states.last().unwrap().opinions();
            for i in net.first() {
                assert!((last[i] - verdict.predicted_limit.0).abs() < 1e-6, "b={b} h={h} x0={x0}: {}", last[i]);
            }
            for i in net.second() {
                assert!((last[i] - verdict.predicted_limit.1).abs() < 1e-6, "b={b} h={h} x0={x0}: {}", last[i]);
            }
            if verdict.regime == Regime::PersistentDisagreement {
                let xh = solve_fixed_point(b, h).unwrap();
                assert!((last[0] - xh).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn regime_points_cover_all_three_regimes() {
    let regimes: Vec<Regime> =
        regime_points().iter().map(|(b, net)| classify_regime(*b, net.params.homophily()).unwrap().regime).collect();
    assert_eq!(
        regimes,
        vec![Regime::Polarization, Regime::Polarization, Regime::PersistentDisagreement, Regime::Consensus]
    );
}

/// Each full-graph step agrees with one application of the scalar map to
/// the graph's current state. Comparing whole trajectories instead would
/// measure the sensitivity to the start near the unstable point one half,
/// which amplifies rounding by orders of magnitude.
#[test]
fn scalar_map_tracks_the_full_graph() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let configs = [(0.4, 0.2), (0.4, 0.1), (0.6, 0.2), (0.3, 0.1), (0.5, 0.4)];
    for point in 0..20 {
        let (ps, pd) = configs[point % configs.len()];
        let net = network(ps, pd, 0, 0);
        let h = net.params.homophily();
        let b = rng.random::<f64>() * 3.0;
        let x0 = 0.5 + 0.49 * rng.random::<f64>();
        let states = run(&net, x0, b);
        for pair in states.windows(2) {
            let x = island_update_map(pair[0].opinions()[0], b, h).unwrap();
            let next = pair[1].opinions();
            for i in net.first() {
                assert!((next[i] - x).abs() <= 1e-12, "b={b} h={h} t={}", pair[1].time_step());
            }
            for i in net.second() {
                assert!((next[i] - (1.0 - x)).abs() <= 1e-12, "b={b} h={h} t={}", pair[1].time_step());
            }
        }
    }
}

#[test]
fn islands_stay_internally_equal_and_mirrored() {
    for (b, net) in regime_points() {
        for state in run(&net, 0.7, b) {
            let x = state.opinions();
            let first = x[0];
            let second = x[50];
            assert!(net.first().all(|i| x[i] == first));
            assert!(net.second().all(|i| x[i] == second));
            assert!((first - (1.0 - second)).abs() < 1e-12);
            assert!(first >= 0.5);
        }
    }
}

#[test]
fn disagreement_trajectories_are_monotone() {
    let net = network(0.4, 0.1, 0, 0);
    let (b, h) = (0.5, net.params.homophily());
    let xh = solve_fixed_point(b, h).unwrap();
    for (x0, rising) in [(0.55, true), (0.7, true), (0.95, false), (0.999, false)] {
        assert_eq!(x0 < xh, rising);
        let mut prev = x0;
        for state in &run(&net, x0, b)[1..] {
            let x = state.opinions()[0];
            if rising {
                assert!(x > prev, "x0={x0}: {prev} -> {x}");
            } else {
                assert!(x < prev, "x0={x0}: {prev} -> {x}");
            }
            prev = x;
        }
    }
}

#[test]
fn network_disagreement_verdicts() {
    // strong bias: the limit disagrees more than the start
    let net = network(0.4, 0.2, 0, 0);
    for b in [1.0, 1.5] {
        let states = run(&net, 0.6, b);
        let start = ndi(&net.graph, states[0].opinions()).unwrap();
        assert!(ndi(&net.graph, states.last().unwrap().opinions()).unwrap() > start);
    }
    // weak bias: consensus wipes out the disagreement
    let states = run(&net, 0.9, 0.1);
    let start = ndi(&net.graph, states[0].opinions()).unwrap();
    let end = ndi(&net.graph, states.last().unwrap().opinions()).unwrap();
    assert!(end < 1e-12 * start);
}

#[test]
fn limits_do_not_depend_on_the_wiring() {
    let b = 0.5;
    let reference = network(0.4, 0.1, 0, 0);
    let verdict = classify_regime(b, reference.params.homophily()).unwrap();
    for seed in 0..3 {
        let shuffled = network(0.4, 0.1, 5_000, seed);
        assert_ne!(shuffled.graph, reference.graph);
        let x0: Vec<f64> = (0..100).map(|i| if i < 50 { 0.7 } else { 0.3 }).collect();
        let traj = run_until_convergence(
            &shuffled.graph,
            &OpinionState::new(x0).unwrap(),
            &BiasProfile::uniform(100, b).unwrap(),
            &spec(),
        )
        .unwrap();
        let (m1, m2) = shuffled.island_means(traj.final_state());
        assert!((m1 - verdict.predicted_limit.0).abs() < 1e-6);
        assert!((m2 - verdict.predicted_limit.1).abs() < 1e-6);
    }
}

#[test]
fn mirror_symmetry_is_exact_far_past_convergence() {
    use polarium_core::biased_step;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let configs = [(0.4, 0.2), (0.4, 0.1), (0.6, 0.2), (0.3, 0.1), (0.5, 0.4)];
    for point in 0..20 {
        let (ps, pd) = configs[point % configs.len()];
        let net = network(ps, pd, 0, 0);
        let b = rng.random::<f64>() * 3.0;
        let x0 = rng.random::<f64>();
        let biases = BiasProfile::uniform(100, b).unwrap();
        let mut state = net.mirrored_state(x0).unwrap();
        for _ in 0..3_000 {
            state = biased_step(&net.graph, &state, &biases).unwrap().state;
            let x = state.opinions();
            assert!(net.second().all(|j| x[j] == 1.0 - x[0]), "b={b} x0={x0} t={}", state.time_step());
        }
        let verdict = classify_regime(b, net.params.homophily()).unwrap();
        let (lo, hi) = (verdict.predicted_limit.1, verdict.predicted_limit.0);
        let x = state.opinions()[0];
        // mirrored starts below one half converge to the mirrored limit
        let expected = if x0 >= 0.5 { hi } else { lo };
        if x0 != 0.5 {
            assert!((x - expected).abs() < 1e-9, "b={b} x0={x0}: {x} vs {expected}");
        }
    }
}
