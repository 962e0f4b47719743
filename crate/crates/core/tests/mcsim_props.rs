mod common;

use common::{diamond, graph};
use fadenet::channel::success_prob;
use fadenet::flowopt::{assign_flows, solve, SolverOptions};
use fadenet::mcsim::{simulate_network_unicast, simulate_ptp_fixed, SimConfig};
use fadenet::netmodel::{cutset_rate_fixed, NetworkGraph, RateAssignment};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

fn in_order(g: &NetworkGraph) -> Vec<Vec<usize>> {
    (0..g.node_count()).map(|i| g.out_links(i).to_vec()).collect()
}

#[test]
fn diamond_deliveries_match_success_probabilities() {
    let g = diamond(10.0);
    let sol = cutset_rate_fixed(&g, 128, 1).unwrap();
    let cfg = SimConfig::new(1_000_000, 42).unwrap();
    let r = simulate_network_unicast(&g, &sol.assignment, &in_order(&g), &cfg).unwrap();
    for l in 0..g.links().len() {
        let i = g.link_source(l);
        let p = success_prob(sol.assignment.rate(i), g.power(i), g.link(l).sigma2);
        assert!((r.per_link_delivery[l] - p).abs() < 4.0 * r.fraction_stderr(p), "link {l}");
    }
}

#[test]
fn retention_splits_match_priority_flows() {
    let g = graph(
        &[("s", 10.0), ("a", 10.0), ("b", 10.0), ("c", 10.0), ("d", 10.0)],
        &[("s", "a", 0.4), ("s", "b", 1.0), ("s", "c", 0.7), ("a", "d", 1.0), ("b", "d", 1.0), ("c", "d", 1.0)],
        &["d"],
    );
    let rates = RateAssignment::new(&g, vec![1.3, 1.0, 1.0, 1.0, 0.0]).unwrap();
    let order = vec![vec![1, 2, 0], vec![3], vec![4], vec![5], vec![]];
    let r = simulate_network_unicast(&g, &rates, &order, &SimConfig::new(500_000, 8).unwrap()).unwrap();
    let x = assign_flows(&g, 1.3, &order[0]);
    for (k, &l) in order[0].iter().enumerate() {
        let share = x[k] / 1.3;
        assert!((r.per_link_retention[l] - share).abs() < 4.0 * r.fraction_stderr(share), "link {l}");
    }
}

// Replays the documented stream layout (link l on stream l + 1) to count
// slots in which at least one of the source's receivers decoded.
#[test]
fn retention_counts_each_slot_once() {
    let g = diamond(3.0);
    let rates = RateAssignment::new(&g, vec![1.1, 0.9, 0.9, 0.0]).unwrap();
    let cfg = SimConfig::new(50_000, 77).unwrap();
    let r = simulate_network_unicast(&g, &rates, &in_order(&g), &cfg).unwrap();
    let th = fadenet::channel::decode_threshold(1.1, 3.0);
    let mut streams: Vec<ChaCha8Rng> = (0..2)
        .map(|l| {
            let mut s = ChaCha8Rng::seed_from_u64(77);
            s.set_stream(l as u64 + 1);
            s
        })
        .collect();
    let mut any = 0usize;
    for _ in 0..cfg.packets {
        let h: Vec<f64> = streams.iter_mut().map(|s| Exp1.sample(s)).collect();
        if h.iter().any(|&h| h >= th) {
            any += 1;
        }
    }
    let expect = any as f64 / cfg.packets as f64;
    assert!((r.per_link_retention[0] + r.per_link_retention[1] - expect).abs() < 1e-12);
}

#[test]
fn identical_seeds_give_identical_reports() {
    let g = diamond(10.0);
    let rates = RateAssignment::new(&g, vec![1.4, 1.2, 1.2, 0.0]).unwrap();
    let cfg = SimConfig::new(20_000, 3).unwrap();
    let a = simulate_network_unicast(&g, &rates, &in_order(&g), &cfg).unwrap();
    let b = simulate_network_unicast(&g, &rates, &in_order(&g), &cfg).unwrap();
    assert_eq!(a, b);
    let c = simulate_ptp_fixed(1.0, 10.0, 1.0, &cfg).unwrap();
    assert_eq!(c, simulate_ptp_fixed(1.0, 10.0, 1.0, &cfg).unwrap());
}

#[test]
fn flow_solution_is_reproduced_by_simulation() {
    let g = diamond(10.0);
    let sol = solve(&g, &SolverOptions::for_graph(&g)).unwrap();
    let rates = RateAssignment::new(&g, sol.node_rates.clone()).unwrap();
    let order: Vec<Vec<usize>> =
        sol.priorities.iter().map(|p| p.first().map(|p| p.order.clone()).unwrap_or_default()).collect();
    let r = simulate_network_unicast(&g, &rates, &order, &SimConfig::new(100_000, 12).unwrap()).unwrap();
    let c = sol.multicast_rate;
    assert!((r.empirical_rate - c).abs() < 0.05 * c, "{} vs {c}", r.empirical_rate);
}
