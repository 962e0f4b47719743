#![allow(dead_code)]

use fadenet::channel::{Link, NodeConfig};
use fadenet::netmodel::{GraphSpec, NetworkGraph};
use proptest::prelude::*;

pub fn graph(nodes: &[(&str, f64)], links: &[(&str, &str, f64)], dests: &[&str]) -> NetworkGraph {
    NetworkGraph::new(
        nodes.iter().map(|(id, p)| NodeConfig::new(*id, *p).unwrap()).collect(),
        links.iter().map(|(a, b, s)| Link::new(*a, *b, *s).unwrap()).collect(),
        nodes[0].0,
        dests.iter().map(|d| (*d).into()).collect(),
    )
    .unwrap()
}

pub fn diamond(p: f64) -> NetworkGraph {
    graph(
        &[("s", p), ("r1", p), ("r2", p), ("d", p)],
        &[("s", "r1", 1.0), ("s", "r2", 1.0), ("r1", "d", 1.0), ("r2", "d", 1.0)],
        &["d"],
    )
}

fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

/// DAG on nodes n0..n{k-1} (edges only from lower to higher index), source
/// n0, destination n{k-1}; a direct source-destination link is added when
/// the destination would otherwise be unreachable.
pub fn build_spec(n: usize, present: &[bool], sigma2: &[f64], power: &[f64]) -> GraphSpec {
    let ids: Vec<String> = (0..n).map(|k| format!("n{k}")).collect();
    let mut links = Vec::new();
    for (k, &(i, j)) in pairs(n).iter().enumerate() {
        if present[k] {
            links.push(Link::new(ids[i].as_str(), ids[j].as_str(), sigma2[k]).unwrap());
        }
    }
    let mut reach = vec![false; n];
    reach[0] = true;
    for (k, &(i, j)) in pairs(n).iter().enumerate() {
        if present[k] && reach[i] {
            reach[j] = true;
        }
    }
    if !reach[n - 1] {
        links.push(Link::new(ids[0].as_str(), ids[n - 1].as_str(), sigma2[0]).unwrap());
    }
    GraphSpec {
        nodes: ids.iter().zip(power).map(|(id, &p)| NodeConfig::new(id.as_str(), p).unwrap()).collect(),
        links,
        source: ids[0].as_str().into(),
        destinations: vec![ids[n - 1].as_str().into()],
    }
}

pub fn dag_spec(min_nodes: usize, max_nodes: usize) -> impl Strategy<Value = GraphSpec> {
    (min_nodes..=max_nodes).prop_flat_map(|n| {
        let m = n * (n - 1) / 2;
        (
            Just(n),
            prop::collection::vec(prop::bool::weighted(0.6), m),
            prop::collection::vec(0.1f64..=1.0, m),
            prop::collection::vec(0.5f64..100.0, n),
        )
            .prop_map(|(n, present, sigma2, power)| build_spec(n, &present, &sigma2, &power))
    })
}

pub fn dag(min_nodes: usize, max_nodes: usize) -> impl Strategy<Value = NetworkGraph> {
    dag_spec(min_nodes, max_nodes).prop_map(|s| NetworkGraph::from_spec(s).unwrap())
}
