//! Network graphs, source/destination cuts and the cut-set rate formulas.
//!
//! A cut is a node set `V_s` that contains the source and misses at least
//! one destination. Its boundary is the set of nodes in `V_s` with at least
//! one out-link leaving `V_s`. Under fixed-rate transmission node `i`
//! delivers `R_i (1 - prod_j eps_ij(R_i))` across the cut, the product
//! running over its out-neighbors outside `V_s`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::channel::{erasure_prob, rate_for_success, Link, NodeConfig, NodeId};
use crate::error::{Error, Result};
use crate::numerics::{maximize_1d, RealInterval, DEFAULT_REFINEMENTS};
use crate::ptp::{fixed_rate_optimum, RATE_SEARCH_FLOOR};

/// Largest graph accepted by [`enumerate_cuts`].
pub const MAX_CUT_NODES: usize = 24;
/// Smallest Monte Carlo sample count accepted by [`capacity_upper_bound`].
pub const MIN_BOUND_SAMPLES: usize = 10_000;
/// Coordinate-ascent sweep limit per temperature stage of [`cutset_rate_fixed`].
pub const MAX_SWEEPS: usize = 8;
/// Seed of the random restarts in [`cutset_rate_fixed`].
const RESTART_SEED: u64 = 0x6375_7473;

/// On-disk graph description (the JSON ingestion format).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub nodes: Vec<NodeConfig>,
    pub links: Vec<Link>,
    pub source: NodeId,
    pub destinations: Vec<NodeId>,
}

/// Validated directed acyclic network with one source and a destination set.
#[derive(Debug, Clone)]
pub struct NetworkGraph {
    nodes: Vec<NodeConfig>,
    links: Vec<Link>,
    source: usize,
    destinations: Vec<usize>,
    index: HashMap<NodeId, usize>,
    out_links: Vec<Vec<usize>>,
    in_links: Vec<Vec<usize>>,
    topo: Vec<usize>,
}

impl NetworkGraph {
    pub fn new(
        nodes: Vec<NodeConfig>,
        links: Vec<Link>,
        source: impl Into<NodeId>,
        destinations: Vec<NodeId>,
    ) -> Result<Self> {
        Self::from_spec(GraphSpec { nodes, links, source: source.into(), destinations })
    }

    /// Parse and validate the JSON ingestion format. Errors name the JSON
    /// path of the offending element.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let spec: GraphSpec = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::Parse(format!("{path}: {}", e.into_inner()))
        })?;
        Self::from_spec(spec)
    }

    pub fn from_spec(spec: GraphSpec) -> Result<Self> {
        let GraphSpec { nodes, links, source, destinations } = spec;
        let fail = |msg: String| Err(Error::Validation(msg));

        if nodes.is_empty() {
            return fail("nodes: graph has no nodes".into());
        }
        let mut index = HashMap::new();
        for (k, node) in nodes.iter().enumerate() {
            if node.id.as_str().is_empty() {
                return fail(format!("nodes[{k}].id: empty node id"));
            }
            if index.insert(node.id.clone(), k).is_some() {
                return fail(format!("nodes[{k}].id: duplicate node '{}'", node.id));
            }
            if !(node.power >= 0.0 && node.power.is_finite()) {
                return fail(format!("nodes[{k}].power: {} must be finite and >= 0", node.power));
            }
        }

        let mut out_links = vec![Vec::new(); nodes.len()];
        let mut in_links = vec![Vec::new(); nodes.len()];
        let mut seen = BTreeSet::new();
        for (k, link) in links.iter().enumerate() {
            let Some(&from) = index.get(&link.from) else {
                return fail(format!("links[{k}].from: unknown node '{}'", link.from));
            };
            let Some(&to) = index.get(&link.to) else {
                return fail(format!("links[{k}].to: unknown node '{}'", link.to));
            };
            if from == to {
                return fail(format!("links[{k}]: self-loop on node '{}'", link.from));
            }
            if !(link.sigma2 > 0.0 && link.sigma2 <= 1.0) {
                return fail(format!("links[{k}].sigma2: {} must lie in (0, 1]", link.sigma2));
            }
            if !seen.insert((from, to)) {
                return fail(format!("links[{k}]: duplicate link '{}' -> '{}'", link.from, link.to));
            }
            out_links[from].push(k);
            in_links[to].push(k);
        }

        let Some(&source_idx) = index.get(&source) else {
            return fail(format!("source: unknown node '{source}'"));
        };
        if destinations.is_empty() {
            return fail("destinations: at least one destination is required".into());
        }
        let mut dest_idx = Vec::with_capacity(destinations.len());
        for (k, d) in destinations.iter().enumerate() {
            let Some(&di) = index.get(d) else {
                return fail(format!("destinations[{k}]: unknown node '{d}'"));
            };
            if di == source_idx {
                return fail(format!("destinations[{k}]: node '{d}' is the source"));
            }
            if dest_idx.contains(&di) {
                return fail(format!("destinations[{k}]: duplicate destination '{d}'"));
            }
            dest_idx.push(di);
        }

        // Kahn's algorithm; ties resolved by node order for determinism.
        let mut indegree: Vec<usize> = in_links.iter().map(Vec::len).collect();
        let mut ready: BTreeSet<usize> = (0..nodes.len()).filter(|&i| indegree[i] == 0).collect();
        let mut topo = Vec::with_capacity(nodes.len());
        while let Some(i) = ready.pop_first() {
            topo.push(i);
            for &l in &out_links[i] {
                let j = index[&links[l].to];
                indegree[j] -= 1;
                if indegree[j] == 0 {
                    ready.insert(j);
                }
            }
        }
        if topo.len() != nodes.len() {
            let stuck = (0..nodes.len()).find(|&i| indegree[i] > 0).expect("cycle leaves a node");
            return fail(format!("links: graph contains a cycle through node '{}'", nodes[stuck].id));
        }

        let mut reach = vec![false; nodes.len()];
        reach[source_idx] = true;
        for &i in &topo {
            if reach[i] {
                for &l in &out_links[i] {
                    reach[index[&links[l].to]] = true;
                }
            }
        }
        for (k, &d) in dest_idx.iter().enumerate() {
            if !reach[d] {
                return fail(format!(
                    "destinations[{k}]: node '{}' is not reachable from source '{}'",
                    nodes[d].id, nodes[source_idx].id
                ));
            }
        }

        Ok(Self { nodes, links, source: source_idx, destinations: dest_idx, index, out_links, in_links, topo })
    }

    pub fn to_spec(&self) -> GraphSpec {
        GraphSpec {
            nodes: self.nodes.clone(),
            links: self.links.clone(),
            source: self.nodes[self.source].id.clone(),
            destinations: self.destinations.iter().map(|&d| self.nodes[d].id.clone()).collect(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[NodeConfig] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, l: usize) -> &Link {
        &self.links[l]
    }

    pub fn id(&self, i: usize) -> &NodeId {
        &self.nodes[i].id
    }

    pub fn index_of(&self, id: &NodeId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn power(&self, i: usize) -> f64 {
        self.nodes[i].power
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn destinations(&self) -> &[usize] {
        &self.destinations
    }

    /// Out-link indices of node `i`, in input order.
    pub fn out_links(&self, i: usize) -> &[usize] {
        &self.out_links[i]
    }

    pub fn in_links(&self, i: usize) -> &[usize] {
        &self.in_links[i]
    }

    pub fn link_source(&self, l: usize) -> usize {
        self.index[&self.links[l].from]
    }

    pub fn link_target(&self, l: usize) -> usize {
        self.index[&self.links[l].to]
    }

    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    /// Nodes with at least one out-link, in topological order.
    pub fn transmitters(&self) -> Vec<usize> {
        self.topo.iter().copied().filter(|&i| !self.out_links[i].is_empty()).collect()
    }

    /// Upper end of the rate search for node `i`: the rate at which even its
    /// best out-link succeeds with probability below `RATE_SEARCH_FLOOR`.
    pub fn rate_cap(&self, i: usize) -> f64 {
        let best = self.out_links[i].iter().map(|&l| self.links[l].sigma2).fold(0.0, f64::max);
        let p = self.power(i);
        if best == 0.0 || p == 0.0 {
            return 0.0;
        }
        rate_for_success(RATE_SEARCH_FLOOR, p, best)
    }

    /// Erasure probability of link `l` when its transmitter uses rate `rate`.
    pub fn link_erasure(&self, l: usize, rate: f64) -> f64 {
        let tx = self.link_source(l);
        let p = self.power(tx);
        if rate == 0.0 {
            return 0.0;
        }
        if p == 0.0 {
            return 1.0;
        }
        erasure_prob(rate, p, self.links[l].sigma2)
    }

    /// Copy of the graph with every node transmitting at `power`.
    pub fn with_uniform_power(&self, power: f64) -> Result<Self> {
        let mut spec = self.to_spec();
        for n in &mut spec.nodes {
            n.power = power;
        }
        Self::from_spec(spec)
    }
}

/// A source-side node set together with its boundary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cut {
    mask: u32,
    boundary: Vec<usize>,
    // out-links of each boundary node that leave the source side
    crossing: Vec<Vec<usize>>,
}

impl Cut {
    /// Build the cut for `source_side` (node indices), checking the cut
    /// invariants.
    pub fn new(graph: &NetworkGraph, source_side: &[usize]) -> Result<Self> {
        if graph.node_count() > 32 {
            return Err(Error::TooManyNodes { nodes: graph.node_count(), limit: 32 });
        }
        let mut mask = 0u32;
        for &i in source_side {
            if i >= graph.node_count() {
                return Err(Error::InvalidArgument(format!("node index {i} out of range")));
            }
            mask |= 1 << i;
        }
        if mask & (1 << graph.source()) == 0 {
            return Err(Error::InvalidArgument("cut must contain the source".into()));
        }
        if graph.destinations().iter().all(|&d| mask & (1 << d) != 0) {
            return Err(Error::InvalidArgument("cut must exclude at least one destination".into()));
        }
        Ok(Self::from_mask(graph, mask))
    }

    fn from_mask(graph: &NetworkGraph, mask: u32) -> Self {
        let mut boundary = Vec::new();
        let mut crossing = Vec::new();
        for i in 0..graph.node_count() {
            if mask & (1 << i) == 0 {
                continue;
            }
            let out: Vec<usize> =
                graph.out_links(i).iter().copied().filter(|&l| mask & (1 << graph.link_target(l)) == 0).collect();
            if !out.is_empty() {
                boundary.push(i);
                crossing.push(out);
            }
        }
        Self { mask, boundary, crossing }
    }

    pub fn contains(&self, i: usize) -> bool {
        self.mask & (1 << i) != 0
    }

    /// Node indices on the source side.
    pub fn source_side(&self) -> Vec<usize> {
        (0..32).filter(|&i| self.contains(i)).collect()
    }

    /// Boundary node indices.
    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    /// Out-links of boundary node `k` (position in [`Cut::boundary`]) that
    /// cross the cut.
    pub fn crossing_links(&self, k: usize) -> &[usize] {
        &self.crossing[k]
    }

    pub fn source_side_ids(&self, graph: &NetworkGraph) -> Vec<NodeId> {
        (0..graph.node_count()).filter(|&i| self.contains(i)).map(|i| graph.id(i).clone()).collect()
    }

    pub fn boundary_ids(&self, graph: &NetworkGraph) -> Vec<NodeId> {
        self.boundary.iter().map(|&i| graph.id(i).clone()).collect()
    }

    /// Human-readable label such as `{s,r1}`.
    pub fn label(&self, graph: &NetworkGraph) -> String {
        let ids: Vec<&str> =
            (0..graph.node_count()).filter(|&i| self.contains(i)).map(|i| graph.id(i).as_str()).collect();
        format!("{{{}}}", ids.join(","))
    }
}

/// Per-node physical-layer rates, indexed like the graph's nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct RateAssignment {
    rates: Vec<f64>,
}

impl RateAssignment {
    pub fn new(graph: &NetworkGraph, rates: Vec<f64>) -> Result<Self> {
        if rates.len() != graph.node_count() {
            return Err(Error::InvalidArgument(format!("{} rates for {} nodes", rates.len(), graph.node_count())));
        }
        if let Some(r) = rates.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
            return Err(Error::InvalidArgument(format!("rate {r} must be finite and >= 0")));
        }
        Ok(Self { rates })
    }

    pub fn zeros(graph: &NetworkGraph) -> Self {
        Self { rates: vec![0.0; graph.node_count()] }
    }

    pub fn rate(&self, i: usize) -> f64 {
        self.rates[i]
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn to_map(&self, graph: &NetworkGraph) -> BTreeMap<NodeId, f64> {
        graph.transmitters().into_iter().map(|i| (graph.id(i).clone(), self.rates[i])).collect()
    }
}

/// All cuts separating the source from at least one destination, ordered by
/// the bitmask of their non-source members.
pub fn enumerate_cuts(graph: &NetworkGraph) -> Result<Vec<Cut>> {
    let n = graph.node_count();
    if n > MAX_CUT_NODES {
        return Err(Error::TooManyNodes { nodes: n, limit: MAX_CUT_NODES });
    }
    let others: Vec<usize> = (0..n).filter(|&i| i != graph.source()).collect();
    let dest_mask: u32 = graph.destinations().iter().map(|&d| 1u32 << d).fold(0, |a, b| a | b);
    let mut cuts = Vec::new();
    for sub in 0u32..(1u32 << others.len()) {
        let mut mask = 1u32 << graph.source();
        for (b, &i) in others.iter().enumerate() {
            if sub & (1 << b) != 0 {
                mask |= 1 << i;
            }
        }
        if mask & dest_mask == dest_mask {
            continue;
        }
        cuts.push(Cut::from_mask(graph, mask));
    }
    Ok(cuts)
}

/// Rate node `i` pushes across a cut through `crossing` out-links:
/// `R (1 - prod eps)`.
pub fn boundary_term(graph: &NetworkGraph, crossing: &[usize], rate: f64) -> f64 {
    if rate == 0.0 {
        return 0.0;
    }
    let miss: f64 = crossing.iter().map(|&l| graph.link_erasure(l, rate)).product();
    rate * (1.0 - miss)
}

/// Value of `cut` under a fixed-rate assignment.
pub fn cut_value(cut: &Cut, assignment: &RateAssignment, graph: &NetworkGraph) -> Result<f64> {
    if assignment.rates().len() != graph.node_count() {
        return Err(Error::InvalidArgument("assignment does not match graph".into()));
    }
    if cut.boundary.is_empty() {
        return Err(Error::InvalidArgument("cut has an empty boundary".into()));
    }
    Ok(cut
        .boundary
        .iter()
        .zip(&cut.crossing)
        .map(|(&i, crossing)| boundary_term(graph, crossing, assignment.rate(i)))
        .sum())
}

/// Minimum cut value and the index of a minimizing cut.
pub fn min_cut(cuts: &[Cut], assignment: &RateAssignment, graph: &NetworkGraph) -> Result<(f64, usize)> {
    let mut best = (f64::INFINITY, 0);
    for (k, cut) in cuts.iter().enumerate() {
        let v = cut_value(cut, assignment, graph)?;
        if v < best.0 {
            best = (v, k);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone)]
pub struct CutsetSolution {
    /// Best max-min cut value found.
    pub rate: f64,
    pub assignment: RateAssignment,
    pub cuts: Vec<Cut>,
    /// Value of every cut at `assignment`, aligned with `cuts`.
    pub cut_values: Vec<f64>,
}

/// Smooth lower approximation of the minimum, `-tau ln sum exp(-v / tau)`;
/// the plain minimum when `tau == 0`.
fn soft_min(values: impl Iterator<Item = f64> + Clone, tau: f64) -> f64 {
    let m = values.clone().fold(f64::INFINITY, f64::min);
    if tau == 0.0 || !m.is_finite() {
        return m;
    }
    m - tau * values.map(|v| (-(v - m) / tau).exp()).sum::<f64>().ln()
}

/// Relative temperatures of the soft-min continuation; the final stage is
/// the exact minimum.
const SOFT_MIN_STAGES: [f64; 5] = [0.1, 0.03, 0.01, 0.003, 0.0];

fn coordinate_ascent(graph: &NetworkGraph, cuts: &[Cut], start: Vec<f64>, grid: usize) -> Result<(f64, Vec<f64>)> {
    let mut rates = start;
    let transmitters = graph.transmitters();
    let cut_values = |rates: &[f64]| -> Vec<f64> {
        cuts.iter()
            .map(|c| c.boundary.iter().zip(&c.crossing).map(|(&i, cr)| boundary_term(graph, cr, rates[i])).sum::<f64>())
            .collect()
    };
    let scale = cut_values(&rates).into_iter().fold(f64::INFINITY, f64::min).max(1e-3);
    for rel in SOFT_MIN_STAGES {
        let tau = rel * scale;
        let mut current = soft_min(cut_values(&rates).into_iter(), tau);
        for _ in 0..MAX_SWEEPS {
            let before = current;
            for &i in &transmitters {
                let cap = graph.rate_cap(i);
                if cap == 0.0 {
                    continue;
                }
                // every cut value is base + (term of node i through one of
                // its distinct crossing sets, if on the boundary)
                let mut sets: Vec<&[usize]> = Vec::new();
                let mut parts: Vec<(f64, Option<usize>)> = Vec::with_capacity(cuts.len());
                for c in cuts {
                    let mut base = 0.0;
                    let mut own = None;
                    for (&j, cr) in c.boundary.iter().zip(&c.crossing) {
                        if j == i {
                            let k = sets.iter().position(|s| *s == cr.as_slice()).unwrap_or_else(|| {
                                sets.push(cr);
                                sets.len() - 1
                            });
                            own = Some(k);
                        } else {
                            base += boundary_term(graph, cr, rates[j]);
                        }
                    }
                    parts.push((base, own));
                }
                let objective = |r: f64| {
                    let terms: Vec<f64> = sets.iter().map(|cr| boundary_term(graph, cr, r)).collect();
                    soft_min(parts.iter().map(|&(base, own)| base + own.map_or(0.0, |k| terms[k])), tau)
                };
                let (r, v) = maximize_1d(objective, RealInterval::new(0.0, cap)?, grid, DEFAULT_REFINEMENTS)?;
                if v > current {
                    rates[i] = r;
                    current = v;
                }
            }
            if current - before <= 1e-12 * current.abs().max(1.0) {
                break;
            }
        }
    }
    let value = cut_values(&rates).into_iter().fold(f64::INFINITY, f64::min);
    Ok((value, rates))
}

/// Max over per-node fixed rates of the minimum cut value.
///
/// Coordinate ascent in topological order from the per-node fixed-rate
/// optimum (using each node's strongest out-link) and from `restarts`
/// uniformly random starting points; `grid` is the coarse sample count of
/// each line search. The ascent first runs on a soft minimum of the cut
/// values with decreasing temperature, so that it can leave points where
/// two cuts controlled by different nodes tie, and ends on the exact
/// minimum. The result is a lower bound on the cut-set optimum
/// with time sharing.
pub fn cutset_rate_fixed(graph: &NetworkGraph, grid: usize, restarts: usize) -> Result<CutsetSolution> {
    let cuts = enumerate_cuts(graph)?;
    let n = graph.node_count();

    let mut warm = vec![0.0; n];
    for i in graph.transmitters() {
        let p = graph.power(i);
        let best = graph.out_links(i).iter().map(|&l| graph.link(l).sigma2).fold(0.0, f64::max);
        if p > 0.0 {
            warm[i] = fixed_rate_optimum(p, best)?.rate;
        }
    }
    let mut starts = vec![warm];
    let mut rng = ChaCha8Rng::seed_from_u64(RESTART_SEED);
    for _ in 0..restarts {
        let mut s = vec![0.0; n];
        for i in graph.transmitters() {
            s[i] = rng.random::<f64>() * graph.rate_cap(i);
        }
        starts.push(s);
    }

    let mut best: Option<(f64, Vec<f64>)> = None;
    for start in starts {
        let (v, rates) = coordinate_ascent(graph, &cuts, start, grid)?;
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            best = Some((v, rates));
        }
    }
    let (rate, rates) = best.expect("at least the warm start");
    let assignment = RateAssignment::new(graph, rates)?;
    let cut_values = cuts.iter().map(|c| cut_value(c, &assignment, graph)).collect::<Result<Vec<_>>>()?;
    Ok(CutsetSolution { rate, assignment, cuts, cut_values })
}

#[derive(Debug, Clone)]
pub struct CutEstimate {
    pub cut: Cut,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone)]
pub struct UpperBound {
    /// Minimum over cuts of the estimated cut capacity.
    pub rate: f64,
    /// Standard error of the minimizing cut's estimate.
    pub stderr: f64,
    /// Index into `per_cut` of the minimizing cut.
    pub argmin: usize,
    pub per_cut: Vec<CutEstimate>,
}

/// Monte Carlo estimate of the cut-set upper bound on capacity: for each
/// cut, `sum_i E[0.5 log2(1 + P_i sum_j h_ij)]` over boundary nodes `i` and
/// their crossing links `j`.
///
/// All cuts share the same fading draws (one exponential per link per
/// sample, drawn in link order from a ChaCha8 stream seeded by `seed`).
pub fn capacity_upper_bound(graph: &NetworkGraph, mc_samples: usize, seed: u64) -> Result<UpperBound> {
    if mc_samples < MIN_BOUND_SAMPLES {
        return Err(Error::InvalidArgument(format!("mc_samples = {mc_samples}, need at least {MIN_BOUND_SAMPLES}")));
    }
    let cuts = enumerate_cuts(graph)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = vec![0.0; graph.links().len()];
    let mut mean = vec![0.0; cuts.len()];
    let mut m2 = vec![0.0; cuts.len()];
    for t in 0..mc_samples {
        for (l, slot) in h.iter_mut().enumerate() {
            let e: f64 = Exp1.sample(&mut rng);
            *slot = graph.link(l).sigma2 * e;
        }
        for (c, cut) in cuts.iter().enumerate() {
            let v: f64 = cut
                .boundary
                .iter()
                .zip(&cut.crossing)
                .map(|(&i, cr)| {
                    let gain: f64 = cr.iter().map(|&l| h[l]).sum();
                    0.5 * (graph.power(i) * gain).ln_1p() / std::f64::consts::LN_2
                })
                .sum();
            // Welford update
            let delta = v - mean[c];
            mean[c] += delta / (t + 1) as f64;
            m2[c] += delta * (v - mean[c]);
        }
    }
    let n = mc_samples as f64;
    let per_cut: Vec<CutEstimate> = cuts
        .into_iter()
        .enumerate()
        .map(|(c, cut)| CutEstimate { cut, mean: mean[c], stderr: (m2[c] / (n - 1.0) / n).sqrt() })
        .collect();
    let argmin = per_cut
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.mean.total_cmp(&b.1.mean))
        .map(|(k, _)| k)
        .expect("at least one cut");
    Ok(UpperBound { rate: per_cut[argmin].mean, stderr: per_cut[argmin].stderr, argmin, per_cut })
}

/// Largest ratio between the mean gains of two out-links of the same node
/// (1 when no node has two out-links).
pub fn gain_spread(graph: &NetworkGraph) -> f64 {
    (0..graph.node_count())
        .filter(|&i| graph.out_links(i).len() > 1)
        .map(|i| {
            let s: Vec<f64> = graph.out_links(i).iter().map(|&l| graph.link(l).sigma2).collect();
            let hi = s.iter().copied().fold(f64::MIN, f64::max);
            let lo = s.iter().copied().fold(f64::MAX, f64::min);
            hi / lo
        })
        .fold(1.0, f64::max)
}

/// Constant part of the high-SNR gap between the ergodic capacity and the
/// fixed-rate achievable rate:
/// `0.5 |D| |V| log2(|V| spread) + 0.7588 |D| |V|` bits.
///
/// The additional `o(|D| sum_i ln ln P_i)` term is not included.
pub fn gap_constant(graph: &NetworkGraph) -> f64 {
    let v = graph.node_count() as f64;
    let d = graph.destinations().len() as f64;
    0.5 * d * v * (v * gain_spread(graph)).log2() + 0.7588 * d * v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ptp::fixed_rate_throughput;

    pub(crate) fn diamond(power: f64) -> NetworkGraph {
        let nodes = ["s", "r1", "r2", "d"].iter().map(|id| NodeConfig::new(*id, power).unwrap()).collect();
        let links = [("s", "r1"), ("s", "r2"), ("r1", "d"), ("r2", "d")]
            .iter()
            .map(|(a, b)| Link::new(*a, *b, 1.0).unwrap())
            .collect();
        NetworkGraph::new(nodes, links, "s", vec!["d".into()]).unwrap()
    }

    fn chain(ids: &[&str], power: f64) -> NetworkGraph {
        let nodes = ids.iter().map(|id| NodeConfig::new(*id, power).unwrap()).collect();
        let links = ids.windows(2).map(|w| Link::new(w[0], w[1], 1.0).unwrap()).collect();
        NetworkGraph::new(nodes, links, ids[0], vec![(*ids.last().unwrap()).into()]).unwrap()
    }

    #[test]
    fn cut_counts() {
        let g = chain(&["s", "d"], 1.0);
        let cuts = enumerate_cuts(&g).unwrap();
        assert_eq!(cuts.len(), 1);
        assert_eq!(cuts[0].source_side(), vec![0]);
        assert_eq!(cuts[0].boundary(), &[0]);

        let g = chain(&["s", "a", "d"], 1.0);
        assert_eq!(enumerate_cuts(&g).unwrap().len(), 2);

        let g = diamond(1.0);
        let labels: Vec<String> = enumerate_cuts(&g).unwrap().iter().map(|c| c.label(&g)).collect();
        assert_eq!(labels, vec!["{s}", "{s,r1}", "{s,r2}", "{s,r1,r2}"]);
    }

    #[test]
    fn cut_value_examples() {
        let g = chain(&["s", "d"], 3.0);
        let cut = &enumerate_cuts(&g).unwrap()[0];
        let a = RateAssignment::new(&g, vec![0.7, 0.0]).unwrap();
        assert!((cut_value(cut, &a, &g).unwrap() - fixed_rate_throughput(0.7, 3.0, 1.0)).abs() < 1e-15);

        let g = diamond(1.0);
        let cut = &enumerate_cuts(&g).unwrap()[0];
        let a = RateAssignment::new(&g, vec![0.5, 0.0, 0.0, 0.0]).unwrap();
        let eps = 1.0 - (-1.0f64).exp();
        let expect = 0.5 * (1.0 - eps * eps);
        assert!((cut_value(cut, &a, &g).unwrap() - expect).abs() < 1e-15);
        assert!((expect - 0.300).abs() < 1e-3);
    }

    #[test]
    fn cut_value_matches_monte_carlo_on_diamond() {
        let g = diamond(1.0);
        let cut = &enumerate_cuts(&g).unwrap()[0];
        let a = RateAssignment::new(&g, vec![0.5, 0.0, 0.0, 0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 400_000;
        let mut hits = 0usize;
        for _ in 0..n {
            let h1: f64 = Exp1.sample(&mut rng);
            let h2: f64 = Exp1.sample(&mut rng);
            if 0.5 * (1.0 + h1).log2() >= 0.5 || 0.5 * (1.0 + h2).log2() >= 0.5 {
                hits += 1;
            }
        }
        let p = hits as f64 / n as f64;
        let se = 0.5 * (p * (1.0 - p) / n as f64).sqrt();
        assert!((0.5 * p - cut_value(cut, &a, &g).unwrap()).abs() < 4.0 * se);
    }

    #[test]
    fn cut_construction_checks() {
        let g = diamond(1.0);
        assert!(Cut::new(&g, &[1, 2]).is_err());
        assert!(Cut::new(&g, &[0, 1, 2, 3]).is_err());
        let c = Cut::new(&g, &[0, 1]).unwrap();
        assert_eq!(c.boundary_ids(&g), vec![NodeId::from("s"), NodeId::from("r1")]);
    }

    #[test]
    fn cutset_single_link_matches_fixed_optimum() {
        let g = chain(&["s", "d"], 10.0);
        let sol = cutset_rate_fixed(&g, 256, 2).unwrap();
        let opt = fixed_rate_optimum(10.0, 1.0).unwrap();
        assert!((sol.rate - opt.throughput).abs() < 1e-10);
        assert!((sol.assignment.rate(0) - opt.rate).abs() < 1e-5);
    }

    // Oracle: dense grid over (R_s, R_r) with both relays at the same rate.
    #[test]
    fn cutset_diamond_against_grid() {
        let g = diamond(10.0);
        let sol = cutset_rate_fixed(&g, 256, 2).unwrap();
        let cuts = enumerate_cuts(&g).unwrap();
        let cap = g.rate_cap(0);
        let n = 600;
        let mut best = 0.0f64;
        for a in 0..=n {
            for b in 0..=n {
                let rs = cap * a as f64 / n as f64;
                let rr = cap * b as f64 / n as f64;
                let asg = RateAssignment::new(&g, vec![rs, rr, rr, 0.0]).unwrap();
                best = best.max(min_cut(&cuts, &asg, &g).unwrap().0);
            }
        }
        assert!(sol.rate >= best * 0.999, "{} vs grid {best}", sol.rate);
        assert!((sol.rate - best).abs() <= 0.01 * best);
        let min = sol.cut_values.iter().copied().fold(f64::INFINITY, f64::min);
        assert!((min - sol.rate).abs() < 1e-12);
    }

    #[test]
    fn upper_bound_single_link_matches_csir() {
        let g = chain(&["s", "d"], 10.0);
        let ub = capacity_upper_bound(&g, 200_000, 9).unwrap();
        let c = crate::channel::ergodic_capacity_csir(10.0, 1.0, 1e-10).unwrap();
        assert!((ub.rate - c).abs() < 3.0 * ub.stderr, "{} vs {c} +- {}", ub.rate, ub.stderr);
    }

    // Oracle: E[0.5 log2(1 + P (h1 + h2))] with h1 + h2 ~ Gamma(2, 1), by quadrature.
    #[test]
    fn upper_bound_diamond_against_erlang_quadrature() {
        use crate::numerics::integrate;
        let p = 10.0;
        let g = diamond(p);
        let ub = capacity_upper_bound(&g, 200_000, 17).unwrap();
        let two = integrate(
            |x| 0.5 * (p * x).ln_1p() / std::f64::consts::LN_2 * x * (-x).exp(),
            RealInterval::decaying(0.0, 1.0).unwrap(),
            1e-12,
        )
        .unwrap();
        let one = crate::channel::ergodic_capacity_csir(p, 1.0, 1e-12).unwrap();
        // {s}: one node with two crossing links; others: two single-link terms
        let expect = [two, 2.0 * one, 2.0 * one, 2.0 * one];
        for (est, e) in ub.per_cut.iter().zip(expect) {
            assert!((est.mean - e).abs() < 4.0 * est.stderr, "{} vs {e}", est.mean);
        }
        assert!((ub.rate - two).abs() < 4.0 * ub.stderr);
    }

    #[test]
    fn upper_bound_monotone_in_power() {
        let lo = capacity_upper_bound(&diamond(5.0), 20_000, 4).unwrap();
        let hi = capacity_upper_bound(&diamond(6.0), 20_000, 4).unwrap();
        assert!(hi.rate >= lo.rate);
        for (a, b) in lo.per_cut.iter().zip(&hi.per_cut) {
            assert!(b.mean >= a.mean);
        }
        assert!(capacity_upper_bound(&diamond(5.0), 100, 4).is_err());
    }

    #[test]
    fn gap_constant_examples() {
        let g = diamond(1.0);
        assert!((gap_constant(&g) - 7.0352).abs() < 1e-12);

        let nodes = ["s", "r1", "r2", "d"].iter().map(|id| NodeConfig::new(*id, 1.0).unwrap()).collect();
        let links = vec![
            Link::new("s", "r1", 1.0).unwrap(),
            Link::new("s", "r2", 0.25).unwrap(),
            Link::new("r1", "d", 1.0).unwrap(),
            Link::new("r2", "d", 1.0).unwrap(),
        ];
        let skewed = NetworkGraph::new(nodes, links, "s", vec!["d".into()]).unwrap();
        assert_eq!(gain_spread(&skewed), 4.0);
        let extra = gap_constant(&skewed) - gap_constant(&g);
        assert!((extra - 0.5 * 1.0 * 4.0 * 2.0).abs() < 1e-12);
    }

    #[test]
    fn too_many_nodes_for_enumeration() {
        let ids: Vec<String> = (0..30).map(|k| format!("n{k}")).collect();
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let g = chain(&refs, 1.0);
        assert!(matches!(enumerate_cuts(&g), Err(Error::TooManyNodes { nodes: 30, .. })));
    }

    #[test]
    fn validation_messages_name_the_element() {
        let err = |json: &str| NetworkGraph::from_json_str(json).unwrap_err().to_string();
        let base = |links: &str, dests: &str| {
            format!(
                r#"{{"nodes":[{{"id":"s","power":1}},{{"id":"a","power":1}},{{"id":"d","power":1}}],
                   "links":[{links}],"source":"s","destinations":[{dests}]}}"#
            )
        };
        assert!(err(&base(r#"{"from":"s","to":"x","sigma2":1}"#, r#""d""#)).contains("links[0].to"));
        assert!(err(&base(r#"{"from":"s","to":"a","sigma2":1}"#, r#""d""#)).contains("'d' is not reachable"));
        assert!(err(&base(
            r#"{"from":"s","to":"a","sigma2":1},{"from":"a","to":"d","sigma2":1},{"from":"d","to":"a","sigma2":1}"#,
            r#""d""#
        ))
        .contains("cycle"));
        assert!(err(&base(r#"{"from":"s","to":"d","sigma2":0}"#, r#""d""#)).contains("links[0].sigma2"));
        assert!(err(&base(r#"{"from":"s","to":"d","sigma2":1}"#, r#""s""#)).contains("is the source"));
        assert!(err(r#"{"nodes":[{"id":"s","power":"x"}],"links":[],"source":"s","destinations":[]}"#)
            .contains("nodes[0].power"));
        assert!(err("{not json").contains("parse"));
    }
}
