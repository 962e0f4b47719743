//! Seeded Monte Carlo simulation of outage, layered decoding and
//! priority-retention forwarding.
//!
//! Fading draws come from ChaCha8 streams keyed by one master seed:
//! point-to-point runs use stream 0 and network link `l` uses stream
//! `l + 1`, one exponential per slot. A link's samples therefore do not
//! depend on how many other links exist or in which order they are visited.

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::channel::{decode_threshold, Link, NodeConfig};
use crate::error::{invalid, Result};
use crate::netmodel::{NetworkGraph, RateAssignment};
use crate::ptp::LayeredScheme;

/// Smallest slot count accepted by [`SimConfig`].
pub const MIN_PACKETS: usize = 1000;
/// Number of contiguous slot batches used for the network stderr.
pub const NETWORK_BATCHES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    pub packets: usize,
    pub seed: u64,
    pub report_stderr: bool,
}

impl SimConfig {
    pub fn new(packets: usize, seed: u64) -> Result<Self> {
        let cfg = Self { packets, seed, report_stderr: true };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.packets < MIN_PACKETS {
            return invalid(format!("packets = {}, need at least {MIN_PACKETS}", self.packets));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    /// Credited bits per channel use.
    pub empirical_rate: f64,
    /// Standard error of `empirical_rate` (`None` unless requested).
    pub stderr: Option<f64>,
    /// Fraction of slots in which each link's receiver decoded.
    pub per_link_delivery: Vec<f64>,
    /// Fraction of slots in which each link's receiver was the
    /// highest-priority decoder of its transmitter (network runs only;
    /// equals `per_link_delivery` for point-to-point runs).
    pub per_link_retention: Vec<f64>,
    pub slots_run: usize,
}

impl SimReport {
    /// Binomial standard error of a per-link fraction.
    pub fn fraction_stderr(&self, fraction: f64) -> f64 {
        (fraction * (1.0 - fraction) / self.slots_run as f64).sqrt()
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn mean_stderr(sum: f64, sum_sq: f64, n: usize) -> (f64, f64) {
    let m = n as f64;
    let mean = sum / m;
    let var = ((sum_sq - m * mean * mean) / (m - 1.0)).max(0.0);
    (mean, (var / m).sqrt())
}

fn check_ptp(power: f64, sigma2: f64) -> Result<()> {
    Link::new("tx", "rx", sigma2)?;
    NodeConfig::new("tx", power)?;
    if power == 0.0 {
        return invalid("power must be positive");
    }
    Ok(())
}

/// Fixed-rate transmission over one fading link: a slot credits `rate`
/// bits when `0.5 log2(1 + h P) >= rate`.
pub fn simulate_ptp_fixed(rate: f64, power: f64, sigma2: f64, cfg: &SimConfig) -> Result<SimReport> {
    cfg.validate()?;
    check_ptp(power, sigma2)?;
    if !(rate >= 0.0 && rate.is_finite()) {
        return invalid(format!("rate {rate} must be finite and >= 0"));
    }
    let th = decode_threshold(rate, power);
    let mut rng = stream(cfg.seed, 0);
    let mut hits = 0usize;
    for _ in 0..cfg.packets {
        let e: f64 = Exp1.sample(&mut rng);
        if sigma2 * e >= th {
            hits += 1;
        }
    }
    let credited = rate * hits as f64;
    let (mean, se) = mean_stderr(credited, rate * credited, cfg.packets);
    let delivery = hits as f64 / cfg.packets as f64;
    Ok(SimReport {
        empirical_rate: mean,
        stderr: cfg.report_stderr.then_some(se),
        per_link_delivery: vec![delivery],
        per_link_retention: vec![delivery],
        slots_run: cfg.packets,
    })
}

/// Layered superposition over one fading link: a slot credits the
/// physical rate of every layer whose gain threshold is met. The reported
/// delivery is the fraction of slots in which at least one layer decoded.
pub fn simulate_ptp_layered(scheme: &LayeredScheme, power: f64, sigma2: f64, cfg: &SimConfig) -> Result<SimReport> {
    cfg.validate()?;
    check_ptp(power, sigma2)?;
    if (scheme.power() - power).abs() > 1e-12 * power.max(1.0) {
        return invalid(format!("scheme spans [0, {}] but power is {power}", scheme.power()));
    }
    let layers: Vec<(f64, f64)> =
        scheme.layer_physical_rates().into_iter().zip(scheme.thresholds()).filter(|(r, _)| *r > 0.0).collect();
    let lowest = layers.iter().map(|l| l.1).fold(f64::INFINITY, f64::min);
    let mut rng = stream(cfg.seed, 0);
    let (mut sum, mut sum_sq, mut any) = (0.0, 0.0, 0usize);
    for _ in 0..cfg.packets {
        let e: f64 = Exp1.sample(&mut rng);
        let h = sigma2 * e;
        let v: f64 = layers.iter().filter(|l| h >= l.1).map(|l| l.0).sum();
        sum += v;
        sum_sq += v * v;
        if h >= lowest {
            any += 1;
        }
    }
    let (mean, se) = mean_stderr(sum, sum_sq, cfg.packets);
    let delivery = any as f64 / cfg.packets as f64;
    Ok(SimReport {
        empirical_rate: mean,
        stderr: cfg.report_stderr.then_some(se),
        per_link_delivery: vec![delivery],
        per_link_retention: vec![delivery],
        slots_run: cfg.packets,
    })
}

/// Check that `priorities[i]` is a permutation of node `i`'s out-links.
fn check_priorities(graph: &NetworkGraph, priorities: &[Vec<usize>]) -> Result<()> {
    if priorities.len() != graph.node_count() {
        return invalid("one priority list per node is required");
    }
    for (i, order) in priorities.iter().enumerate() {
        let mut sorted = order.clone();
        sorted.sort_unstable();
        let mut expect = graph.out_links(i).to_vec();
        expect.sort_unstable();
        if sorted != expect {
            return invalid(format!("priority list of node '{}' is not a permutation of its out-links", graph.id(i)));
        }
    }
    Ok(())
}

/// Slotted unicast with priority retention.
///
/// Every node transmits every slot at its fixed rate; receiver `j` of node
/// `i` decodes iff `0.5 log2(1 + h_ij P_i) >= R_i`, with fresh independent
/// fades per link per slot. Only the highest-priority decoder retains the
/// packet. The end-to-end rate is the maximum flow from source to
/// destination over link capacities `R_i * retention fraction`, i.e. ideal
/// erasure coding end to end. Its standard error comes from
/// [`NETWORK_BATCHES`] contiguous slot batches.
///
/// `priorities[i]` lists node `i`'s out-links, highest priority first.
pub fn simulate_network_unicast(
    graph: &NetworkGraph,
    rates: &RateAssignment,
    priorities: &[Vec<usize>],
    cfg: &SimConfig,
) -> Result<SimReport> {
    cfg.validate()?;
    if graph.destinations().len() != 1 {
        return invalid("network simulation supports a single destination only");
    }
    if rates.rates().len() != graph.node_count() {
        return invalid("rate assignment does not match graph");
    }
    check_priorities(graph, priorities)?;

    let links = graph.links().len();
    let thresholds: Vec<f64> = (0..links)
        .map(|l| {
            let i = graph.link_source(l);
            let r = rates.rate(i);
            if r == 0.0 || graph.power(i) == 0.0 {
                f64::INFINITY
            } else {
                decode_threshold(r, graph.power(i))
            }
        })
        .collect();
    let mut rngs: Vec<ChaCha8Rng> = (0..links).map(|l| stream(cfg.seed, l as u64 + 1)).collect();
    let mut decoded = vec![false; links];
    let mut delivered = vec![0usize; links];
    let mut retained = vec![0usize; links];
    let mut batch_retained = vec![vec![0usize; links]; NETWORK_BATCHES];
    let batches = NETWORK_BATCHES.min(cfg.packets);

    for slot in 0..cfg.packets {
        let b = slot * batches / cfg.packets;
        for l in 0..links {
            let e: f64 = Exp1.sample(&mut rngs[l]);
            decoded[l] = graph.link(l).sigma2 * e >= thresholds[l];
            delivered[l] += decoded[l] as usize;
        }
        for order in priorities {
            if let Some(&l) = order.iter().find(|&&l| decoded[l]) {
                retained[l] += 1;
                batch_retained[b][l] += 1;
            }
        }
    }

    let n = cfg.packets as f64;
    let end_to_end = |counts: &[usize], slots: f64| {
        let caps: Vec<f64> = (0..links).map(|l| rates.rate(graph.link_source(l)) * counts[l] as f64 / slots).collect();
        unicast_max_flow(graph, &caps)
    };
    let rate = end_to_end(&retained, n);
    let se = if cfg.report_stderr {
        let vals: Vec<f64> = (0..batches)
            .map(|b| {
                let lo = b * cfg.packets / batches;
                let hi = (b + 1) * cfg.packets / batches;
                end_to_end(&batch_retained[b], (hi - lo) as f64)
            })
            .collect();
        let m = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / m;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
        Some((var / m).sqrt())
    } else {
        None
    };
    Ok(SimReport {
        empirical_rate: rate,
        stderr: se,
        per_link_delivery: delivered.iter().map(|&c| c as f64 / n).collect(),
        per_link_retention: retained.iter().map(|&c| c as f64 / n).collect(),
        slots_run: cfg.packets,
    })
}

/// Edmonds-Karp maximum flow from the graph's source to its (single)
/// destination with per-link capacities `caps`.
pub fn unicast_max_flow(graph: &NetworkGraph, caps: &[f64]) -> f64 {
    let n = graph.node_count();
    let (s, t) = (graph.source(), graph.destinations()[0]);
    let mut residual = vec![vec![0.0; n]; n];
    for (l, &c) in caps.iter().enumerate() {
        residual[graph.link_source(l)][graph.link_target(l)] += c;
    }
    let mut total = 0.0;
    loop {
        let mut parent = vec![usize::MAX; n];
        parent[s] = s;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                if parent[v] == usize::MAX && residual[u][v] > 1e-15 {
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if parent[t] == usize::MAX {
            return total;
        }
        let mut push = f64::INFINITY;
        let mut v = t;
        while v != s {
            push = push.min(residual[parent[v]][v]);
            v = parent[v];
        }
        let mut v = t;
        while v != s {
            let u = parent[v];
            residual[u][v] -= push;
            residual[v][u] += push;
            v = u;
        }
        total += push;
    }
}
