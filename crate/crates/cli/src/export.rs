use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use fadenet::flowopt::{FlowSolution, TracePoint};
use fadenet::mcsim::SimReport;
use fadenet::netmodel::{CutsetSolution, NetworkGraph, UpperBound};
use serde::Serialize;

use crate::Failure;

#[derive(Serialize)]
pub struct FlowExport {
    multicast_rate: f64,
    converged: bool,
    iterations: usize,
    averaged_iterations: usize,
    max_residual: f64,
    max_violation: f64,
    node_rates: BTreeMap<String, f64>,
    flows: Vec<FlowEntry>,
    priorities: Vec<PriorityEntry>,
    residuals: Vec<ResidualEntry>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    trace: Vec<TracePoint>,
}

#[derive(Serialize)]
struct FlowEntry {
    from: String,
    to: String,
    destination: String,
    rate: f64,
}

#[derive(Serialize)]
struct PriorityEntry {
    node: String,
    destination: String,
    order: Vec<String>,
    weights: Vec<f64>,
}

#[derive(Serialize)]
struct ResidualEntry {
    node: String,
    destination: String,
    residual: f64,
}

impl FlowExport {
    pub fn new(graph: &NetworkGraph, sol: &FlowSolution) -> Self {
        let dest = |k: usize| graph.id(graph.destinations()[k]).to_string();
        let mut flows = Vec::new();
        for (k, per_link) in sol.flows.iter().enumerate() {
            for (l, &rate) in per_link.iter().enumerate() {
                let link = graph.link(l);
                flows.push(FlowEntry {
                    from: link.from.to_string(),
                    to: link.to.to_string(),
                    destination: dest(k),
                    rate,
                });
            }
        }
        let mut priorities = Vec::new();
        for i in graph.transmitters() {
            for (k, p) in sol.priorities[i].iter().enumerate() {
                priorities.push(PriorityEntry {
                    node: graph.id(i).to_string(),
                    destination: dest(k),
                    order: p.order.iter().map(|&l| graph.link(l).to.to_string()).collect(),
                    weights: p.weights.clone(),
                });
            }
        }
        let mut residuals = Vec::new();
        for i in 0..graph.node_count() {
            for (k, &residual) in sol.residuals[i].iter().enumerate() {
                residuals.push(ResidualEntry { node: graph.id(i).to_string(), destination: dest(k), residual });
            }
        }
        Self {
            multicast_rate: sol.multicast_rate,
            converged: sol.converged,
            iterations: sol.iterations,
            averaged_iterations: sol.averaged_iterations,
            max_residual: sol.max_residual,
            max_violation: sol.max_violation,
            node_rates: graph
                .transmitters()
                .into_iter()
                .map(|i| (graph.id(i).to_string(), sol.node_rates[i]))
                .collect(),
            flows,
            priorities,
            residuals,
            trace: sol.trace.clone(),
        }
    }
}

#[derive(Serialize)]
pub struct CutsetExport {
    rate: f64,
    rates: BTreeMap<String, f64>,
    cuts: Vec<CutEntry>,
}

#[derive(Serialize)]
struct CutEntry {
    source_side: Vec<String>,
    boundary: Vec<String>,
    value: f64,
}

impl CutsetExport {
    pub fn new(graph: &NetworkGraph, sol: &CutsetSolution) -> Self {
        Self {
            rate: sol.rate,
            rates: sol.assignment.to_map(graph).into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            cuts: sol
                .cuts
                .iter()
                .zip(&sol.cut_values)
                .map(|(c, &value)| CutEntry {
                    source_side: ids(c.source_side_ids(graph)),
                    boundary: ids(c.boundary_ids(graph)),
                    value,
                })
                .collect(),
        }
    }
}

#[derive(Serialize)]
pub struct BoundExport {
    upper_bound: f64,
    stderr: f64,
    samples: usize,
    seed: u64,
    minimizing_cut: Vec<String>,
    cuts: Vec<CutEstimateEntry>,
}

#[derive(Serialize)]
struct CutEstimateEntry {
    source_side: Vec<String>,
    boundary: Vec<String>,
    mean: f64,
    stderr: f64,
}

impl BoundExport {
    pub fn new(graph: &NetworkGraph, ub: &UpperBound, samples: usize, seed: u64) -> Self {
        Self {
            upper_bound: ub.rate,
            stderr: ub.stderr,
            samples,
            seed,
            minimizing_cut: ids(ub.per_cut[ub.argmin].cut.source_side_ids(graph)),
            cuts: ub
                .per_cut
                .iter()
                .map(|e| CutEstimateEntry {
                    source_side: ids(e.cut.source_side_ids(graph)),
                    boundary: ids(e.cut.boundary_ids(graph)),
                    mean: e.mean,
                    stderr: e.stderr,
                })
                .collect(),
        }
    }
}

#[derive(Serialize)]
pub struct SimExport {
    empirical_rate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    stderr: Option<f64>,
    slots_run: usize,
    links: Vec<LinkStat>,
}

#[derive(Serialize)]
struct LinkStat {
    from: String,
    to: String,
    delivery: f64,
    retention: f64,
}

impl SimExport {
    /// `links` names each report column as (from, to).
    pub fn new(report: &SimReport, links: &[(String, String)]) -> Self {
        Self {
            empirical_rate: report.empirical_rate,
            stderr: report.stderr,
            slots_run: report.slots_run,
            links: links
                .iter()
                .enumerate()
                .map(|(l, (from, to))| LinkStat {
                    from: from.clone(),
                    to: to.clone(),
                    delivery: report.per_link_delivery[l],
                    retention: report.per_link_retention[l],
                })
                .collect(),
        }
    }

    pub fn to_csv(&self, comment: &str) -> String {
        let mut s = format!("{comment}metric,link,value\n");
        let _ = writeln!(s, "empirical_rate,,{}", self.empirical_rate);
        if let Some(se) = self.stderr {
            let _ = writeln!(s, "stderr,,{se}");
        }
        let _ = writeln!(s, "slots_run,,{}", self.slots_run);
        for l in &self.links {
            let _ = writeln!(s, "delivery,{}->{},{}", l.from, l.to, l.delivery);
        }
        for l in &self.links {
            let _ = writeln!(s, "retention,{}->{},{}", l.from, l.to, l.retention);
        }
        s
    }
}

fn ids(v: Vec<fadenet::channel::NodeId>) -> Vec<String> {
    v.into_iter().map(|id| id.to_string()).collect()
}

/// Pretty JSON with a trailing newline.
pub fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("export types serialize");
    s.push('\n');
    s
}

/// Write `text` to `out`, or to stdout when no path is given.
pub fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| Failure::Invalid(format!("cannot write {}: {e}", path.display())))
        }
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}
