use std::path::Path;

use fadenet::channel::{ergodic_capacity_csir, waterfilling_capacity, DEFAULT_TOL};
use fadenet::flowopt::{solve, FlowSolution, SolverOptions, StepMode};
use fadenet::mcsim::{simulate_network_unicast, simulate_ptp_fixed, simulate_ptp_layered, SimConfig};
use fadenet::netmodel::{capacity_upper_bound, cutset_rate_fixed, gap_constant, NetworkGraph, RateAssignment};
use fadenet::ptp::{fixed_rate_optimum, infinite_layer_throughput, optimize_two_layer};

use crate::export::{emit, json, BoundExport, CutsetExport, FlowExport, SimExport};
use crate::{
    BoundArgs, CutsetArgs, Failure, Format, GapArgs, OptimizeArgs, PtpScheme, RateSource, Scheme, SimulateArgs,
    SolverArgs, StepModeArg, SweepArgs,
};

/// The command line as run, with the program name normalized.
pub fn invocation() -> String {
    let args: Vec<String> = std::env::args().skip(1).collect();
    format!("fadenet {}", args.join(" "))
}

fn comment(invocation: &str, extra: &[&str]) -> String {
    let mut s = format!("# {invocation} (fadenet {})\n", env!("CARGO_PKG_VERSION"));
    for line in extra {
        s.push_str("# ");
        s.push_str(line);
        s.push('\n');
    }
    s
}

fn load_graph(path: &Path) -> Result<NetworkGraph, Failure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure::Invalid(format!("cannot read {}: {e}", path.display())))?;
    Ok(NetworkGraph::from_json_str(&text)?)
}

fn solver_options(graph: &NetworkGraph, a: &SolverArgs) -> Result<SolverOptions, Failure> {
    let mut o = SolverOptions::for_graph(graph);
    o.max_iters = a.iters;
    if let Some(g) = a.gamma0 {
        o.gamma0 = g;
    }
    if let Some(e) = a.eta0 {
        o.eta0 = e;
    }
    o.step_mode = match a.step_mode {
        StepModeArg::Diminishing => StepMode::Diminishing,
        StepModeArg::Constant => StepMode::Constant,
    };
    o.averaging_window = a.window;
    o.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(o)
}

pub fn ptp_sweep(a: &SweepArgs, invocation: &str) -> Result<(), Failure> {
    if !(a.snr_lo < a.snr_hi) {
        return Err(Failure::Usage(format!("--snr-lo {} must be below --snr-hi {}", a.snr_lo, a.snr_hi)));
    }
    if a.points < 2 {
        return Err(Failure::Usage("--points must be at least 2".into()));
    }
    if !(a.sigma2 > 0.0 && a.sigma2 <= 1.0) {
        return Err(Failure::Usage(format!("--sigma2 {} must lie in (0, 1]", a.sigma2)));
    }
    let mut schemes = a.schemes.clone();
    schemes.sort();
    schemes.dedup();

    let mut out = comment(invocation, &[&format!("snr_db = 10 log10(P sigma2), sigma2 = {}", a.sigma2)]);
    out.push_str("snr_db");
    for s in &schemes {
        out.push(',');
        out.push_str(s.column());
    }
    out.push('\n');
    for k in 0..a.points {
        let snr_db = a.snr_lo + (a.snr_hi - a.snr_lo) * k as f64 / (a.points - 1) as f64;
        let power = 10f64.powf(snr_db / 10.0) / a.sigma2;
        out.push_str(&snr_db.to_string());
        for s in &schemes {
            let v = match s {
                Scheme::OneRate => fixed_rate_optimum(power, a.sigma2)?.throughput,
                Scheme::TwoRate => optimize_two_layer(power, a.sigma2)?.throughput,
                Scheme::InfiniteRate => infinite_layer_throughput(power, a.sigma2, DEFAULT_TOL)?,
                Scheme::CsirCapacity => ergodic_capacity_csir(power, a.sigma2, DEFAULT_TOL)?,
                Scheme::CsirtWaterfilling => waterfilling_capacity(power, a.sigma2, DEFAULT_TOL)?,
            };
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    emit(a.out.as_deref(), &out)
}

pub fn net_optimize(a: &OptimizeArgs) -> Result<(), Failure> {
    let graph = load_graph(&a.graph)?;
    let mut opts = solver_options(&graph, &a.solver)?;
    opts.trace_every = a.trace_every;
    opts.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let sol = solve(&graph, &opts)?;
    emit(a.out.as_deref(), &json(&FlowExport::new(&graph, &sol)))?;
    if sol.converged {
        Ok(())
    } else {
        Err(Failure::NotConverged)
    }
}

pub fn net_cutset(a: &CutsetArgs) -> Result<(), Failure> {
    let graph = load_graph(&a.graph)?;
    if a.grid < 2 {
        return Err(Failure::Usage("--grid must be at least 2".into()));
    }
    let sol = cutset_rate_fixed(&graph, a.grid, a.restarts).map_err(|e| match e {
        fadenet::Error::TooManyNodes { nodes, limit } => Failure::Invalid(format!(
            "graph has {nodes} nodes, above the cut enumeration limit of {limit}; run `fadenet net optimize` instead"
        )),
        e => e.into(),
    })?;
    emit(a.out.as_deref(), &json(&CutsetExport::new(&graph, &sol)))
}

pub fn net_bound(a: &BoundArgs) -> Result<(), Failure> {
    let graph = load_graph(&a.graph)?;
    let ub = capacity_upper_bound(&graph, a.samples, a.seed)?;
    emit(a.out.as_deref(), &json(&BoundExport::new(&graph, &ub, a.samples, a.seed)))
}

pub fn net_gap(a: &GapArgs, invocation: &str) -> Result<(), Failure> {
    let graph = load_graph(&a.graph)?;
    if let Some(p) = a.powers.iter().find(|p| !(**p > 0.0 && p.is_finite())) {
        return Err(Failure::Usage(format!("power {p} must be positive")));
    }
    let mut out =
        comment(invocation, &["c: flow solver rate; c_ub: cut-set upper bound; every node at the row's power"]);
    out.push_str("power,c,c_ub,c_ub_stderr,ratio,gap_constant\n");
    let mut converged = true;
    for &p in &a.powers {
        let g = graph.with_uniform_power(p)?;
        let sol = solve(&g, &solver_options(&g, &a.solver)?)?;
        converged &= sol.converged;
        let ub = capacity_upper_bound(&g, a.samples, a.seed)?;
        let c = sol.multicast_rate;
        out.push_str(&format!("{p},{c},{},{},{},{}\n", ub.rate, ub.stderr, ub.rate / c, gap_constant(&g)));
    }
    emit(a.out.as_deref(), &out)?;
    if converged {
        Ok(())
    } else {
        Err(Failure::NotConverged)
    }
}

/// Out-links of every node ranked by mean gain, ties by receiver id.
fn gain_order(graph: &NetworkGraph) -> Vec<Vec<usize>> {
    (0..graph.node_count())
        .map(|i| {
            let mut out = graph.out_links(i).to_vec();
            out.sort_by(|&a, &b| {
                graph
                    .link(b)
                    .sigma2
                    .total_cmp(&graph.link(a).sigma2)
                    .then_with(|| graph.link(a).to.cmp(&graph.link(b).to))
            });
            out
        })
        .collect()
}

fn flow_order(sol: &FlowSolution) -> Vec<Vec<usize>> {
    sol.priorities.iter().map(|p| p.first().map(|p| p.order.clone()).unwrap_or_default()).collect()
}

pub fn simulate(a: &SimulateArgs, invocation: &str) -> Result<(), Failure> {
    let (report, links, note) = if let Some(path) = &a.graph {
        let seed = a.seed.ok_or_else(|| Failure::Usage("--seed is required for network simulation".into()))?;
        let cfg = SimConfig::new(a.packets, seed).map_err(|e| Failure::Usage(e.to_string()))?;
        let graph = load_graph(path)?;
        let (rates, order) = match a.rates_from {
            RateSource::Flow => {
                let sol = solve(&graph, &solver_options(&graph, &a.solver)?)?;
                (RateAssignment::new(&graph, sol.node_rates.clone())?, flow_order(&sol))
            }
            RateSource::Cutset => (cutset_rate_fixed(&graph, 256, 2)?.assignment, gain_order(&graph)),
        };
        let report = simulate_network_unicast(&graph, &rates, &order, &cfg)?;
        let links = graph.links().iter().map(|l| (l.from.to_string(), l.to.to_string())).collect();
        (report, links, "end-to-end rate by max-flow over empirical link rates".to_string())
    } else {
        let cfg = SimConfig::new(a.packets, a.seed.unwrap_or(1)).map_err(|e| Failure::Usage(e.to_string()))?;
        let power = a.power.ok_or_else(|| Failure::Usage("--power is required with --ptp".into()))?;
        let sigma2 = a.sigma2.unwrap_or(1.0);
        let report = match a.scheme.unwrap_or(PtpScheme::Fixed) {
            PtpScheme::Fixed => {
                let rate = a.rate.ok_or_else(|| Failure::Usage("--rate is required for the fixed scheme".into()))?;
                simulate_ptp_fixed(rate, power, sigma2, &cfg)?
            }
            PtpScheme::TwoLayer => {
                let opt = optimize_two_layer(power, sigma2)?;
                simulate_ptp_layered(&opt.scheme(power)?, power, sigma2, &cfg)?
            }
        };
        (report, vec![("tx".to_string(), "rx".to_string())], format!("single link, P = {power}, sigma2 = {sigma2}"))
    };
    let export = SimExport::new(&report, &links);
    let text = match a.format {
        Format::Csv => export.to_csv(&comment(invocation, &[&note])),
        Format::Json => json(&export),
    };
    emit(a.out.as_deref(), &text)
}
