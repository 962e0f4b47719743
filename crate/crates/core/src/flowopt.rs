//! Flow-based rate maximization by primal-dual subgradient iterations.
//!
//! Each iteration every transmitting node ranks its out-neighbors by queue
//! differential (backpressure), picks the physical rate that maximizes its
//! weighted delivered flow, and splits that rate over the neighbors in
//! priority order: a lower-priority neighbor is credited only with packets
//! no higher-priority neighbor decoded. The source rate `C` and the queues
//! then take a projected subgradient step. Averaging the primal iterates
//! over a trailing window realizes the time sharing between rates.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::netmodel::{NetworkGraph, RateAssignment};
use crate::numerics::{maximize_1d, RealInterval, DEFAULT_REFINEMENTS};

/// Out-degree limit of the subset-enumerating LP in [`max_flow_fixed_rates`].
pub const MAX_LP_OUT_DEGREE: usize = 12;

/// Queue lengths `q[node][k]` for the `k`-th destination of the graph.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    queues: Vec<Vec<f64>>,
    iteration: usize,
}

impl DualState {
    /// All queues empty, iteration 0.
    pub fn new(graph: &NetworkGraph) -> Self {
        Self { queues: vec![vec![0.0; graph.destinations().len()]; graph.node_count()], iteration: 0 }
    }

    pub fn from_queues(graph: &NetworkGraph, queues: Vec<Vec<f64>>) -> Result<Self> {
        let dests = graph.destinations().len();
        if queues.len() != graph.node_count() || queues.iter().any(|q| q.len() != dests) {
            return invalid("queue table does not match the graph");
        }
        if queues.iter().flatten().any(|q| !(*q >= 0.0 && q.is_finite())) {
            return invalid("queues must be finite and >= 0");
        }
        let mut state = Self { queues, iteration: 0 };
        for (k, &d) in graph.destinations().iter().enumerate() {
            state.queues[d][k] = 0.0;
        }
        Ok(state)
    }

    pub fn queue(&self, node: usize, dest: usize) -> f64 {
        self.queues[node][dest]
    }

    pub fn queues(&self) -> &[Vec<f64>] {
        &self.queues
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// Sum over destinations of the source queues.
    pub fn source_pressure(&self, graph: &NetworkGraph) -> f64 {
        self.queues[graph.source()].iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StepMode {
    /// `gamma0 / sqrt(t)` and `eta0 / sqrt(t)`.
    Diminishing,
    Constant,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub max_iters: usize,
    pub gamma0: f64,
    pub eta0: f64,
    pub step_mode: StepMode,
    /// Trailing fraction of iterations averaged into the solution.
    pub averaging_window: f64,
    /// Coarse grid size of the per-node rate line search.
    pub rate_grid: usize,
    /// Bound on the averaged conservation violation.
    pub tolerance: f64,
    /// Record every k-th iterate in the trace (`None` disables the trace).
    pub trace_every: Option<usize>,
}

impl SolverOptions {
    /// Defaults for `graph`: `gamma0 = 0.5 / |D|`, `eta0 = 2 / |D|`,
    /// diminishing steps, every iterate averaged.
    pub fn for_graph(graph: &NetworkGraph) -> Self {
        let d = graph.destinations().len() as f64;
        Self {
            max_iters: 20_000,
            gamma0: 0.5 / d,
            eta0: 2.0 / d,
            step_mode: StepMode::Diminishing,
            averaging_window: 1.0,
            rate_grid: 64,
            tolerance: 1e-2,
            trace_every: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return invalid("max_iters must be positive");
        }
        if !(self.gamma0 > 0.0 && self.gamma0.is_finite() && self.eta0 > 0.0 && self.eta0.is_finite()) {
            return invalid("step scales must be positive");
        }
        if !(self.averaging_window > 0.0 && self.averaging_window <= 1.0) {
            return invalid(format!("averaging_window = {} must lie in (0, 1]", self.averaging_window));
        }
        if self.rate_grid < 2 {
            return invalid("rate_grid must be at least 2");
        }
        if !(self.tolerance > 0.0) {
            return invalid("tolerance must be positive");
        }
        if self.trace_every == Some(0) {
            return invalid("trace_every must be positive");
        }
        Ok(())
    }

    fn step(&self, t: usize) -> (f64, f64) {
        match self.step_mode {
            StepMode::Diminishing => {
                let s = (t as f64).sqrt();
                (self.gamma0 / s, self.eta0 / s)
            }
            StepMode::Constant => (self.gamma0, self.eta0),
        }
    }
}

/// Out-links of one node in priority order for one destination.
#[derive(Debug, Clone, PartialEq)]
pub struct Priority {
    /// Link indices, highest priority first.
    pub order: Vec<usize>,
    /// `[q_i - q_j]^+` for each entry of `order` (non-increasing).
    pub weights: Vec<f64>,
}

/// Rank the out-neighbors of `node` for destination `dest` by decreasing
/// queue differential, breaking ties by ascending node id.
pub fn neighbor_priorities(state: &DualState, node: usize, dest: usize, graph: &NetworkGraph) -> Priority {
    let qi = state.queue(node, dest);
    let mut ranked: Vec<(usize, f64)> =
        graph.out_links(node).iter().map(|&l| (l, (qi - state.queue(graph.link_target(l), dest)).max(0.0))).collect();
    ranked.sort_by(|a, b| {
        b.1.total_cmp(&a.1).then_with(|| graph.id(graph.link_target(a.0)).cmp(graph.id(graph.link_target(b.0))))
    });
    let (order, weights) = ranked.into_iter().unzip();
    Priority { order, weights }
}

/// Flows on the links of `order` when `node` transmits at `rate`: the
/// `k`-th link carries `rate * prod_{j<k} eps_j * (1 - eps_k)`.
pub fn assign_flows(graph: &NetworkGraph, rate: f64, order: &[usize]) -> Vec<f64> {
    let mut missed = 1.0;
    order
        .iter()
        .map(|&l| {
            let eps = graph.link_erasure(l, rate);
            let x = rate * missed * (1.0 - eps);
            missed *= eps;
            x
        })
        .collect()
}

/// The rate-selection objective
/// `R sum_d sum_k (w_k - w_{k+1}) (1 - prod_{j<=k} eps_j(R))` with
/// `w_{N+1} = 0`.
pub fn rate_objective(graph: &NetworkGraph, rate: f64, priorities: &[Priority]) -> f64 {
    if rate == 0.0 {
        return 0.0;
    }
    let mut total = 0.0;
    for p in priorities {
        let mut missed = 1.0;
        for (k, &l) in p.order.iter().enumerate() {
            missed *= graph.link_erasure(l, rate);
            let next = p.weights.get(k + 1).copied().unwrap_or(0.0);
            total += (p.weights[k] - next) * (1.0 - missed);
        }
    }
    rate * total
}

/// Rate maximizing [`rate_objective`] for `node` over `[0, rate_cap]`;
/// 0 when every weight vanishes.
pub fn select_rate(graph: &NetworkGraph, node: usize, priorities: &[Priority], opts: &SolverOptions) -> Result<f64> {
    if priorities.iter().all(|p| p.weights.iter().all(|&w| w == 0.0)) {
        return Ok(0.0);
    }
    let cap = graph.rate_cap(node);
    if cap == 0.0 {
        return Ok(0.0);
    }
    let (r, _) = maximize_1d(
        |r| rate_objective(graph, r, priorities),
        RealInterval::new(0.0, cap)?,
        opts.rate_grid,
        DEFAULT_REFINEMENTS,
    )?;
    Ok(r)
}

/// `[C + gamma (1 - sum_d q_s^d)]^+`.
pub fn update_source_rate(c: f64, state: &DualState, graph: &NetworkGraph, gamma: f64) -> f64 {
    (c + gamma * (1.0 - state.source_pressure(graph))).max(0.0)
}

/// Queue step. `flows[k][l]` is the flow of destination `k` on link `l`.
/// Source: `[q - eta (out - in - C)]^+`; destination `d` for its own
/// session: 0; otherwise `[q - eta (out - in)]^+`.
pub fn update_duals(state: &DualState, flows: &[Vec<f64>], c: f64, eta: f64, graph: &NetworkGraph) -> DualState {
    let mut next = state.clone();
    next.iteration += 1;
    for (k, &d) in graph.destinations().iter().enumerate() {
        let excess = node_excess(graph, &flows[k]);
        for (i, &ex) in excess.iter().enumerate() {
            next.queues[i][k] = if i == d {
                0.0
            } else if i == graph.source() {
                (state.queues[i][k] - eta * (ex - c)).max(0.0)
            } else {
                (state.queues[i][k] - eta * ex).max(0.0)
            };
        }
    }
    next
}

/// Outflow minus inflow at every node.
fn node_excess(graph: &NetworkGraph, flows: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; graph.node_count()];
    for (l, &x) in flows.iter().enumerate() {
        e[graph.link_source(l)] += x;
        e[graph.link_target(l)] -= x;
    }
    e
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub c: f64,
    /// Running mean of `C` since the averaging window opened (NaN before).
    pub c_average: f64,
}

#[derive(Debug, Clone)]
pub struct FlowSolution {
    /// Averaged source rate.
    pub multicast_rate: f64,
    /// Averaged flows, `flows[k][l]` for destination `k` and link `l`.
    pub flows: Vec<Vec<f64>>,
    /// Averaged physical-layer rate of every node.
    pub node_rates: Vec<f64>,
    /// Priorities at the last iterate, `priorities[node][k]` (empty for
    /// nodes without out-links).
    pub priorities: Vec<Vec<Priority>>,
    /// Averaged `out - in - C chi` at every node for every destination;
    /// zero at the destination of its own session. The queue projection
    /// enforces these as `>= 0`: positive entries are surplus transmission,
    /// negative entries are violations.
    pub residuals: Vec<Vec<f64>>,
    pub max_residual: f64,
    /// Largest violation, `max(0, -residual)`.
    pub max_violation: f64,
    pub converged: bool,
    pub iterations: usize,
    pub averaged_iterations: usize,
    pub trace: Vec<TracePoint>,
    pub final_state: DualState,
}

fn residual_table(graph: &NetworkGraph, flows: &[Vec<f64>], c: f64) -> Vec<Vec<f64>> {
    let dests = graph.destinations();
    let mut table = vec![vec![0.0; dests.len()]; graph.node_count()];
    for (k, &d) in dests.iter().enumerate() {
        let excess = node_excess(graph, &flows[k]);
        for i in 0..graph.node_count() {
            table[i][k] = if i == d {
                0.0
            } else if i == graph.source() {
                excess[i] - c
            } else {
                excess[i]
            };
        }
    }
    table
}

/// Run `opts.max_iters` primal-dual iterations.
///
/// The solution is flagged converged when the averaged conservation
/// violation is below `opts.tolerance`. Non-convergence is reported
/// through `converged` and the residuals, not as an error.
pub fn solve(graph: &NetworkGraph, opts: &SolverOptions) -> Result<FlowSolution> {
    opts.validate()?;
    let n = graph.node_count();
    let links = graph.links().len();
    let dests = graph.destinations().len();
    let transmitters = graph.transmitters();
    let window = ((opts.averaging_window * opts.max_iters as f64).round() as usize).max(1);
    let avg_start = opts.max_iters - window + 1;

    let mut state = DualState::new(graph);
    let mut c = 0.0;
    let mut priorities: Vec<Vec<Priority>> = vec![Vec::new(); n];
    let mut rates = vec![0.0; n];
    let mut flows = vec![vec![0.0; links]; dests];

    let mut sum_c = 0.0;
    let mut sum_rates = vec![0.0; n];
    let mut sum_flows = vec![vec![0.0; links]; dests];
    let mut averaged = 0usize;
    let mut trace = Vec::new();

    for t in 1..=opts.max_iters {
        let (gamma, eta) = opts.step(t);
        for &i in &transmitters {
            priorities[i] = (0..dests).map(|k| neighbor_priorities(&state, i, k, graph)).collect();
            rates[i] = select_rate(graph, i, &priorities[i], opts)?;
            for (k, p) in priorities[i].iter().enumerate() {
                for (&l, x) in p.order.iter().zip(assign_flows(graph, rates[i], &p.order)) {
                    // a negative queue differential penalizes flow on the link
                    let uphill = state.queue(i, k) < state.queue(graph.link_target(l), k);
                    flows[k][l] = if uphill { 0.0 } else { x };
                }
            }
        }
        let c_next = update_source_rate(c, &state, graph, gamma);
        state = update_duals(&state, &flows, c, eta, graph);

        if t >= avg_start {
            averaged += 1;
            sum_c += c;
            for i in 0..n {
                sum_rates[i] += rates[i];
            }
            for k in 0..dests {
                for l in 0..links {
                    sum_flows[k][l] += flows[k][l];
                }
            }
        }
        if let Some(every) = opts.trace_every {
            if t % every == 0 || t == 1 {
                let c_average = if averaged > 0 { sum_c / averaged as f64 } else { f64::NAN };
                trace.push(TracePoint { iteration: t, c, c_average });
            }
        }
        c = c_next;
    }

    let m = averaged as f64;
    let flows: Vec<Vec<f64>> = sum_flows.iter().map(|f| f.iter().map(|x| x / m).collect()).collect();
    let multicast_rate = sum_c / m;
    let residuals = residual_table(graph, &flows, multicast_rate);
    let max_residual = residuals.iter().flatten().fold(0.0, |a: f64, r| a.max(r.abs()));
    let max_violation = residuals.iter().flatten().map(|&r| if r < 0.0 { -r } else { 0.0 }).fold(0.0, f64::max);
    Ok(FlowSolution {
        multicast_rate,
        flows,
        node_rates: sum_rates.iter().map(|r| r / m).collect(),
        priorities,
        residuals,
        max_residual,
        max_violation,
        converged: max_violation < opts.tolerance,
        iterations: opts.max_iters,
        averaged_iterations: averaged,
        trace,
        final_state: state,
    })
}

/// Node rates of a solution as a [`RateAssignment`].
pub fn solution_rates(graph: &NetworkGraph, sol: &FlowSolution) -> Result<RateAssignment> {
    RateAssignment::new(graph, sol.node_rates.clone())
}

/// Exact maximum multicast rate for fixed node rates, by linear
/// programming: maximize `C` subject to flow conservation per destination
/// and `sum_{j in Z} x_ij <= R_i (1 - prod_{j in Z} eps_ij)` for every node
/// and every non-empty subset `Z` of its out-links.
pub fn max_flow_fixed_rates(graph: &NetworkGraph, assignment: &RateAssignment) -> Result<f64> {
    use minilp::{ComparisonOp, OptimizationDirection, Problem};

    if assignment.rates().len() != graph.node_count() {
        return invalid("assignment does not match graph");
    }
    if let Some(i) = (0..graph.node_count()).find(|&i| graph.out_links(i).len() > MAX_LP_OUT_DEGREE) {
        return invalid(format!("node '{}' has more than {MAX_LP_OUT_DEGREE} out-links", graph.id(i)));
    }
    let links = graph.links().len();
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let c = lp.add_var(1.0, (0.0, f64::INFINITY));
    let mut x = Vec::new();
    for _ in graph.destinations() {
        x.push((0..links).map(|_| lp.add_var(0.0, (0.0, f64::INFINITY))).collect::<Vec<_>>());
    }

    for (k, &d) in graph.destinations().iter().enumerate() {
        for i in 0..graph.node_count() {
            if i == d {
                continue;
            }
            let mut row: Vec<_> = graph.out_links(i).iter().map(|&l| (x[k][l], 1.0)).collect();
            row.extend(graph.in_links(i).iter().map(|&l| (x[k][l], -1.0)));
            if i == graph.source() {
                row.push((c, -1.0));
            }
            if !row.is_empty() {
                lp.add_constraint(row.as_slice(), ComparisonOp::Eq, 0.0);
            }
        }
        for i in 0..graph.node_count() {
            let out = graph.out_links(i);
            let r = assignment.rate(i);
            for subset in 1u32..(1u32 << out.len()) {
                let members: Vec<usize> = (0..out.len()).filter(|b| subset & (1 << b) != 0).map(|b| out[b]).collect();
                let miss: f64 = members.iter().map(|&l| graph.link_erasure(l, r)).product();
                let row: Vec<_> = members.iter().map(|&l| (x[k][l], 1.0)).collect();
                lp.add_constraint(row.as_slice(), ComparisonOp::Le, r * (1.0 - miss));
            }
        }
    }
    let solution = lp.solve().map_err(|e| Error::LinearProgram(e.to_string()))?;
    Ok(solution.objective())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{Link, NodeConfig};
    use crate::netmodel::{cutset_rate_fixed, enumerate_cuts, min_cut};
    use crate::ptp::fixed_rate_optimum;

    fn graph(nodes: &[(&str, f64)], links: &[(&str, &str, f64)], dests: &[&str]) -> NetworkGraph {
        NetworkGraph::new(
            nodes.iter().map(|(id, p)| NodeConfig::new(*id, *p).unwrap()).collect(),
            links.iter().map(|(a, b, s)| Link::new(*a, *b, *s).unwrap()).collect(),
            nodes[0].0,
            dests.iter().map(|d| (*d).into()).collect(),
        )
        .unwrap()
    }

    fn diamond(p: f64) -> NetworkGraph {
        graph(
            &[("s", p), ("r1", p), ("r2", p), ("d", p)],
            &[("s", "r1", 1.0), ("s", "r2", 1.0), ("r1", "d", 1.0), ("r2", "d", 1.0)],
            &["d"],
        )
    }

    fn fan() -> NetworkGraph {
        graph(
            &[("i", 10.0), ("a", 10.0), ("b", 10.0), ("c", 10.0), ("d", 10.0)],
            &[("i", "a", 1.0), ("i", "b", 0.5), ("i", "c", 0.2), ("a", "d", 1.0), ("b", "d", 1.0), ("c", "d", 1.0)],
            &["d"],
        )
    }

    fn state_with(g: &NetworkGraph, q: &[(&str, f64)]) -> DualState {
        let mut table = vec![vec![0.0; g.destinations().len()]; g.node_count()];
        for (id, v) in q {
            table[g.index_of(&(*id).into()).unwrap()][0] = *v;
        }
        DualState::from_queues(g, table).unwrap()
    }

    fn targets(g: &NetworkGraph, p: &Priority) -> Vec<String> {
        p.order.iter().map(|&l| g.id(g.link_target(l)).to_string()).collect()
    }

    #[test]
    fn priorities_examples() {
        let g = graph(
            &[("i", 1.0), ("a", 1.0), ("b", 1.0), ("d", 1.0)],
            &[("i", "a", 1.0), ("i", "b", 1.0), ("a", "d", 1.0), ("b", "d", 1.0)],
            &["d"],
        );
        let p = neighbor_priorities(&state_with(&g, &[("i", 5.0), ("a", 3.0), ("b", 1.0)]), 0, 0, &g);
        assert_eq!(targets(&g, &p), ["b", "a"]);
        assert_eq!(p.weights, vec![4.0, 2.0]);

        let p = neighbor_priorities(&state_with(&g, &[("i", 1.0), ("a", 1.0), ("b", 1.0)]), 0, 0, &g);
        assert_eq!(targets(&g, &p), ["a", "b"]);
        assert_eq!(p.weights, vec![0.0, 0.0]);

        let p = neighbor_priorities(&state_with(&g, &[("i", 2.0), ("a", 7.0)]), 0, 0, &g);
        assert_eq!(targets(&g, &p), ["b", "a"]);
        assert_eq!(p.weights, vec![2.0, 0.0]);
    }

    #[test]
    fn flow_examples() {
        let g = diamond(1.0);
        let x = assign_flows(&g, 0.5, &[0, 1]);
        let e = (-1.0f64).exp();
        assert!((x[0] - 0.5 * e).abs() < 1e-15);
        assert!((x[1] - 0.5 * (1.0 - e) * e).abs() < 1e-15);
        assert!((x[0] - 0.184).abs() < 1e-3 && (x[1] - 0.116).abs() < 1e-3);
        assert!((x[0] + x[1] - 0.5 * (1.0 - (1.0 - e) * (1.0 - e))).abs() < 1e-15);
        let single = assign_flows(&g, 0.5, &[2]);
        assert!((single[0] - crate::ptp::fixed_rate_throughput(0.5, 1.0, 1.0)).abs() < 1e-15);
    }

    // Oracle: fraction of slots in which the second neighbor decodes and the first does not.
    #[test]
    fn second_priority_flow_matches_monte_carlo() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Exp1};
        let g = diamond(1.0);
        let x = assign_flows(&g, 0.5, &[0, 1]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let n = 400_000;
        let mut only_second = 0usize;
        for _ in 0..n {
            let h1: f64 = Exp1.sample(&mut rng);
            let h2: f64 = Exp1.sample(&mut rng);
            if h1 < 1.0 && h2 >= 1.0 {
                only_second += 1;
            }
        }
        let p = only_second as f64 / n as f64;
        let se = 0.5 * (p * (1.0 - p) / n as f64).sqrt();
        assert!((0.5 * p - x[1]).abs() < 4.0 * se);
    }

    #[test]
    fn source_rate_update_examples() {
        let g = diamond(1.0);
        let one = state_with(&g, &[("s", 1.0)]);
        assert_eq!(update_source_rate(0.7, &one, &g, 0.1), 0.7);
        let two = state_with(&g, &[("s", 2.0)]);
        assert_eq!(update_source_rate(0.0, &two, &g, 0.1), 0.0);
        let zero = DualState::new(&g);
        assert!((update_source_rate(1.0, &zero, &g, 0.1) - 1.1).abs() < 1e-15);
    }

    #[test]
    fn dual_update_examples() {
        let g = graph(&[("s", 1.0), ("a", 1.0), ("d", 1.0)], &[("s", "a", 1.0), ("a", "d", 1.0)], &["d"]);
        let state = state_with(&g, &[("s", 2.0), ("a", 3.0)]);
        let next = update_duals(&state, &[vec![0.5, 0.5]], 1.0, 0.1, &g);
        assert!((next.queue(0, 0) - 2.05).abs() < 1e-15);
        assert_eq!(next.queue(1, 0), 3.0);
        assert_eq!(next.queue(2, 0), 0.0);
        assert_eq!(next.iteration(), 1);
    }

    #[test]
    fn rate_selection_examples() {
        let g = diamond(10.0);
        let opts = SolverOptions::for_graph(&g);
        let zero = neighbor_priorities(&DualState::new(&g), 0, 0, &g);
        assert_eq!(select_rate(&g, 0, &[zero], &opts).unwrap(), 0.0);

        let single = Priority { order: vec![2], weights: vec![1.0] };
        let r = select_rate(&g, 1, &[single], &opts).unwrap();
        assert!((r - fixed_rate_optimum(10.0, 1.0).unwrap().rate).abs() < 1e-5);
    }

    // Oracle: dense 1e4-point grid of the same objective.
    #[test]
    fn rate_selection_two_neighbors_against_grid() {
        let g = graph(
            &[("i", 10.0), ("a", 10.0), ("b", 10.0), ("d", 10.0)],
            &[("i", "a", 1.0), ("i", "b", 0.5), ("a", "d", 1.0), ("b", "d", 1.0)],
            &["d"],
        );
        let p = Priority { order: vec![0, 1], weights: vec![2.0, 1.0] };
        let opts = SolverOptions::for_graph(&g);
        let r = select_rate(&g, 0, std::slice::from_ref(&p), &opts).unwrap();
        let cap = g.rate_cap(0);
        let (mut best_r, mut best_v) = (0.0, f64::MIN);
        for k in 0..=10_000 {
            let x = cap * k as f64 / 10_000.0;
            let v = rate_objective(&g, x, std::slice::from_ref(&p));
            if v > best_v {
                best_v = v;
                best_r = x;
            }
        }
        assert!((r - best_r).abs() <= cap / 10_000.0, "{r} vs {best_r}");
        assert!(rate_objective(&g, r, &[p]) >= best_v - 1e-12);
    }

    #[test]
    fn objective_equals_weighted_flows() {
        let g = fan();
        let state = state_with(&g, &[("i", 5.0), ("a", 1.0), ("b", 4.0), ("c", 2.0)]);
        let p = neighbor_priorities(&state, 0, 0, &g);
        let opts = SolverOptions::for_graph(&g);
        let r = select_rate(&g, 0, std::slice::from_ref(&p), &opts).unwrap();
        let x = assign_flows(&g, r, &p.order);
        let weighted: f64 = p.weights.iter().zip(&x).map(|(w, x)| w * x).sum();
        assert!((rate_objective(&g, r, &[p]) - weighted).abs() < 1e-9);
    }

    #[test]
    fn single_link_solution() {
        let g = graph(&[("s", 10.0), ("d", 10.0)], &[("s", "d", 1.0)], &["d"]);
        let sol = solve(&g, &SolverOptions::for_graph(&g)).unwrap();
        let f = fixed_rate_optimum(10.0, 1.0).unwrap().throughput;
        assert!((sol.multicast_rate - f).abs() < 0.01 * f, "{} vs {f}", sol.multicast_rate);
        assert!(sol.converged, "violation {}", sol.max_violation);
    }

    #[test]
    fn diamond_matches_cutset() {
        let g = diamond(10.0);
        let sol = solve(&g, &SolverOptions::for_graph(&g)).unwrap();
        let cut = cutset_rate_fixed(&g, 256, 2).unwrap().rate;
        assert!((sol.multicast_rate - cut).abs() < 0.01 * cut, "{} vs {cut}", sol.multicast_rate);
    }

    // The source is strong enough that only the relay hops limit the rate.
    #[test]
    fn parallel_paths_double_the_rate() {
        let (ps, pr) = (1000.0, 10.0);
        let one = graph(&[("s", ps), ("a", pr), ("d", pr)], &[("s", "a", 1.0), ("a", "d", 1.0)], &["d"]);
        let two = graph(
            &[("s", ps), ("a", pr), ("b", pr), ("d", pr)],
            &[("s", "a", 1.0), ("a", "d", 1.0), ("s", "b", 1.0), ("b", "d", 1.0)],
            &["d"],
        );
        let c1 = solve(&one, &SolverOptions::for_graph(&one)).unwrap().multicast_rate;
        let c2 = solve(&two, &SolverOptions::for_graph(&two)).unwrap().multicast_rate;
        assert!((c2 - 2.0 * c1).abs() < 0.01 * 2.0 * c1, "{c2} vs 2 x {c1}");
    }

    // b cannot forward a's session; flow pushed to b for a must not count.
    #[test]
    fn multicast_matches_cutset() {
        let g = graph(
            &[("s", 10.0), ("a", 10.0), ("b", 10.0)],
            &[("s", "a", 1.0), ("s", "b", 0.5), ("a", "b", 1.0)],
            &["a", "b"],
        );
        let sol = solve(&g, &SolverOptions::for_graph(&g)).unwrap();
        let cut = cutset_rate_fixed(&g, 256, 2).unwrap().rate;
        assert!((sol.multicast_rate - cut).abs() < 0.01 * cut, "{} vs {cut}", sol.multicast_rate);
        assert!(sol.converged);
    }

    #[test]
    fn lp_matches_min_cut() {
        for g in [diamond(10.0), fan()] {
            let cuts = enumerate_cuts(&g).unwrap();
            let sol = cutset_rate_fixed(&g, 128, 1).unwrap();
            let lp = max_flow_fixed_rates(&g, &sol.assignment).unwrap();
            let (mc, _) = min_cut(&cuts, &sol.assignment, &g).unwrap();
            assert!((lp - mc).abs() < 1e-9, "{lp} vs {mc}");
        }
    }

    #[test]
    fn options_validation() {
        let g = diamond(1.0);
        let mut o = SolverOptions::for_graph(&g);
        assert!(o.validate().is_ok());
        o.averaging_window = 0.0;
        assert!(solve(&g, &o).is_err());
        let mut o = SolverOptions::for_graph(&g);
        o.gamma0 = -1.0;
        assert!(o.validate().is_err());
    }
}
