//! Integer min-cost max-flow.
//!
//! The solver runs successive shortest augmenting paths with Dijkstra on
//! reduced costs. All arc costs are nonnegative, so zero potentials are
//! valid from the start and no Bellman-Ford initialization is needed.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet, VecDeque};

use crate::error::{Error, Result};

/// Upper bound on total source capacity accepted by [`assignment_oracle`].
pub const ORACLE_SOURCE_CAPACITY: i64 = 10;

/// States explored by [`assignment_oracle`] before it gives up.
pub const ORACLE_STATE_LIMIT: usize = 2_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub capacity: i64,
    pub cost: i64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowNetwork {
    pub nodes: usize,
    pub arcs: Vec<Arc>,
    pub source: usize,
    pub sink: usize,
}

impl FlowNetwork {
    pub fn new(nodes: usize, source: usize, sink: usize) -> Self {
        FlowNetwork {
            nodes,
            arcs: Vec::new(),
            source,
            sink,
        }
    }

    /// Appends an arc and returns its index.
    pub fn add_arc(&mut self, from: usize, to: usize, capacity: i64, cost: i64) -> usize {
        self.arcs.push(Arc {
            from,
            to,
            capacity,
            cost,
        });
        self.arcs.len() - 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.source >= self.nodes || self.sink >= self.nodes {
            return Err(Error::Contract("source or sink out of range".into()));
        }
        if self.source == self.sink {
            return Err(Error::Contract("source and sink coincide".into()));
        }
        for (i, a) in self.arcs.iter().enumerate() {
            if a.from >= self.nodes || a.to >= self.nodes {
                return Err(Error::Contract(format!("arc {i} names an unknown node")));
            }
            if a.capacity < 0 || a.cost < 0 {
                return Err(Error::Contract(format!("arc {i} has a negative capacity or cost")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowResult {
    pub flow: i64,
    pub cost: i64,
    /// Flow on each arc, in the order of [`FlowNetwork::arcs`].
    pub arc_flows: Vec<i64>,
}

struct Residual {
    to: usize,
    cap: i64,
    cost: i64,
    rev: usize,
}

/// Maximum flow of minimum total cost.
///
/// Among equally short augmenting paths the one reached first from the
/// lowest-numbered nodes wins, so per-arc flows are reproducible.
pub fn min_cost_max_flow(net: &FlowNetwork) -> Result<FlowResult> {
    net.validate()?;
    let n = net.nodes;
    let mut graph: Vec<Vec<Residual>> = (0..n).map(|_| Vec::new()).collect();
    let mut handles = Vec::with_capacity(net.arcs.len());
    for a in &net.arcs {
        let fwd = graph[a.from].len();
        let bwd = graph[a.to].len() + usize::from(a.from == a.to);
        graph[a.from].push(Residual {
            to: a.to,
            cap: a.capacity,
            cost: a.cost,
            rev: bwd,
        });
        graph[a.to].push(Residual {
            to: a.from,
            cap: 0,
            cost: -a.cost,
            rev: fwd,
        });
        handles.push((a.from, fwd));
    }

    let mut potential = vec![0i64; n];
    let mut dist = vec![i64::MAX; n];
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; n];
    let (mut flow, mut cost) = (0i64, 0i64);
    loop {
        dist.fill(i64::MAX);
        prev.fill(None);
        dist[net.source] = 0;
        let mut heap = BinaryHeap::new();
        heap.push(Reverse((0i64, net.source)));
        while let Some(Reverse((d, u))) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for (i, e) in graph[u].iter().enumerate() {
                if e.cap <= 0 {
                    continue;
                }
                let nd = d + e.cost + potential[u] - potential[e.to];
                if nd < dist[e.to] {
                    dist[e.to] = nd;
                    prev[e.to] = Some((u, i));
                    heap.push(Reverse((nd, e.to)));
                }
            }
        }
        if dist[net.sink] == i64::MAX {
            break;
        }
        for v in 0..n {
            if dist[v] != i64::MAX {
                potential[v] += dist[v];
            }
        }
        let mut push = i64::MAX;
        let mut v = net.sink;
        while let Some((u, i)) = prev[v] {
            push = push.min(graph[u][i].cap);
            v = u;
        }
        let mut v = net.sink;
        while let Some((u, i)) = prev[v] {
            let rev = graph[u][i].rev;
            graph[u][i].cap -= push;
            graph[v][rev].cap += push;
            cost += push * graph[u][i].cost;
            v = u;
        }
        flow += push;
    }

    let arc_flows = net
        .arcs
        .iter()
        .zip(&handles)
        .map(|(a, &(u, i))| a.capacity - graph[u][i].cap)
        .collect();
    Ok(FlowResult {
        flow,
        cost,
        arc_flows,
    })
}

/// Checks capacity bounds, conservation, the reported totals, and that the
/// residual network has no negative-cost cycle (optimality certificate).
pub fn check_certificate(net: &FlowNetwork, res: &FlowResult) -> std::result::Result<(), String> {
    if res.arc_flows.len() != net.arcs.len() {
        return Err("arc flow count does not match the network".into());
    }
    let mut balance = vec![0i64; net.nodes];
    let mut cost = 0;
    for (i, (a, &f)) in net.arcs.iter().zip(&res.arc_flows).enumerate() {
        if f < 0 || f > a.capacity {
            return Err(format!("arc {i} carries {f} outside [0, {}]", a.capacity));
        }
        balance[a.from] -= f;
        balance[a.to] += f;
        cost += f * a.cost;
    }
    for (v, &b) in balance.iter().enumerate() {
        if v != net.source && v != net.sink && b != 0 {
            return Err(format!("node {v} violates conservation by {b}"));
        }
    }
    if balance[net.sink] != res.flow || balance[net.source] != -res.flow {
        return Err(format!("flow value {} does not match terminal balances", res.flow));
    }
    if cost != res.cost {
        return Err(format!("reported cost {} but arcs sum to {cost}", res.cost));
    }

    // Bellman-Ford from a virtual root connected to every node.
    let mut residual = Vec::new();
    for (a, &f) in net.arcs.iter().zip(&res.arc_flows) {
        if f < a.capacity {
            residual.push((a.from, a.to, a.cost));
        }
        if f > 0 {
            residual.push((a.to, a.from, -a.cost));
        }
    }
    let mut dist = vec![0i64; net.nodes];
    for _ in 0..net.nodes {
        let mut changed = false;
        for &(u, v, c) in &residual {
            if dist[u] + c < dist[v] {
                dist[v] = dist[u] + c;
                changed = true;
            }
        }
        if !changed {
            return Ok(());
        }
    }
    Err("residual network has a negative-cost cycle".into())
}

/// Minimum cost among maximum flows, found by exhaustive search.
///
/// Every integral flow with no circulation splits into unit source-sink
/// paths, so the search starts from the zero flow and repeatedly adds one
/// unit along any simple path of the original network that still has spare
/// capacity, visiting each distinct flow vector once. Shares no code with
/// [`min_cost_max_flow`].
pub fn assignment_oracle(net: &FlowNetwork) -> Result<i64> {
    net.validate()?;
    let source_cap: i64 = net
        .arcs
        .iter()
        .filter(|a| a.from == net.source && a.to != net.source)
        .map(|a| a.capacity)
        .sum();
    if source_cap > ORACLE_SOURCE_CAPACITY {
        return Err(Error::Refused(format!(
            "total source capacity {source_cap} exceeds {ORACLE_SOURCE_CAPACITY}"
        )));
    }

    let paths = simple_paths(net);
    let zero = vec![0i64; net.arcs.len()];
    let mut seen: HashSet<Vec<i64>> = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(zero.clone());
    queue.push_back((zero, 0i64));
    let (mut best_flow, mut best_cost) = (0i64, 0i64);
    while let Some((state, value)) = queue.pop_front() {
        let cost: i64 = state.iter().zip(&net.arcs).map(|(f, a)| f * a.cost).sum();
        if value > best_flow || (value == best_flow && cost < best_cost) {
            best_flow = value;
            best_cost = cost;
        }
        for path in &paths {
            if path.iter().all(|&i| state[i] < net.arcs[i].capacity) {
                let mut next = state.clone();
                for &i in path {
                    next[i] += 1;
                }
                if seen.insert(next.clone()) {
                    if seen.len() > ORACLE_STATE_LIMIT {
                        return Err(Error::Refused(format!(
                            "search exceeded {ORACLE_STATE_LIMIT} states"
                        )));
                    }
                    queue.push_back((next, value + 1));
                }
            }
        }
    }
    Ok(best_cost)
}

/// Arc-index lists of all simple source-to-sink paths over positive-capacity arcs.
fn simple_paths(net: &FlowNetwork) -> Vec<Vec<usize>> {
    fn walk(
        net: &FlowNetwork,
        u: usize,
        on_path: &mut Vec<bool>,
        arcs: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if u == net.sink {
            out.push(arcs.clone());
            return;
        }
        for (i, a) in net.arcs.iter().enumerate() {
            if a.from == u && a.capacity > 0 && !on_path[a.to] {
                on_path[a.to] = true;
                arcs.push(i);
                walk(net, a.to, on_path, arcs, out);
                arcs.pop();
                on_path[a.to] = false;
            }
        }
    }
    let mut on_path = vec![false; net.nodes];
    on_path[net.source] = true;
    let mut out = Vec::new();
    walk(net, net.source, &mut on_path, &mut Vec::new(), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_paths() -> FlowNetwork {
        // 0 = source, 1 = a, 2 = b, 3 = c, 4 = sink
        let mut net = FlowNetwork::new(5, 0, 4);
        net.add_arc(0, 1, 1, 0);
        net.add_arc(1, 2, 1, 3);
        net.add_arc(1, 3, 1, 1);
        net.add_arc(2, 4, 1, 0);
        net.add_arc(3, 4, 1, 0);
        net
    }

    #[test]
    fn zero_capacity_network() {
        let mut net = FlowNetwork::new(3, 0, 2);
        net.add_arc(0, 1, 0, 5);
        net.add_arc(1, 2, 0, 5);
        let res = min_cost_max_flow(&net).unwrap();
        assert_eq!((res.flow, res.cost), (0, 0));
        assert_eq!(assignment_oracle(&net).unwrap(), 0);
    }

    #[test]
    fn cheaper_of_two_paths() {
        let net = two_paths();
        let res = min_cost_max_flow(&net).unwrap();
        assert_eq!((res.flow, res.cost), (1, 1));
        assert_eq!(res.arc_flows, [1, 0, 1, 0, 1]);
        check_certificate(&net, &res).unwrap();
        assert_eq!(assignment_oracle(&net).unwrap(), 1);
    }

    #[test]
    fn empty_network() {
        let net = FlowNetwork::new(2, 0, 1);
        assert_eq!(min_cost_max_flow(&net).unwrap().flow, 0);
        assert_eq!(assignment_oracle(&net).unwrap(), 0);
    }

    #[test]
    fn max_flow_takes_priority_over_cost() {
        // A cheap path that blocks a second unit must be rerouted.
        let mut net = FlowNetwork::new(4, 0, 3);
        net.add_arc(0, 1, 1, 0);
        net.add_arc(0, 2, 1, 0);
        net.add_arc(1, 2, 1, 0);
        net.add_arc(1, 3, 1, 10);
        net.add_arc(2, 3, 1, 0);
        let res = min_cost_max_flow(&net).unwrap();
        assert_eq!((res.flow, res.cost), (2, 10));
        check_certificate(&net, &res).unwrap();
        assert_eq!(assignment_oracle(&net).unwrap(), 10);
    }

    #[test]
    fn malformed_networks_are_rejected() {
        let mut net = FlowNetwork::new(2, 0, 1);
        net.add_arc(0, 5, 1, 0);
        assert!(matches!(min_cost_max_flow(&net), Err(Error::Contract(_))));
        let mut net = FlowNetwork::new(2, 0, 1);
        net.add_arc(0, 1, -1, 0);
        assert!(matches!(min_cost_max_flow(&net), Err(Error::Contract(_))));
        let mut net = FlowNetwork::new(2, 0, 1);
        net.add_arc(0, 1, 1, -2);
        assert!(matches!(assignment_oracle(&net), Err(Error::Contract(_))));
    }

    #[test]
    fn oracle_guard() {
        let mut net = FlowNetwork::new(2, 0, 1);
        net.add_arc(0, 1, 11, 1);
        assert!(matches!(assignment_oracle(&net), Err(Error::Refused(_))));
    }

    #[test]
    fn certificate_detects_suboptimal_flow() {
        let net = two_paths();
        let bad = FlowResult {
            flow: 1,
            cost: 3,
            arc_flows: vec![1, 1, 0, 1, 0],
        };
        assert!(check_certificate(&net, &bad).unwrap_err().contains("negative-cost cycle"));
        let leaky = FlowResult {
            flow: 1,
            cost: 0,
            arc_flows: vec![1, 0, 0, 0, 1],
        };
        assert!(check_certificate(&net, &leaky).is_err());
    }
}
