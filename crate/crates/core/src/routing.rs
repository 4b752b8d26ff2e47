//! Source routing for both protocols.
//!
//! Priority mode caches up to `k_max` node-disjoint routes per source, found
//! by repeatedly extracting a shortest path and deleting its interior nodes.
//! Each packet takes the route with the lowest smoothed delay estimate.
//! Baseline mode always uses the single shortest-hop route and serves a single
//! class-blind queue in random order.

use std::collections::{HashSet, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

use crate::queueing::EnqueueOutcome;
use crate::simcore::{NodeId, Packet, RngStream, SimTime};
use crate::topology::ConnectivityGraph;

pub const DEFAULT_K_MAX: usize = 3;
pub const DEFAULT_ALPHA: f64 = 0.3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RoutingError {
    #[error("no route from {src} to {sink}")]
    NoRoute { src: NodeId, sink: NodeId },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoutingMode {
    Priority,
    Baseline,
}

impl RoutingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RoutingMode::Priority => "priority",
            RoutingMode::Baseline => "baseline",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub hops: Vec<NodeId>,
    pub est_delay_s: f64,
    pub last_updated: SimTime,
    /// False until the first delivery; the estimate is a prior until then.
    pub observed: bool,
}

impl Route {
    pub fn new(hops: Vec<NodeId>) -> Self {
        Route {
            hops,
            est_delay_s: 0.0,
            last_updated: SimTime::ZERO,
            observed: false,
        }
    }

    pub fn hop_count(&self) -> usize {
        self.hops.len().saturating_sub(1)
    }

    pub fn interior(&self) -> &[NodeId] {
        if self.hops.len() <= 2 {
            &[]
        } else {
            &self.hops[1..self.hops.len() - 1]
        }
    }

    /// No repeated node and every consecutive pair is a graph edge.
    pub fn is_valid(&self, graph: &ConnectivityGraph) -> bool {
        let mut seen = HashSet::new();
        self.hops.iter().all(|n| seen.insert(*n))
            && self.hops.windows(2).all(|w| graph.has_edge(w[0], w[1]))
    }
}

/// Breadth-first shortest hop path avoiding `banned` nodes; ties go to the
/// lowest node id. When `skip_direct` is set the edge `src`–`sink` is ignored.
fn shortest_path(
    graph: &ConnectivityGraph,
    src: NodeId,
    sink: NodeId,
    banned: &[bool],
    skip_direct: bool,
) -> Option<Vec<NodeId>> {
    let n = graph.node_count();
    let mut parent: Vec<Option<NodeId>> = vec![None; n];
    let mut seen = vec![false; n];
    seen[src.index()] = true;
    let mut frontier = VecDeque::from([src]);
    while let Some(u) = frontier.pop_front() {
        for &v in graph.neighbors(u) {
            if seen[v.index()] || banned[v.index()] {
                continue;
            }
            if skip_direct && u == src && v == sink {
                continue;
            }
            seen[v.index()] = true;
            parent[v.index()] = Some(u);
            if v == sink {
                let mut path = vec![sink];
                let mut cur = sink;
                while let Some(p) = parent[cur.index()] {
                    path.push(p);
                    cur = p;
                }
                path.reverse();
                return Some(path);
            }
            frontier.push_back(v);
        }
    }
    None
}

/// Up to `k_max` pairwise node-disjoint routes, shortest first.
pub fn discover_disjoint_paths(
    graph: &ConnectivityGraph,
    src: NodeId,
    sink: NodeId,
    k_max: usize,
) -> Result<Vec<Route>, RoutingError> {
    assert_ne!(src, sink, "route discovery needs distinct endpoints");
    let mut banned = vec![false; graph.node_count()];
    let mut skip_direct = false;
    let mut routes = Vec::new();
    while routes.len() < k_max {
        let Some(path) = shortest_path(graph, src, sink, &banned, skip_direct) else {
            break;
        };
        if path.len() == 2 {
            skip_direct = true;
        }
        for n in &path[1..path.len() - 1] {
            banned[n.index()] = true;
        }
        routes.push(Route::new(path));
    }
    if routes.is_empty() {
        return Err(RoutingError::NoRoute { src, sink });
    }
    Ok(routes)
}

/// Index of the preferred route: lowest estimate, then fewer hops, then lower
/// first-hop id.
pub fn preferred_route(routes: &[Route]) -> Option<usize> {
    routes
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            a.est_delay_s
                .total_cmp(&b.est_delay_s)
                .then(a.hops.len().cmp(&b.hops.len()))
                .then(a.hops.get(1).cmp(&b.hops.get(1)))
        })
        .map(|(i, _)| i)
}

/// Routes from every source toward one sink.
#[derive(Debug, Clone)]
pub struct RouteCache {
    mode: RoutingMode,
    sink: NodeId,
    alpha: f64,
    routes: Vec<Vec<Route>>,
}

impl RouteCache {
    /// Discovers routes for every non-sink node. Disconnected sources simply
    /// end up with an empty list.
    pub fn build(graph: &ConnectivityGraph, sink: NodeId, mode: RoutingMode, k_max: usize, alpha: f64) -> Self {
        let k = match mode {
            RoutingMode::Priority => k_max.max(1),
            RoutingMode::Baseline => 1,
        };
        let routes = (0..graph.node_count())
            .map(|i| {
                let src = NodeId(i as u32);
                if src == sink {
                    Vec::new()
                } else {
                    discover_disjoint_paths(graph, src, sink, k).unwrap_or_default()
                }
            })
            .collect();
        RouteCache {
            mode,
            sink,
            alpha,
            routes,
        }
    }

    /// Seeds every unobserved route with `per_hop_s` times its hop count, so
    /// the shortest route starts as primary and alternates wait on standby
    /// until measured delay on the primary exceeds their prior.
    pub fn with_hop_prior(mut self, per_hop_s: f64) -> Self {
        for r in self.routes.iter_mut().flatten().filter(|r| !r.observed) {
            r.est_delay_s = per_hop_s * r.hop_count() as f64;
        }
        self
    }

    pub fn mode(&self) -> RoutingMode {
        self.mode
    }

    pub fn sink(&self) -> NodeId {
        self.sink
    }

    pub fn routes(&self, src: NodeId) -> &[Route] {
        &self.routes[src.index()]
    }

    /// Chooses a route for a packet leaving `src`; returns its cache slot.
    pub fn select_route(&self, src: NodeId) -> Result<(usize, &Route), RoutingError> {
        let routes = self.routes(src);
        let slot = match self.mode {
            RoutingMode::Priority => preferred_route(routes),
            RoutingMode::Baseline => (!routes.is_empty()).then_some(0),
        }
        .ok_or(RoutingError::NoRoute { src, sink: self.sink })?;
        Ok((slot, &routes[slot]))
    }

    /// Folds an observed end-to-end delay into the route's estimate.
    pub fn update_delay_estimate(&mut self, src: NodeId, slot: usize, observed_delay_s: f64, now: SimTime) {
        let alpha = self.alpha;
        if let Some(route) = self.routes[src.index()].get_mut(slot) {
            route.est_delay_s = smooth(route, observed_delay_s, alpha);
            route.observed = true;
            route.last_updated = now;
        }
    }

    /// Checks loop freedom, edge validity and (in priority mode) disjointness.
    pub fn check_invariants(&self, graph: &ConnectivityGraph) -> bool {
        self.routes.iter().all(|rs| {
            let valid = rs.iter().all(|r| r.is_valid(graph));
            let mut interior = HashSet::new();
            let disjoint = rs.iter().flat_map(|r| r.interior()).all(|n| interior.insert(*n));
            valid && (self.mode == RoutingMode::Baseline || disjoint)
        })
    }

    /// One line per route: `src: n1>n2>...>sink est_delay_ms`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, rs) in self.routes.iter().enumerate() {
            for r in rs {
                let hops: Vec<String> = r.hops.iter().map(|n| n.to_string()).collect();
                let _ = writeln!(out, "{}: {} {}", i, hops.join(">"), r.est_delay_s * 1e3);
            }
        }
        out
    }
}

/// Exponential smoothing; the first observation initializes directly.
pub fn smooth(route: &Route, observed: f64, alpha: f64) -> f64 {
    if route.observed {
        (1.0 - alpha) * route.est_delay_s + alpha * observed
    } else {
        observed
    }
}

/// Single class-blind FIFO-capacity queue of the baseline protocol.
#[derive(Debug, Clone)]
pub struct BaselineQueue {
    node: NodeId,
    items: VecDeque<Packet>,
    capacity: usize,
    drops: u64,
}

impl BaselineQueue {
    pub fn new(node: NodeId, capacity: usize) -> Self {
        assert!(capacity > 0, "queue capacity must be positive");
        BaselineQueue {
            node,
            items: VecDeque::new(),
            capacity,
            drops: 0,
        }
    }

    pub fn enqueue(&mut self, mut p: Packet, now: SimTime) -> EnqueueOutcome {
        if self.items.len() >= self.capacity {
            self.drops += 1;
            return EnqueueOutcome::Dropped(p);
        }
        p.record_enqueue(self.node, now);
        self.items.push_back(p);
        EnqueueOutcome::Accepted
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn drops(&self) -> u64 {
        self.drops
    }

    pub fn iter(&self) -> impl Iterator<Item = &Packet> {
        self.items.iter()
    }

    /// Removes a uniformly random packet, ignoring class.
    pub fn pick(&mut self, rng: &mut RngStream, now: SimTime) -> Option<Packet> {
        baseline_scheduler_pick(&mut self.items, rng).map(|mut p| {
            p.record_dequeue(now);
            p
        })
    }
}

/// Uniformly random removal from a queue.
pub fn baseline_scheduler_pick(queue: &mut VecDeque<Packet>, rng: &mut RngStream) -> Option<Packet> {
    if queue.is_empty() {
        return None;
    }
    let idx = rng.next_index(queue.len());
    queue.remove(idx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simcore::{PriorityClass, StreamId};

    fn ids(r: &Route) -> Vec<u32> {
        r.hops.iter().map(|n| n.0).collect()
    }

    #[test]
    fn line_graph_single_path() {
        let g = ConnectivityGraph::from_edges(3, &[(0, 1), (1, 2)]);
        let rs = discover_disjoint_paths(&g, NodeId(0), NodeId(2), 3).unwrap();
        assert_eq!(rs.len(), 1);
        assert_eq!(ids(&rs[0]), vec![0, 1, 2]);
    }

    #[test]
    fn four_cycle_two_paths() {
        // a=0 b=1 c=2 d=3
        let g = ConnectivityGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        let rs = discover_disjoint_paths(&g, NodeId(0), NodeId(2), 3).unwrap();
        assert_eq!(rs.iter().map(ids).collect::<Vec<_>>(), vec![vec![0, 1, 2], vec![0, 3, 2]]);
    }

    #[test]
    fn disconnected_is_no_route() {
        let g = ConnectivityGraph::from_edges(3, &[(1, 2)]);
        assert_eq!(
            discover_disjoint_paths(&g, NodeId(0), NodeId(2), 3),
            Err(RoutingError::NoRoute {
                src: NodeId(0),
                sink: NodeId(2)
            })
        );
    }

    #[test]
    fn direct_edge_returned_once() {
        let g = ConnectivityGraph::from_edges(3, &[(0, 2), (0, 1), (1, 2)]);
        let rs = discover_disjoint_paths(&g, NodeId(0), NodeId(2), 3).unwrap();
        assert_eq!(rs.iter().map(ids).collect::<Vec<_>>(), vec![vec![0, 2], vec![0, 1, 2]]);
    }

    fn route(hops: &[u32], est: f64) -> Route {
        Route {
            hops: hops.iter().map(|&n| NodeId(n)).collect(),
            est_delay_s: est,
            last_updated: SimTime::ZERO,
            observed: true,
        }
    }

    #[test]
    fn argmin_and_tie_breaks() {
        assert_eq!(preferred_route(&[route(&[0, 1, 9], 0.014), route(&[0, 2, 3, 9], 0.010)]), Some(1));
        assert_eq!(preferred_route(&[route(&[0, 4, 5, 6, 9], 0.01), route(&[0, 2, 3, 9], 0.01)]), Some(1));
        assert_eq!(preferred_route(&[route(&[0, 5, 9], 0.01), route(&[0, 2, 9], 0.01)]), Some(1));
        assert_eq!(preferred_route(&[]), None);
    }

    #[test]
    fn baseline_uses_shortest_only() {
        let g = ConnectivityGraph::from_edges(5, &[(0, 1), (1, 4), (0, 2), (2, 3), (3, 4)]);
        let mut cache = RouteCache::build(&g, NodeId(4), RoutingMode::Baseline, 3, 0.3);
        assert_eq!(cache.routes(NodeId(0)).len(), 1);
        cache.update_delay_estimate(NodeId(0), 0, 5.0, SimTime(1.0));
        let (slot, r) = cache.select_route(NodeId(0)).unwrap();
        assert_eq!((slot, ids(r)), (0, vec![0, 1, 4]));

        let cache = RouteCache::build(&g, NodeId(4), RoutingMode::Priority, 3, 0.3);
        assert_eq!(cache.routes(NodeId(0)).len(), 2);
        assert!(cache.check_invariants(&g));
    }

    #[test]
    fn smoothing_rules() {
        let g = ConnectivityGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        let mut cache = RouteCache::build(&g, NodeId(2), RoutingMode::Priority, 3, 0.3);
        cache.update_delay_estimate(NodeId(0), 0, 0.010, SimTime(1.0));
        assert_eq!(cache.routes(NodeId(0))[0].est_delay_s, 0.010);
        cache.update_delay_estimate(NodeId(0), 0, 0.020, SimTime(2.0));
        assert!((cache.routes(NodeId(0))[0].est_delay_s - 0.013).abs() < 1e-12);
        for _ in 0..200 {
            cache.update_delay_estimate(NodeId(0), 0, 0.05, SimTime(3.0));
        }
        assert!((cache.routes(NodeId(0))[0].est_delay_s - 0.05).abs() < 1e-12);
        assert_eq!(cache.routes(NodeId(0))[0].last_updated, SimTime(3.0));
    }

    #[test]
    fn unobserved_routes_are_tried() {
        let g = ConnectivityGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        let mut cache = RouteCache::build(&g, NodeId(2), RoutingMode::Priority, 3, 0.3);
        assert_eq!(cache.select_route(NodeId(0)).unwrap().0, 0);
        cache.update_delay_estimate(NodeId(0), 0, 0.01, SimTime(1.0));
        assert_eq!(cache.select_route(NodeId(0)).unwrap().0, 1);
    }

    #[test]
    fn dump_format() {
        let g = ConnectivityGraph::from_edges(3, &[(0, 1), (1, 2)]);
        let mut cache = RouteCache::build(&g, NodeId(2), RoutingMode::Priority, 3, 0.3);
        cache.update_delay_estimate(NodeId(0), 0, 0.0125, SimTime(1.0));
        let dump = cache.dump();
        assert_eq!(dump.lines().next().unwrap(), "0: 0>1>2 12.5");
    }

    fn pkt(id: u64, class: u8) -> Packet {
        Packet::new(id, PriorityClass::new(class).unwrap(), NodeId(1), NodeId(0), 8, SimTime(0.0))
    }

    #[test]
    fn pick_single_is_certain() {
        let mut q = VecDeque::from([pkt(1, 0)]);
        let mut rng = RngStream::new(1, StreamId::BaselineScheduler);
        assert_eq!(baseline_scheduler_pick(&mut q, &mut rng).unwrap().id, 1);
        assert!(baseline_scheduler_pick(&mut q, &mut rng).is_none());
    }

    #[test]
    fn pick_two_is_fair() {
        let mut rng = RngStream::new(2, StreamId::BaselineScheduler);
        let trials = 10_000;
        let mut first = 0;
        for _ in 0..trials {
            let mut q = VecDeque::from([pkt(1, 0), pkt(2, 3)]);
            if baseline_scheduler_pick(&mut q, &mut rng).unwrap().id == 1 {
                first += 1;
            }
        }
        let frac = first as f64 / trials as f64;
        assert!((frac - 0.5).abs() < 0.02, "frac {frac}");
    }

    #[test]
    fn baseline_queue_overflow() {
        let mut q = BaselineQueue::new(NodeId(3), 1);
        assert_eq!(q.enqueue(pkt(1, 0), SimTime(0.0)), EnqueueOutcome::Accepted);
        assert!(matches!(q.enqueue(pkt(2, 0), SimTime(0.0)), EnqueueOutcome::Dropped(_)));
        assert_eq!(q.drops(), 1);
        let mut rng = RngStream::new(1, StreamId::BaselineScheduler);
        let p = q.pick(&mut rng, SimTime(1.0)).unwrap();
        assert_eq!(p.hop_trace[0].dequeued, Some(SimTime(1.0)));
    }
}
