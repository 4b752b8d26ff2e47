//! Node-disjoint route discovery and delay-driven route selection.
//!
//! Run with `cargo run --release --example disjoint_paths`.

use wsn_prio::network::generate_topology;
use wsn_prio::routing::{discover_disjoint_paths, RouteCache, RoutingMode, DEFAULT_ALPHA};
use wsn_prio::simcore::{NodeId, SimTime};
use wsn_prio::topology::{build_graph, ConnectivityGraph, RadioModel, SinkPolicy, Terrain};

fn main() {
    // The four-cycle a-b-c-d-a has two disjoint routes from a to c.
    let ring = ConnectivityGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
    for r in discover_disjoint_paths(&ring, NodeId(0), NodeId(2), 3).unwrap() {
        println!("ring route: {:?}", r.hops);
    }

    let terrain = Terrain::square(750.0).unwrap();
    let topo = generate_topology(64, &terrain, SinkPolicy::Center, 5).unwrap();
    let graph = build_graph(&topo.positions, &RadioModel::default());
    let mut cache = RouteCache::build(&graph, topo.sink, RoutingMode::Priority, 3, DEFAULT_ALPHA).with_hop_prior(1e-3);
    assert!(cache.check_invariants(&graph));

    let src = NodeId(0);
    println!("routes from {src} to sink {}:", topo.sink);
    for r in cache.routes(src) {
        println!("  {} hops: {:?}", r.hop_count(), r.hops);
    }
    let (slot, _) = cache.select_route(src).unwrap();
    println!("selected slot {slot} before feedback");

    // Congestion reported on the primary shifts traffic to an alternate.
    cache.update_delay_estimate(src, slot, 0.5, SimTime(1.0));
    let (next, route) = cache.select_route(src).unwrap();
    println!("after a 500 ms observation on slot {slot}: slot {next}, est {:.1} ms", route.est_delay_s * 1e3);
}
