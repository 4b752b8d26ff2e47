//! Random deployment, the plain-text node table, and graph statistics.
//!
//! Run with `cargo run --release --example topology_fixture [nodes] [seed]`.

use wsn_prio::network::{generate_topology, terrain_for};
use wsn_prio::topology::{build_graph, RadioModel, SinkPolicy, Terrain, Topology};

fn main() {
    let mut args = std::env::args().skip(1);
    let nodes: usize = args.next().map_or(32, |s| s.parse().expect("node count"));
    let seed: u64 = args.next().map_or(1, |s| s.parse().expect("seed"));
    let terrain = Terrain::square(terrain_for(nodes)).unwrap();

    let topo = generate_topology(nodes, &terrain, SinkPolicy::Center, seed).unwrap();
    let table = topo.to_table();
    let reloaded = Topology::from_table(&table).unwrap();
    assert_eq!(reloaded, topo);
    print!("{table}");

    let radio = RadioModel::default();
    let g = build_graph(&topo.positions, &radio);
    let isolated = (0..g.node_count())
        .filter(|&i| g.neighbors(wsn_prio::simcore::NodeId(i as u32)).is_empty())
        .count();
    println!(
        "# {} nodes, {} links, mean degree {:.2}, {} isolated, sink {} with {} neighbours",
        g.node_count(),
        g.edge_count(),
        2.0 * g.edge_count() as f64 / g.node_count() as f64,
        isolated,
        topo.sink,
        g.neighbors(topo.sink).len()
    );
}
