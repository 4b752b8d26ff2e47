//! Differentiated channel access: two saturated senders sharing one
//! receiver, one offering only class 0 and the other only class 3.
//!
//! Run with `cargo run --release --example edca_contention`.

use wsn_prio::network::{NetworkConfig, NetworkSim, RunLabel};
use wsn_prio::routing::RoutingMode;
use wsn_prio::simcore::{NodeId, PriorityClass};
use wsn_prio::topology::{NodePosition, Terrain, Topology};
use wsn_prio::traffic::SizeDist;

fn main() {
    let positions = vec![
        NodePosition { node: NodeId(0), x_m: 0.0, y_m: 0.0 },
        NodePosition { node: NodeId(1), x_m: 100.0, y_m: 0.0 },
        NodePosition { node: NodeId(2), x_m: 50.0, y_m: 50.0 },
    ];
    let topo = Topology { positions, sink: NodeId(2) };
    let mut mask = vec![[false; 4]; 3];
    mask[0][PriorityClass::CRITICAL.index()] = true;
    mask[1][PriorityClass::PERIODIC.index()] = true;

    let mut wins = 0;
    for seed in 1..=20 {
        let mut cfg = NetworkConfig::new(RoutingMode::Priority, seed, 2000.0, SizeDist::Fixed(1024));
        cfg.duration_s = 10.0;
        cfg.source_mask = Some(mask.clone());
        let label = RunLabel {
            run_id: format!("edca_{seed}"),
            terrain: Terrain::square(100.0).unwrap(),
            config_echo: String::new(),
        };
        let r = NetworkSim::new(cfg, topo.clone()).unwrap().run(label).unwrap();
        let s0 = r.shares.get(PriorityClass::CRITICAL);
        let s3 = r.shares.get(PriorityClass::PERIODIC);
        if s0 > s3 {
            wins += 1;
        }
        println!("seed {seed:>2}: class-0 sender {s0:.3}  class-3 sender {s3:.3}");
    }
    println!("class-0 sender ahead in {wins}/20 seeds");
}
