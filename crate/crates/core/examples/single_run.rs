//! One paired run: priority and baseline modes on the same topology and
//! arrival streams.
//!
//! Run with `cargo run --release --example single_run [nodes] [seed]`.

use wsn_prio::cli::paired_runs;
use wsn_prio::config::SimConfig;
use wsn_prio::metrics::mean_delay;
use wsn_prio::network::terrain_for;
use wsn_prio::simcore::PriorityClass;
use wsn_prio::topology::Terrain;

fn main() {
    let mut args = std::env::args().skip(1);
    let nodes: usize = args.next().map_or(64, |s| s.parse().expect("node count"));
    let seed: u64 = args.next().map_or(1, |s| s.parse().expect("seed"));

    let cfg = SimConfig { duration_s: 30.0, ..SimConfig::default() };
    let terrain = Terrain::square(terrain_for(nodes)).unwrap();
    let reports = paired_runs(&cfg, seed, nodes, terrain).expect("run");

    for r in &reports {
        println!("{} ({} events, conserved: {})", r.run_id, r.events_processed, r.conserved());
        println!("  class  delivered   share  mean_delay_s  p95_delay_s  drops(q/mac/route)");
        for c in PriorityClass::ALL {
            let m = r.class(c);
            let d = mean_delay(m).ok();
            println!(
                "  {:>5}  {:>9}  {:>6.3}  {:>12}  {:>11}  {}/{}/{}",
                c,
                m.delivered_packets,
                r.shares.get(c),
                d.map_or("-".into(), |d| format!("{:.4}", d.mean_s)),
                d.map_or("-".into(), |d| format!("{:.4}", d.p95_s)),
                m.drops.overflow,
                m.drops.mac,
                m.drops.no_route
            );
        }
    }
}
