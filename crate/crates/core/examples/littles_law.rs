//! Little's law as a self-consistency check on both simulators.
//!
//! Run with `cargo run --release --example littles_law`.

use wsn_prio::metrics::{littles_law_check, LITTLE_TOLERANCE};
use wsn_prio::network::{simulate, terrain_for, NetworkConfig};
use wsn_prio::queueing::{simulate_single_server, AnalyticModel, Horizon};
use wsn_prio::routing::RoutingMode;
use wsn_prio::simcore::PriorityClass;
use wsn_prio::topology::Terrain;
use wsn_prio::traffic::{ClassLoadSpec, SizeDist};

fn main() {
    let model = AnalyticModel::new(
        PriorityClass::ALL.map(|c| ClassLoadSpec::exponential(c, 0.2, 1.0).unwrap()),
    )
    .unwrap();
    let report = simulate_single_server(&model, Horizon::Departures(200_000), 3);
    for est in &report.classes {
        let check = littles_law_check(&est.little).unwrap();
        println!(
            "single server class {}: relative error {:.5} (passes: {})",
            est.class,
            check.relative_error,
            check.passes(LITTLE_TOLERANCE)
        );
    }

    // Packets in the network versus delivered-or-dropped sojourns.
    let mut cfg = NetworkConfig::new(RoutingMode::Priority, 3, 60.0 / 32.0, SizeDist::Fixed(1024));
    cfg.duration_s = 60.0;
    let r = simulate(&cfg, 32, Terrain::square(terrain_for(32)).unwrap(), "").unwrap();
    for c in PriorityClass::ALL {
        let check = littles_law_check(&r.little[c.index()]).unwrap();
        println!("network class {c}: relative error {:.4}", check.relative_error);
    }
}
