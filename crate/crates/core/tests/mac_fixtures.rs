//! Small fixed topologies run through the full packet simulator.

use wsn_prio::metrics::stats::sign_test_p;
use wsn_prio::metrics::RunReport;
use wsn_prio::network::{NetworkConfig, NetworkSim, RunLabel};
use wsn_prio::routing::RoutingMode;
use wsn_prio::simcore::{NodeId, PriorityClass};
use wsn_prio::topology::{NodePosition, RadioModel, Terrain, Topology};
use wsn_prio::traffic::SizeDist;

fn topo(points: &[(f64, f64)], sink: u32) -> Topology {
    let positions = points
        .iter()
        .enumerate()
        .map(|(i, &(x_m, y_m))| NodePosition { node: NodeId(i as u32), x_m, y_m })
        .collect();
    Topology { positions, sink: NodeId(sink) }
}

fn run(cfg: NetworkConfig, t: Topology) -> RunReport {
    let label = RunLabel {
        run_id: "fixture".into(),
        terrain: Terrain::square(1000.0).unwrap(),
        config_echo: String::new(),
    };
    NetworkSim::new(cfg, t).unwrap().run(label).unwrap()
}

#[test]
fn lone_link_loses_nothing() {
    for mode in [RoutingMode::Priority, RoutingMode::Baseline] {
        let mut cfg = NetworkConfig::new(mode, 3, 20.0, SizeDist::Fixed(1024));
        cfg.duration_s = 10.0;
        let r = run(cfg, topo(&[(0.0, 0.0), (100.0, 0.0)], 1));
        for (m, c) in r.classes.iter().zip(&r.conservation) {
            assert_eq!(m.drops.total(), 0, "{mode:?}");
            assert_eq!(c.dropped, 0);
            assert!(c.in_flight <= 1);
            assert!(c.delivered > 0);
            assert!(c.holds());
        }
    }
}

#[test]
fn class0_sender_out_contends_class3_sender() {
    let t = topo(&[(0.0, 0.0), (100.0, 0.0), (50.0, 50.0)], 2);
    let mut mask = vec![[false; 4]; 3];
    mask[0][PriorityClass::CRITICAL.index()] = true;
    mask[1][PriorityClass::PERIODIC.index()] = true;
    let mut wins = 0;
    for seed in 1..=20 {
        let mut cfg = NetworkConfig::new(RoutingMode::Priority, seed, 2000.0, SizeDist::Fixed(1024));
        cfg.duration_s = 5.0;
        cfg.source_mask = Some(mask.clone());
        let r = run(cfg, t.clone());
        if r.shares.get(PriorityClass::CRITICAL) > r.shares.get(PriorityClass::PERIODIC) {
            wins += 1;
        }
    }
    let p = sign_test_p(wins, 20);
    assert!(p < 0.01, "{wins}/20 wins, p = {p}");
}

#[test]
fn baseline_gives_both_senders_the_same_access() {
    let t = topo(&[(0.0, 0.0), (100.0, 0.0), (50.0, 50.0)], 2);
    let mut mask = vec![[false; 4]; 3];
    mask[0][PriorityClass::CRITICAL.index()] = true;
    mask[1][PriorityClass::PERIODIC.index()] = true;
    let mut wins = 0;
    for seed in 1..=20 {
        let mut cfg = NetworkConfig::new(RoutingMode::Baseline, seed, 2000.0, SizeDist::Fixed(1024));
        cfg.duration_s = 5.0;
        cfg.source_mask = Some(mask.clone());
        let r = run(cfg, t.clone());
        if r.shares.get(PriorityClass::CRITICAL) > r.shares.get(PriorityClass::PERIODIC) {
            wins += 1;
        }
    }
    assert!(sign_test_p(wins, 20) > 0.01 && sign_test_p(20 - wins, 20) > 0.01, "{wins}/20");
}

/// Two senders either side of a sink. With a short interference range they
/// cannot hear each other and collide at the sink.
#[test]
fn hidden_senders_collide_at_the_sink() {
    let t = topo(&[(0.0, 0.0), (480.0, 0.0), (240.0, 0.0)], 2);
    let lost = |interference: f64| {
        let mut cfg = NetworkConfig::new(RoutingMode::Priority, 5, 60.0, SizeDist::Fixed(1024));
        cfg.duration_s = 10.0;
        cfg.radio = RadioModel { interference_range_m: interference, ..RadioModel::default() };
        let r = run(cfg, t.clone());
        assert!(r.conserved());
        let mac: u64 = r.classes.iter().map(|m| m.drops.mac).sum();
        let delivered: u64 = r.classes.iter().map(|m| m.delivered_packets).sum();
        (mac, delivered)
    };
    let (hidden_mac, hidden_ok) = lost(300.0);
    let (sensed_mac, sensed_ok) = lost(550.0);
    assert!(hidden_mac > 0);
    assert!(hidden_mac > 10 * sensed_mac.max(1), "{hidden_mac} vs {sensed_mac}");
    assert!(hidden_ok < sensed_ok);
}
