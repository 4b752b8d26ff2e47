use proptest::prelude::*;

use wsn_prio::config::{ModeSelection, SimConfig};
use wsn_prio::mac::{detect_collisions, ChannelState, EdcaParams, FailureOutcome, MacState, Transmission};
use wsn_prio::network::{simulate, NetworkConfig};
use wsn_prio::queueing::{EnqueueOutcome, PriorityQueueBank};
use wsn_prio::routing::{discover_disjoint_paths, preferred_route, Route, RouteCache, RoutingMode};
use wsn_prio::simcore::{NodeId, Packet, PriorityClass, RngStream, Scheduler, SimEvent, SimTime, StreamId};
use wsn_prio::topology::{build_graph, deploy_random, ConnectivityGraph, NodePosition, RadioModel, Terrain};
use wsn_prio::traffic::SizeDist;

fn positions(n: usize, side: f64, seed: u64) -> Vec<NodePosition> {
    let terrain = Terrain::square(side).unwrap();
    deploy_random(n, &terrain, &mut RngStream::new(seed, StreamId::Topology))
}

fn class(i: u8) -> PriorityClass {
    PriorityClass::new(i).unwrap()
}

proptest! {
    #[test]
    fn engine_dispatches_in_time_then_insertion_order(times in prop::collection::vec(0u8..20, 1..60)) {
        let mut s = Scheduler::new();
        for (i, &t) in times.iter().enumerate() {
            s.schedule(SimTime(f64::from(t)), i).unwrap();
        }
        let mut seen = Vec::new();
        let mut h = |ev: SimEvent<usize>, _: &mut Scheduler<usize>| {
            seen.push((ev.at.secs(), ev.payload));
            Ok(())
        };
        s.run_until(SimTime(100.0), &mut h).unwrap();
        let mut expect: Vec<(f64, usize)> = times.iter().enumerate().map(|(i, &t)| (f64::from(t), i)).collect();
        expect.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        prop_assert_eq!(seen, expect);
    }

    #[test]
    fn deployed_nodes_stay_on_the_terrain(n in 1usize..200, w in 10.0f64..2000.0, h in 10.0f64..2000.0, seed: u64) {
        let terrain = Terrain::new(w, h).unwrap();
        let pos = deploy_random(n, &terrain, &mut RngStream::new(seed, StreamId::Topology));
        prop_assert_eq!(pos.len(), n);
        for (i, p) in pos.iter().enumerate() {
            prop_assert_eq!(p.node, NodeId(i as u32));
            prop_assert!(terrain.contains(p.x_m, p.y_m));
        }
    }

    #[test]
    fn graph_is_symmetric_and_interference_covers_comm(n in 2usize..60, seed: u64) {
        let g = build_graph(&positions(n, 800.0, seed), &RadioModel::default());
        for a in 0..n as u32 {
            for b in 0..n as u32 {
                let (a, b) = (NodeId(a), NodeId(b));
                prop_assert_eq!(g.has_edge(a, b), g.has_edge(b, a));
                prop_assert_eq!(g.interferes(a, b), g.interferes(b, a));
                if g.has_edge(a, b) {
                    prop_assert!(g.interferes(a, b));
                }
            }
        }
    }

    #[test]
    fn wider_range_never_removes_edges(n in 2usize..50, seed: u64, extra in 1.0f64..300.0) {
        let pos = positions(n, 800.0, seed);
        let short = RadioModel::default();
        let long = RadioModel { comm_range_m: short.comm_range_m + extra, interference_range_m: short.interference_range_m + extra, ..short };
        let (gs, gl) = (build_graph(&pos, &short), build_graph(&pos, &long));
        for a in 0..n as u32 {
            for &b in gs.neighbors(NodeId(a)) {
                prop_assert!(gl.has_edge(NodeId(a), b));
            }
        }
        prop_assert!(gl.edge_count() >= gs.edge_count());
    }

    #[test]
    fn discovered_routes_are_valid_and_disjoint(n in 3usize..50, seed: u64, k in 1usize..5) {
        let g = build_graph(&positions(n, 600.0, seed), &RadioModel::default());
        let sink = NodeId(0);
        for src in 1..n as u32 {
            let Ok(routes) = discover_disjoint_paths(&g, NodeId(src), sink, k) else { continue };
            prop_assert!(!routes.is_empty() && routes.len() <= k);
            let mut interior = std::collections::HashSet::new();
            let mut direct = 0;
            for r in &routes {
                prop_assert!(r.is_valid(&g));
                prop_assert_eq!(r.hops.first(), Some(&NodeId(src)));
                prop_assert_eq!(r.hops.last(), Some(&sink));
                direct += usize::from(r.hops.len() == 2);
                for x in r.interior() {
                    prop_assert!(interior.insert(*x), "node {} shared", x);
                }
            }
            prop_assert!(direct <= 1);
            for w in routes.windows(2) {
                prop_assert!(w[0].hop_count() <= w[1].hop_count());
            }
        }
        let cache = RouteCache::build(&g, sink, RoutingMode::Priority, k, 0.3);
        prop_assert!(cache.check_invariants(&g));
    }

    #[test]
    fn preferred_route_is_scale_invariant(est in prop::collection::vec(0.0f64..1.0, 1..6), scale in 0.01f64..100.0) {
        let routes = |f: f64| -> Vec<Route> {
            est.iter().enumerate().map(|(i, &e)| {
                let mut r = Route::new(vec![NodeId(100), NodeId(i as u32), NodeId(0)]);
                r.est_delay_s = e * f;
                r
            }).collect()
        };
        prop_assert_eq!(preferred_route(&routes(1.0)), preferred_route(&routes(scale)));
        let best = preferred_route(&routes(1.0)).unwrap();
        prop_assert!(est.iter().all(|&e| est[best] <= e));
    }

    #[test]
    fn channel_state_agrees_with_brute_force(
        n in 3usize..12,
        seed: u64,
        frames in prop::collection::vec((0u32..12, 0u32..12, 0u32..50, 1u32..20), 1..25),
    ) {
        let g = build_graph(&positions(n, 500.0, seed), &RadioModel::default());
        let txs: Vec<Transmission> = frames.iter().enumerate()
            .map(|(i, &(s, r, start, len))| Transmission {
                id: i as u64,
                sender: NodeId(s % n as u32),
                receiver: NodeId(r % n as u32),
                start: f64::from(start),
                end: f64::from(start + len),
                corrupted: false,
            })
            .filter(|t| t.sender != t.receiver)
            .collect();
        // Replay begins and ends in time order, ends first on ties.
        let mut events: Vec<(f64, bool, usize)> = Vec::new();
        for (i, t) in txs.iter().enumerate() {
            events.push((t.start, true, i));
            events.push((t.end, false, i));
        }
        events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut ch = ChannelState::new(n);
        let mut corrupted = std::collections::BTreeSet::new();
        for (_, begin, i) in events {
            if begin {
                ch.begin(txs[i], &g);
            } else if let Some(t) = ch.end(txs[i].id, &g) {
                if t.corrupted {
                    corrupted.insert(t.id);
                }
            }
        }
        prop_assert_eq!(corrupted, detect_collisions(&txs, &g));
    }

    #[test]
    fn bank_serves_strict_priority_within_capacity(
        ops in prop::collection::vec(prop_oneof![(0u8..4).prop_map(Some), Just(None)], 1..300),
        cap in 1usize..8,
    ) {
        let mut bank = PriorityQueueBank::new(NodeId(0), cap);
        let mut model: [std::collections::VecDeque<u64>; 4] = Default::default();
        for (id, op) in ops.into_iter().enumerate() {
            let now = SimTime(id as f64);
            match op {
                Some(c) => {
                    let p = Packet::new(id as u64, class(c), NodeId(0), NodeId(1), 8, now);
                    let full = model[c as usize].len() >= cap;
                    match bank.enqueue(p, now) {
                        EnqueueOutcome::Accepted => { prop_assert!(!full); model[c as usize].push_back(id as u64); }
                        EnqueueOutcome::Dropped(p) => { prop_assert!(full); prop_assert_eq!(p.id, id as u64); }
                    }
                }
                None => {
                    let expect = model.iter_mut().find_map(|q| q.pop_front());
                    let got = bank.dequeue_highest(now);
                    prop_assert_eq!(got.as_ref().map(|p| p.id), expect);
                    if let Some(p) = got {
                        prop_assert!(PriorityClass::ALL.iter().all(|&c| c >= p.class || bank.len(c) == 0));
                    }
                }
            }
            for c in PriorityClass::ALL {
                prop_assert!(bank.len(c) <= cap);
            }
        }
    }

    #[test]
    fn contention_window_stays_in_bounds(c in 0u8..4, failures in 0u32..20, narrow: bool) {
        let params = if narrow { EdcaParams::narrow() } else { EdcaParams::default() };
        let bounds = params.access(class(c));
        let mut rng = RngStream::new(u64::from(failures), StreamId::Backoff);
        let mut mac = MacState::default();
        for _ in 0..failures {
            mac.begin_contention(class(c), &params, &mut rng, false, 0.0);
            prop_assert!(mac.current_cw >= bounds.cw_min && mac.current_cw <= bounds.cw_max);
            prop_assert!(mac.backoff_remaining <= mac.current_cw);
            mac.on_tx_start();
            mac.on_tx_end();
            if mac.on_tx_failure(&params) == FailureOutcome::Drop {
                prop_assert_eq!(mac.current_cw, bounds.cw_min);
            }
            prop_assert!(mac.current_cw <= bounds.cw_max);
            prop_assert!((mac.current_cw + 1).is_power_of_two());
        }
    }

    #[test]
    fn config_echo_round_trips(
        seed: u64,
        nodes in 1usize..500,
        duration in 0.5f64..500.0,
        mode in prop_oneof![Just(ModeSelection::Priority), Just(ModeSelection::Baseline), Just(ModeSelection::Both)],
        lambda in prop::array::uniform4(0.0f64..1000.0),
        cw_exp in prop::array::uniform4(5u32..11),
        capacity in 1usize..200,
    ) {
        let mut cfg = SimConfig { seed, nodes, duration_s: duration, mode, queue_capacity: capacity, ..SimConfig::default() };
        for (i, &l) in lambda.iter().enumerate() {
            cfg.traffic[i].lambda_pps = l;
            cfg.edca.classes[i].cw_max = (1 << cw_exp[i]) - 1;
        }
        let text = cfg.to_text();
        let back = SimConfig::parse(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.to_text(), text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn small_random_networks_conserve_packets(nodes in 2usize..14, seed: u64, lambda in 1.0f64..80.0, baseline: bool) {
        let mode = if baseline { RoutingMode::Baseline } else { RoutingMode::Priority };
        let mut cfg = NetworkConfig::new(mode, seed, lambda, SizeDist::Exponential(1024.0));
        cfg.duration_s = 2.0;
        let r = simulate(&cfg, nodes, Terrain::square(500.0).unwrap(), "").unwrap();
        for c in &r.conservation {
            prop_assert!(c.holds(), "{:?}", r.conservation);
        }
    }
}

#[test]
fn empty_graph_has_no_routes() {
    let g = ConnectivityGraph::from_edges(3, &[]);
    assert!(discover_disjoint_paths(&g, NodeId(1), NodeId(0), 3).is_err());
}
