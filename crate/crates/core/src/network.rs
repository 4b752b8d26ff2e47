//! Packet-level network simulation: the per-hop pipeline from source queue
//! through contention and the shared channel to the sink.
//!
//! Carrier sense lags a transmission start by the propagation time across the
//! interference range, so nodes whose backoff expires in the same instant
//! collide instead of deferring to each other.

use std::collections::HashMap;

use thiserror::Error;

use crate::mac::{transmission_time, ChannelState, EdcaParams, FailureOutcome, MacError, MacPhase, MacState, Transmission};
use crate::metrics::{bandwidth_share, DropCause, MetricsCollector, RunReport};
use crate::queueing::{EnqueueOutcome, PriorityQueueBank, DEFAULT_CAPACITY_PER_CLASS};
use crate::routing::{BaselineQueue, RouteCache, RoutingMode, DEFAULT_ALPHA, DEFAULT_K_MAX};
use crate::simcore::{
    EngineError, Handler, NodeId, Packet, PriorityClass, RngStream, Scheduler, SimEvent, SimTime, StreamId,
};
use crate::topology::{build_graph, ConnectivityGraph, RadioModel, SinkPolicy, Terrain, Topology, TopologyError};
use crate::traffic::{make_packet, next_interarrival, ClassLoadSpec, SizeDist, TrafficError};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Mac(#[from] MacError),
    #[error(transparent)]
    Traffic(#[from] TrafficError),
    #[error("invalid network configuration: {0}")]
    Config(String),
}

/// Parameters of one packet-level run.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub mode: RoutingMode,
    pub seed: u64,
    pub radio: RadioModel,
    /// Access table used in priority mode. Baseline mode keeps its timing
    /// (slot, SIFS, retry limit, overhead) but uses plain DCF windows.
    pub edca: EdcaParams,
    /// Per-node, per-class offered load.
    pub loads: [ClassLoadSpec; PriorityClass::COUNT],
    /// Per-class capacity in priority mode; the baseline's single queue gets
    /// four times this.
    pub queue_capacity: usize,
    pub k_max: usize,
    pub alpha: f64,
    pub duration_s: f64,
    pub warmup_fraction: f64,
    pub sink: SinkPolicy,
    /// Optional per-node class enable mask; all sources on when absent.
    pub source_mask: Option<Vec<[bool; PriorityClass::COUNT]>>,
}

impl NetworkConfig {
    pub fn new(mode: RoutingMode, seed: u64, lambda_per_class: f64, size: SizeDist) -> Self {
        let radio = RadioModel::default();
        let edca = EdcaParams::default();
        let loads = PriorityClass::ALL.map(|c| {
            ClassLoadSpec::from_packet_sizes(c, lambda_per_class, size, radio.bitrate_bps, edca.frame_overhead_s)
                .expect("default load spec is valid")
        });
        NetworkConfig {
            mode,
            seed,
            radio,
            edca,
            loads,
            queue_capacity: DEFAULT_CAPACITY_PER_CLASS,
            k_max: DEFAULT_K_MAX,
            alpha: DEFAULT_ALPHA,
            duration_s: 100.0,
            warmup_fraction: 0.1,
            sink: SinkPolicy::Center,
            source_mask: None,
        }
    }

    pub fn mac_params(&self) -> EdcaParams {
        match self.mode {
            RoutingMode::Priority => self.edca,
            RoutingMode::Baseline => EdcaParams {
                classes: EdcaParams::dcf().classes,
                ..self.edca
            },
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.radio.validate()?;
        self.edca.validate()?;
        for l in &self.loads {
            l.validate()?;
        }
        let bad = |m: &str| Err(SimError::Config(m.to_string()));
        if self.queue_capacity == 0 {
            return bad("queue capacity must be positive");
        }
        if self.k_max == 0 {
            return bad("k_max must be at least 1");
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("alpha must be in (0, 1]");
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return bad("duration must be positive");
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return bad("warmup fraction must be in [0, 1)");
        }
        Ok(())
    }
}

/// Labels copied into the report.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLabel {
    pub run_id: String,
    pub terrain: Terrain,
    pub config_echo: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    PacketArrival { node: NodeId, class: PriorityClass },
    BackoffExpiry { node: NodeId, token: u64 },
    /// Carrier of `sender` becomes audible to its neighborhood.
    ChannelBusy { sender: NodeId },
    /// Carrier of `sender` disappears; waiting nodes re-check the channel.
    ChannelIdleCheck { sender: NodeId },
    TxEnd { tx: u64 },
    RxComplete { tx: u64 },
    AckReceived { node: NodeId },
    AckTimeout { node: NodeId },
}

#[derive(Debug, Clone)]
enum NodeQueue {
    Priority(PriorityQueueBank),
    Baseline(BaselineQueue),
}

#[derive(Debug, Clone)]
enum Frame {
    /// Head of this class queue is contending; still in the queue.
    Selected(PriorityClass),
    /// Removed from the queue and owned by the MAC.
    Held(Packet),
    /// Handed to the receiver; waiting for the acknowledgement.
    Sent,
}

#[derive(Debug, Clone)]
struct Node {
    queue: NodeQueue,
    mac: MacState,
    frame: Option<Frame>,
    sensed: u32,
}

pub struct NetworkSim {
    cfg: NetworkConfig,
    mac_params: EdcaParams,
    topo: Topology,
    graph: ConnectivityGraph,
    nodes: Vec<Node>,
    channel: ChannelState,
    routes: RouteCache,
    metrics: MetricsCollector,
    traffic_rng: Vec<Vec<RngStream>>,
    backoff_rng: RngStream,
    sched_rng: RngStream,
    next_packet: u64,
    next_tx: u64,
    on_air: HashMap<u64, (NodeId, NodeId, f64)>,
    arriving: HashMap<u64, (NodeId, Packet)>,
    sense_delay: f64,
    events: u64,
}

impl NetworkSim {
    pub fn new(cfg: NetworkConfig, topo: Topology) -> Result<Self, SimError> {
        cfg.validate()?;
        let graph = build_graph(&topo.positions, &cfg.radio);
        let n = topo.positions.len();
        let nodes = (0..n)
            .map(|i| {
                let id = NodeId(i as u32);
                let queue = match cfg.mode {
                    RoutingMode::Priority => NodeQueue::Priority(PriorityQueueBank::new(id, cfg.queue_capacity)),
                    RoutingMode::Baseline => {
                        NodeQueue::Baseline(BaselineQueue::new(id, cfg.queue_capacity * PriorityClass::COUNT))
                    }
                };
                Node {
                    queue,
                    mac: MacState::default(),
                    frame: None,
                    sensed: 0,
                }
            })
            .collect();
        let mac_params = cfg.mac_params();
        let mean_bits = cfg.loads.iter().map(|l| l.size_dist.mean_bits()).sum::<f64>() / PriorityClass::COUNT as f64;
        let per_hop = mac_params.aifs_s(PriorityClass::CRITICAL)
            + transmission_time(mean_bits.round() as u32, &cfg.radio, mac_params.frame_overhead_s);
        let routes = RouteCache::build(&graph, topo.sink, cfg.mode, cfg.k_max, cfg.alpha).with_hop_prior(per_hop);
        let traffic_rng = (0..n)
            .map(|i| {
                PriorityClass::ALL
                    .iter()
                    .map(|&class| RngStream::new(cfg.seed, StreamId::Traffic { node: NodeId(i as u32), class }))
                    .collect()
            })
            .collect();
        let warmup_end = SimTime(cfg.duration_s * cfg.warmup_fraction);
        Ok(NetworkSim {
            mac_params,
            metrics: MetricsCollector::new(warmup_end, cfg.seed),
            backoff_rng: RngStream::new(cfg.seed, StreamId::Backoff),
            sched_rng: RngStream::new(cfg.seed, StreamId::BaselineScheduler),
            sense_delay: cfg.radio.propagation_delay(cfg.radio.interference_range_m),
            channel: ChannelState::new(n),
            traffic_rng,
            routes,
            nodes,
            graph,
            topo,
            cfg,
            next_packet: 0,
            next_tx: 0,
            on_air: HashMap::new(),
            arriving: HashMap::new(),
            events: 0,
        })
    }

    pub fn graph(&self) -> &ConnectivityGraph {
        &self.graph
    }

    pub fn routes(&self) -> &RouteCache {
        &self.routes
    }

    fn source_enabled(&self, node: NodeId, class: PriorityClass) -> bool {
        node != self.topo.sink
            && self.cfg.loads[class.index()].lambda_pps > 0.0
            && self
                .cfg
                .source_mask
                .as_ref()
                .is_none_or(|m| m.get(node.index()).is_some_and(|row| row[class.index()]))
    }

    /// Schedules the first arrival of every enabled source.
    pub fn prime(&mut self, sched: &mut Scheduler<EventKind>) -> Result<(), SimError> {
        for i in 0..self.nodes.len() {
            let node = NodeId(i as u32);
            for class in PriorityClass::ALL {
                if self.source_enabled(node, class) {
                    let gap = next_interarrival(&self.cfg.loads[class.index()], &mut self.traffic_rng[i][class.index()])?;
                    sched.schedule(SimTime(gap), EventKind::PacketArrival { node, class })?;
                }
            }
        }
        Ok(())
    }

    /// Runs to the configured horizon and builds the report.
    pub fn run(mut self, label: RunLabel) -> Result<RunReport, SimError> {
        let mut sched = Scheduler::new();
        self.prime(&mut sched)?;
        let end = SimTime(self.cfg.duration_s);
        sched.run_until(end, &mut self)?;
        Ok(self.finish(end, label))
    }

    /// Hands a packet to `node` as if it had just arrived there.
    pub fn inject(&mut self, node: NodeId, packet: Packet, sched: &mut Scheduler<EventKind>) -> Result<(), EngineError> {
        self.metrics.on_generated(packet.class, sched.now());
        self.forward(node, packet, sched)
    }

    fn drop_packet(&mut self, p: &Packet, cause: DropCause, now: SimTime) {
        self.metrics.on_dropped(p, cause, now);
    }

    /// Per-hop step: enqueue at `node`, which must be `p.route[p.hop_index]`.
    fn forward(&mut self, node: NodeId, p: Packet, sched: &mut Scheduler<EventKind>) -> Result<(), EngineError> {
        let now = sched.now();
        let reachable = p.next_hop().is_some_and(|next| self.graph.has_edge(node, next));
        if !reachable {
            self.drop_packet(&p, DropCause::NoRoute, now);
            return Ok(());
        }
        let class = p.class;
        let outcome = match &mut self.nodes[node.index()].queue {
            NodeQueue::Priority(bank) => bank.enqueue(p, now),
            NodeQueue::Baseline(q) => q.enqueue(p, now),
        };
        match outcome {
            EnqueueOutcome::Dropped(p) => self.drop_packet(&p, DropCause::QueueOverflow, now),
            EnqueueOutcome::Accepted => {
                self.metrics.on_enqueued(class, now);
                self.try_contend(node, sched)?;
            }
        }
        Ok(())
    }

    /// Picks the next frame if the MAC is free and starts contending for it.
    fn try_contend(&mut self, node: NodeId, sched: &mut Scheduler<EventKind>) -> Result<(), EngineError> {
        let now = sched.now();
        let n = &mut self.nodes[node.index()];
        if n.frame.is_none() {
            n.frame = match &mut n.queue {
                NodeQueue::Priority(bank) => bank.head_class().map(Frame::Selected),
                NodeQueue::Baseline(q) => {
                    let picked = q.pick(&mut self.sched_rng, now);
                    if let Some(p) = &picked {
                        self.metrics.on_dequeued(p.class, now);
                    }
                    picked.map(Frame::Held)
                }
            };
        }
        let class = match &n.frame {
            None => return Ok(()),
            Some(Frame::Selected(c)) => *c,
            Some(Frame::Held(p)) => p.class,
            Some(Frame::Sent) => return Ok(()),
        };
        if !matches!(n.mac.phase, MacPhase::Idle) {
            return Ok(());
        }
        let busy = n.sensed > 0;
        if let Some(at) = n.mac.begin_contention(class, &self.mac_params, &mut self.backoff_rng, busy, now.secs()) {
            let token = n.mac.token;
            sched.schedule(SimTime(at), EventKind::BackoffExpiry { node, token })?;
        }
        Ok(())
    }

    fn on_arrival(&mut self, node: NodeId, class: PriorityClass, sched: &mut Scheduler<EventKind>) -> Result<(), EngineError> {
        let now = sched.now();
        let spec = self.cfg.loads[class.index()];
        let rng = &mut self.traffic_rng[node.index()][class.index()];
        let mut p = make_packet(self.next_packet, node, self.topo.sink, &spec, now, rng);
        let gap = next_interarrival(&spec, rng).expect("enabled sources have a positive rate");
        sched.schedule(now + gap, EventKind::PacketArrival { node, class })?;
        self.next_packet += 1;
        self.metrics.on_generated(class, now);
        match self.routes.select_route(node) {
            Ok((slot, route)) => {
                p.route = route.hops.clone();
                p.route_slot = Some(slot);
                self.forward(node, p, sched)
            }
            Err(_) => {
                self.drop_packet(&p, DropCause::NoRoute, now);
                Ok(())
            }
        }
    }

    fn on_backoff_expiry(&mut self, node: NodeId, token: u64, sched: &mut Scheduler<EventKind>) -> Result<(), EngineError> {
        let now = sched.now();
        let n = &mut self.nodes[node.index()];
        if n.mac.token != token || n.mac.phase != MacPhase::Deferring {
            return Ok(());
        }
        if let Some(Frame::Selected(class)) = n.frame {
            let NodeQueue::Priority(bank) = &mut n.queue else {
                unreachable!("only priority queues select by class")
            };
            let p = bank.pop_class(class, now).expect("selected class has a head");
            self.metrics.on_dequeued(class, now);
            n.frame = Some(Frame::Held(p));
        }
        let Some(Frame::Held(p)) = &n.frame else {
            unreachable!("deferring without a frame")
        };
        let receiver = p.next_hop().expect("queued packets have a next hop");
        let airtime = transmission_time(p.size_bits, &self.cfg.radio, self.mac_params.frame_overhead_s);
        n.mac.on_tx_start();
        let id = self.next_tx;
        self.next_tx += 1;
        let tx = Transmission {
            id,
            sender: node,
            receiver,
            start: now.secs(),
            end: now.secs() + airtime,
            corrupted: false,
        };
        let distance = self.topo.positions[node.index()].distance(&self.topo.positions[receiver.index()]);
        self.channel.begin(tx, &self.graph);
        self.on_air.insert(id, (node, receiver, distance));
        sched.schedule(now + airtime, EventKind::TxEnd { tx: id })?;
        sched.schedule(now + self.sense_delay, EventKind::ChannelBusy { sender: node })?;
        Ok(())
    }

    fn on_channel_busy(&mut self, sender: NodeId, now: SimTime) {
        for &(r, _) in self.graph.audience(sender) {
            let n = &mut self.nodes[r.index()];
            n.sensed += 1;
            if n.sensed == 1 {
                n.mac.on_channel_busy(now.secs(), &self.mac_params, &mut self.backoff_rng);
            }
        }
    }

    fn on_channel_idle(&mut self, sender: NodeId, sched: &mut Scheduler<EventKind>) -> Result<(), EngineError> {
        let now = sched.now();
        for &(r, _) in self.graph.audience(sender) {
            let n = &mut self.nodes[r.index()];
            n.sensed -= 1;
            if n.sensed == 0 {
                if let Some(at) = n.mac.on_channel_idle(now.secs(), &self.mac_params) {
                    let token = n.mac.token;
                    sched.schedule(SimTime(at), EventKind::BackoffExpiry { node: r, token })?;
                }
            }
        }
        Ok(())
    }

    fn on_tx_end(&mut self, id: u64, sched: &mut Scheduler<EventKind>) -> Result<(), EngineError> {
        let now = sched.now();
        let tx = self.channel.end(id, &self.graph).expect("ending a live transmission");
        let (sender, _, distance) = self.on_air.remove(&id).expect("transmission bookkeeping");
        sched.schedule(now + self.sense_delay, EventKind::ChannelIdleCheck { sender })?;
        let n = &mut self.nodes[sender.index()];
        n.mac.on_tx_end();
        let ack_at = now + self.mac_params.sifs_s;
        if tx.corrupted {
            sched.schedule(ack_at + self.mac_params.slot_time_s, EventKind::AckTimeout { node: sender })?;
        } else {
            let Some(Frame::Held(p)) = n.frame.replace(Frame::Sent) else {
                unreachable!("transmitting without a held frame")
            };
            self.arriving.insert(id, (tx.receiver, p));
            sched.schedule(now + self.cfg.radio.propagation_delay(distance), EventKind::RxComplete { tx: id })?;
            sched.schedule(ack_at, EventKind::AckReceived { node: sender })?;
        }
        Ok(())
    }

    fn on_rx_complete(&mut self, id: u64, sched: &mut Scheduler<EventKind>) -> Result<(), EngineError> {
        let now = sched.now();
        let (receiver, mut p) = self.arriving.remove(&id).expect("frame in flight");
        p.hop_index += 1;
        if receiver == p.dst {
            self.metrics.on_delivered(&p, now);
            if self.cfg.mode == RoutingMode::Priority {
                if let Some(slot) = p.route_slot {
                    self.routes.update_delay_estimate(p.src, slot, now - p.created_at, now);
                }
            }
            Ok(())
        } else {
            self.forward(receiver, p, sched)
        }
    }

    fn on_ack(&mut self, node: NodeId, success: bool, sched: &mut Scheduler<EventKind>) -> Result<(), EngineError> {
        let now = sched.now();
        let n = &mut self.nodes[node.index()];
        if success {
            n.mac.on_tx_success(&self.mac_params);
            n.frame = None;
        } else if n.mac.on_tx_failure(&self.mac_params) == FailureOutcome::Drop {
            if let Some(Frame::Held(p)) = n.frame.take() {
                self.drop_packet(&p, DropCause::MacRetryExceeded, now);
            }
        }
        self.try_contend(node, sched)
    }

    /// Packets still inside the network, counted from node and channel state.
    pub fn scan_in_flight(&self) -> [u64; PriorityClass::COUNT] {
        let mut out = [0u64; PriorityClass::COUNT];
        for n in &self.nodes {
            let queued: Box<dyn Iterator<Item = &Packet>> = match &n.queue {
                NodeQueue::Priority(b) => Box::new(b.iter()),
                NodeQueue::Baseline(q) => Box::new(q.iter()),
            };
            for p in queued {
                out[p.class.index()] += 1;
            }
            if let Some(Frame::Held(p)) = &n.frame {
                out[p.class.index()] += 1;
            }
        }
        for (_, p) in self.arriving.values() {
            out[p.class.index()] += 1;
        }
        out
    }

    /// Closes the metrics window at `end` and assembles the report.
    pub fn finish(self, end: SimTime, label: RunLabel) -> RunReport {
        let scanned = self.scan_in_flight();
        let mut fin = self.metrics.finish(end);
        for (c, cons) in fin.conservation.iter_mut().enumerate() {
            debug_assert_eq!(cons.in_flight, scanned[c]);
            cons.in_flight = scanned[c];
        }
        let shares = bandwidth_share(&fin.classes);
        RunReport {
            run_id: label.run_id,
            mode: self.cfg.mode,
            seed: self.cfg.seed,
            nodes: self.topo.positions.len() - 1,
            terrain: label.terrain,
            config_echo: label.config_echo,
            classes: fin.classes,
            shares,
            conservation: fin.conservation,
            little: fin.little,
            duration_s: end.secs(),
            window_s: fin.window_s,
            events_processed: self.events,
        }
    }
}

impl Handler<EventKind> for NetworkSim {
    fn handle(&mut self, ev: SimEvent<EventKind>, sched: &mut Scheduler<EventKind>) -> Result<(), EngineError> {
        self.events += 1;
        match ev.payload {
            EventKind::PacketArrival { node, class } => self.on_arrival(node, class, sched),
            EventKind::BackoffExpiry { node, token } => self.on_backoff_expiry(node, token, sched),
            EventKind::ChannelBusy { sender } => {
                self.on_channel_busy(sender, sched.now());
                Ok(())
            }
            EventKind::ChannelIdleCheck { sender } => self.on_channel_idle(sender, sched),
            EventKind::TxEnd { tx } => self.on_tx_end(tx, sched),
            EventKind::RxComplete { tx } => self.on_rx_complete(tx, sched),
            EventKind::AckReceived { node } => self.on_ack(node, true, sched),
            EventKind::AckTimeout { node } => self.on_ack(node, false, sched),
        }
    }
}

/// Deploys `nodes` sensors plus a sink using the seed's topology stream.
pub fn generate_topology(nodes: usize, terrain: &Terrain, sink: SinkPolicy, seed: u64) -> Result<Topology, TopologyError> {
    let mut rng = RngStream::new(seed, StreamId::Topology);
    Topology::generate(nodes, terrain, sink, &mut rng)
}

/// Generates a topology for `cfg.seed` and runs one simulation on it.
pub fn simulate(cfg: &NetworkConfig, nodes: usize, terrain: Terrain, config_echo: &str) -> Result<RunReport, SimError> {
    let topo = generate_topology(nodes, &terrain, cfg.sink, cfg.seed)?;
    let label = RunLabel {
        run_id: format!("{}_n{}_s{}", cfg.mode.as_str(), nodes, cfg.seed),
        terrain,
        config_echo: config_echo.to_string(),
    };
    NetworkSim::new(cfg.clone(), topo)?.run(label)
}

/// Default terrain side for the standard node counts.
pub fn terrain_for(nodes: usize) -> f64 {
    match nodes {
        0..=32 => 500.0,
        33..=64 => 750.0,
        65..=128 => 1000.0,
        _ => 1500.0,
    }
}
