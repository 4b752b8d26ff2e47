use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Sub};

/// Simulated time in seconds.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SimTime(pub f64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0.0);

    pub fn from_secs(secs: f64) -> Self {
        SimTime(secs)
    }

    pub fn secs(self) -> f64 {
        self.0
    }
}

impl Eq for SimTime {}

impl PartialOrd for SimTime {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SimTime {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl Add<f64> for SimTime {
    type Output = SimTime;
    fn add(self, rhs: f64) -> SimTime {
        SimTime(self.0 + rhs)
    }
}

impl Sub for SimTime {
    type Output = f64;
    fn sub(self, rhs: SimTime) -> f64 {
        self.0 - rhs.0
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}s", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One of the four traffic classes. Lower level means more urgent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PriorityClass(u8);

impl PriorityClass {
    pub const COUNT: usize = 4;

    /// Real-time critical data, lowest delay.
    pub const CRITICAL: PriorityClass = PriorityClass(0);
    /// Real-time data.
    pub const REAL_TIME: PriorityClass = PriorityClass(1);
    /// Control data.
    pub const CONTROL: PriorityClass = PriorityClass(2);
    /// Normal low-priority periodic data.
    pub const PERIODIC: PriorityClass = PriorityClass(3);

    pub const ALL: [PriorityClass; 4] = [
        Self::CRITICAL,
        Self::REAL_TIME,
        Self::CONTROL,
        Self::PERIODIC,
    ];

    pub fn new(level: u8) -> Option<Self> {
        (usize::from(level) < Self::COUNT).then_some(PriorityClass(level))
    }

    pub fn level(self) -> u8 {
        self.0
    }

    pub fn index(self) -> usize {
        usize::from(self.0)
    }

    pub fn traffic_type(self) -> &'static str {
        match self.0 {
            0 => "real-time critical",
            1 => "real-time",
            2 => "control",
            _ => "normal periodic",
        }
    }
}

impl fmt::Display for PriorityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Per-hop queue timestamps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopRecord {
    pub node: NodeId,
    pub enqueued: SimTime,
    pub dequeued: Option<SimTime>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub id: u64,
    pub class: PriorityClass,
    pub src: NodeId,
    pub dst: NodeId,
    pub size_bits: u32,
    pub created_at: SimTime,
    pub hop_trace: Vec<HopRecord>,
    /// Source route this packet follows; empty until routed.
    pub route: Vec<NodeId>,
    /// Index into `route` of the node currently holding the packet.
    pub hop_index: usize,
    /// Index of the cached route chosen at the source, for delay feedback.
    pub route_slot: Option<usize>,
}

impl Packet {
    pub fn new(
        id: u64,
        class: PriorityClass,
        src: NodeId,
        dst: NodeId,
        size_bits: u32,
        created_at: SimTime,
    ) -> Self {
        debug_assert!(size_bits > 0);
        Packet {
            id,
            class,
            src,
            dst,
            size_bits,
            created_at,
            hop_trace: Vec::new(),
            route: Vec::new(),
            hop_index: 0,
            route_slot: None,
        }
    }

    pub fn record_enqueue(&mut self, node: NodeId, now: SimTime) {
        self.hop_trace.push(HopRecord {
            node,
            enqueued: now,
            dequeued: None,
        });
    }

    /// Stamps the dequeue time on the most recent hop; returns the queue wait.
    pub fn record_dequeue(&mut self, now: SimTime) -> f64 {
        match self.hop_trace.last_mut() {
            Some(hop) => {
                hop.dequeued = Some(now);
                now - hop.enqueued
            }
            None => 0.0,
        }
    }

    pub fn next_hop(&self) -> Option<NodeId> {
        self.route.get(self.hop_index + 1).copied()
    }

    /// Checks that hop timestamps never go backwards.
    pub fn trace_is_monotone(&self) -> bool {
        let mut last = self.created_at;
        for hop in &self.hop_trace {
            if hop.enqueued < last {
                return false;
            }
            last = hop.enqueued;
            if let Some(d) = hop.dequeued {
                if d < last {
                    return false;
                }
                last = d;
            }
        }
        true
    }
}
