use super::{LittleSample, MetricsError};
use crate::simcore::{Packet, PriorityClass, RngStream, SimTime, StreamId};

pub const RESERVOIR_SIZE: usize = 4096;

/// Fixed-size uniform sample (Algorithm R).
#[derive(Debug, Clone)]
pub struct Reservoir {
    items: Vec<f64>,
    seen: u64,
    capacity: usize,
    rng: RngStream,
}

impl Reservoir {
    pub fn new(capacity: usize, rng: RngStream) -> Self {
        Reservoir {
            items: Vec::with_capacity(capacity.min(1024)),
            seen: 0,
            capacity,
            rng,
        }
    }

    pub fn push(&mut self, x: f64) {
        self.seen += 1;
        if self.items.len() < self.capacity {
            self.items.push(x);
        } else {
            let j = (self.rng.next_uniform() * self.seen as f64) as u64;
            if (j as usize) < self.capacity {
                self.items[j as usize] = x;
            }
        }
    }

    /// Nearest-rank quantile of the retained sample.
    pub fn quantile(&self, q: f64) -> Option<f64> {
        if self.items.is_empty() {
            return None;
        }
        let mut sorted = self.items.clone();
        sorted.sort_by(f64::total_cmp);
        let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
        Some(sorted[rank - 1])
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropCause {
    QueueOverflow,
    MacRetryExceeded,
    NoRoute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DropCounts {
    pub overflow: u64,
    pub mac: u64,
    pub no_route: u64,
}

impl DropCounts {
    pub fn add(&mut self, cause: DropCause) {
        match cause {
            DropCause::QueueOverflow => self.overflow += 1,
            DropCause::MacRetryExceeded => self.mac += 1,
            DropCause::NoRoute => self.no_route += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.overflow + self.mac + self.no_route
    }
}

/// Steady-state statistics for one class.
#[derive(Debug, Clone)]
pub struct ClassMetrics {
    pub class: PriorityClass,
    pub delivered_packets: u64,
    pub delivered_bits: u64,
    pub sum_delay_s: f64,
    pub sum_sq_delay_s2: f64,
    pub delay_samples: Reservoir,
    pub drops: DropCounts,
    pub time_avg_queue_len: f64,
}

impl ClassMetrics {
    fn new(class: PriorityClass, seed: u64) -> Self {
        ClassMetrics {
            class,
            delivered_packets: 0,
            delivered_bits: 0,
            sum_delay_s: 0.0,
            sum_sq_delay_s2: 0.0,
            delay_samples: Reservoir::new(RESERVOIR_SIZE, RngStream::new(seed ^ class.index() as u64, StreamId::Reservoir)),
            drops: DropCounts::default(),
            time_avg_queue_len: 0.0,
        }
    }
}

/// Exact whole-run counts: `generated = delivered + dropped + in_flight`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Conservation {
    pub generated: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub in_flight: u64,
}

impl Conservation {
    pub fn holds(&self) -> bool {
        self.generated == self.delivered + self.dropped + self.in_flight
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shares {
    pub shares: [f64; PriorityClass::COUNT],
    pub no_traffic: bool,
}

impl Shares {
    pub fn get(&self, class: PriorityClass) -> f64 {
        self.shares[class.index()]
    }

    /// share(0) > share(1) > share(2) > share(3).
    pub fn strictly_ordered(&self) -> bool {
        self.shares.windows(2).all(|w| w[0] > w[1])
    }
}

/// Delivered-bit share of each class.
pub fn bandwidth_share(classes: &[ClassMetrics]) -> Shares {
    let total: u64 = classes.iter().map(|m| m.delivered_bits).sum();
    let mut shares = [0.0; PriorityClass::COUNT];
    if total == 0 {
        return Shares {
            shares,
            no_traffic: true,
        };
    }
    for m in classes {
        shares[m.class.index()] = m.delivered_bits as f64 / total as f64;
    }
    Shares {
        shares,
        no_traffic: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayStats {
    pub mean_s: f64,
    pub p95_s: f64,
}

pub fn mean_delay(m: &ClassMetrics) -> Result<DelayStats, MetricsError> {
    if m.delivered_packets == 0 {
        return Err(MetricsError::NoSamples(m.class));
    }
    Ok(DelayStats {
        mean_s: m.sum_delay_s / m.delivered_packets as f64,
        p95_s: m.delay_samples.quantile(0.95).unwrap_or(f64::NAN),
    })
}

#[derive(Debug, Clone, Copy, Default)]
struct TimeAverage {
    level: u64,
    last: f64,
    area: f64,
}

impl TimeAverage {
    fn advance(&mut self, now: f64, window_start: f64) {
        let from = self.last.max(window_start);
        if now > from {
            self.area += self.level as f64 * (now - from);
        }
        self.last = self.last.max(now);
    }

    fn inc(&mut self, now: f64, window_start: f64) {
        self.advance(now, window_start);
        self.level += 1;
    }

    fn dec(&mut self, now: f64, window_start: f64) {
        self.advance(now, window_start);
        self.level -= 1;
    }
}

/// Event hooks feeding per-class statistics. Observations before the warm-up
/// boundary count toward conservation totals only.
#[derive(Debug, Clone)]
pub struct MetricsCollector {
    warmup_end: f64,
    classes: Vec<ClassMetrics>,
    totals: [Conservation; PriorityClass::COUNT],
    in_network: [TimeAverage; PriorityClass::COUNT],
    queued: [TimeAverage; PriorityClass::COUNT],
    left: [u64; PriorityClass::COUNT],
    sojourn: [f64; PriorityClass::COUNT],
}

impl MetricsCollector {
    pub fn new(warmup_end: SimTime, seed: u64) -> Self {
        MetricsCollector {
            warmup_end: warmup_end.secs(),
            classes: PriorityClass::ALL.iter().map(|&c| ClassMetrics::new(c, seed)).collect(),
            totals: [Conservation::default(); PriorityClass::COUNT],
            in_network: [TimeAverage::default(); PriorityClass::COUNT],
            queued: [TimeAverage::default(); PriorityClass::COUNT],
            left: [0; PriorityClass::COUNT],
            sojourn: [0.0; PriorityClass::COUNT],
        }
    }

    fn in_window(&self, now: SimTime) -> bool {
        now.secs() >= self.warmup_end
    }

    pub fn on_generated(&mut self, class: PriorityClass, now: SimTime) {
        let c = class.index();
        self.totals[c].generated += 1;
        self.in_network[c].inc(now.secs(), self.warmup_end);
    }

    pub fn on_enqueued(&mut self, class: PriorityClass, now: SimTime) {
        self.queued[class.index()].inc(now.secs(), self.warmup_end);
    }

    pub fn on_dequeued(&mut self, class: PriorityClass, now: SimTime) {
        self.queued[class.index()].dec(now.secs(), self.warmup_end);
    }

    fn on_left(&mut self, p: &Packet, now: SimTime) {
        let c = p.class.index();
        self.in_network[c].dec(now.secs(), self.warmup_end);
        if self.in_window(now) {
            self.left[c] += 1;
            self.sojourn[c] += now - p.created_at;
        }
    }

    pub fn on_delivered(&mut self, p: &Packet, now: SimTime) {
        let c = p.class.index();
        self.totals[c].delivered += 1;
        self.on_left(p, now);
        if self.in_window(now) {
            let delay = now - p.created_at;
            let m = &mut self.classes[c];
            m.delivered_packets += 1;
            m.delivered_bits += u64::from(p.size_bits);
            m.sum_delay_s += delay;
            m.sum_sq_delay_s2 += delay * delay;
            m.delay_samples.push(delay);
        }
    }

    pub fn on_dropped(&mut self, p: &Packet, cause: DropCause, now: SimTime) {
        let c = p.class.index();
        self.totals[c].dropped += 1;
        self.on_left(p, now);
        if self.in_window(now) {
            self.classes[c].drops.add(cause);
        }
    }

    pub fn classes(&self) -> &[ClassMetrics] {
        &self.classes
    }

    /// Closes the integrals at `end` and fills in time averages and the
    /// in-flight remainder.
    pub fn finish(mut self, end: SimTime) -> FinishedMetrics {
        let end_s = end.secs();
        let window = (end_s - self.warmup_end).max(0.0);
        let mut little = [LittleSample::default(); PriorityClass::COUNT];
        for c in 0..PriorityClass::COUNT {
            self.in_network[c].advance(end_s, self.warmup_end);
            self.queued[c].advance(end_s, self.warmup_end);
            self.totals[c].in_flight = self.in_network[c].level;
            if window > 0.0 {
                self.classes[c].time_avg_queue_len = self.queued[c].area / window;
            }
            little[c] = LittleSample {
                time_avg_backlog: if window > 0.0 { self.in_network[c].area / window } else { 0.0 },
                departures: self.left[c],
                sum_sojourn: self.sojourn[c],
                duration: window,
                mean_service: 0.0,
            };
        }
        FinishedMetrics {
            classes: self.classes,
            conservation: self.totals,
            little,
            window_s: window,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FinishedMetrics {
    pub classes: Vec<ClassMetrics>,
    pub conservation: [Conservation; PriorityClass::COUNT],
    pub little: [LittleSample; PriorityClass::COUNT],
    pub window_s: f64,
}
