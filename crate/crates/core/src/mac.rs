//! Contention MAC: EDCA-style per-class access parameters over DCF CSMA/CA
//! with binary exponential backoff, and the shared-channel collision model.
//!
//! Backoff is not simulated slot by slot. A contending node computes the
//! instant its AIFS plus remaining backoff slots would expire given the
//! current idle period; a busy channel freezes the countdown at the number
//! of whole slots already elapsed.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::simcore::{NodeId, PriorityClass, RngStream};
use crate::topology::{ConnectivityGraph, RadioModel};

#[derive(Debug, Error, PartialEq)]
pub enum MacError {
    #[error("class {class}: {msg}")]
    BadParams { class: PriorityClass, msg: String },
    #[error("{0}")]
    BadTiming(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AccessParams {
    pub aifs_slots: u32,
    pub cw_min: u32,
    pub cw_max: u32,
}

impl AccessParams {
    pub const fn new(aifs_slots: u32, cw_min: u32, cw_max: u32) -> Self {
        AccessParams {
            aifs_slots,
            cw_min,
            cw_max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdcaParams {
    pub classes: [AccessParams; PriorityClass::COUNT],
    pub slot_time_s: f64,
    pub sifs_s: f64,
    pub retry_limit: u32,
    /// Per-frame PHY/MAC header airtime added to every transmission.
    pub frame_overhead_s: f64,
}

impl Default for EdcaParams {
    fn default() -> Self {
        EdcaParams {
            classes: [
                AccessParams::new(2, 7, 1023),
                AccessParams::new(2, 15, 1023),
                AccessParams::new(3, 31, 1023),
                AccessParams::new(7, 31, 1023),
            ],
            slot_time_s: 20e-6,
            sifs_s: 10e-6,
            retry_limit: 7,
            frame_overhead_s: 192e-6,
        }
    }
}

fn is_window(w: u32) -> bool {
    (w + 1).is_power_of_two()
}

impl EdcaParams {
    /// Plain DCF: every class uses DIFS = 2 slots and CW 15..1023.
    pub fn dcf() -> Self {
        EdcaParams {
            classes: [AccessParams::new(2, 15, 1023); PriorityClass::COUNT],
            ..Self::default()
        }
    }

    /// Same AIFS and minimum windows as the default, with the two highest
    /// classes capped at CW 15 and 31 in the style of voice/video access
    /// categories. Under multi-hop saturation the small caps exhaust retries
    /// behind hidden terminals.
    pub fn narrow() -> Self {
        let mut p = Self::default();
        p.classes[0].cw_max = 15;
        p.classes[1].cw_max = 31;
        p
    }

    pub fn access(&self, class: PriorityClass) -> AccessParams {
        self.classes[class.index()]
    }

    pub fn aifs_s(&self, class: PriorityClass) -> f64 {
        f64::from(self.access(class).aifs_slots) * self.slot_time_s
    }

    pub fn validate(&self) -> Result<(), MacError> {
        for c in PriorityClass::ALL {
            let a = self.access(c);
            let bad = |msg: &str| {
                Err(MacError::BadParams {
                    class: c,
                    msg: msg.to_string(),
                })
            };
            if a.aifs_slots < 1 {
                return bad("aifs must be at least 1 slot");
            }
            if !is_window(a.cw_min) || !is_window(a.cw_max) {
                return bad("cw_min and cw_max must be of the form 2^k - 1");
            }
            if a.cw_min > a.cw_max {
                return bad("cw_min exceeds cw_max");
            }
            if c.index() > 0 {
                let prev = self.classes[c.index() - 1];
                if a.aifs_slots < prev.aifs_slots || a.cw_min < prev.cw_min {
                    return bad("aifs and cw_min must be nondecreasing in class index");
                }
            }
        }
        if !(self.slot_time_s > 0.0) || !(self.sifs_s >= 0.0) || !(self.frame_overhead_s >= 0.0) {
            return Err(MacError::BadTiming(
                "slot time must be positive; sifs and overhead nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Airtime of a frame: payload over the bitrate plus fixed overhead.
pub fn transmission_time(size_bits: u32, radio: &RadioModel, overhead_s: f64) -> f64 {
    f64::from(size_bits) / radio.bitrate_bps + overhead_s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MacPhase {
    Idle,
    /// Waiting for AIFS and backoff to expire on an idle channel.
    Deferring,
    /// Frozen: channel sensed busy.
    BackingOff,
    Transmitting,
    WaitingAck,
}

impl fmt::Display for MacPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MacPhase::Idle => "idle",
            MacPhase::Deferring => "deferring",
            MacPhase::BackingOff => "backing-off",
            MacPhase::Transmitting => "transmitting",
            MacPhase::WaitingAck => "waiting-ack",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureOutcome {
    Retry,
    /// Retry limit exceeded; the frame is dropped and the window reset.
    Drop,
}

/// Per-node contention state.
#[derive(Debug, Clone)]
pub struct MacState {
    pub phase: MacPhase,
    pub current_cw: u32,
    pub backoff_remaining: u32,
    pub retry_count: u32,
    pub active_class: Option<PriorityClass>,
    backoff_drawn: bool,
    after_tx: bool,
    /// Start of the current idle deferral (max of idle onset and attempt start).
    defer_from: f64,
    /// Bumped whenever a scheduled access becomes stale.
    pub token: u64,
}

impl Default for MacState {
    fn default() -> Self {
        MacState {
            phase: MacPhase::Idle,
            current_cw: 0,
            backoff_remaining: 0,
            retry_count: 0,
            active_class: None,
            backoff_drawn: false,
            after_tx: false,
            defer_from: 0.0,
            token: 0,
        }
    }
}

impl MacState {
    fn draw_backoff(&mut self, rng: &mut RngStream) {
        self.backoff_remaining = rng.next_inclusive(self.current_cw);
        self.backoff_drawn = true;
    }

    /// Starts contending for a frame of `class`. Returns the access instant
    /// when the channel is idle, `None` when frozen behind a busy channel.
    pub fn begin_contention(
        &mut self,
        class: PriorityClass,
        params: &EdcaParams,
        rng: &mut RngStream,
        channel_busy: bool,
        now: f64,
    ) -> Option<f64> {
        if self.retry_count == 0 {
            self.active_class = Some(class);
            self.current_cw = params.access(class).cw_min;
        }
        self.backoff_drawn = false;
        if self.after_tx || channel_busy {
            self.draw_backoff(rng);
            self.after_tx = false;
        } else {
            self.backoff_remaining = 0;
        }
        self.token += 1;
        if channel_busy {
            self.phase = MacPhase::BackingOff;
            None
        } else {
            self.phase = MacPhase::Deferring;
            self.defer_from = now;
            Some(self.access_time(params))
        }
    }

    /// Instant at which the current deferral ends, if the channel stays idle.
    pub fn access_time(&self, params: &EdcaParams) -> f64 {
        let class = self.active_class.expect("contending without a class");
        self.defer_from
            + params.aifs_s(class)
            + f64::from(self.backoff_remaining) * params.slot_time_s
    }

    /// Channel sensed busy: freeze the countdown.
    pub fn on_channel_busy(&mut self, now: f64, params: &EdcaParams, rng: &mut RngStream) {
        if self.phase != MacPhase::Deferring {
            return;
        }
        let class = self.active_class.expect("deferring without a class");
        let counting_since = self.defer_from + params.aifs_s(class);
        if now > counting_since {
            let elapsed = ((now - counting_since) / params.slot_time_s).floor() as u32;
            self.backoff_remaining = self.backoff_remaining.saturating_sub(elapsed);
        }
        if !self.backoff_drawn {
            self.draw_backoff(rng);
        }
        self.phase = MacPhase::BackingOff;
        self.token += 1;
    }

    /// Channel sensed idle again: resume and return the new access instant.
    pub fn on_channel_idle(&mut self, now: f64, params: &EdcaParams) -> Option<f64> {
        if self.phase != MacPhase::BackingOff {
            return None;
        }
        self.phase = MacPhase::Deferring;
        self.defer_from = now;
        self.token += 1;
        Some(self.access_time(params))
    }

    pub fn on_tx_start(&mut self) {
        self.phase = MacPhase::Transmitting;
        self.backoff_remaining = 0;
        self.token += 1;
    }

    pub fn on_tx_end(&mut self) {
        self.phase = MacPhase::WaitingAck;
    }

    pub fn on_tx_success(&mut self, params: &EdcaParams) {
        if let Some(c) = self.active_class {
            self.current_cw = params.access(c).cw_min;
        }
        self.retry_count = 0;
        self.after_tx = true;
        self.phase = MacPhase::Idle;
    }

    /// Binary exponential backoff after a missing acknowledgment.
    pub fn on_tx_failure(&mut self, params: &EdcaParams) -> FailureOutcome {
        let class = self.active_class.expect("failure without a class");
        let access = params.access(class);
        self.after_tx = true;
        self.phase = MacPhase::Idle;
        self.retry_count += 1;
        if self.retry_count > params.retry_limit {
            self.retry_count = 0;
            self.current_cw = access.cw_min;
            FailureOutcome::Drop
        } else {
            self.current_cw = (2 * (self.current_cw + 1) - 1).min(access.cw_max);
            FailureOutcome::Retry
        }
    }
}

/// One frame on the air.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transmission {
    pub id: u64,
    pub sender: NodeId,
    pub receiver: NodeId,
    pub start: f64,
    pub end: f64,
    pub corrupted: bool,
}

/// Physical channel occupancy as seen from every node.
#[derive(Debug, Clone)]
pub struct ChannelState {
    /// Transmissions currently audible at each node, own ones included.
    audible: Vec<Vec<u64>>,
    live: Vec<Transmission>,
}

impl ChannelState {
    pub fn new(node_count: usize) -> Self {
        ChannelState {
            audible: vec![Vec::new(); node_count],
            live: Vec::new(),
        }
    }

    /// Puts a transmission on the air, corrupting any reception it overlaps.
    pub fn begin(&mut self, tx: Transmission, graph: &ConnectivityGraph) {
        let mut tx = tx;
        if !self.audible[tx.receiver.index()].is_empty() {
            tx.corrupted = true;
        }
        for t in &mut self.live {
            if t.receiver == tx.sender || graph.interferes(tx.sender, t.receiver) {
                t.corrupted = true;
            }
        }
        let reached = std::iter::once(tx.sender).chain(graph.audience(tx.sender).iter().map(|(n, _)| *n));
        for r in reached {
            self.audible[r.index()].push(tx.id);
        }
        self.live.push(tx);
    }

    /// Takes a transmission off the air and returns its final state.
    pub fn end(&mut self, id: u64, graph: &ConnectivityGraph) -> Option<Transmission> {
        let pos = self.live.iter().position(|t| t.id == id)?;
        let tx = self.live.swap_remove(pos);
        let reached = std::iter::once(tx.sender).chain(graph.audience(tx.sender).iter().map(|(n, _)| *n));
        for r in reached {
            self.audible[r.index()].retain(|&x| x != id);
        }
        Some(tx)
    }

    /// True when some other node's transmission is audible at `node`.
    pub fn busy_at(&self, node: NodeId) -> bool {
        self.audible[node.index()]
            .iter()
            .any(|id| self.live.iter().any(|t| t.id == *id && t.sender != node))
    }

    pub fn live(&self) -> &[Transmission] {
        &self.live
    }
}

/// Brute-force collision check over a finished set of transmissions: the
/// reception of `t` is corrupted iff another transmission overlaps it in time
/// and is audible at `t.receiver` (the receiver's own transmissions count).
pub fn detect_collisions(transmissions: &[Transmission], graph: &ConnectivityGraph) -> BTreeSet<u64> {
    let mut corrupted = BTreeSet::new();
    for t in transmissions {
        let hit = transmissions.iter().any(|o| {
            o.id != t.id
                && o.start < t.end
                && t.start < o.end
                && (o.sender == t.receiver || graph.interferes(o.sender, t.receiver))
        });
        if hit {
            corrupted.insert(t.id);
        }
    }
    corrupted
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simcore::StreamId;

    fn rng() -> RngStream {
        RngStream::new(1, StreamId::Backoff)
    }

    #[test]
    fn default_table_is_valid() {
        assert!(EdcaParams::default().validate().is_ok());
        assert!(EdcaParams::dcf().validate().is_ok());
    }

    #[test]
    fn table_validation_rejects_bad_windows() {
        let mut p = EdcaParams::default();
        p.classes[1].cw_min = 16;
        assert!(p.validate().is_err());
        let mut p = EdcaParams::default();
        p.classes[3].aifs_slots = 1;
        assert!(p.validate().is_err());
        let mut p = EdcaParams::default();
        p.classes[0] = AccessParams::new(2, 31, 15);
        assert!(p.validate().is_err());
    }

    #[test]
    fn airtime() {
        let radio = RadioModel::default();
        assert!((transmission_time(2000, &radio, 0.0) - 1e-3).abs() < 1e-15);
        assert!((transmission_time(2000, &radio, 0.2e-3) - 1.2e-3).abs() < 1e-15);
        let a = transmission_time(1000, &radio, 0.0);
        let b = transmission_time(2000, &radio, 0.0);
        assert!((b - 2.0 * a).abs() < 1e-15);
    }

    #[test]
    fn uncontended_access_after_aifs() {
        let p = EdcaParams::default();
        let mut m = MacState::default();
        let t = m.begin_contention(PriorityClass::PERIODIC, &p, &mut rng(), false, 1.0).unwrap();
        assert!((t - (1.0 + 7.0 * 20e-6)).abs() < 1e-15);
        assert_eq!(m.phase, MacPhase::Deferring);
    }

    #[test]
    fn busy_channel_draws_within_window() {
        let p = EdcaParams::dcf();
        let mut r = rng();
        let mut seen = BTreeSet::new();
        for _ in 0..500 {
            let mut m = MacState::default();
            assert!(m.begin_contention(PriorityClass::CRITICAL, &p, &mut r, true, 0.0).is_none());
            assert_eq!(m.current_cw, 15);
            assert!(m.backoff_remaining <= 15);
            seen.insert(m.backoff_remaining);
        }
        assert_eq!(seen.len(), 16);
    }

    #[test]
    fn countdown_freezes_while_busy() {
        let p = EdcaParams::default();
        let mut m = MacState::default();
        m.begin_contention(PriorityClass::CONTROL, &p, &mut rng(), true, 0.0);
        m.backoff_remaining = 5;
        let t = m.on_channel_idle(1.0, &p).unwrap();
        let aifs = 3.0 * 20e-6;
        assert!((t - (1.0 + aifs + 5.0 * 20e-6)).abs() < 1e-12);
        // two whole slots elapse, then busy
        m.on_channel_busy(1.0 + aifs + 2.5 * 20e-6, &p, &mut rng());
        assert_eq!(m.backoff_remaining, 3);
        assert_eq!(m.phase, MacPhase::BackingOff);
        m.on_channel_busy(2.0, &p, &mut rng());
        assert_eq!(m.backoff_remaining, 3);
        m.on_channel_idle(3.0, &p).unwrap();
        assert_eq!(m.backoff_remaining, 3);
    }

    #[test]
    fn busy_during_aifs_draws_backoff() {
        let p = EdcaParams::default();
        let mut m = MacState::default();
        m.begin_contention(PriorityClass::CRITICAL, &p, &mut rng(), false, 0.0);
        assert_eq!(m.backoff_remaining, 0);
        m.on_channel_busy(10e-6, &p, &mut rng());
        assert!(m.backoff_remaining <= 7);
        assert_eq!(m.phase, MacPhase::BackingOff);
    }

    #[test]
    fn failure_doubles_window_up_to_cap() {
        let p = EdcaParams::dcf();
        let mut m = MacState::default();
        m.begin_contention(PriorityClass::CRITICAL, &p, &mut rng(), false, 0.0);
        assert_eq!(m.on_tx_failure(&p), FailureOutcome::Retry);
        assert_eq!(m.current_cw, 31);
        m.current_cw = 1023;
        m.on_tx_failure(&p);
        assert_eq!(m.current_cw, 1023);
    }

    #[test]
    fn retry_limit_drops_and_resets() {
        let p = EdcaParams::narrow();
        let mut m = MacState::default();
        m.begin_contention(PriorityClass::REAL_TIME, &p, &mut rng(), false, 0.0);
        for _ in 0..p.retry_limit {
            assert_eq!(m.on_tx_failure(&p), FailureOutcome::Retry);
            assert!(m.current_cw <= 31 && m.current_cw >= 15);
        }
        assert_eq!(m.on_tx_failure(&p), FailureOutcome::Drop);
        assert_eq!(m.current_cw, 15);
        assert_eq!(m.retry_count, 0);
    }

    fn tx(id: u64, s: u32, r: u32, start: f64, end: f64) -> Transmission {
        Transmission {
            id,
            sender: NodeId(s),
            receiver: NodeId(r),
            start,
            end,
            corrupted: false,
        }
    }

    #[test]
    fn single_transmitter_delivers() {
        let g = ConnectivityGraph::from_edges(2, &[(0, 1)]);
        assert!(detect_collisions(&[tx(1, 0, 1, 0.0, 1.0)], &g).is_empty());
    }

    #[test]
    fn overlapping_senders_both_corrupted() {
        // 0 and 2 both reach 1 and each other
        let g = ConnectivityGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]);
        let set = [tx(1, 0, 1, 0.0, 1.0), tx(2, 2, 1, 0.5, 1.5)];
        assert_eq!(detect_collisions(&set, &g), BTreeSet::from([1, 2]));
    }

    #[test]
    fn hidden_terminal_collides_at_middle() {
        // a=0 and c=2 hear b=1 but not each other
        let g = ConnectivityGraph::from_edges(3, &[(0, 1), (1, 2)]);
        let set = [tx(1, 0, 1, 0.0, 1.0), tx(2, 2, 1, 0.3, 1.3)];
        assert_eq!(detect_collisions(&set, &g), BTreeSet::from([1, 2]));

        let mut ch = ChannelState::new(3);
        ch.begin(set[0], &g);
        assert!(!ch.busy_at(NodeId(2)));
        assert!(ch.busy_at(NodeId(1)));
        ch.begin(set[1], &g);
        let a = ch.end(1, &g).unwrap();
        let c = ch.end(2, &g).unwrap();
        assert!(a.corrupted && c.corrupted);
        assert!(!ch.busy_at(NodeId(1)));
    }

    #[test]
    fn disjoint_times_do_not_collide() {
        let g = ConnectivityGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]);
        let set = [tx(1, 0, 1, 0.0, 1.0), tx(2, 2, 1, 1.0, 2.0)];
        assert!(detect_collisions(&set, &g).is_empty());
    }
}
