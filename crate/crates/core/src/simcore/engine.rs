use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use thiserror::Error;

use super::types::SimTime;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("event scheduled at {at} but the clock already reads {now}")]
    SchedulingInPast { at: SimTime, now: SimTime },
}

/// A time-stamped payload. `(at, seq)` is unique and totally ordered.
#[derive(Debug, Clone)]
pub struct SimEvent<E> {
    pub at: SimTime,
    pub seq: u64,
    pub payload: E,
}

impl<E> PartialEq for SimEvent<E> {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl<E> Eq for SimEvent<E> {}

impl<E> PartialOrd for SimEvent<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for SimEvent<E> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl<E> SimEvent<E> {
    fn key(&self) -> (SimTime, u64) {
        (self.at, self.seq)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunSummary {
    pub events_processed: u64,
    pub end: SimTime,
}

/// Receives events in dispatch order.
pub trait Handler<E> {
    fn handle(&mut self, event: SimEvent<E>, sched: &mut Scheduler<E>) -> Result<(), EngineError>;
}

impl<E, F> Handler<E> for F
where
    F: FnMut(SimEvent<E>, &mut Scheduler<E>) -> Result<(), EngineError>,
{
    fn handle(&mut self, event: SimEvent<E>, sched: &mut Scheduler<E>) -> Result<(), EngineError> {
        self(event, sched)
    }
}

/// Pending-event set plus the simulation clock. Ties on `at` dispatch in
/// insertion order.
#[derive(Debug)]
pub struct Scheduler<E> {
    clock: SimTime,
    next_seq: u64,
    heap: BinaryHeap<Reverse<SimEvent<E>>>,
}

impl<E> Default for Scheduler<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> Scheduler<E> {
    pub fn new() -> Self {
        Scheduler {
            clock: SimTime::ZERO,
            next_seq: 0,
            heap: BinaryHeap::new(),
        }
    }

    pub fn now(&self) -> SimTime {
        self.clock
    }

    pub fn pending(&self) -> usize {
        self.heap.len()
    }

    pub fn schedule(&mut self, at: SimTime, payload: E) -> Result<u64, EngineError> {
        if at < self.clock {
            return Err(EngineError::SchedulingInPast { at, now: self.clock });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse(SimEvent { at, seq, payload }));
        Ok(seq)
    }

    pub fn schedule_in(&mut self, delay: f64, payload: E) -> Result<u64, EngineError> {
        self.schedule(self.clock + delay, payload)
    }

    /// Pops the next event if it is due at or before `end`, advancing the clock.
    pub fn pop_due(&mut self, end: SimTime) -> Option<SimEvent<E>> {
        match self.heap.peek() {
            Some(Reverse(ev)) if ev.at <= end => {
                let Reverse(ev) = self.heap.pop()?;
                self.clock = ev.at;
                Some(ev)
            }
            _ => None,
        }
    }

    /// Iterates over pending events in no particular order.
    pub fn iter_pending(&self) -> impl Iterator<Item = &SimEvent<E>> {
        self.heap.iter().map(|Reverse(ev)| ev)
    }

    /// Dispatches every event with `at <= end`, then sets the clock to `end`.
    pub fn run_until<H: Handler<E>>(
        &mut self,
        end: SimTime,
        handler: &mut H,
    ) -> Result<RunSummary, EngineError> {
        let mut processed = 0;
        while let Some(ev) = self.pop_due(end) {
            handler.handle(ev, self)?;
            processed += 1;
        }
        if end > self.clock {
            self.clock = end;
        }
        Ok(RunSummary {
            events_processed: processed,
            end: self.clock,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(log: &mut Vec<(f64, u32)>) -> impl FnMut(SimEvent<u32>, &mut Scheduler<u32>) -> Result<(), EngineError> + '_ {
        move |ev, _| {
            log.push((ev.at.secs(), ev.payload));
            Ok(())
        }
    }

    #[test]
    fn schedule_future_dispatches_at_time() {
        let mut s = Scheduler::new();
        s.schedule(SimTime(5.0), 1).unwrap();
        let mut log = Vec::new();
        let summary = s.run_until(SimTime(10.0), &mut record(&mut log)).unwrap();
        assert_eq!(log, vec![(5.0, 1)]);
        assert_eq!(summary.events_processed, 1);
        assert_eq!(s.now(), SimTime(10.0));
    }

    #[test]
    fn scheduling_at_current_clock_is_legal() {
        let mut s = Scheduler::new();
        s.schedule(SimTime(3.0), 0).unwrap();
        let mut order = Vec::new();
        let mut h = |ev: SimEvent<u32>, sched: &mut Scheduler<u32>| {
            order.push(ev.payload);
            if ev.payload == 0 {
                sched.schedule(SimTime(3.0), 1)?;
            }
            Ok(())
        };
        s.run_until(SimTime(4.0), &mut h).unwrap();
        assert_eq!(order, vec![0, 1]);
    }

    #[test]
    fn scheduling_in_the_past_fails() {
        let mut s: Scheduler<u32> = Scheduler::new();
        s.run_until(SimTime(3.0), &mut record(&mut Vec::new())).unwrap();
        assert_eq!(
            s.schedule(SimTime(2.0), 0),
            Err(EngineError::SchedulingInPast {
                at: SimTime(2.0),
                now: SimTime(3.0)
            })
        );
    }

    #[test]
    fn empty_run_advances_clock() {
        let mut s: Scheduler<u32> = Scheduler::new();
        let summary = s.run_until(SimTime(10.0), &mut record(&mut Vec::new())).unwrap();
        assert_eq!(summary.events_processed, 0);
        assert_eq!(summary.end, SimTime(10.0));
    }

    #[test]
    fn horizon_cuts_later_events() {
        let mut s = Scheduler::new();
        s.schedule(SimTime(1.0), 1).unwrap();
        s.schedule(SimTime(2.0), 2).unwrap();
        let mut log = Vec::new();
        let summary = s.run_until(SimTime(1.5), &mut record(&mut log)).unwrap();
        assert_eq!(summary.events_processed, 1);
        assert_eq!(s.pending(), 1);
    }

    #[test]
    fn equal_times_dispatch_fifo() {
        let mut s = Scheduler::new();
        for i in 0..5 {
            s.schedule(SimTime(1.0), i).unwrap();
        }
        let mut log = Vec::new();
        s.run_until(SimTime(1.0), &mut record(&mut log)).unwrap();
        assert_eq!(log.iter().map(|x| x.1).collect::<Vec<_>>(), vec![0, 1, 2, 3, 4]);
    }
}
