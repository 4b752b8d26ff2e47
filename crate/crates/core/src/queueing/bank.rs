use std::collections::VecDeque;

use crate::simcore::{NodeId, Packet, PriorityClass, SimTime};

pub const DEFAULT_CAPACITY_PER_CLASS: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub enum EnqueueOutcome {
    Accepted,
    /// Tail drop; the packet is handed back for accounting.
    Dropped(Packet),
}

/// One FIFO per class, served head-of-line from the most urgent non-empty
/// queue. Overflow drops only the arriving packet.
#[derive(Debug, Clone)]
pub struct PriorityQueueBank {
    node: NodeId,
    queues: [VecDeque<Packet>; PriorityClass::COUNT],
    capacity_per_class: usize,
    drop_counts: [u64; PriorityClass::COUNT],
}

impl PriorityQueueBank {
    pub fn new(node: NodeId, capacity_per_class: usize) -> Self {
        assert!(capacity_per_class > 0, "queue capacity must be positive");
        PriorityQueueBank {
            node,
            queues: Default::default(),
            capacity_per_class,
            drop_counts: [0; PriorityClass::COUNT],
        }
    }

    pub fn capacity_per_class(&self) -> usize {
        self.capacity_per_class
    }

    pub fn enqueue(&mut self, mut p: Packet, now: SimTime) -> EnqueueOutcome {
        let c = p.class.index();
        if self.queues[c].len() >= self.capacity_per_class {
            self.drop_counts[c] += 1;
            return EnqueueOutcome::Dropped(p);
        }
        p.record_enqueue(self.node, now);
        self.queues[c].push_back(p);
        EnqueueOutcome::Accepted
    }

    /// Class of the packet that would be served next.
    pub fn head_class(&self) -> Option<PriorityClass> {
        self.queues
            .iter()
            .position(|q| !q.is_empty())
            .map(|i| PriorityClass::ALL[i])
    }

    pub fn peek_highest(&self) -> Option<&Packet> {
        self.queues.iter().find_map(|q| q.front())
    }

    pub fn dequeue_highest(&mut self, now: SimTime) -> Option<Packet> {
        let class = self.head_class()?;
        self.pop_class(class, now)
    }

    /// Removes the head of one specific class queue.
    pub fn pop_class(&mut self, class: PriorityClass, now: SimTime) -> Option<Packet> {
        let mut p = self.queues[class.index()].pop_front()?;
        p.record_dequeue(now);
        Some(p)
    }

    pub fn len(&self, class: PriorityClass) -> usize {
        self.queues[class.index()].len()
    }

    pub fn total_len(&self) -> usize {
        self.queues.iter().map(VecDeque::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.queues.iter().all(VecDeque::is_empty)
    }

    pub fn drop_counts(&self) -> [u64; PriorityClass::COUNT] {
        self.drop_counts
    }

    pub fn iter(&self) -> impl Iterator<Item = &Packet> {
        self.queues.iter().flat_map(|q| q.iter())
    }
}
