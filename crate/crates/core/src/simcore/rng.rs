use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::types::{NodeId, PriorityClass};

/// Name of the underlying generator, echoed into run headers.
pub const GENERATOR: &str = "ChaCha8 (rand_chacha 0.9), seed_from_u64 + set_stream";

/// One label per stochastic concern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamId {
    Topology,
    Traffic { node: NodeId, class: PriorityClass },
    Backoff,
    BaselineScheduler,
    Validation,
    /// Service-time draws of one class in the single-server model.
    Service(PriorityClass),
    Reservoir,
    /// Free-form stream for tests and examples.
    Custom(u32),
}

impl StreamId {
    fn word(self) -> u64 {
        match self {
            StreamId::Topology => 1,
            StreamId::Backoff => 2,
            StreamId::BaselineScheduler => 3,
            StreamId::Validation => 4,
            StreamId::Reservoir => 5,
            StreamId::Service(class) => 8 + class.index() as u64,
            StreamId::Custom(n) => (2 << 40) | u64::from(n),
            StreamId::Traffic { node, class } => {
                (1 << 40) | (u64::from(node.0) << 2) | class.index() as u64
            }
        }
    }
}

/// Deterministic random stream keyed by `(seed, stream_id)`.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    id: StreamId,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, id: StreamId) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(id.word());
        RngStream { seed, id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn id(&self) -> StreamId {
        self.id
    }

    /// Uniform draw in `[0, 1)`.
    pub fn next_uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform integer in `[0, upper]` inclusive.
    pub fn next_inclusive(&mut self, upper: u32) -> u32 {
        self.rng.random_range(0..=upper)
    }

    /// Uniform index in `[0, len)`.
    pub fn next_index(&mut self, len: usize) -> usize {
        self.rng.random_range(0..len)
    }

    /// Exponential draw with the given rate, by inversion.
    pub fn next_exp(&mut self, rate: f64) -> f64 {
        -(1.0 - self.next_uniform()).ln() / rate
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}
