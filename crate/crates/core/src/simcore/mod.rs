//! Core domain types, the event engine and the seeded random streams.

mod engine;
mod rng;
mod types;

pub use engine::{EngineError, Handler, RunSummary, Scheduler, SimEvent};
pub use rng::{RngStream, StreamId, GENERATOR};
pub use types::{HopRecord, NodeId, Packet, PriorityClass, SimTime};
