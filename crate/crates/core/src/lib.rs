//! Discrete-event simulation of priority-based bandwidth allocation in
//! multi-hop wireless sensor networks.
//!
//! Four traffic classes share each node's radio through per-class queues,
//! differentiated channel access, and delay-aware multipath routing. A
//! class-blind single-path baseline runs on the same topologies and arrival
//! streams for paired comparison. The [`queueing`] module carries the
//! analytic priority-queue model used as an oracle for the simulated
//! single-server case.
//!
//! The runnable programs in `examples/` walk through each capability.

pub mod cli;
pub mod config;
pub mod mac;
pub mod metrics;
pub mod network;
pub mod queueing;
pub mod routing;
pub mod simcore;
pub mod topology;
pub mod traffic;
