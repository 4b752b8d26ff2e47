//! Four-class head-of-line priority queueing and its closed-form model.

mod analytic;
mod bank;
mod single_server;

pub use analytic::{utilization, AnalyticModel, QueueingError};
pub use bank::{EnqueueOutcome, PriorityQueueBank, DEFAULT_CAPACITY_PER_CLASS};
pub use single_server::{
    simulate_single_server, ClassEstimate, Horizon, ServiceDist, SingleServerReport,
};
