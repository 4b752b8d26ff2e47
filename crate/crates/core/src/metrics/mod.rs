//! Per-class accounting, Little's-law checks, and report export.

mod collector;
mod export;
mod little;
pub mod stats;
pub mod svg;

pub use collector::{
    bandwidth_share, mean_delay, ClassMetrics, Conservation, DelayStats, DropCause, DropCounts,
    FinishedMetrics,
    MetricsCollector, Reservoir, Shares, RESERVOIR_SIZE,
};
pub use export::{
    export_csv, export_series, run_csv, series_csv, RunReport, RUN_CSV_HEADER,
    SWEEP_CSV_HEADER,
};
pub use little::{littles_law_check, LittleCheck, LittleSample, LITTLE_TOLERANCE};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("no delivered samples for class {0}")]
    NoSamples(crate::simcore::PriorityClass),
    #[error("no departures observed; Little's law cannot be checked")]
    NoDepartures,
}
