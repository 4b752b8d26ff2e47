//! Per-class Poisson packet sources.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::simcore::{NodeId, Packet, PriorityClass, RngStream, SimTime};

#[derive(Debug, Error, PartialEq)]
pub enum TrafficError {
    #[error("class {0} has zero arrival rate; its source stays dormant")]
    ZeroRate(PriorityClass),
    #[error("invalid load spec for class {class}: {msg}")]
    InvalidSpec { class: PriorityClass, msg: String },
    #[error("cannot parse size distribution `{0}` (expected fixed:<bits> or exp:<mean_bits>)")]
    BadSizeDist(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SizeDist {
    Fixed(u32),
    Exponential(f64),
}

impl SizeDist {
    pub fn mean_bits(&self) -> f64 {
        match *self {
            SizeDist::Fixed(b) => f64::from(b),
            SizeDist::Exponential(m) => m,
        }
    }

    /// E[size²] / E[size]², used to carry the size shape into service moments.
    pub fn second_moment_ratio(&self) -> f64 {
        match self {
            SizeDist::Fixed(_) => 1.0,
            SizeDist::Exponential(_) => 2.0,
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> u32 {
        match *self {
            SizeDist::Fixed(b) => b,
            SizeDist::Exponential(mean) => {
                let x = rng.next_exp(1.0 / mean).ceil();
                x.clamp(1.0, f64::from(u32::MAX)) as u32
            }
        }
    }
}

impl fmt::Display for SizeDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SizeDist::Fixed(b) => write!(f, "fixed:{b}"),
            SizeDist::Exponential(m) => write!(f, "exp:{m}"),
        }
    }
}

impl FromStr for SizeDist {
    type Err = TrafficError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || TrafficError::BadSizeDist(s.to_string());
        let (kind, val) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "fixed" => match val.parse::<u32>() {
                Ok(b) if b > 0 => Ok(SizeDist::Fixed(b)),
                _ => Err(bad()),
            },
            "exp" => match val.parse::<f64>() {
                Ok(m) if m > 0.0 && m.is_finite() => Ok(SizeDist::Exponential(m)),
                _ => Err(bad()),
            },
            _ => Err(bad()),
        }
    }
}

/// Arrival rate and service-time moments for one class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassLoadSpec {
    pub class: PriorityClass,
    pub lambda_pps: f64,
    pub mean_service_s: f64,
    pub second_moment_service_s2: f64,
    pub size_dist: SizeDist,
}

impl ClassLoadSpec {
    pub fn new(
        class: PriorityClass,
        lambda_pps: f64,
        mean_service_s: f64,
        second_moment_service_s2: f64,
        size_dist: SizeDist,
    ) -> Result<Self, TrafficError> {
        let spec = ClassLoadSpec {
            class,
            lambda_pps,
            mean_service_s,
            second_moment_service_s2,
            size_dist,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Exponential service with the given mean.
    pub fn exponential(class: PriorityClass, lambda_pps: f64, mean_service_s: f64) -> Result<Self, TrafficError> {
        Self::new(
            class,
            lambda_pps,
            mean_service_s,
            2.0 * mean_service_s * mean_service_s,
            SizeDist::Exponential(1000.0),
        )
    }

    /// Constant service time.
    pub fn deterministic(class: PriorityClass, lambda_pps: f64, mean_service_s: f64) -> Result<Self, TrafficError> {
        Self::new(
            class,
            lambda_pps,
            mean_service_s,
            mean_service_s * mean_service_s,
            SizeDist::Fixed(1000),
        )
    }

    /// Service moments implied by packet size over a link of `bitrate_bps`
    /// plus a fixed per-frame overhead.
    pub fn from_packet_sizes(
        class: PriorityClass,
        lambda_pps: f64,
        size_dist: SizeDist,
        bitrate_bps: f64,
        overhead_s: f64,
    ) -> Result<Self, TrafficError> {
        let airtime = size_dist.mean_bits() / bitrate_bps;
        let mean = airtime + overhead_s;
        let var = (size_dist.second_moment_ratio() - 1.0) * airtime * airtime;
        Self::new(class, lambda_pps, mean, var + mean * mean, size_dist)
    }

    pub fn validate(&self) -> Result<(), TrafficError> {
        let bad = |msg: &str| {
            Err(TrafficError::InvalidSpec {
                class: self.class,
                msg: msg.to_string(),
            })
        };
        if !(self.lambda_pps >= 0.0 && self.lambda_pps.is_finite()) {
            return bad("lambda must be finite and >= 0");
        }
        if !(self.mean_service_s > 0.0 && self.mean_service_s.is_finite()) {
            return bad("mean service time must be positive");
        }
        let m2 = self.mean_service_s * self.mean_service_s;
        if !(self.second_moment_service_s2 >= m2 * (1.0 - 1e-12)) {
            return bad("second moment must be >= mean squared");
        }
        Ok(())
    }

    pub fn variance(&self) -> f64 {
        (self.second_moment_service_s2 - self.mean_service_s * self.mean_service_s).max(0.0)
    }
}

/// Exponential gap to the next arrival.
pub fn next_interarrival(spec: &ClassLoadSpec, rng: &mut RngStream) -> Result<f64, TrafficError> {
    if spec.lambda_pps <= 0.0 {
        return Err(TrafficError::ZeroRate(spec.class));
    }
    Ok(rng.next_exp(spec.lambda_pps))
}

pub fn make_packet(
    id: u64,
    src: NodeId,
    sink: NodeId,
    spec: &ClassLoadSpec,
    now: SimTime,
    rng: &mut RngStream,
) -> Packet {
    debug_assert_ne!(src, sink);
    let size = spec.size_dist.sample(rng);
    Packet::new(id, spec.class, src, sink, size, now)
}
