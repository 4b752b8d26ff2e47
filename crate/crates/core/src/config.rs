//! Run configuration: a flat `key = value` text format with `[section]`
//! headers, `#` comments, and whitespace-separated table rows in the
//! `edca`, `traffic`, `sources` and `validate` sections.
//!
//! ```text
//! [run]
//! mode = both
//! nodes = 64
//! terrain_m = 750
//!
//! [traffic]
//! rate_basis = network
//! # class lambda mean_service size_dist
//! 0 250 auto fixed:1024
//! ```
//!
//! [`SimConfig::to_text`] writes every field with defaults filled in, and
//! parsing that text yields the same configuration.

use std::collections::{BTreeSet, HashMap};
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::mac::{AccessParams, EdcaParams};
use crate::network::{terrain_for, NetworkConfig};
use crate::queueing::{AnalyticModel, DEFAULT_CAPACITY_PER_CLASS};
use crate::routing::{RoutingMode, DEFAULT_ALPHA, DEFAULT_K_MAX};
use crate::simcore::{NodeId, PriorityClass};
use crate::topology::{RadioModel, SinkPolicy, Terrain};
use crate::traffic::{ClassLoadSpec, SizeDist};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("{field}: {msg}")]
    Field { field: String, msg: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn line_err<T>(line: usize, msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Line { line, msg: msg.into() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeSelection {
    Priority,
    Baseline,
    Both,
}

impl ModeSelection {
    pub fn modes(self) -> Vec<RoutingMode> {
        match self {
            ModeSelection::Priority => vec![RoutingMode::Priority],
            ModeSelection::Baseline => vec![RoutingMode::Baseline],
            ModeSelection::Both => vec![RoutingMode::Priority, RoutingMode::Baseline],
        }
    }
}

impl FromStr for ModeSelection {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "priority" => Ok(ModeSelection::Priority),
            "baseline" => Ok(ModeSelection::Baseline),
            "both" => Ok(ModeSelection::Both),
            _ => Err(format!("unknown mode `{s}` (expected priority, baseline or both)")),
        }
    }
}

impl fmt::Display for ModeSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModeSelection::Priority => "priority",
            ModeSelection::Baseline => "baseline",
            ModeSelection::Both => "both",
        })
    }
}

/// Whether traffic rates are per sensor or network-wide totals split evenly
/// over the sensors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateBasis {
    Node,
    Network,
}

impl FromStr for RateBasis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "node" => Ok(RateBasis::Node),
            "network" => Ok(RateBasis::Network),
            _ => Err(format!("unknown rate basis `{s}` (expected node or network)")),
        }
    }
}

impl fmt::Display for RateBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RateBasis::Node => "node",
            RateBasis::Network => "network",
        })
    }
}

/// One `[traffic]` row. `mean_service_s = None` derives the service time
/// from packet size, bitrate and frame overhead.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrafficRow {
    pub lambda_pps: f64,
    pub mean_service_s: Option<f64>,
    pub size: SizeDist,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ServiceMoment {
    Exponential,
    Deterministic,
    /// Explicit E[s^2].
    SecondMoment(f64),
}

impl fmt::Display for ServiceMoment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ServiceMoment::Exponential => f.write_str("exp"),
            ServiceMoment::Deterministic => f.write_str("det"),
            ServiceMoment::SecondMoment(m2) => write!(f, "{m2}"),
        }
    }
}

/// One `[validate]` row: a class of a named single-server load point.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationRow {
    pub point: String,
    pub class: PriorityClass,
    pub lambda: f64,
    pub mean_service: f64,
    pub service: ServiceMoment,
}

impl ValidationRow {
    pub fn spec(&self) -> ClassLoadSpec {
        let m = self.mean_service;
        let m2 = match self.service {
            ServiceMoment::Exponential => 2.0 * m * m,
            ServiceMoment::Deterministic => m * m,
            ServiceMoment::SecondMoment(x) => x,
        };
        ClassLoadSpec {
            class: self.class,
            lambda_pps: self.lambda,
            mean_service_s: m,
            second_moment_service_s2: m2,
            size_dist: SizeDist::Fixed(1000),
        }
    }
}

/// A named load point assembled from consecutive validation rows.
#[derive(Debug, Clone)]
pub struct ValidationPoint {
    pub name: String,
    pub model: AnalyticModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub seed: u64,
    pub seeds: u32,
    pub nodes: usize,
    pub terrain: Terrain,
    pub mode: ModeSelection,
    pub duration_s: f64,
    pub warmup_fraction: f64,
    pub sink: SinkPolicy,
    pub queue_capacity: usize,
    pub k_max: usize,
    pub alpha: f64,
    pub out_dir: PathBuf,
    pub radio: RadioModel,
    pub edca: EdcaParams,
    pub rate_basis: RateBasis,
    pub traffic: [TrafficRow; PriorityClass::COUNT],
    /// Sparse per-node enable masks; unlisted sensors host every class.
    pub sources: Vec<(NodeId, [bool; PriorityClass::COUNT])>,
    pub sweep_nodes: Vec<usize>,
    pub sweep_terrain_m: Vec<f64>,
    pub validate_departures: u64,
    pub validate_tolerance: f64,
    pub validation: Vec<ValidationRow>,
}

/// Network-wide per-class rate used by default; drives every standard node
/// count into saturation.
pub const DEFAULT_NETWORK_RATE_PPS: f64 = 250.0;

pub const DEFAULT_SWEEP_NODES: [usize; 4] = [32, 64, 128, 256];

fn vrow(point: &str, class: u8, lambda: f64, service: ServiceMoment) -> ValidationRow {
    ValidationRow {
        point: point.to_string(),
        class: PriorityClass::new(class).expect("class in range"),
        lambda,
        mean_service: 1.0,
        service,
    }
}

/// Single-server grid: 1 to 4 classes, exponential and deterministic
/// service, plus one point where the lowest class saturates.
pub fn default_validation_grid() -> Vec<ValidationRow> {
    use ServiceMoment::{Deterministic as D, Exponential as E};
    vec![
        vrow("one-exp", 0, 0.5, E),
        vrow("one-det", 0, 0.5, D),
        vrow("two-exp", 0, 0.25, E),
        vrow("two-exp", 1, 0.25, E),
        vrow("two-det", 0, 0.3, D),
        vrow("two-det", 1, 0.3, D),
        vrow("three-exp", 0, 0.2, E),
        vrow("three-exp", 1, 0.2, E),
        vrow("three-exp", 2, 0.2, E),
        vrow("four-mixed", 0, 0.15, E),
        vrow("four-mixed", 1, 0.15, D),
        vrow("four-mixed", 2, 0.15, E),
        vrow("four-mixed", 3, 0.15, D),
        vrow("four-exp", 0, 0.175, E),
        vrow("four-exp", 1, 0.175, E),
        vrow("four-exp", 2, 0.175, E),
        vrow("four-exp", 3, 0.175, E),
        vrow("overload", 0, 0.6, E),
        vrow("overload", 1, 0.6, E),
    ]
}

impl Default for SimConfig {
    fn default() -> Self {
        let nodes = 64;
        let row = TrafficRow {
            lambda_pps: DEFAULT_NETWORK_RATE_PPS,
            mean_service_s: None,
            size: SizeDist::Fixed(1024),
        };
        SimConfig {
            seed: 1,
            seeds: 1,
            nodes,
            terrain: Terrain::square(terrain_for(nodes)).expect("positive side"),
            mode: ModeSelection::Both,
            duration_s: 100.0,
            warmup_fraction: 0.1,
            sink: SinkPolicy::Center,
            queue_capacity: DEFAULT_CAPACITY_PER_CLASS,
            k_max: DEFAULT_K_MAX,
            alpha: DEFAULT_ALPHA,
            out_dir: PathBuf::from("out"),
            radio: RadioModel::default(),
            edca: EdcaParams::default(),
            rate_basis: RateBasis::Network,
            traffic: [row; PriorityClass::COUNT],
            sources: Vec::new(),
            sweep_nodes: DEFAULT_SWEEP_NODES.to_vec(),
            sweep_terrain_m: DEFAULT_SWEEP_NODES.iter().map(|&n| terrain_for(n)).collect(),
            validate_departures: 1_000_000,
            validate_tolerance: 0.05,
            validation: default_validation_grid(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Section {
    Run,
    Radio,
    Mac,
    Edca,
    Traffic,
    Sources,
    Sweep,
    Validate,
}

impl Section {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "run" => Section::Run,
            "radio" => Section::Radio,
            "mac" => Section::Mac,
            "edca" => Section::Edca,
            "traffic" => Section::Traffic,
            "sources" => Section::Sources,
            "sweep" => Section::Sweep,
            "validate" => Section::Validate,
            _ => return None,
        })
    }
}

fn num<T: FromStr>(line: usize, key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse()
        .or_else(|_| line_err(line, format!("{key}: cannot parse `{v}`")))
}

fn positive(line: usize, key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = num(line, key, v)?;
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        line_err(line, format!("{key} must be positive, got {v}"))
    }
}

fn class_at(line: usize, v: &str) -> Result<PriorityClass, ConfigError> {
    let level: u8 = num(line, "class", v)?;
    PriorityClass::new(level).map_or_else(|| line_err(line, format!("class {level} out of range 0..=3")), Ok)
}

fn parse_terrain(line: usize, v: &str) -> Result<Terrain, ConfigError> {
    let t = match v.split_once('x') {
        Some((w, h)) => Terrain::new(positive(line, "terrain_m", w)?, positive(line, "terrain_m", h)?),
        None => {
            let side = positive(line, "terrain_m", v)?;
            Terrain::square(side)
        }
    };
    t.or_else(|e| line_err(line, e.to_string()))
}

fn parse_sink(line: usize, v: &str) -> Result<SinkPolicy, ConfigError> {
    match v {
        "center" => Ok(SinkPolicy::Center),
        "corner" => Ok(SinkPolicy::Corner),
        _ => {
            let Some((x, y)) = v.split_once(',') else {
                return line_err(line, format!("sink: expected center, corner or x,y; got `{v}`"));
            };
            Ok(SinkPolicy::Explicit {
                x_m: num(line, "sink", x.trim())?,
                y_m: num(line, "sink", y.trim())?,
            })
        }
    }
}

fn sink_text(s: SinkPolicy) -> String {
    match s {
        SinkPolicy::Center => "center".into(),
        SinkPolicy::Corner => "corner".into(),
        SinkPolicy::Explicit { x_m, y_m } => format!("{x_m},{y_m}"),
    }
}

fn terrain_text(t: &Terrain) -> String {
    if t.width_m == t.height_m {
        format!("{}", t.width_m)
    } else {
        format!("{}x{}", t.width_m, t.height_m)
    }
}

fn join<T: fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

impl SimConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = SimConfig::default();
        let mut section: Option<Section> = None;
        let mut seen_keys: HashMap<(Section, String), usize> = HashMap::new();
        let mut seen_sections = BTreeSet::new();
        let mut lines: HashMap<&'static str, usize> = HashMap::new();
        let mut sweep_terrain_given = false;

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let Some(name) = rest.strip_suffix(']') else {
                    return line_err(line, "unterminated section header");
                };
                let Some(s) = Section::parse(name.trim()) else {
                    return line_err(line, format!("unknown section [{}]", name.trim()));
                };
                if !seen_sections.insert(name.trim().to_string()) {
                    return line_err(line, format!("section [{}] appears twice", name.trim()));
                }
                if s == Section::Validate {
                    cfg.validation.clear();
                }
                section = Some(s);
                continue;
            }
            let Some(sec) = section else {
                return line_err(line, "content before the first [section]");
            };
            if let Some((k, v)) = content.split_once('=') {
                let (k, v) = (k.trim(), v.trim());
                if let Some(prev) = seen_keys.insert((sec, k.to_string()), line) {
                    return line_err(line, format!("duplicate key `{k}` (first set on line {prev})"));
                }
                cfg.apply_key(sec, k, v, line, &mut lines)?;
                if sec == Section::Sweep && k == "terrain_m" {
                    sweep_terrain_given = true;
                }
            } else {
                cfg.apply_row(sec, content, line)?;
            }
        }

        if !sweep_terrain_given {
            cfg.sweep_terrain_m = cfg.sweep_nodes.iter().map(|&n| terrain_for(n)).collect();
        }
        cfg.check(&lines)?;
        Ok(cfg)
    }

    fn apply_key(
        &mut self,
        sec: Section,
        k: &str,
        v: &str,
        line: usize,
        lines: &mut HashMap<&'static str, usize>,
    ) -> Result<(), ConfigError> {
        let unknown = || line_err(line, format!("unknown key `{k}` in this section"));
        match sec {
            Section::Run => match k {
                "seed" => self.seed = num(line, k, v)?,
                "seeds" => {
                    self.seeds = num(line, k, v)?;
                    if self.seeds == 0 {
                        return line_err(line, "seeds must be at least 1");
                    }
                }
                "nodes" => {
                    self.nodes = num(line, k, v)?;
                    if self.nodes == 0 {
                        return line_err(line, "nodes must be at least 1");
                    }
                }
                "terrain_m" => self.terrain = parse_terrain(line, v)?,
                "mode" => self.mode = v.parse().or_else(|e: String| line_err(line, e))?,
                "duration_s" => self.duration_s = positive(line, k, v)?,
                "warmup_fraction" => {
                    self.warmup_fraction = num(line, k, v)?;
                    if !(0.0..1.0).contains(&self.warmup_fraction) {
                        return line_err(line, "warmup_fraction must be in [0, 1)");
                    }
                }
                "sink" => self.sink = parse_sink(line, v)?,
                "queue_capacity" => {
                    self.queue_capacity = num(line, k, v)?;
                    if self.queue_capacity == 0 {
                        return line_err(line, "queue_capacity must be at least 1");
                    }
                }
                "k_max" => {
                    self.k_max = num(line, k, v)?;
                    if self.k_max == 0 {
                        return line_err(line, "k_max must be at least 1");
                    }
                }
                "alpha" => {
                    self.alpha = num(line, k, v)?;
                    if !(self.alpha > 0.0 && self.alpha <= 1.0) {
                        return line_err(line, "alpha must be in (0, 1]");
                    }
                }
                "out" => self.out_dir = PathBuf::from(v),
                _ => return unknown(),
            },
            Section::Radio => {
                let x = positive(line, k, v)?;
                match k {
                    "comm_range_m" => self.radio.comm_range_m = x,
                    "interference_range_m" => self.radio.interference_range_m = x,
                    "bitrate_bps" => self.radio.bitrate_bps = x,
                    "propagation_speed_mps" => self.radio.propagation_speed_mps = x,
                    _ => return unknown(),
                }
                lines.insert("radio", line);
            }
            Section::Mac => match k {
                "slot_time_s" => self.edca.slot_time_s = positive(line, k, v)?,
                "sifs_s" => self.edca.sifs_s = positive(line, k, v)?,
                "retry_limit" => self.edca.retry_limit = num(line, k, v)?,
                "frame_overhead_s" => {
                    self.edca.frame_overhead_s = num(line, k, v)?;
                    if !(self.edca.frame_overhead_s >= 0.0 && self.edca.frame_overhead_s.is_finite()) {
                        return line_err(line, "frame_overhead_s must be >= 0");
                    }
                }
                _ => return unknown(),
            },
            Section::Traffic => match k {
                "rate_basis" => self.rate_basis = v.parse().or_else(|e: String| line_err(line, e))?,
                _ => return unknown(),
            },
            Section::Sweep => match k {
                "node_counts" => {
                    let counts: Vec<usize> = v
                        .split_whitespace()
                        .map(|x| num(line, k, x))
                        .collect::<Result<_, _>>()?;
                    check_node_counts(&counts).or_else(|m| line_err(line, m))?;
                    self.sweep_nodes = counts;
                }
                "terrain_m" => {
                    self.sweep_terrain_m = v
                        .split_whitespace()
                        .map(|x| positive(line, k, x))
                        .collect::<Result<_, _>>()?;
                    lines.insert("sweep.terrain_m", line);
                }
                _ => return unknown(),
            },
            Section::Validate => match k {
                "departures" => {
                    self.validate_departures = num(line, k, v)?;
                    if self.validate_departures == 0 {
                        return line_err(line, "departures must be at least 1");
                    }
                }
                "tolerance" => self.validate_tolerance = positive(line, k, v)?,
                _ => return unknown(),
            },
            Section::Edca | Section::Sources => {
                return line_err(line, "this section takes table rows, not key = value")
            }
        }
        if sec == Section::Mac {
            lines.insert("mac", line);
        }
        Ok(())
    }

    fn apply_row(&mut self, sec: Section, content: &str, line: usize) -> Result<(), ConfigError> {
        let cols: Vec<&str> = content.split_whitespace().collect();
        let want = |n: usize, shape: &str| {
            if cols.len() == n {
                Ok(())
            } else {
                line_err(line, format!("expected {n} columns `{shape}`, got {}", cols.len()))
            }
        };
        match sec {
            Section::Edca => {
                want(4, "class aifs cw_min cw_max")?;
                let class = class_at(line, cols[0])?;
                let a = AccessParams::new(
                    num(line, "aifs", cols[1])?,
                    num(line, "cw_min", cols[2])?,
                    num(line, "cw_max", cols[3])?,
                );
                let mut single = EdcaParams::dcf();
                single.classes = [a; PriorityClass::COUNT];
                single.validate().or_else(|e| line_err(line, e.to_string()))?;
                self.edca.classes[class.index()] = a;
            }
            Section::Traffic => {
                want(4, "class lambda mean_service size_dist")?;
                let class = class_at(line, cols[0])?;
                let lambda: f64 = num(line, "lambda", cols[1])?;
                if !(lambda >= 0.0 && lambda.is_finite()) {
                    return line_err(line, "lambda must be >= 0");
                }
                let mean_service_s = match cols[2] {
                    "auto" => None,
                    s => Some(positive(line, "mean_service", s)?),
                };
                let size = cols[3].parse().or_else(|e: crate::traffic::TrafficError| line_err(line, e.to_string()))?;
                self.traffic[class.index()] = TrafficRow {
                    lambda_pps: lambda,
                    mean_service_s,
                    size,
                };
            }
            Section::Sources => {
                want(5, "node c0 c1 c2 c3")?;
                let node = NodeId(num(line, "node", cols[0])?);
                let mut mask = [false; PriorityClass::COUNT];
                for (slot, col) in mask.iter_mut().zip(&cols[1..]) {
                    *slot = match *col {
                        "1" => true,
                        "0" => false,
                        _ => return line_err(line, format!("mask entries must be 0 or 1, got `{col}`")),
                    };
                }
                if self.sources.iter().any(|(n, _)| *n == node) {
                    return line_err(line, format!("node {node} listed twice"));
                }
                self.sources.push((node, mask));
            }
            Section::Validate => {
                want(5, "point class lambda mean_service exp|det|E[s^2]")?;
                let class = class_at(line, cols[1])?;
                let lambda: f64 = num(line, "lambda", cols[2])?;
                if !(lambda >= 0.0 && lambda.is_finite()) {
                    return line_err(line, "lambda must be >= 0");
                }
                let mean_service = positive(line, "mean_service", cols[3])?;
                let service = match cols[4] {
                    "exp" => ServiceMoment::Exponential,
                    "det" => ServiceMoment::Deterministic,
                    s => {
                        let m2 = positive(line, "second moment", s)?;
                        if m2 < mean_service * mean_service * (1.0 - 1e-12) {
                            return line_err(line, "second moment below mean squared");
                        }
                        ServiceMoment::SecondMoment(m2)
                    }
                };
                let point = cols[0].to_string();
                if self.validation.iter().any(|r| r.point == point && r.class == class) {
                    return line_err(line, format!("class {class} repeated in point `{point}`"));
                }
                if let Some(last) = self.validation.last() {
                    if last.point != point && self.validation.iter().any(|r| r.point == point) {
                        return line_err(line, format!("rows of point `{point}` must be contiguous"));
                    }
                }
                self.validation.push(ValidationRow {
                    point,
                    class,
                    lambda,
                    mean_service,
                    service,
                });
            }
            _ => return line_err(line, format!("expected `key = value`, got `{content}`")),
        }
        Ok(())
    }

    fn check(&self, lines: &HashMap<&'static str, usize>) -> Result<(), ConfigError> {
        let at = |key: &str, field: &str, msg: String| match lines.get(key) {
            Some(&line) => ConfigError::Line { line, msg: format!("{field}: {msg}") },
            None => ConfigError::Field { field: field.to_string(), msg },
        };
        self.radio.validate().map_err(|e| at("radio", "radio", e.to_string()))?;
        self.edca.validate().map_err(|e| at("mac", "edca", e.to_string()))?;
        if self.sweep_terrain_m.len() != self.sweep_nodes.len() {
            return Err(at(
                "sweep.terrain_m",
                "sweep.terrain_m",
                format!("{} terrains for {} node counts", self.sweep_terrain_m.len(), self.sweep_nodes.len()),
            ));
        }
        Ok(())
    }

    /// Fully resolved configuration in the input format.
    pub fn to_text(&self) -> String {
        let mut o = String::new();
        let w = &mut o;
        let _ = writeln!(w, "[run]");
        let _ = writeln!(w, "seed = {}", self.seed);
        let _ = writeln!(w, "seeds = {}", self.seeds);
        let _ = writeln!(w, "nodes = {}", self.nodes);
        let _ = writeln!(w, "terrain_m = {}", terrain_text(&self.terrain));
        let _ = writeln!(w, "mode = {}", self.mode);
        let _ = writeln!(w, "duration_s = {}", self.duration_s);
        let _ = writeln!(w, "warmup_fraction = {}", self.warmup_fraction);
        let _ = writeln!(w, "sink = {}", sink_text(self.sink));
        let _ = writeln!(w, "queue_capacity = {}", self.queue_capacity);
        let _ = writeln!(w, "k_max = {}", self.k_max);
        let _ = writeln!(w, "alpha = {}", self.alpha);
        let _ = writeln!(w, "out = {}", self.out_dir.display());
        let _ = writeln!(w, "\n[radio]");
        let _ = writeln!(w, "comm_range_m = {}", self.radio.comm_range_m);
        let _ = writeln!(w, "interference_range_m = {}", self.radio.interference_range_m);
        let _ = writeln!(w, "bitrate_bps = {}", self.radio.bitrate_bps);
        let _ = writeln!(w, "propagation_speed_mps = {}", self.radio.propagation_speed_mps);
        let _ = writeln!(w, "\n[mac]");
        let _ = writeln!(w, "slot_time_s = {}", self.edca.slot_time_s);
        let _ = writeln!(w, "sifs_s = {}", self.edca.sifs_s);
        let _ = writeln!(w, "retry_limit = {}", self.edca.retry_limit);
        let _ = writeln!(w, "frame_overhead_s = {}", self.edca.frame_overhead_s);
        let _ = writeln!(w, "\n[edca]\n# class aifs cw_min cw_max");
        for c in PriorityClass::ALL {
            let a = self.edca.access(c);
            let _ = writeln!(w, "{} {} {} {}", c.level(), a.aifs_slots, a.cw_min, a.cw_max);
        }
        let _ = writeln!(w, "\n[traffic]");
        let _ = writeln!(w, "rate_basis = {}", self.rate_basis);
        let _ = writeln!(w, "# class lambda mean_service size_dist");
        for c in PriorityClass::ALL {
            let t = &self.traffic[c.index()];
            let m = t.mean_service_s.map_or("auto".to_string(), |m| m.to_string());
            let _ = writeln!(w, "{} {} {} {}", c.level(), t.lambda_pps, m, t.size);
        }
        let _ = writeln!(w, "\n[sources]\n# node c0 c1 c2 c3");
        for (n, mask) in &self.sources {
            let bits: Vec<&str> = mask.iter().map(|&b| if b { "1" } else { "0" }).collect();
            let _ = writeln!(w, "{} {}", n, bits.join(" "));
        }
        let _ = writeln!(w, "\n[sweep]");
        let _ = writeln!(w, "node_counts = {}", join(&self.sweep_nodes));
        let _ = writeln!(w, "terrain_m = {}", join(&self.sweep_terrain_m));
        let _ = writeln!(w, "\n[validate]");
        let _ = writeln!(w, "departures = {}", self.validate_departures);
        let _ = writeln!(w, "tolerance = {}", self.validate_tolerance);
        let _ = writeln!(w, "# point class lambda mean_service exp|det|E[s^2]");
        for r in &self.validation {
            let _ = writeln!(w, "{} {} {} {} {}", r.point, r.class.level(), r.lambda, r.mean_service, r.service);
        }
        o
    }

    /// Per-node load specs for a network of `nodes` sensors.
    pub fn class_loads(&self, nodes: usize) -> Result<[ClassLoadSpec; PriorityClass::COUNT], ConfigError> {
        let scale = match self.rate_basis {
            RateBasis::Node => 1.0,
            RateBasis::Network => 1.0 / nodes.max(1) as f64,
        };
        let mut out = Vec::with_capacity(PriorityClass::COUNT);
        for c in PriorityClass::ALL {
            let t = &self.traffic[c.index()];
            let lambda = t.lambda_pps * scale;
            let spec = match t.mean_service_s {
                None => ClassLoadSpec::from_packet_sizes(c, lambda, t.size, self.radio.bitrate_bps, self.edca.frame_overhead_s),
                Some(m) => ClassLoadSpec::new(c, lambda, m, m * m * t.size.second_moment_ratio(), t.size),
            }
            .map_err(|e| ConfigError::Field {
                field: format!("traffic class {c}"),
                msg: e.to_string(),
            })?;
            out.push(spec);
        }
        Ok(out.try_into().expect("one spec per class"))
    }

    /// The packet-level run for `mode`, `seed` and `nodes` sensors.
    pub fn network_config(&self, mode: RoutingMode, seed: u64, nodes: usize) -> Result<NetworkConfig, ConfigError> {
        let source_mask = (!self.sources.is_empty()).then(|| {
            let mut m = vec![[true; PriorityClass::COUNT]; nodes + 1];
            for (n, mask) in &self.sources {
                if let Some(row) = m.get_mut(n.index()) {
                    *row = *mask;
                }
            }
            m
        });
        Ok(NetworkConfig {
            mode,
            seed,
            radio: self.radio,
            edca: self.edca,
            loads: self.class_loads(nodes)?,
            queue_capacity: self.queue_capacity,
            k_max: self.k_max,
            alpha: self.alpha,
            duration_s: self.duration_s,
            warmup_fraction: self.warmup_fraction,
            sink: self.sink,
            source_mask,
        })
    }

    /// Groups validation rows into load points, in file order.
    pub fn validation_points(&self) -> Result<Vec<ValidationPoint>, ConfigError> {
        let mut points: Vec<(String, Vec<ClassLoadSpec>)> = Vec::new();
        for r in &self.validation {
            match points.last_mut() {
                Some((name, specs)) if *name == r.point => specs.push(r.spec()),
                _ => points.push((r.point.clone(), vec![r.spec()])),
            }
        }
        points
            .into_iter()
            .map(|(name, specs)| {
                let model = AnalyticModel::new(specs).map_err(|e| ConfigError::Field {
                    field: format!("validate point {name}"),
                    msg: e.to_string(),
                })?;
                Ok(ValidationPoint { name, model })
            })
            .collect()
    }
}

/// Node counts for a sweep must be positive and distinct.
pub fn check_node_counts(counts: &[usize]) -> Result<(), String> {
    if counts.is_empty() {
        return Err("node_counts is empty".into());
    }
    let mut seen = BTreeSet::new();
    for &n in counts {
        if n == 0 {
            return Err("node counts must be positive".into());
        }
        if !seen.insert(n) {
            return Err(format!("node count {n} appears twice"));
        }
    }
    Ok(())
}
