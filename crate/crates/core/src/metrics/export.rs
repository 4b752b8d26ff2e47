use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use super::collector::{mean_delay, ClassMetrics, Conservation, Shares};
use super::LittleSample;
use crate::routing::RoutingMode;
use crate::simcore::PriorityClass;
use crate::topology::Terrain;

pub const RUN_CSV_HEADER: &str = "run_id,mode,nodes,terrain_m,seed,class,delivered_packets,delivered_bits,share,mean_delay_s,p95_delay_s,drops_overflow,drops_mac,drops_noroute";

pub const SWEEP_CSV_HEADER: &str = "node_count,terrain_m,mode,seed,class,delivered_packets,delivered_bits,share,mean_delay_s,p95_delay_s,drops_overflow,drops_mac,drops_noroute";

/// Everything one simulation run produced.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub run_id: String,
    pub mode: RoutingMode,
    pub seed: u64,
    pub nodes: usize,
    pub terrain: Terrain,
    /// Fully resolved configuration the run used.
    pub config_echo: String,
    pub classes: Vec<ClassMetrics>,
    pub shares: Shares,
    pub conservation: [Conservation; PriorityClass::COUNT],
    pub little: [LittleSample; PriorityClass::COUNT],
    pub duration_s: f64,
    pub window_s: f64,
    pub events_processed: u64,
}

impl RunReport {
    pub fn class(&self, class: PriorityClass) -> &ClassMetrics {
        &self.classes[class.index()]
    }

    pub fn mean_delay_s(&self, class: PriorityClass) -> Option<f64> {
        mean_delay(self.class(class)).ok().map(|d| d.mean_s)
    }

    pub fn conserved(&self) -> bool {
        self.conservation.iter().all(Conservation::holds)
    }
}

pub(crate) fn terrain_label(t: &Terrain) -> String {
    if t.width_m == t.height_m {
        format!("{}", t.width_m)
    } else {
        format!("{}x{}", t.width_m, t.height_m)
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn class_columns(out: &mut String, r: &RunReport, m: &ClassMetrics) {
    let delay = mean_delay(m).ok();
    let _ = writeln!(
        out,
        "{},{},{},{},{},{},{},{}",
        m.delivered_packets,
        m.delivered_bits,
        r.shares.get(m.class),
        opt(delay.map(|d| d.mean_s)),
        opt(delay.map(|d| d.p95_s)),
        m.drops.overflow,
        m.drops.mac,
        m.drops.no_route,
    );
}

pub fn run_csv(report: &RunReport) -> String {
    let mut out = String::from(RUN_CSV_HEADER);
    out.push('\n');
    for m in &report.classes {
        let _ = write!(
            out,
            "{},{},{},{},{},{},",
            report.run_id,
            report.mode.as_str(),
            report.nodes,
            terrain_label(&report.terrain),
            report.seed,
            m.class
        );
        class_columns(&mut out, report, m);
    }
    out
}

pub fn series_csv(reports: &[RunReport]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in reports {
        for m in &r.classes {
            let _ = write!(
                out,
                "{},{},{},{},{},",
                r.nodes,
                terrain_label(&r.terrain),
                r.mode.as_str(),
                r.seed,
                m.class
            );
            class_columns(&mut out, r, m);
        }
    }
    out
}

pub fn export_csv(report: &RunReport, path: &Path) -> io::Result<()> {
    fs::write(path, run_csv(report))
}

pub fn export_series(reports: &[RunReport], path: &Path) -> io::Result<()> {
    fs::write(path, series_csv(reports))
}
