//! Subcommand bodies behind the `wsn-prio` binary. Each `cmd_*` prints its
//! table to stdout, writes files under the configured output directory, and
//! returns a process exit code.
//!
//! The `*_reports` / `validation_table` functions return the underlying
//! results for programmatic use.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use rayon::prelude::*;

use crate::config::{check_node_counts, SimConfig};
use crate::metrics::{export_csv, export_series, littles_law_check, svg, RunReport, LITTLE_TOLERANCE};
use crate::network::{generate_topology, terrain_for, NetworkSim, RunLabel, SimError};
use crate::queueing::{simulate_single_server, Horizon};
use crate::routing::RoutingMode;
use crate::simcore::PriorityClass;
use crate::topology::Terrain;

pub const EXIT_OK: i32 = 0;
pub const EXIT_TOLERANCE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Figure number used for the share chart of a standard node count.
pub fn figure_for(nodes: usize) -> Option<u32> {
    match nodes {
        256 => Some(2),
        128 => Some(3),
        64 => Some(4),
        32 => Some(5),
        _ => None,
    }
}

/// Figure number of the delay-versus-size chart.
pub const DELAY_FIGURE: u32 = 6;

fn fig_name(nodes: usize) -> String {
    match figure_for(nodes) {
        Some(n) => format!("fig_{n}.svg"),
        None => format!("fig_n{nodes}.svg"),
    }
}

/// Runs every mode of the configuration for `seed` on one shared topology.
pub fn paired_runs(cfg: &SimConfig, seed: u64, nodes: usize, terrain: Terrain) -> Result<Vec<RunReport>, SimError> {
    let topo = generate_topology(nodes, &terrain, cfg.sink, seed)?;
    let echo = cfg.to_text();
    cfg.mode
        .modes()
        .into_iter()
        .map(|mode| {
            let net = cfg
                .network_config(mode, seed, nodes)
                .map_err(|e| SimError::Config(e.to_string()))?;
            let label = RunLabel {
                run_id: format!("{}_n{}_s{}", mode.as_str(), nodes, seed),
                terrain,
                config_echo: echo.clone(),
            };
            NetworkSim::new(net, topo.clone())?.run(label)
        })
        .collect()
}

/// All runs of `cmd_run`: `seeds` consecutive seeds, each in every mode.
pub fn run_reports(cfg: &SimConfig) -> Result<Vec<RunReport>, SimError> {
    let seeds: Vec<u64> = (0..u64::from(cfg.seeds)).map(|i| cfg.seed + i).collect();
    let per_seed: Vec<Result<Vec<RunReport>, SimError>> = seeds
        .par_iter()
        .map(|&s| paired_runs(cfg, s, cfg.nodes, cfg.terrain))
        .collect();
    let mut out = Vec::new();
    for r in per_seed {
        out.extend(r?);
    }
    Ok(out)
}

fn mean_shares(reports: &[&RunReport]) -> [f64; PriorityClass::COUNT] {
    let mut acc = [0.0; PriorityClass::COUNT];
    for r in reports {
        for c in PriorityClass::ALL {
            acc[c.index()] += r.shares.get(c);
        }
    }
    acc.map(|x| x / reports.len().max(1) as f64)
}

fn write_file(path: &Path, body: &str) -> io::Result<()> {
    fs::write(path, body).map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

pub fn cmd_run(cfg: &SimConfig, svg_out: bool) -> i32 {
    let reports = match run_reports(cfg) {
        Ok(r) => r,
        Err(SimError::Config(msg)) => {
            eprintln!("config error: {msg}");
            return EXIT_CONFIG;
        }
        Err(e) => {
            eprintln!("run failed: {e}");
            return EXIT_IO;
        }
    };
    let write = || -> io::Result<()> {
        fs::create_dir_all(&cfg.out_dir)?;
        for r in &reports {
            export_csv(r, &cfg.out_dir.join(format!("run_{}.csv", r.run_id)))?;
            write_file(&cfg.out_dir.join(format!("run_{}.conf", r.run_id)), &r.config_echo)?;
        }
        if svg_out {
            let modes: Vec<(&str, [f64; PriorityClass::COUNT])> = cfg
                .mode
                .modes()
                .into_iter()
                .map(|m| {
                    let rs: Vec<&RunReport> = reports.iter().filter(|r| r.mode == m).collect();
                    (m.as_str(), mean_shares(&rs))
                })
                .collect();
            let title = format!("Bandwidth share, {} nodes", cfg.nodes);
            write_file(&cfg.out_dir.join(fig_name(cfg.nodes)), &svg::share_bars(&title, &modes))?;
        }
        Ok(())
    };
    if let Err(e) = write() {
        eprintln!("io error: {e}");
        return EXIT_IO;
    }
    println!("run_id,mode,class,delivered_packets,share,mean_delay_s,conserved");
    for r in &reports {
        for c in PriorityClass::ALL {
            let m = r.class(c);
            println!(
                "{},{},{},{},{:.4},{},{}",
                r.run_id,
                r.mode.as_str(),
                c,
                m.delivered_packets,
                r.shares.get(c),
                r.mean_delay_s(c).map_or(String::new(), |d| format!("{d:.6}")),
                r.conserved()
            );
        }
    }
    EXIT_OK
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowStatus {
    Pass,
    Fail,
    /// The closed form has no steady state for this class; not gated.
    Saturated,
}

/// One class of one validation point.
#[derive(Debug, Clone)]
pub struct ValidationResult {
    pub point: String,
    pub class: PriorityClass,
    pub rho: f64,
    pub analytic: Option<f64>,
    pub empirical: f64,
    pub relative_error: Option<f64>,
    pub ci_half_width: f64,
    pub departures: u64,
    pub little_error: Option<f64>,
    pub status: RowStatus,
}

/// Simulates every configured load point and compares against the closed form.
pub fn validation_table(cfg: &SimConfig) -> Result<Vec<ValidationResult>, crate::config::ConfigError> {
    let points = cfg.validation_points()?;
    let rows: Vec<Vec<ValidationResult>> = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let report = simulate_single_server(&p.model, Horizon::Departures(cfg.validate_departures), cfg.seed + i as u64);
            report
                .classes
                .iter()
                .filter(|est| p.model.spec(est.class).is_some_and(|s| s.lambda_pps > 0.0))
                .map(|est| {
                    let analytic = p.model.analytic_wait(est.class).ok();
                    let relative_error = analytic.map(|a| {
                        if a == 0.0 {
                            est.mean_wait.abs()
                        } else {
                            (est.mean_wait - a).abs() / a
                        }
                    });
                    let little_error = littles_law_check(&est.little).ok().map(|c| c.relative_error);
                    let little_ok = little_error.is_some_and(|e| e < LITTLE_TOLERANCE);
                    let status = match relative_error {
                        None => RowStatus::Saturated,
                        Some(e) if e <= cfg.validate_tolerance && little_ok => RowStatus::Pass,
                        Some(_) => RowStatus::Fail,
                    };
                    ValidationResult {
                        point: p.name.clone(),
                        class: est.class,
                        rho: p.model.rho(est.class),
                        analytic,
                        empirical: est.mean_wait,
                        relative_error,
                        ci_half_width: est.ci_half_width,
                        departures: est.departures,
                        little_error,
                        status,
                    }
                })
                .collect()
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

pub fn format_validation(rows: &[ValidationResult]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<12} {:>5} {:>6} {:>10} {:>10} {:>8} {:>8} {:>10}",
        "point", "class", "rho", "analytic", "empirical", "rel_err", "little", "status"
    );
    for r in rows {
        let f = |x: Option<f64>, p: usize| x.map_or("-".to_string(), |v| format!("{v:.p$}"));
        let status = match r.status {
            RowStatus::Pass => "ok",
            RowStatus::Fail => "FAIL",
            RowStatus::Saturated => "Saturated",
        };
        let _ = writeln!(
            out,
            "{:<12} {:>5} {:>6.3} {:>10} {:>10.4} {:>8} {:>8} {:>10}",
            r.point,
            r.class.level(),
            r.rho,
            f(r.analytic, 4),
            r.empirical,
            f(r.relative_error, 4),
            f(r.little_error, 4),
            status
        );
    }
    out
}

pub fn cmd_validate(cfg: &SimConfig) -> i32 {
    if cfg.validation.is_empty() {
        eprintln!("config error: the validation grid is empty");
        return EXIT_CONFIG;
    }
    let rows = match validation_table(cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    print!("{}", format_validation(&rows));
    let failed = rows.iter().filter(|r| r.status == RowStatus::Fail).count();
    let gated = rows.iter().filter(|r| r.status != RowStatus::Saturated).count();
    println!("{} of {} stable rows within {}", gated - failed, gated, cfg.validate_tolerance);
    if failed == 0 {
        EXIT_OK
    } else {
        EXIT_TOLERANCE
    }
}

/// Aggregates of one node count in a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub nodes: usize,
    pub seeds: usize,
    /// Seeds whose priority-mode shares were strictly decreasing by class.
    pub ordered: usize,
    /// Seeds where class 0 saw lower mean delay in priority than baseline mode.
    pub class0_faster: usize,
    /// Seeds where both modes were run and compared.
    pub paired: usize,
}

/// Runs every (count, seed) cell with all configured modes. Cells run in
/// parallel; each is a self-contained simulation.
pub fn sweep_reports(cfg: &SimConfig, counts: &[usize], terrains: &[f64]) -> Vec<Result<Vec<RunReport>, SimError>> {
    let cells: Vec<(usize, f64, u64)> = counts
        .iter()
        .zip(terrains)
        .flat_map(|(&n, &t)| (0..u64::from(cfg.seeds)).map(move |i| (n, t, cfg.seed + i)))
        .collect();
    cells
        .par_iter()
        .map(|&(n, t, seed)| {
            let terrain = Terrain::square(t).map_err(SimError::from)?;
            paired_runs(cfg, seed, n, terrain)
        })
        .collect()
}

pub fn summarize(counts: &[usize], reports: &[RunReport]) -> Vec<SweepSummary> {
    counts
        .iter()
        .map(|&n| {
            let at: Vec<&RunReport> = reports.iter().filter(|r| r.nodes == n).collect();
            let prio: Vec<&RunReport> = at.iter().copied().filter(|r| r.mode == RoutingMode::Priority).collect();
            let mut paired = 0;
            let mut faster = 0;
            for p in &prio {
                if let Some(b) = at.iter().find(|r| r.mode == RoutingMode::Baseline && r.seed == p.seed) {
                    paired += 1;
                    let dp = p.mean_delay_s(PriorityClass::CRITICAL).unwrap_or(f64::INFINITY);
                    let db = b.mean_delay_s(PriorityClass::CRITICAL).unwrap_or(f64::INFINITY);
                    if dp < db {
                        faster += 1;
                    }
                }
            }
            SweepSummary {
                nodes: n,
                seeds: prio.len(),
                ordered: prio.iter().filter(|r| r.shares.strictly_ordered()).count(),
                class0_faster: faster,
                paired,
            }
        })
        .collect()
}

fn sweep_figures(cfg: &SimConfig, counts: &[usize], reports: &[RunReport]) -> io::Result<()> {
    let modes = cfg.mode.modes();
    for &n in counts {
        let series: Vec<(&str, [f64; PriorityClass::COUNT])> = modes
            .iter()
            .map(|&m| {
                let rs: Vec<&RunReport> = reports.iter().filter(|r| r.nodes == n && r.mode == m).collect();
                (m.as_str(), mean_shares(&rs))
            })
            .collect();
        let title = format!("Bandwidth share, {n} nodes");
        write_file(&cfg.out_dir.join(fig_name(n)), &svg::share_bars(&title, &series))?;
    }
    let xs: Vec<f64> = counts.iter().map(|&n| n as f64).collect();
    let mut series = Vec::new();
    for &m in &modes {
        let ys: Vec<f64> = counts
            .iter()
            .map(|&n| {
                let ds: Vec<f64> = reports
                    .iter()
                    .filter(|r| r.nodes == n && r.mode == m)
                    .filter_map(|r| r.mean_delay_s(PriorityClass::CRITICAL))
                    .collect();
                if ds.is_empty() {
                    f64::NAN
                } else {
                    ds.iter().sum::<f64>() / ds.len() as f64
                }
            })
            .collect();
        series.push((m.as_str(), ys));
    }
    let chart = svg::lines("Class 0 end-to-end delay", "nodes", "mean delay (s)", &xs, &series);
    write_file(&cfg.out_dir.join(format!("fig_{DELAY_FIGURE}.svg")), &chart)
}

pub fn format_summary(s: &SweepSummary) -> String {
    let mut line = format!("ordering n={}: {}/{} seeds strictly ordered", s.nodes, s.ordered, s.seeds);
    if s.paired > 0 {
        let _ = write!(line, "; class-0 delay lower than baseline in {}/{}", s.class0_faster, s.paired);
    }
    line
}

/// `counts = None` uses the configured sweep grid; explicit counts get the
/// standard terrain for their size.
pub fn cmd_sweep(cfg: &SimConfig, counts: Option<&[usize]>, svg_out: bool) -> i32 {
    let (counts, terrains): (Vec<usize>, Vec<f64>) = match counts {
        Some(c) => (c.to_vec(), c.iter().map(|&n| terrain_for(n)).collect()),
        None => (cfg.sweep_nodes.clone(), cfg.sweep_terrain_m.clone()),
    };
    if let Err(msg) = check_node_counts(&counts) {
        eprintln!("config error: {msg}");
        return EXIT_CONFIG;
    }
    let results = sweep_reports(cfg, &counts, &terrains);
    let mut reports = Vec::new();
    let mut failed = 0;
    for r in results {
        match r {
            Ok(rs) => reports.extend(rs),
            Err(e) => {
                failed += 1;
                eprintln!("cell failed: {e}");
            }
        }
    }
    let write = || -> io::Result<()> {
        fs::create_dir_all(&cfg.out_dir)?;
        export_series(&reports, &cfg.out_dir.join("sweep.csv"))?;
        write_file(&cfg.out_dir.join("sweep.conf"), &cfg.to_text())?;
        if svg_out {
            sweep_figures(cfg, &counts, &reports)?;
        }
        Ok(())
    };
    if let Err(e) = write() {
        eprintln!("io error: {e}");
        return EXIT_IO;
    }
    for s in summarize(&counts, &reports) {
        println!("{}", format_summary(&s));
    }
    if failed > 0 {
        EXIT_IO
    } else {
        EXIT_OK
    }
}
