//! A reduced node-count sweep that writes `sweep.csv` and the share and
//! delay charts.
//!
//! Run with `cargo run --release --example node_sweep [out_dir]`.

use std::path::PathBuf;

use wsn_prio::cli::{format_summary, summarize, sweep_reports};
use wsn_prio::config::SimConfig;
use wsn_prio::metrics::{export_series, svg};
use wsn_prio::network::terrain_for;
use wsn_prio::routing::RoutingMode;
use wsn_prio::simcore::PriorityClass;

fn main() {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "sweep_out".into()));
    std::fs::create_dir_all(&out).unwrap();

    let cfg = SimConfig { duration_s: 20.0, seeds: 3, ..SimConfig::default() };
    let counts = [32, 64, 128];
    let terrains: Vec<f64> = counts.iter().map(|&n| terrain_for(n)).collect();

    let reports: Vec<_> = sweep_reports(&cfg, &counts, &terrains)
        .into_iter()
        .flat_map(|r| r.expect("cell"))
        .collect();
    export_series(&reports, &out.join("sweep.csv")).unwrap();
    for s in summarize(&counts, &reports) {
        println!("{}", format_summary(&s));
    }

    let xs: Vec<f64> = counts.iter().map(|&n| n as f64).collect();
    let series: Vec<(&str, Vec<f64>)> = [RoutingMode::Priority, RoutingMode::Baseline]
        .iter()
        .map(|&m| {
            let ys = counts
                .iter()
                .map(|&n| {
                    let ds: Vec<f64> = reports
                        .iter()
                        .filter(|r| r.nodes == n && r.mode == m)
                        .filter_map(|r| r.mean_delay_s(PriorityClass::CRITICAL))
                        .collect();
                    ds.iter().sum::<f64>() / ds.len().max(1) as f64
                })
                .collect();
            (m.as_str(), ys)
        })
        .collect();
    let chart = svg::lines("Class 0 delay", "nodes", "mean delay (s)", &xs, &series);
    std::fs::write(out.join("delay.svg"), chart).unwrap();
    println!("wrote {}", out.display());
}
