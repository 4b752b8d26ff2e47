use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;
use wsn_prio::config::SimConfig;

fn wsn_prio(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wsn-prio")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("test.conf");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn data_rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().skip(1).map(str::to_string).collect()
}

const MINIMAL: &str = "[run]\nnodes = 2\nterrain_m = 200\nduration_s = 1\nmode = both\n";

#[test]
fn run_writes_four_class_rows_per_mode() {
    let dir = TempDir::new().unwrap();
    let conf = write_config(dir.path(), MINIMAL);
    let out = dir.path().join("out");
    let o = wsn_prio(&["run", "--config", &conf, "--out", out.to_str().unwrap(), "--svg"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mut csvs: Vec<_> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    csvs.sort();
    assert_eq!(csvs, vec!["run_baseline_n2_s1.csv", "run_priority_n2_s1.csv"]);
    for name in &csvs {
        let rows = data_rows(&out.join(name));
        assert_eq!(rows.len(), 4);
        // Same seed and topology on both sides of the pair.
        assert!(rows.iter().all(|r| r.contains(",2,200,1,")), "{rows:?}");
    }
    assert!(out.join("fig_n2.svg").exists());
    let echo = fs::read_to_string(out.join("run_priority_n2_s1.conf")).unwrap();
    let mut expect = SimConfig::parse(MINIMAL).unwrap();
    expect.out_dir = out.clone();
    assert_eq!(SimConfig::parse(&echo).unwrap(), expect);
}

#[test]
fn malformed_line_exits_2_with_its_number() {
    let dir = TempDir::new().unwrap();
    let conf = write_config(dir.path(), "[run]\nnodes = 4\nduration_s = soon\n");
    let o = wsn_prio(&["run", "--config", &conf]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn missing_config_file_exits_2() {
    let o = wsn_prio(&["run", "--config", "/nonexistent/wsn.conf"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn zero_seeds_is_a_config_error() {
    let o = wsn_prio(&["run", "--seeds", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_gates_stable_rows_and_marks_saturated_ones() {
    let dir = TempDir::new().unwrap();
    let conf = write_config(dir.path(), "[validate]\ndepartures = 200000\ntolerance = 0.05\ntwo 0 0.25 1 exp\ntwo 1 0.25 1 exp\nover 0 0.6 1 exp\nover 1 0.6 1 exp\n");
    let o = wsn_prio(&["validate", "--config", &conf]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{stdout}");
    assert!(stdout.contains("0.6667") && stdout.contains("1.3333"), "{stdout}");
    assert!(stdout.contains("Saturated"));
}

#[test]
fn validate_tolerance_breach_exits_1() {
    let dir = TempDir::new().unwrap();
    let conf = write_config(dir.path(), "[validate]\ndepartures = 2000\ntolerance = 0.000001\np 0 0.5 1 exp\n");
    let o = wsn_prio(&["validate", "--config", &conf]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn empty_validation_grid_exits_2() {
    let dir = TempDir::new().unwrap();
    let conf = write_config(dir.path(), "[validate]\ndepartures = 1000\n");
    let o = wsn_prio(&["validate", "--config", &conf]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_over_four_counts_gives_32_rows() {
    let dir = TempDir::new().unwrap();
    let conf = write_config(dir.path(), "[run]\nduration_s = 0.2\n");
    let out = dir.path().join("out");
    let o = wsn_prio(&["sweep", "--config", &conf, "--out", out.to_str().unwrap(), "--svg"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(data_rows(&out.join("sweep.csv")).len(), 32);
    for n in 2..=6 {
        assert!(out.join(format!("fig_{n}.svg")).exists(), "fig_{n}");
    }
    assert!(out.join("sweep.conf").exists());
}

#[test]
fn twenty_seed_sweep_reports_ordering() {
    let dir = TempDir::new().unwrap();
    let conf = write_config(dir.path(), "[run]\nduration_s = 0.2\n");
    let out = dir.path().join("out");
    let o = wsn_prio(&["sweep", "--config", &conf, "--out", out.to_str().unwrap(), "--nodes", "32", "--seeds", "20"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(data_rows(&out.join("sweep.csv")).len(), 160);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("ordering n=32:") && stdout.contains("/20 seeds strictly ordered"), "{stdout}");
}

#[test]
fn duplicate_sweep_counts_exit_2() {
    let o = wsn_prio(&["sweep", "--nodes", "32,32"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn shipped_configs_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = SimConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        if path.file_name().unwrap() == "default.conf" {
            assert_eq!(cfg, SimConfig::default());
        }
        seen += 1;
    }
    assert!(seen >= 3);
}
