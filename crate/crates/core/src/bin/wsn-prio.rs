use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wsn_prio::cli::{cmd_run, cmd_sweep, cmd_validate, EXIT_CONFIG};
use wsn_prio::config::{ModeSelection, SimConfig};

#[derive(Parser)]
#[command(name = "wsn-prio", version, about = "Priority bandwidth allocation in wireless sensor networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Configuration file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// priority, baseline or both.
    #[arg(long)]
    mode: Option<ModeSelection>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write SVG charts.
    #[arg(long)]
    svg: bool,
    /// Number of consecutive seeds to replicate.
    #[arg(long)]
    seeds: Option<u32>,
}

#[derive(Subcommand)]
enum Command {
    /// One network run per mode.
    Run(Common),
    /// Single-server simulation against the analytic waits.
    Validate(Common),
    /// Runs both modes over several node counts.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Node counts, e.g. `--nodes 32,64`.
        #[arg(long, value_delimiter = ',')]
        nodes: Option<Vec<usize>>,
    },
}

fn load(c: &Common) -> Result<SimConfig, String> {
    let mut cfg = match &c.config {
        Some(p) => SimConfig::load(p).map_err(|e| e.to_string())?,
        None => SimConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(m) = c.mode {
        cfg.mode = m;
    }
    if let Some(o) = &c.out {
        cfg.out_dir = o.clone();
    }
    if let Some(k) = c.seeds {
        if k == 0 {
            return Err("--seeds must be at least 1".into());
        }
        cfg.seeds = k;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Run(c) | Command::Validate(c) | Command::Sweep { common: c, .. } => c,
    };
    let cfg = match load(common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    let code = match &cli.command {
        Command::Run(c) => cmd_run(&cfg, c.svg),
        Command::Validate(_) => cmd_validate(&cfg),
        Command::Sweep { common, nodes } => cmd_sweep(&cfg, nodes.as_deref(), common.svg),
    };
    ExitCode::from(code as u8)
}
