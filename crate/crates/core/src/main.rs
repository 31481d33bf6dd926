//! `cfsim` command-line front end.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use cfsim::harness::{sidecar_path, write_csv, write_sidecar, Experiment, RunSidecar, SimConfig};
use clap::{Parser, ValueEnum};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Fig3,
    Fig4,
    Fig5,
    Calib,
}

impl From<Command> for Experiment {
    fn from(c: Command) -> Self {
        match c {
            Command::Fig3 => Experiment::Fig3,
            Command::Fig4 => Experiment::Fig4,
            Command::Fig5 => Experiment::Fig5,
            Command::Calib => Experiment::Calib,
        }
    }
}

/// Link-level Monte-Carlo simulator for mobile cell-free massive MIMO.
#[derive(Debug, Parser)]
#[command(name = "cfsim", version)]
struct Cli {
    #[arg(value_enum)]
    experiment: Command,
    /// TOML configuration file; omitted sections take their defaults.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: u64,
    /// Output CSV; the resolved config is written next to it as JSON.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the experiment's trial count.
    #[arg(long)]
    trials: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let experiment = Experiment::from(cli.experiment);
    let mut cfg = match SimConfig::from_file(&cli.config) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Some(t) = cli.trials {
        if t == 0 {
            eprintln!("error: --trials must be positive");
            return ExitCode::from(1);
        }
        experiment.set_trials(&mut cfg, t);
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(1);
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };

    println!("running {} with seed {}", experiment.name(), cli.seed);
    let start = Instant::now();
    let records = match pool.install(|| experiment.run(&cfg, cli.seed)) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(if e.is_config_error() { 1 } else { 2 });
        }
    };
    println!(
        "{} records in {:.1} s",
        records.len(),
        start.elapsed().as_secs_f64()
    );

    let sidecar = RunSidecar {
        experiment: experiment.name(),
        seed: cli.seed,
        threads: cli.threads,
        records: records.len(),
        config: &cfg,
    };
    let written = write_csv(&cli.out, &records)
        .and_then(|_| write_sidecar(&sidecar_path(&cli.out), &sidecar));
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    println!("wrote {}", cli.out.display());
    ExitCode::SUCCESS
}
