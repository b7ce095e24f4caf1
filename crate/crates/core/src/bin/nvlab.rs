use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nvlab::harness::{self, RunConfig};
use nvlab::{NvError, Result};

#[derive(Parser)]
#[command(name = "nvlab", version, about = "Novikov-Veselov soliton lab")]
struct Cli {
    /// TOML run configuration; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for parallel commands (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Scan CSV to pick the trace seed from.
    #[arg(long, global = true)]
    seed_from: Option<PathBuf>,
    /// Override a config key, e.g. `--set perturb.k=0.6`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Print the effective configuration and exit.
    #[arg(long, global = true)]
    dump_config: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve initial data, writing snapshots and diagnostics.
    Evolve,
    /// Scan the mismatch determinant over a (k, gamma) window.
    Scan {
        /// Scan the reduced k = 0 determinant over gamma instead.
        #[arg(long)]
        k0: bool,
    },
    /// Trace the closed zero curve and report the instability band.
    Trace,
    /// Run the perturbed-soliton growth experiment.
    Perturb,
    /// Tabulate the planar speed profile.
    SpeedProfile,
}

fn load(cli: &Cli) -> Result<RunConfig> {
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path)?,
        None => String::new(),
    };
    let mut cfg = RunConfig::from_toml_with_overrides(&text, &cli.set)?;
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load(cli)?;
    if cli.dump_config {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    let Some(command) = &cli.command else {
        return Err(NvError::Config("no subcommand given; see --help".into()));
    };
    match command {
        Command::Evolve => {
            let r = harness::cmd_evolve(&cfg)?;
            println!(
                "evolve: {} steps, {} snapshots, final t = {} l2 = {:.6e}",
                r.steps,
                r.snapshots.len(),
                r.last.time,
                r.last.l2_norm
            );
        }
        Command::Scan { k0 } => {
            let r = harness::cmd_scan(&cfg, *k0)?;
            println!("scan: {} rows ({} flagged) -> {}", r.rows, r.non_ok, r.path.display());
            if let Some((k, g, d)) = r.min_cell {
                println!("smallest |D| = {d:.3e} at (k, gamma) = ({k}, {g})");
            }
        }
        Command::Trace => {
            let r = harness::cmd_trace(&cfg, cli.seed_from.as_deref())?;
            println!("trace: {} points from k = {}, closed = {}", r.points, r.seed_k, r.closed);
            match r.band {
                Some(b) => println!("band k_min = {:.6} k_max = {:.6}", b.k_min, b.k_max),
                None => println!("band: no gamma > 0 arc"),
            }
        }
        Command::Perturb => {
            let s = harness::cmd_perturb(&cfg)?;
            match s.gamma_est {
                Some(g) => println!(
                    "perturb: gamma_est = {g:.6} (expected {:.6}), shape correlation {:.4}",
                    s.gamma_expected, s.shape_correlation
                ),
                None => println!("perturb: deviation vanished identically"),
            }
        }
        Command::SpeedProfile => {
            let path = harness::cmd_speed_profile(&cfg)?;
            println!("speed profile -> {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(harness::exit_code(&e) as u8)
        }
    }
}
