//! `radiant <command> --config <file> [--jobs N] [--out DIR]`

mod commands;
mod config;
mod error;
mod output;
mod problem;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::Parser;
use serde_json::json;

use config::{ensure, Config};
use error::{CliError, CliResult};
use output::Outputs;

#[derive(Parser, Debug)]
#[command(name = "radiant", about = "Batch experiments for radial semilinear wave equations")]
struct Cli {
    /// One of: kernel-table, homogeneous-decay, picard, oracle-compare,
    /// lifespan, spectral-blowup, positivity-scan.
    command: String,
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Worker threads for sweeps; overrides the `jobs` key.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory; overrides the `output_dir` key.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn tol_scale() -> CliResult<f64> {
    match std::env::var("RADIANT_TOL_SCALE") {
        Err(_) => Ok(1.0),
        Ok(v) => match v.trim().parse::<f64>() {
            Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
            _ => Err(CliError::validation("RADIANT_TOL_SCALE", format!("`{v}` is not a positive number"))),
        },
    }
}

fn run(cli: Cli) -> CliResult<()> {
    ensure(
        commands::COMMANDS.contains(&cli.command.as_str()),
        "command",
        format!("unknown command `{}`; expected one of {}", cli.command, commands::COMMANDS.join(", ")),
    )?;
    let cfg = Config::load(&cli.config, tol_scale()?)?;

    // Keys shared by every command.
    let named = cfg.string("command", &cli.command);
    ensure(named == cli.command, "command", format!("config is for `{named}`, not `{}`", cli.command))?;
    let jobs = match cli.jobs {
        Some(j) => {
            cfg.count("jobs", 1, 1)?;
            j
        }
        None => cfg.count("jobs", 1, 1)?,
    };
    ensure(jobs >= 1, "jobs", "must be at least 1")?;
    let out_dir = match &cli.out {
        Some(p) => {
            cfg.string("output_dir", "");
            p.clone()
        }
        None => PathBuf::from(cfg.string("output_dir", "radiant-out")),
    };
    let seed = cfg.u64("seed", 0)?;

    let job = commands::prepare(&cli.command, &cfg)?;
    cfg.reject_unknown()?;

    let started = Instant::now();
    let mut out = Outputs::create(&out_dir)?;
    let summary = job(&mut out, jobs)?;
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    out.finish(json!({
        "command": cli.command,
        "config_sha256": cfg.hash(),
        "config": cfg.entries(),
        "seed": seed,
        "jobs": jobs,
        "tol_scale": cfg.tol_scale(),
        "tolerances": cfg.tolerances(),
        "summary": summary,
        "wall_time_seconds": started.elapsed().as_secs_f64(),
        "timestamp_unix": timestamp,
        "version": env!("CARGO_PKG_VERSION"),
    }))?;
    println!("{}: wrote {}", cli.command, out_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
