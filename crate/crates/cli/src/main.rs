mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use commands::{Failure, Hooks, EXIT_CONFIG};
use config::{Command, Config, Overrides};
use output::{digest, now, read_manifest, RunWriter};

/// LOS coverage probability of mm-wave access-point deployments.
#[derive(Debug, Parser)]
#[command(name = "loscov", version)]
struct Cli {
    /// JSON configuration; missing fields fall back to per-command defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides `output.out_dir`).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Master seed for the Monte Carlo oracle.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads; results do not depend on this value.
    #[arg(long, global = true, env = "LOSCOV_THREADS")]
    threads: Option<usize>,

    /// Scale β on the closed-form side of `validate` (negative control).
    #[arg(long, global = true, hide = true)]
    corrupt_beta: Option<f64>,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Blocking probability against AP height.
    Blocking,
    /// Association LOS probability of the irregular deployment.
    Assoc,
    /// Coverage map and worst case of the hexagonal deployment.
    Regular,
    /// Minimum high-rise density for a joint coverage target.
    Joint,
    /// Compare closed forms against Monte Carlo simulation.
    Validate,
    /// Re-run the command recorded in a manifest and compare output digests.
    Replay {
        manifest: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = e.downcast_ref::<Failure>().map_or(1, |f| f.code);
            eprintln!("error: {e:#}");
            ExitCode::from(code as u8)
        }
    }
}

fn config_err(e: anyhow::Error) -> anyhow::Error {
    Failure {
        code: EXIT_CONFIG,
        message: format!("{e:#}"),
    }
    .into()
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    let threads = cli
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        return Err(config_err(anyhow::anyhow!("--threads must be at least 1")));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .context("building thread pool")?;

    let cmd = match &cli.command {
        Cmd::Blocking => Command::Blocking,
        Cmd::Assoc => Command::Assoc,
        Cmd::Regular => Command::Regular,
        Cmd::Joint => Command::Joint,
        Cmd::Validate => Command::Validate,
        Cmd::Replay { manifest } => {
            return pool.install(|| replay(manifest, cli.out_dir.as_deref(), threads));
        }
    };

    let mut cfg =
        Config::resolve(cmd, cli.config.as_deref(), &cli.overrides).map_err(config_err)?;
    if let Some(dir) = &cli.out_dir {
        cfg.output.out_dir = dir.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.mc.seed = seed;
    }
    let hooks = Hooks {
        corrupt_beta: cli.corrupt_beta,
    };
    pool.install(|| execute(cmd, &cfg, hooks, threads)).map(|_| ())
}

/// Runs one command and always writes the manifest, even when the command
/// fails after producing output.
fn execute(
    cmd: Command,
    cfg: &Config,
    hooks: Hooks,
    threads: usize,
) -> anyhow::Result<output::RunManifest> {
    let started = now();
    let mut w = RunWriter::new(&cfg.output.out_dir)?;
    let result = commands::run(cmd, cfg, &mut w, hooks);
    if let Err(e) = &result {
        w.note(format!("exited with error: {e:#}"));
    }
    let manifest = w.finish(cmd.name(), cfg, threads, started)?;
    result.map(|_| manifest)
}

fn replay(path: &Path, out_dir: Option<&Path>, threads: usize) -> anyhow::Result<()> {
    let original = read_manifest(path).map_err(config_err)?;
    let cmd = Command::parse(&original.command)
        .ok_or_else(|| config_err(anyhow::anyhow!("unknown command '{}'", original.command)))?;
    let mut cfg = original.config.clone();
    cfg.output.out_dir = match out_dir {
        Some(d) => d.to_path_buf(),
        None => path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join("replay"),
    };
    let outcome = execute(cmd, &cfg, Hooks::default(), threads);
    // Compare whatever was written, including runs that ended in a failure code.
    let dir = &cfg.output.out_dir;
    let mut mismatches = Vec::new();
    for f in &original.outputs {
        match std::fs::read(dir.join(&f.file)) {
            Ok(bytes) if digest(&bytes) == f.sha256 => {
                println!("MATCH    {}", f.file);
            }
            Ok(_) => {
                println!("MISMATCH {}", f.file);
                mismatches.push(f.file.clone());
            }
            Err(_) => {
                println!("MISSING  {}", f.file);
                mismatches.push(f.file.clone());
            }
        }
    }
    if !mismatches.is_empty() {
        anyhow::bail!("replay differs in {}", mismatches.join(", "));
    }
    outcome.map(|_| ())
}
