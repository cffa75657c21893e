mod config;
mod series;
mod validate;

use clap::{Parser, Subcommand};
use config::{LoadError, RunFile};
use mimo_ee::network::realize;
use mimo_ee::sweep::{emit_convergence_trace, emit_csv, emit_raw, run_sweep, SweepError};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Energy-efficiency sweeps, single-run traces and invariant checks.
#[derive(Debug, Parser)]
#[command(name = "mimo-ee", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run file (TOML) with [network], [sweep] and [trace] tables.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Base seed; overrides the run file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Parallel trials for `sweep`.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,
    /// Monte-Carlo trials (`sweep`) or instances (`validate`).
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    trials: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the [sweep] grid and write summary, raw and series files.
    Sweep,
    /// Run one pipeline and write its convergence trace.
    Trace,
    /// Check solver invariants on random instances.
    Validate,
}

#[derive(Debug, thiserror::Error)]
enum Failure {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Sweep(#[from] SweepError),
}

/// Successful runs end in `Ok(true)`; `Ok(false)` means nothing was
/// feasible or an invariant failed.
type Outcome = Result<bool, Failure>;

fn load(cli: &Cli, required: bool) -> Result<RunFile, Failure> {
    match &cli.config {
        Some(p) => Ok(RunFile::load(p)?),
        None if required => Err(Failure::Usage("--config is required for this command".into())),
        None => Ok(RunFile::default()),
    }
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|source| {
        Failure::Sweep(SweepError::Io {
            path: dir.to_path_buf(),
            source,
        })
    })
}

fn sweep(cli: &Cli) -> Outcome {
    let file = load(cli, true)?;
    let path = cli.config.as_deref().unwrap_or(Path::new(""));
    let mut spec = file
        .sweep
        .ok_or_else(|| LoadError::Missing("sweep", path.to_path_buf()))?;
    if let Some(s) = cli.seed {
        spec.base_seed = s;
    }
    if let Some(t) = cli.trials {
        spec.trials = t as usize;
    }
    if let Some(w) = cli.workers {
        spec.workers = Some(w as usize);
    }
    let result = run_sweep(&spec, &file.network)?;
    create_dir(&cli.out)?;
    emit_csv(&result, &cli.out.join("summary.csv"))?;
    emit_raw(&result, &cli.out.join("raw.csv"))?;
    let files = series::emit_series(&result, &cli.out.join("series"))?;

    println!(
        "{:<7} {:>5} {:>5} {:>6} {:>9} {:>12}",
        "mode", "users", "rho", "r_bps", "feasible", "ee_bits"
    );
    for p in &result.points {
        let ee = p.ee_mean.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into());
        println!(
            "{:<7} {:>5} {:>5} {:>6} {:>4}/{:<4} {:>12}",
            p.mode.name(),
            p.users,
            p.rho,
            p.threshold_bps,
            p.feasible,
            p.trials,
            ee
        );
    }
    println!(
        "wrote {}, {} and {} series files",
        cli.out.join("summary.csv").display(),
        cli.out.join("raw.csv").display(),
        files.len()
    );
    Ok(!result.all_infeasible())
}

fn trace(cli: &Cli) -> Outcome {
    let file = load(cli, false)?;
    let mut spec = file.trace.unwrap_or_default();
    if let Some(s) = cli.seed {
        spec.seed = s;
    }
    let mut cfg = file.network.with_users(spec.users);
    if let Some(r) = spec.threshold {
        cfg = cfg.with_threshold(r);
    }
    cfg.correlation = spec.rho;
    cfg.validate().map_err(|e| Failure::Usage(format!("[trace] {e}")))?;
    let (_, real) = realize(&cfg, spec.seed).map_err(|e| Failure::Usage(e.to_string()))?;
    let rep = spec.mode.run(&real, &cfg);
    create_dir(&cli.out)?;
    let path = cli.out.join("trace.csv");
    emit_convergence_trace(&rep, &path)?;
    println!(
        "{} seed {}: {:?} after {} iterations, EE {:.6} bits/J/Hz, transmit power {:.4} W",
        spec.mode,
        spec.seed,
        rep.status,
        rep.iterations,
        rep.ee_bits,
        rep.total_power_w()
    );
    if let Some(tau) = rep.tau {
        println!("time split {:.4} / {:.4}", tau[0], tau[1]);
    }
    if let Some(m) = &rep.message {
        println!("note: {m}");
    }
    println!("wrote {}", path.display());
    Ok(rep.is_feasible())
}

fn validate(cli: &Cli) -> Outcome {
    let file = load(cli, false)?;
    let v = validate::run(&file.network, cli.seed.unwrap_or(1), cli.trials.unwrap_or(6) as usize);
    println!(
        "{} instances, {} runs ({} feasible), {} checks, {} failures",
        v.instances,
        v.runs,
        v.feasible,
        v.checks,
        v.failures.len()
    );
    for f in &v.failures {
        println!("FAIL {f}");
    }
    Ok(v.passed())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let outcome = match cli.command {
        Command::Sweep => sweep(&cli),
        Command::Trace => trace(&cli),
        Command::Validate => validate(&cli),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
