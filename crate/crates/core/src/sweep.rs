//! Monte-Carlo sweeps over user counts, correlation levels and thresholds,
//! with CSV output.

use crate::algorithms::{EeReport, Pipeline, RunStatus};
use crate::beamforming::{build_precoders, BeamMode, PrecoderSet};
use crate::config::{nats_to_bits, ConfigError, NetworkConfig};
use crate::network::realize;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep: {0}")]
    Spec(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Single,
    Two,
    Three,
}

impl Scenario {
    pub fn cells(self) -> usize {
        match self {
            Scenario::Single => 1,
            Scenario::Two => 2,
            Scenario::Three => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Single => "single",
            Scenario::Two => "two",
            Scenario::Three => "three",
        }
    }
}

fn default_trials() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub scenario: Scenario,
    pub modes: Vec<Pipeline>,
    pub user_counts: Vec<usize>,
    pub rho_values: Vec<f64>,
    /// QoS thresholds in bps/Hz.
    pub thresholds: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Parallel trials; `None` uses every core.
    #[serde(default)]
    pub workers: Option<usize>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), SweepError> {
        let empty = [
            ("modes", self.modes.is_empty()),
            ("user_counts", self.user_counts.is_empty()),
            ("rho_values", self.rho_values.is_empty()),
            ("thresholds", self.thresholds.is_empty()),
        ];
        if let Some((field, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(SweepError::Spec(format!("`{field}` must not be empty")));
        }
        if self.trials == 0 {
            return Err(SweepError::Spec("`trials` must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(SweepError::Spec("`workers` must be at least 1".into()));
        }
        Ok(())
    }

    /// Network configuration of one grid point.
    pub fn point_config(&self, base: &NetworkConfig, users: usize, rho: f64, threshold: f64) -> NetworkConfig {
        let mut cfg = base.clone().with_users(users).with_threshold(threshold);
        cfg.cell_count = self.scenario.cells();
        cfg.correlation = rho;
        cfg
    }
}

/// Outcome of one pipeline on one realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub mode: Pipeline,
    pub users: usize,
    pub rho: f64,
    pub threshold_bps: f64,
    pub trial: usize,
    pub seed: u64,
    pub status: RunStatus,
    pub ee_bits: f64,
    /// Time-averaged transmit power summed over cells (W).
    pub tx_power_w: f64,
    pub tau_ratio: Option<f64>,
    pub near_far_ratio: Option<f64>,
    pub iterations: usize,
}

impl TrialRecord {
    pub fn feasible(&self) -> bool {
        self.status != RunStatus::Infeasible
    }
}

/// Aggregate over the feasible trials of one `(mode, users, rho, threshold)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub mode: Pipeline,
    pub users: usize,
    pub rho: f64,
    pub threshold_bps: f64,
    pub trials: usize,
    pub feasible: usize,
    pub ee_mean: Option<f64>,
    /// Sample standard deviation (`n - 1`); zero for a single trial.
    pub ee_std: Option<f64>,
    pub tx_power_mean_w: Option<f64>,
    pub tau_ratio_mean: Option<f64>,
    pub near_far_ratio_mean: Option<f64>,
    pub iterations_mean: Option<f64>,
}

impl GridPoint {
    pub fn feasibility(&self) -> f64 {
        self.feasible as f64 / self.trials as f64
    }

    fn aggregate(records: &[&TrialRecord]) -> Self {
        let first = records[0];
        let ok: Vec<&&TrialRecord> = records.iter().filter(|r| r.feasible()).collect();
        let mean = |xs: &[f64]| (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64);
        let ee: Vec<f64> = ok.iter().map(|r| r.ee_bits).collect();
        let ee_mean = mean(&ee);
        let ee_std = ee_mean.map(|m| {
            if ee.len() < 2 {
                0.0
            } else {
                (ee.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (ee.len() - 1) as f64).sqrt()
            }
        });
        let collect =
            |f: &dyn Fn(&TrialRecord) -> Option<f64>| -> Vec<f64> { ok.iter().filter_map(|r| f(r)).collect() };
        GridPoint {
            mode: first.mode,
            users: first.users,
            rho: first.rho,
            threshold_bps: first.threshold_bps,
            trials: records.len(),
            feasible: ok.len(),
            ee_mean,
            ee_std,
            tx_power_mean_w: mean(&collect(&|r| Some(r.tx_power_w))),
            tau_ratio_mean: mean(&collect(&|r| r.tau_ratio)),
            near_far_ratio_mean: mean(&collect(&|r| r.near_far_ratio)),
            iterations_mean: mean(&collect(&|r| Some(r.iterations as f64))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub scenario: Scenario,
    pub points: Vec<GridPoint>,
    /// Every trial behind `points`, in the same grid order, trials ascending.
    pub records: Vec<TrialRecord>,
}

impl SweepResult {
    pub fn point(&self, mode: Pipeline, users: usize, rho: f64, threshold: f64) -> Option<&GridPoint> {
        self.points
            .iter()
            .find(|p| p.mode == mode && p.users == users && p.rho == rho && p.threshold_bps == threshold)
    }

    pub fn all_infeasible(&self) -> bool {
        self.points.iter().all(|p| p.feasible == 0)
    }
}

fn record(report: &EeReport, pset: Option<&PrecoderSet>, near: &[Vec<bool>], base: TrialRecord) -> TrialRecord {
    let tf = report.tau.is_some() && report.is_feasible();
    TrialRecord {
        status: report.status,
        ee_bits: report.ee_bits,
        tx_power_w: report.total_power_w(),
        tau_ratio: if tf { report.tau_ratio() } else { None },
        near_far_ratio: match pset {
            Some(p) if tf => report.near_far_power_ratio(p, near),
            _ => None,
        },
        iterations: report.iterations,
        ..base
    }
}

/// Runs every mode and threshold on one realization.
fn run_trial(spec: &SweepSpec, base: &NetworkConfig, users: usize, rho: f64, trial: usize) -> Vec<TrialRecord> {
    let seed = spec.base_seed.wrapping_add(trial as u64);
    let cfg0 = spec.point_config(base, users, rho, spec.thresholds[0]);
    let drawn = realize(&cfg0, seed);
    let mut out = Vec::with_capacity(spec.modes.len() * spec.thresholds.len());
    let mut beams: Vec<(BeamMode, Result<PrecoderSet, String>)> = Vec::new();
    for &mode in &spec.modes {
        for &threshold in &spec.thresholds {
            let cfg = spec.point_config(base, users, rho, threshold);
            let stub = TrialRecord {
                mode,
                users,
                rho,
                threshold_bps: threshold,
                trial,
                seed,
                status: RunStatus::Infeasible,
                ee_bits: 0.0,
                tx_power_w: 0.0,
                tau_ratio: None,
                near_far_ratio: None,
                iterations: 0,
            };
            let (geometry, realization) = match &drawn {
                Ok(d) => d,
                Err(_) => {
                    out.push(stub);
                    continue;
                }
            };
            let bm = mode.beam_mode();
            if !beams.iter().any(|(m, _)| *m == bm) {
                beams.push((bm, build_precoders(realization, &cfg, bm).map_err(|e| e.to_string())));
            }
            let pset = &beams.iter().find(|(m, _)| *m == bm).expect("built above").1;
            let rec = match pset {
                Ok(p) => record(&mode.run_on(p, &cfg), Some(p), &geometry.near_mask, stub),
                Err(_) => stub,
            };
            out.push(rec);
        }
    }
    out
}

/// Runs the full grid. Trials of a `(users, rho)` pair share one draw
/// across modes and thresholds; seeds are `base_seed + trial`.
pub fn run_sweep(spec: &SweepSpec, base: &NetworkConfig) -> Result<SweepResult, SweepError> {
    spec.validate()?;
    for &users in &spec.user_counts {
        for &rho in &spec.rho_values {
            for &threshold in &spec.thresholds {
                spec.point_config(base, users, rho, threshold).validate()?;
            }
        }
    }
    let body = || {
        let mut per_pair = Vec::new();
        for &users in &spec.user_counts {
            for &rho in &spec.rho_values {
                let trials: Vec<Vec<TrialRecord>> = (0..spec.trials)
                    .into_par_iter()
                    .map(|t| run_trial(spec, base, users, rho, t))
                    .collect();
                per_pair.push(trials.into_iter().flatten().collect::<Vec<_>>());
            }
        }
        per_pair.into_iter().flatten().collect::<Vec<_>>()
    };
    let all = match spec.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| SweepError::Spec(e.to_string()))?
            .install(body),
        None => body(),
    };

    let mut points = Vec::new();
    let mut records = Vec::new();
    for &mode in &spec.modes {
        for &users in &spec.user_counts {
            for &rho in &spec.rho_values {
                for &threshold in &spec.thresholds {
                    let mut group: Vec<&TrialRecord> = all
                        .iter()
                        .filter(|r| r.mode == mode && r.users == users && r.rho == rho && r.threshold_bps == threshold)
                        .collect();
                    group.sort_by_key(|r| r.trial);
                    points.push(GridPoint::aggregate(&group));
                    records.extend(group.into_iter().cloned());
                }
            }
        }
    }
    Ok(SweepResult {
        scenario: spec.scenario,
        points,
        records,
    })
}

/// Decimal rendering with 9 significant digits; scientific notation only
/// for very large or very small magnitudes.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let e = x.abs().log10().floor() as i32;
    if (-5..=12).contains(&e) {
        format!("{:.*}", (8 - e).max(0) as usize, x)
    } else {
        format!("{x:.8e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(format_sig).unwrap_or_default()
}

pub const SUMMARY_HEADER: &str = "mode,scenario,users,rho,threshold_bps,trials,feasible_trials,feasibility,\
ee_mean_bits_per_joule_hz,ee_std_bits_per_joule_hz,tx_power_mean_w,tau_ratio_mean,near_far_power_ratio_mean,iterations_mean";

pub const RAW_HEADER: &str =
    "mode,scenario,users,rho,threshold_bps,trial,seed,status,ee_bits_per_joule_hz,tx_power_w,tau_ratio,near_far_power_ratio,iterations";

fn create(path: &Path) -> Result<BufWriter<File>, SweepError> {
    File::create(path).map(BufWriter::new).map_err(|source| SweepError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_lines(path: &Path, lines: impl IntoIterator<Item = String>) -> Result<(), SweepError> {
    let io = |source| SweepError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = create(path)?;
    for line in lines {
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// One row per grid point, columns as in [`SUMMARY_HEADER`].
pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<(), SweepError> {
    let rows = result.points.iter().map(|p| {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            p.mode,
            result.scenario.name(),
            p.users,
            format_sig(p.rho),
            format_sig(p.threshold_bps),
            p.trials,
            p.feasible,
            format_sig(p.feasibility()),
            opt(p.ee_mean),
            opt(p.ee_std),
            opt(p.tx_power_mean_w),
            opt(p.tau_ratio_mean),
            opt(p.near_far_ratio_mean),
            opt(p.iterations_mean),
        )
    });
    write_lines(path, std::iter::once(SUMMARY_HEADER.to_string()).chain(rows))
}

/// One row per trial, columns as in [`RAW_HEADER`].
pub fn emit_raw(result: &SweepResult, path: &Path) -> Result<(), SweepError> {
    let status = |s: RunStatus| match s {
        RunStatus::Converged => "converged",
        RunStatus::Infeasible => "infeasible",
        RunStatus::MaxIter => "max_iter",
    };
    let rows = result.records.iter().map(|r| {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.mode,
            result.scenario.name(),
            r.users,
            format_sig(r.rho),
            format_sig(r.threshold_bps),
            r.trial,
            r.seed,
            status(r.status),
            format_sig(r.ee_bits),
            format_sig(r.tx_power_w),
            opt(r.tau_ratio),
            opt(r.near_far_ratio),
            r.iterations,
        )
    });
    write_lines(path, std::iter::once(RAW_HEADER.to_string()).chain(rows))
}

/// `iteration,ee_bits_per_joule_hz`, one row per trace entry.
pub fn emit_convergence_trace(report: &EeReport, path: &Path) -> Result<(), SweepError> {
    let rows = report
        .ee_trace
        .iter()
        .enumerate()
        .map(|(n, t)| format!("{n},{}", format_sig(nats_to_bits(*t))));
    write_lines(
        path,
        std::iter::once("iteration,ee_bits_per_joule_hz".to_string()).chain(rows),
    )
}

/// Reads a summary file written by [`emit_csv`].
pub fn read_csv(path: &Path) -> Result<Vec<GridPoint>, SweepError> {
    let text = std::fs::read_to_string(path).map_err(|source| SweepError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let err = |line: usize, message: String| SweepError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == SUMMARY_HEADER => {}
        _ => return Err(err(1, "unexpected header".into())),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let n = i + 1;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 14 {
            return Err(err(n, format!("expected 14 fields, found {}", f.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| err(n, format!("`{s}`: {e}")));
        let int = |s: &str| s.parse::<usize>().map_err(|e| err(n, format!("`{s}`: {e}")));
        let maybe = |s: &str| {
            if s.is_empty() {
                Ok(None)
            } else {
                num(s).map(Some)
            }
        };
        out.push(GridPoint {
            mode: Pipeline::parse(f[0]).ok_or_else(|| err(n, format!("unknown mode `{}`", f[0])))?,
            users: int(f[2])?,
            rho: num(f[3])?,
            threshold_bps: num(f[4])?,
            trials: int(f[5])?,
            feasible: int(f[6])?,
            ee_mean: maybe(f[8])?,
            ee_std: maybe(f[9])?,
            tx_power_mean_w: maybe(f[10])?,
            tau_ratio_mean: maybe(f[11])?,
            near_far_ratio_mean: maybe(f[12])?,
            iterations_mean: maybe(f[13])?,
        });
    }
    Ok(out)
}
