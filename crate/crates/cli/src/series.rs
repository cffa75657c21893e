//! Two-column plot data, one file per metric and curve.

use mimo_ee::sweep::{format_sig, GridPoint, SweepError, SweepResult};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

type Metric = (&'static str, fn(&GridPoint) -> Option<f64>);

const METRICS: [Metric; 5] = [
    ("ee_bits_per_joule_hz", |p| p.ee_mean),
    ("tx_power_w", |p| p.tx_power_mean_w),
    ("feasibility", |p| Some(p.feasibility())),
    ("tau_ratio", |p| p.tau_ratio_mean),
    ("near_far_power_ratio", |p| p.near_far_ratio_mean),
];

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> SweepError + '_ {
    move |source| SweepError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `<dir>/<metric>__<mode>__rho<rho>__r<threshold>.dat` with rows
/// `users value` for every curve that has at least one value. Returns the
/// files written.
pub fn emit_series(result: &SweepResult, dir: &Path) -> Result<Vec<PathBuf>, SweepError> {
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut curves: Vec<(String, Vec<&GridPoint>)> = Vec::new();
    for p in &result.points {
        let key = format!("{}__rho{}__r{}", p.mode, p.rho, p.threshold_bps);
        match curves.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(p),
            None => curves.push((key, vec![p])),
        }
    }
    let mut written = Vec::new();
    for (key, points) in &curves {
        for (name, get) in METRICS {
            let rows: Vec<String> = points
                .iter()
                .filter_map(|p| get(p).map(|v| format!("{} {}", p.users, format_sig(v))))
                .collect();
            if rows.is_empty() {
                continue;
            }
            let path = dir.join(format!("{name}__{key}.dat"));
            let mut f = fs::File::create(&path).map_err(io(&path))?;
            writeln!(f, "# users {name}").map_err(io(&path))?;
            for r in rows {
                writeln!(f, "{r}").map_err(io(&path))?;
            }
            written.push(path);
        }
    }
    Ok(written)
}
