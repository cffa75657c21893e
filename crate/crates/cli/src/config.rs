//! Run-file loading. A run file is TOML with an optional `[network]` table
//! of overrides, a `[sweep]` table and a `[trace]` table.

use mimo_ee::sweep::SweepSpec;
use mimo_ee::{NetworkConfig, Pipeline};
use serde::Deserialize;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Syntax { path: PathBuf, message: String },
    #[error("{path}: [{table}] {message}")]
    Invalid {
        path: PathBuf,
        table: &'static str,
        message: String,
    },
    #[error("{path}: no [{0}] table", path = .1.display())]
    Missing(&'static str, PathBuf),
}

fn default_trace_mode() -> Pipeline {
    Pipeline::TfRzf
}

fn default_trace_users() -> usize {
    40
}

fn default_rho() -> f64 {
    0.9
}

fn default_seed() -> u64 {
    1
}

/// One pipeline run with its full iteration trace.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSpec {
    #[serde(default = "default_trace_mode")]
    pub mode: Pipeline,
    #[serde(default = "default_trace_users")]
    pub users: usize,
    #[serde(default = "default_rho")]
    pub rho: f64,
    /// QoS threshold in bps/Hz with the default CWZF threshold; when absent
    /// both thresholds come from `[network]`.
    #[serde(default)]
    pub threshold: Option<f64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl Default for TraceSpec {
    fn default() -> Self {
        Self {
            mode: default_trace_mode(),
            users: default_trace_users(),
            rho: default_rho(),
            threshold: None,
            seed: default_seed(),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    #[serde(default)]
    pub network: NetworkConfig,
    pub sweep: Option<SweepSpec>,
    pub trace: Option<TraceSpec>,
}

impl RunFile {
    pub fn load(path: &Path) -> Result<Self, LoadError> {
        let text = std::fs::read_to_string(path).map_err(|source| LoadError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, LoadError> {
        let file: RunFile = toml::from_str(text).map_err(|e| LoadError::Syntax {
            path: path.to_path_buf(),
            message: e.to_string().trim_end().to_string(),
        })?;
        let invalid = |table, message: String| LoadError::Invalid {
            path: path.to_path_buf(),
            table,
            message,
        };
        file.network.validate().map_err(|e| invalid("network", e.to_string()))?;
        if let Some(s) = &file.sweep {
            s.validate().map_err(|e| invalid("sweep", e.to_string()))?;
        }
        if let Some(t) = &file.trace {
            if t.users == 0 {
                return Err(invalid("trace", "users must be at least 1".into()));
            }
            if t.threshold.is_some_and(|r| !r.is_finite() || r < 0.0) {
                return Err(invalid(
                    "trace",
                    format!("threshold must be a finite nonnegative value (got {:?})", t.threshold),
                ));
            }
        }
        Ok(file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<RunFile, LoadError> {
        RunFile::parse(s, Path::new("run.toml"))
    }

    #[test]
    fn empty_file_is_table_defaults() {
        let f = parse("").unwrap();
        assert_eq!(f.network, NetworkConfig::default());
        assert!(f.sweep.is_none() && f.trace.is_none());
    }

    #[test]
    fn full_file() {
        let f = parse(
            r#"
[network]
antenna_rows = 4
antenna_cols = 4

[sweep]
scenario = "three"
modes = ["CWZF", "TF-RZF"]
user_counts = [4, 8]
rho_values = [0.5]
thresholds = [0.4, 1.0]
trials = 3

[trace]
mode = "RZF"
"#,
        )
        .unwrap();
        assert_eq!(f.network.antennas(), 16);
        let s = f.sweep.unwrap();
        assert_eq!(s.modes, vec![Pipeline::Cwzf, Pipeline::TfRzf]);
        assert_eq!(s.base_seed, 0);
        assert_eq!(f.trace.unwrap().mode, Pipeline::Rzf);
    }

    #[test]
    fn unknown_key_names_line_and_field() {
        let err = parse("[network]\nantenna_rows = 4\nantena_cols = 4\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 3"), "{err}");
        assert!(err.contains("antena_cols"), "{err}");
    }

    #[test]
    fn wrong_type_names_line() {
        let err = parse("[sweep]\nscenario = \"single\"\nmodes = [\"CWZF\"]\nuser_counts = \"many\"\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 4"), "{err}");
    }

    #[test]
    fn semantic_errors_name_table() {
        let err = parse("[network]\ncorrelation = 1.5\n").unwrap_err().to_string();
        assert!(err.contains("[network]"), "{err}");
        let err = parse(
            "[sweep]\nscenario = \"two\"\nmodes = []\nuser_counts = [4]\nrho_values = [0.9]\nthresholds = [0.4]\n",
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("[sweep]"), "{err}");
    }
}
