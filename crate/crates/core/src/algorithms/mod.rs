//! The three optimization pipelines and their shared report type.

mod cwzf;
mod path_following;
pub mod rates;
mod time_fraction;

pub use cwzf::cwzf_dinkelbach;
pub use path_following::{algorithm1, init_feasible, InitOutcome};
pub use rates::{evaluate_ee, qos_linearize, rate, tf_rate, AffineQos};
pub use time_fraction::{algorithm2, tf_init, TfStart};

use crate::beamforming::{build_precoders, BeamMode, PrecoderSet};
use crate::config::{nats_to_bits, NetworkConfig};
use crate::network::ChannelRealization;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Outer-iteration cap; a trace never holds more entries than this.
pub const MAX_OUTER: usize = 100;
/// Relative change of `t` below which the outer loop stops.
pub const REL_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pipeline {
    #[serde(rename = "CWZF")]
    Cwzf,
    /// Path-following over direct powers with ZF beams.
    #[serde(rename = "ZF")]
    Zf,
    #[serde(rename = "RZF")]
    Rzf,
    #[serde(rename = "TF-ZF")]
    TfZf,
    #[serde(rename = "TF-RZF")]
    TfRzf,
}

impl Pipeline {
    pub const ALL: [Pipeline; 5] = [
        Pipeline::Cwzf,
        Pipeline::Zf,
        Pipeline::Rzf,
        Pipeline::TfZf,
        Pipeline::TfRzf,
    ];

    pub fn beam_mode(self) -> BeamMode {
        match self {
            Pipeline::Cwzf | Pipeline::Zf => BeamMode::Zf,
            Pipeline::Rzf => BeamMode::Rzf,
            Pipeline::TfZf => BeamMode::TfZf,
            Pipeline::TfRzf => BeamMode::TfRzf,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Pipeline::Cwzf => "CWZF",
            Pipeline::Zf => "ZF",
            Pipeline::Rzf => "RZF",
            Pipeline::TfZf => "TF-ZF",
            Pipeline::TfRzf => "TF-RZF",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name().eq_ignore_ascii_case(s))
    }

    /// Runs the pipeline on precomputed precoders.
    pub fn run_on(self, pset: &PrecoderSet, config: &NetworkConfig) -> EeReport {
        let mut report = match self {
            Pipeline::Cwzf => cwzf_dinkelbach(pset, config),
            Pipeline::Zf | Pipeline::Rzf => algorithm1(pset, config),
            Pipeline::TfZf | Pipeline::TfRzf => algorithm2(pset, config),
        };
        report.pipeline = self;
        report
    }

    /// Builds beams for `realization` and runs the pipeline. Beam failures
    /// (ill-conditioned ZF, empty groups) come back as infeasible reports.
    pub fn run(self, realization: &ChannelRealization, config: &NetworkConfig) -> EeReport {
        match build_precoders(realization, config, self.beam_mode()) {
            Ok(pset) => self.run_on(&pset, config),
            Err(e) => EeReport::infeasible(self, realization.cell_count(), e.to_string()),
        }
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    Converged,
    Infeasible,
    MaxIter,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EeReport {
    pub pipeline: Pipeline,
    pub status: RunStatus,
    /// `t^(0), t^(1), ...` in nats/Joule/Hz.
    pub ee_trace: Vec<f64>,
    /// Final EE in bits/Joule/Hz under the reporting model.
    pub ee_bits: f64,
    /// Direct powers `p` (direct modes) or inverse powers (time-fraction modes).
    pub powers: Vec<Vec<f64>>,
    /// Radiated power of each beam while it is active (W).
    pub beam_power_w: Vec<Vec<f64>>,
    pub tau: Option<[f64; 2]>,
    /// Per-user throughput in bps/Hz (time-fraction modes include `tau_q`).
    pub rates_bps: Vec<Vec<f64>>,
    /// Time-averaged transmit power of each cell (W).
    pub cell_power_w: Vec<f64>,
    /// Subproblems solved (Dinkelbach steps for CWZF, worst cell).
    pub iterations: usize,
    pub message: Option<String>,
}

impl EeReport {
    pub fn infeasible(pipeline: Pipeline, cells: usize, message: impl Into<String>) -> Self {
        Self {
            pipeline,
            status: RunStatus::Infeasible,
            ee_trace: Vec::new(),
            ee_bits: 0.0,
            powers: vec![Vec::new(); cells],
            beam_power_w: vec![Vec::new(); cells],
            tau: None,
            rates_bps: vec![Vec::new(); cells],
            cell_power_w: vec![0.0; cells],
            iterations: 0,
            message: Some(message.into()),
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.status != RunStatus::Infeasible
    }

    pub fn total_power_w(&self) -> f64 {
        self.cell_power_w.iter().sum()
    }

    /// `tau_1 / (1 - tau_1)` for time-fraction runs.
    pub fn tau_ratio(&self) -> Option<f64> {
        self.tau.map(|t| t[0] / (1.0 - t[0]))
    }

    /// Time-averaged power spent on users flagged by `near` over that spent
    /// on the others.
    pub fn near_far_power_ratio(&self, pset: &PrecoderSet, near: &[Vec<bool>]) -> Option<f64> {
        let tau = self.tau?;
        let (mut n, mut f) = (0.0, 0.0);
        for (i, cell) in pset.cells.iter().enumerate() {
            for k in 0..cell.users() {
                let w = tau[cell.group_of[k]] * self.beam_power_w[i][k];
                if near[i][k] {
                    n += w;
                } else {
                    f += w;
                }
            }
        }
        (f > 0.0).then(|| n / f)
    }
}

/// Coefficients in noise-normalized units shared by the path-following
/// solvers. Users are flattened cell by cell.
#[derive(Debug, Clone)]
pub(crate) struct Scaled {
    pub offsets: Vec<usize>,
    pub cell_of: Vec<usize>,
    /// `alpha / (sigma^2 ‖f̄‖^2)`
    pub gain: Vec<f64>,
    /// `(l, iui_kl / (sigma^2 ‖f̄_l‖^2))` for interfering beams of the same cell.
    pub iui: Vec<Vec<(usize, f64)>>,
    /// `(j, beta_{j,i,k} / sigma^2)` for interfering cells.
    pub ici: Vec<Vec<(usize, f64)>>,
    pub norm_sq: Vec<f64>,
    pub group: Vec<usize>,
}

impl Scaled {
    pub fn new(pset: &PrecoderSet) -> Self {
        let s2 = pset.noise_power;
        let mut offsets = Vec::new();
        let mut s = Scaled {
            offsets: Vec::new(),
            cell_of: Vec::new(),
            gain: Vec::new(),
            iui: Vec::new(),
            ici: Vec::new(),
            norm_sq: Vec::new(),
            group: Vec::new(),
        };
        let mut base = 0;
        for (i, cell) in pset.cells.iter().enumerate() {
            offsets.push(base);
            for k in 0..cell.users() {
                s.cell_of.push(i);
                s.gain.push(cell.alpha[k] / (s2 * cell.beam_norm_sq[k]));
                s.iui.push(
                    (0..cell.users())
                        .filter(|&l| l != k && cell.iui_gain[(k, l)] > 0.0)
                        .map(|l| (base + l, cell.iui_gain[(k, l)] / (s2 * cell.beam_norm_sq[l])))
                        .collect(),
                );
                s.ici.push(
                    cell.ici_gain[k]
                        .iter()
                        .enumerate()
                        .filter(|&(j, &b)| j != i && b > 0.0)
                        .map(|(j, &b)| (j, b / s2))
                        .collect(),
                );
                s.norm_sq.push(cell.beam_norm_sq[k]);
                s.group.push(cell.group_of[k]);
            }
            base += cell.users();
        }
        s.offsets = offsets;
        s
    }

    pub fn len(&self) -> usize {
        self.gain.len()
    }

    pub fn cells(&self) -> usize {
        self.offsets.len()
    }

    pub fn users_of(&self, cell: usize) -> std::ops::Range<usize> {
        let end = self.offsets.get(cell + 1).copied().unwrap_or(self.len());
        self.offsets[cell]..end
    }

    /// Splits a flat vector into per-cell vectors.
    pub fn unflatten(&self, flat: &[f64]) -> Vec<Vec<f64>> {
        (0..self.cells()).map(|i| flat[self.users_of(i)].to_vec()).collect()
    }
}

pub(crate) fn bits(nats: f64) -> f64 {
    nats_to_bits(nats)
}
