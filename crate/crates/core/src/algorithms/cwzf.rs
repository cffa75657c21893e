use super::path_following::direct_report;
use super::rates::rate;
use super::{EeReport, Pipeline, RunStatus, MAX_OUTER};
use crate::beamforming::PrecoderSet;
use crate::config::NetworkConfig;
use crate::sca::{waterfill, WaterfillUser};

/// Per-cell Dinkelbach state after convergence.
#[derive(Debug, Clone)]
pub(crate) struct CellDinkelbach {
    /// Powers above the floor, `p~`.
    pub excess: Vec<f64>,
    pub floor: Vec<f64>,
    /// `t̄` after each water-filling step.
    pub trace: Vec<f64>,
    /// `F(t̄)` of each solved subproblem.
    pub residuals: Vec<f64>,
    pub converged: bool,
}

struct CellProblem {
    users: Vec<WaterfillUser>,
    noise: f64,
    drain: f64,
    budget: f64,
    /// `P̄_cir`
    base_power: f64,
}

impl CellProblem {
    fn numerator(&self, p: &[f64]) -> f64 {
        self.users
            .iter()
            .zip(p)
            .map(|(u, p)| (u.offset + u.gain * p / self.noise).ln())
            .sum()
    }

    fn denominator(&self, p: &[f64]) -> f64 {
        self.drain * self.users.iter().zip(p).map(|(u, p)| u.norm_sq * p).sum::<f64>() + self.base_power
    }

    fn solve(&self, t: f64) -> Vec<f64> {
        waterfill(t, self.drain, &self.users, self.noise, self.budget).powers
    }
}

/// Path-following Dinkelbach on one cell's interference-free problem.
/// `None` when the QoS floor alone exceeds the budget.
pub(crate) fn cell_dinkelbach(
    pset: &PrecoderSet,
    config: &NetworkConfig,
    cell: usize,
    threshold_nats: f64,
) -> Option<CellDinkelbach> {
    let c = &pset.cells[cell];
    let s2 = pset.noise_power;
    let gamma = threshold_nats.exp_m1();
    let floor: Vec<f64> = c.alpha.iter().map(|a| s2 * gamma / a).collect();
    let floor_power: f64 = floor.iter().zip(&c.beam_norm_sq).map(|(p, n)| p * n).sum();
    if floor_power > config.max_power_w {
        return None;
    }
    let prob = CellProblem {
        users: (0..c.users())
            .map(|k| WaterfillUser {
                offset: 1.0 + c.alpha[k] * floor[k] / s2,
                gain: c.alpha[k],
                norm_sq: c.beam_norm_sq[k],
            })
            .collect(),
        noise: s2,
        drain: config.drain_reciprocal,
        budget: config.max_power_w - floor_power,
        base_power: config.drain_reciprocal * floor_power + config.circuit_power_w(),
    };
    let mut p = prob.solve(0.0);
    let mut t = prob.numerator(&p) / prob.denominator(&p);
    let mut trace = vec![t];
    let mut residuals = Vec::new();
    let mut converged = false;
    while trace.len() < MAX_OUTER {
        let next = prob.solve(t);
        let pi = prob.denominator(&next);
        let f = prob.numerator(&next) - t * pi;
        residuals.push(f);
        p = next;
        t = prob.numerator(&p) / pi;
        trace.push(t);
        if f.abs() < 1e-6 * pi {
            // one more step from the improved ratio
            p = prob.solve(t);
            converged = true;
            break;
        }
    }
    Some(CellDinkelbach {
        excess: p,
        floor,
        trace,
        residuals,
        converged,
    })
}

/// Cell-wise ZF: each cell maximizes its own EE ignoring inter-cell
/// interference under the inflated threshold; the result is scored with
/// the true multi-cell rates.
pub fn cwzf_dinkelbach(pset: &PrecoderSet, config: &NetworkConfig) -> EeReport {
    let cells = pset.cell_count();
    let threshold = config.cwzf_threshold_nats();
    let mut results = Vec::with_capacity(cells);
    for i in 0..cells {
        match cell_dinkelbach(pset, config, i, threshold) {
            Some(r) => results.push(r),
            None => {
                return EeReport::infeasible(
                    Pipeline::Cwzf,
                    cells,
                    format!("cell {i}: QoS floor exceeds the power budget"),
                )
            }
        }
    }
    let powers: Vec<Vec<f64>> = results
        .iter()
        .map(|r| r.excess.iter().zip(&r.floor).map(|(a, b)| a + b).collect())
        .collect();

    // network trace: mean of the per-cell ratios, cells that finished early
    // held at their final value
    let steps = results.iter().map(|r| r.trace.len()).max().unwrap_or(0);
    let trace = (0..steps)
        .map(|n| results.iter().map(|r| r.trace[n.min(r.trace.len() - 1)]).sum::<f64>() / cells as f64)
        .collect();

    let all_converged = results.iter().all(|r| r.converged);
    let target = config.qos_threshold_nats();
    let qos_ok =
        (0..cells).all(|i| (0..pset.cells[i].users()).all(|k| rate(pset, &powers, i, k) >= target * (1.0 - 1e-6)));
    let status = match (qos_ok, all_converged) {
        (false, _) => RunStatus::Infeasible,
        (true, true) => RunStatus::Converged,
        (true, false) => RunStatus::MaxIter,
    };
    let mut report = direct_report(Pipeline::Cwzf, pset, config, powers, trace, status);
    report.iterations = results.iter().map(|r| r.residuals.len()).max().unwrap_or(0);
    if !qos_ok {
        report.message = Some("true multi-cell rates miss the QoS threshold".into());
    }
    report
}
