//! Exact rate, QoS and energy-efficiency evaluation in physical units.

use crate::beamforming::PrecoderSet;
use crate::config::{nats_to_bits, NetworkConfig};

/// Inter-user plus inter-cell interference seen by user `(i, k)` under
/// direct powers `p`.
fn interference(pset: &PrecoderSet, p: &[Vec<f64>], i: usize, k: usize) -> f64 {
    let cell = &pset.cells[i];
    let mut lambda = 0.0;
    for (l, pl) in p[i].iter().enumerate() {
        if l != k {
            lambda += cell.iui_gain[(k, l)] * pl;
        }
    }
    for (j, other) in pset.cells.iter().enumerate() {
        if j != i {
            let chi: f64 = other.beam_norm_sq.iter().zip(&p[j]).map(|(n, p)| n * p).sum();
            lambda += cell.ici_gain[k][j] * chi;
        }
    }
    lambda
}

/// `ln(1 + alpha p / (lambda(p) + sigma^2))` in nats/s/Hz.
pub fn rate(pset: &PrecoderSet, p: &[Vec<f64>], i: usize, k: usize) -> f64 {
    let sig = pset.cells[i].alpha[k] * p[i][k];
    (sig / (interference(pset, p, i, k) + pset.noise_power)).ln_1p()
}

/// Rate of user `(i, k)` during its own fraction under inverse powers `p`;
/// interference comes only from beams of the same group.
pub fn tf_rate(pset: &PrecoderSet, p: &[Vec<f64>], i: usize, k: usize) -> f64 {
    let cell = &pset.cells[i];
    let q = cell.group_of[k];
    let mut sigma_q = 0.0;
    for &l in &cell.groups[q].users {
        if l != k {
            sigma_q += cell.iui_gain[(k, l)] / p[i][l];
        }
    }
    ((cell.alpha[k] / p[i][k]) / (sigma_q + pset.noise_power)).ln_1p()
}

/// `sum coefs * p >= rhs`, the linear form of `rate >= threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineQos {
    pub cell: usize,
    pub user: usize,
    /// `(cell, user, coefficient)` over direct powers.
    pub coefs: Vec<(usize, usize, f64)>,
    pub rhs: f64,
}

impl AffineQos {
    pub fn slack(&self, p: &[Vec<f64>]) -> f64 {
        self.coefs.iter().map(|&(j, l, c)| c * p[j][l]).sum::<f64>() - self.rhs
    }

    pub fn satisfied(&self, p: &[Vec<f64>]) -> bool {
        self.slack(p) >= 0.0
    }
}

/// One affine constraint per user:
/// `alpha p_k - gamma (lambda(p)) >= gamma sigma^2`, `gamma = e^r - 1`.
pub fn qos_linearize(pset: &PrecoderSet, threshold_nats: f64) -> Vec<AffineQos> {
    let gamma = threshold_nats.exp_m1();
    let mut out = Vec::new();
    for (i, cell) in pset.cells.iter().enumerate() {
        for k in 0..cell.users() {
            let mut coefs = vec![(i, k, cell.alpha[k])];
            if gamma > 0.0 {
                for l in 0..cell.users() {
                    if l != k && cell.iui_gain[(k, l)] > 0.0 {
                        coefs.push((i, l, -gamma * cell.iui_gain[(k, l)]));
                    }
                }
                for (j, other) in pset.cells.iter().enumerate() {
                    let b = cell.ici_gain[k][j];
                    if j != i && b > 0.0 {
                        for (l, n) in other.beam_norm_sq.iter().enumerate() {
                            coefs.push((j, l, -gamma * b * n));
                        }
                    }
                }
            }
            out.push(AffineQos {
                cell: i,
                user: k,
                coefs,
                rhs: gamma * pset.noise_power,
            });
        }
    }
    out
}

/// Per-user throughput in nats/s/Hz: `r` for direct modes, `tau_q r` for
/// time-fraction modes (where `powers` are inverse powers).
pub fn user_rates(pset: &PrecoderSet, powers: &[Vec<f64>], tau: Option<[f64; 2]>) -> Vec<Vec<f64>> {
    pset.cells
        .iter()
        .enumerate()
        .map(|(i, cell)| {
            (0..cell.users())
                .map(|k| match tau {
                    Some(t) => t[cell.group_of[k]] * tf_rate(pset, powers, i, k),
                    None => rate(pset, powers, i, k),
                })
                .collect()
        })
        .collect()
}

/// Time-averaged transmit power of each cell.
pub fn cell_powers(pset: &PrecoderSet, powers: &[Vec<f64>], tau: Option<[f64; 2]>) -> Vec<f64> {
    pset.cells
        .iter()
        .zip(powers)
        .map(|(cell, p)| {
            (0..cell.users())
                .map(|k| match tau {
                    Some(t) => t[cell.group_of[k]] * cell.beam_norm_sq[k] / p[k],
                    None => cell.beam_norm_sq[k] * p[k],
                })
                .sum()
        })
        .collect()
}

/// Network EE in bits/Joule/Hz: total throughput over
/// `sum_i (drain * chi_i + N P_a + P_c)`.
pub fn evaluate_ee(pset: &PrecoderSet, powers: &[Vec<f64>], tau: Option<[f64; 2]>, config: &NetworkConfig) -> f64 {
    let throughput: f64 = user_rates(pset, powers, tau).iter().flatten().sum();
    let consumed: f64 = cell_powers(pset, powers, tau)
        .iter()
        .map(|chi| config.drain_reciprocal * chi + config.circuit_power_w())
        .sum();
    nats_to_bits(throughput / consumed)
}
