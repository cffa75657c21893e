#![allow(dead_code)]

use mimo_ee::network::realize;
use mimo_ee::{ChannelRealization, NetworkConfig, PrecoderSet};
use std::f64::consts::LN_2;

pub fn config(rows: usize, cols: usize, users: usize, cells: usize) -> NetworkConfig {
    let mut c = NetworkConfig::default().with_users(users);
    c.antenna_rows = rows;
    c.antenna_cols = cols;
    c.cell_count = cells;
    c
}

pub fn draw(cfg: &NetworkConfig, seed: u64) -> ChannelRealization {
    realize(cfg, seed).expect("valid config").1
}

/// Maximizes `f` over a box by repeated grid refinement around the best
/// point. `None` marks infeasible points.
pub fn zoom_max(
    f: &dyn Fn(&[f64]) -> Option<f64>,
    mut lo: Vec<f64>,
    mut hi: Vec<f64>,
    n: usize,
    levels: usize,
) -> Option<(Vec<f64>, f64)> {
    let d = lo.len();
    let mut best: Option<(Vec<f64>, f64)> = None;
    for _ in 0..levels {
        let step: Vec<f64> = (0..d).map(|i| (hi[i] - lo[i]) / (n - 1) as f64).collect();
        let mut idx = vec![0usize; d];
        loop {
            let x: Vec<f64> = (0..d).map(|i| lo[i] + step[i] * idx[i] as f64).collect();
            if let Some(v) = f(&x) {
                if best.as_ref().is_none_or(|b| v > b.1) {
                    best = Some((x, v));
                }
            }
            let mut c = 0;
            while c < d {
                idx[c] += 1;
                if idx[c] < n {
                    break;
                }
                idx[c] = 0;
                c += 1;
            }
            if c == d {
                break;
            }
        }
        let (x, _) = best.as_ref()?;
        for i in 0..d {
            let (a, b) = (lo[i], hi[i]);
            lo[i] = (x[i] - 2.0 * step[i]).max(a);
            hi[i] = (x[i] + 2.0 * step[i]).min(b);
        }
    }
    best
}

/// `beta |h^H f|^2` straight from the channel vectors and beams.
pub fn raw_gain(real: &ChannelRealization, pset: &PrecoderSet, bs: usize, cell: usize, k: usize, l: usize) -> f64 {
    let h = &real.h[bs][cell][k];
    let f = pset.cells[bs].beam(l);
    real.beta[bs][cell][k] * h.dotc(&f).norm_sqr()
}

/// Best EE (bits/J/Hz) of a one-cell, two-user direct-power instance.
pub fn direct_oracle(real: &ChannelRealization, pset: &PrecoderSet, cfg: &NetworkConfig) -> Option<f64> {
    let s2 = real.noise_power;
    let r = cfg.qos_threshold_nats();
    let n: Vec<f64> = (0..2).map(|k| pset.cells[0].beam(k).norm_squared()).collect();
    let g = |k, l| raw_gain(real, pset, 0, 0, k, l);
    let (a, c) = ([g(0, 0), g(1, 1)], [g(0, 1), g(1, 0)]);
    let p_max = cfg.max_power_w;
    let static_w = cfg.circuit_power_w();
    let f = |x: &[f64]| -> Option<f64> {
        let u = [x[0].exp(), x[1].exp()];
        if u[0] + u[1] > p_max {
            return None;
        }
        let p = [u[0] / n[0], u[1] / n[1]];
        let r0 = (a[0] * p[0] / (c[0] * p[1] + s2)).ln_1p();
        let r1 = (a[1] * p[1] / (c[1] * p[0] + s2)).ln_1p();
        if r0 < r || r1 < r {
            return None;
        }
        Some((r0 + r1) / (cfg.drain_reciprocal * (u[0] + u[1]) + static_w) / LN_2)
    };
    let lo = vec![(p_max * 1e-9).ln(); 2];
    let hi = vec![p_max.ln(); 2];
    zoom_max(&f, lo, hi, 61, 40).map(|b| b.1)
}

/// Best EE (bits/J/Hz) of a one-cell TF instance with one user per group.
pub fn tf_oracle(real: &ChannelRealization, pset: &PrecoderSet, cfg: &NetworkConfig) -> Option<f64> {
    let s2 = real.noise_power;
    let r = cfg.qos_threshold_nats();
    let n: Vec<f64> = (0..2).map(|k| pset.cells[0].beam(k).norm_squared()).collect();
    let a = [raw_gain(real, pset, 0, 0, 0, 0), raw_gain(real, pset, 0, 0, 1, 1)];
    let p_max = cfg.max_power_w;
    let static_w = cfg.circuit_power_w();
    let f = |x: &[f64]| -> Option<f64> {
        let tau = [x[0], 1.0 - x[0]];
        let u = [x[1].exp(), x[2].exp()];
        if u[0] > 3.0 * p_max || u[1] > 3.0 * p_max {
            return None;
        }
        let avg = tau[0] * u[0] + tau[1] * u[1];
        if avg > p_max {
            return None;
        }
        let rates = [0, 1].map(|k| tau[k] * (a[k] * u[k] / (n[k] * s2)).ln_1p());
        if rates[0] < r || rates[1] < r {
            return None;
        }
        Some((rates[0] + rates[1]) / (cfg.drain_reciprocal * avg + static_w) / LN_2)
    };
    let lo = vec![1e-4, (p_max * 1e-9).ln(), (p_max * 1e-9).ln()];
    let hi = vec![1.0 - 1e-4, (3.0 * p_max).ln(), (3.0 * p_max).ln()];
    zoom_max(&f, lo, hi, 41, 40).map(|b| b.1)
}
