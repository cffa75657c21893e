//! Invariant checks on random instances.

use mimo_ee::beamforming::{build_beams, build_precoders};
use mimo_ee::network::realize;
use mimo_ee::{BeamMode, Complex64, NetworkConfig, Pipeline, RunStatus};
use nalgebra::DMatrix;

const BEAM_MODES: [BeamMode; 4] = [BeamMode::Zf, BeamMode::Rzf, BeamMode::TfZf, BeamMode::TfRzf];

#[derive(Debug, Default)]
pub struct Validation {
    pub instances: usize,
    pub runs: usize,
    pub feasible: usize,
    pub checks: usize,
    pub failures: Vec<String>,
}

impl Validation {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Runs every pipeline on `trials` draws, cycling through one, two and three
/// cells.
pub fn run(base: &NetworkConfig, seed: u64, trials: usize) -> Validation {
    let mut v = Validation::default();
    for t in 0..trials {
        let mut cfg = base.clone();
        cfg.cell_count = 1 + t % 3;
        let seed = seed.wrapping_add(t as u64);
        let tag = format!("seed {seed}, {} cell(s)", cfg.cell_count);
        let real = match realize(&cfg, seed) {
            Ok((_, r)) => r,
            Err(e) => {
                v.failures.push(format!("{tag}: draw failed: {e}"));
                continue;
            }
        };
        v.instances += 1;

        for mode in BEAM_MODES {
            let Ok(beams) = build_beams(&real, &cfg, mode) else {
                continue;
            };
            for (i, groups) in beams.iter().enumerate() {
                for gb in groups {
                    let h = real.channel_matrix(i, i, Some(&gb.users));
                    let k = gb.users.len();
                    let mut target = DMatrix::<Complex64>::identity(k, k);
                    if let Some(g) = &gb.g {
                        target -= g * Complex64::new(gb.eta, 0.0);
                    }
                    let err = (h.adjoint() * &gb.fbar - target).norm();
                    v.check(err < 1e-8, || format!("{tag}: {mode:?} beam identity off by {err:.3e}"));
                }
            }
        }

        for p in Pipeline::ALL {
            let Ok(pset) = build_precoders(&real, &cfg, p.beam_mode()) else {
                continue;
            };
            let rep = p.run_on(&pset, &cfg);
            v.runs += 1;
            if !rep.is_feasible() {
                continue;
            }
            v.feasible += 1;
            let drop = rep.ee_trace.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max);
            v.check(drop <= 1e-9, || format!("{tag}: {p} trace drops by {drop:.3e}"));
            v.check(rep.ee_trace.len() <= 100, || {
                format!("{tag}: {p} trace has {} entries", rep.ee_trace.len())
            });
            let worst = rep.cell_power_w.iter().copied().fold(0.0, f64::max);
            v.check(worst <= cfg.max_power_w * (1.0 + 1e-8), || {
                format!("{tag}: {p} cell power {worst} W over budget")
            });
            if let Some(tau) = rep.tau {
                v.check(tau[0] > 0.0 && tau[1] > 0.0 && tau[0] + tau[1] <= 1.0 + 1e-12, || {
                    format!("{tag}: {p} time split {tau:?}")
                });
            }
            if rep.status == RunStatus::Converged {
                let floor = cfg.qos_threshold_bps * (1.0 - 1e-6);
                let low = rep.rates_bps.iter().flatten().copied().fold(f64::INFINITY, f64::min);
                v.check(low >= floor, || {
                    format!("{tag}: {p} rate {low} below {}", cfg.qos_threshold_bps)
                });
            }
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_network_passes() {
        let mut cfg = NetworkConfig::default().with_users(6);
        cfg.antenna_rows = 4;
        cfg.antenna_cols = 4;
        let v = run(&cfg, 11, 3);
        assert!(v.passed(), "{:?}", v.failures);
        assert_eq!(v.instances, 3);
        assert!(v.checks > 0 && v.feasible > 0);
    }
}
