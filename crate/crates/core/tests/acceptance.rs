//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! then a summary.
//!
//! Failing criterion 7 sub-checks are reported but only abort the run with
//! `ACCEPTANCE_STRICT=1`. Any other FAIL exits non-zero.
//! `ACCEPTANCE_ONLY=1,5` restricts the run to the listed criteria.

mod common;

use common::{config, direct_oracle, draw, tf_oracle};
use mimo_ee::beamforming::{build_precoders, regularization_eta, rzf_precoder, zf_precoder};
use mimo_ee::sca::{
    bound_inv_zt, bound_ln_inv_xy, bound_ln_inv_xy_over_t, bound_ln_x_over_y, solve_convex, waterfill, ConvexFn,
    MinorantCoeffs, Sense, SeparableConvexProblem, SolveOptions, SolveStatus, WaterfillUser,
};
use mimo_ee::sweep::{run_sweep, Scenario, SweepResult, SweepSpec};
use mimo_ee::{BeamMode, Complex64, NetworkConfig, Pipeline, RunStatus};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::time::{Duration, Instant};

struct Outcome {
    id: &'static str,
    pass: bool,
    detail: String,
    elapsed: Duration,
    limit: Duration,
}

impl Outcome {
    fn ok(&self) -> bool {
        self.pass && self.elapsed <= self.limit
    }
}

fn run(id: &'static str, limit_s: u64, f: impl FnOnce() -> (bool, String)) -> Outcome {
    let t0 = Instant::now();
    let (pass, detail) = f();
    let out = Outcome {
        id,
        pass,
        detail,
        elapsed: t0.elapsed(),
        limit: Duration::from_secs(limit_s),
    };
    println!(
        "criterion {:<4} {}  ({:.1}s of {}s)  {}",
        out.id,
        if out.ok() { "PASS" } else { "FAIL" },
        out.elapsed.as_secs_f64(),
        limit_s,
        out.detail
    );
    out
}

fn c1_bounds() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let draw = |rng: &mut ChaCha8Rng| 10f64.powf(rng.random_range(-3.0..3.0));
    let (mut violations, mut worst_tangency) = (0usize, 0f64);
    let kinds: [fn(&[f64; 3]) -> MinorantCoeffs; 4] = [
        |a| bound_ln_inv_xy_over_t(a[0], a[1], a[2]).unwrap(),
        |a| bound_ln_inv_xy(a[0], a[1]).unwrap(),
        |a| bound_ln_x_over_y(a[0], a[1]).unwrap(),
        |a| bound_inv_zt(a[0], a[1]).unwrap(),
    ];
    for make in kinds {
        for _ in 0..1000 {
            let anchor = [draw(&mut rng), draw(&mut rng), draw(&mut rng)];
            let m = make(&anchor);
            let at = m.exact(&anchor);
            worst_tangency = worst_tangency.max((m.evaluate(&anchor) - at).abs() / at.abs());
            for _ in 0..1000 {
                let p = [draw(&mut rng), draw(&mut rng), draw(&mut rng)];
                let f = m.exact(&p);
                if m.evaluate(&p) > f + 1e-12 * f.abs().max(1.0) {
                    violations += 1;
                }
            }
        }
    }
    (
        violations == 0 && worst_tangency <= 1e-9,
        format!("minorant violations {violations}, worst tangency {worst_tangency:.2e}"),
    )
}

fn gaussian_channel(rng: &mut ChaCha8Rng, n: usize, k: usize) -> DMatrix<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DMatrix::from_fn(n, k, |_, _| {
        Complex64::new(
            rng.sample::<f64, _>(StandardNormal) * s,
            rng.sample::<f64, _>(StandardNormal) * s,
        )
    })
}

fn c2_identities() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let cfg = NetworkConfig::default();
    let (mut zf_worst, mut rzf_worst) = (0f64, 0f64);
    for trial in 0..100 {
        let k = rng.random_range(1..=12);
        let h = gaussian_channel(&mut rng, 16, k);
        let f = zf_precoder(&h).expect("well-conditioned draw");
        let eye = DMatrix::<Complex64>::identity(k, k);
        zf_worst = zf_worst.max((h.adjoint() * &f - &eye).norm());
        // alternate the noise-derived eta with a strong one
        let eta = if trial % 2 == 0 {
            regularization_eta(k, cfg.noise_power_w(), cfg.max_power_w).unwrap()
        } else {
            10f64.powf(rng.random_range(-2.0..1.0))
        };
        let (f, g) = rzf_precoder(&h, eta).unwrap();
        let target = &eye - g * Complex64::new(eta, 0.0);
        rzf_worst = rzf_worst.max((h.adjoint() * f - target).norm());
    }
    (
        zf_worst < 1e-8 && rzf_worst < 1e-8,
        format!("max ‖HᴴF−I‖ {zf_worst:.2e}, max ‖HᴴF−(I−ηG)‖ {rzf_worst:.2e}"),
    )
}

fn c3_waterfill() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cfg = NetworkConfig::default();
    let (mut worst, mut slack_ok) = (0f64, true);
    for _ in 0..50 {
        let k = rng.random_range(1..=8);
        let real = draw(&config(8, 8, k, 1), rng.random());
        let pset = build_precoders(&real, &cfg, BeamMode::Zf).unwrap();
        let c = &pset.cells[0];
        // beam powers in W, rates against noise plus a random inter-cell term
        let users: Vec<WaterfillUser> = (0..k)
            .map(|j| WaterfillUser {
                offset: 1.0 + rng.random_range(0.0..2.0),
                gain: c.alpha[j] / real.noise_power,
                norm_sq: c.beam_norm_sq[j],
            })
            .collect();
        let budget = cfg.max_power_w * rng.random_range(0.01..1.0);
        let t = rng.random_range(0.0..0.5);
        let wf = waterfill(t, cfg.drain_reciprocal, &users, 1.0, budget);

        let mut obj = ConvexFn::new();
        let mut row = ConvexFn::new().constant(-budget);
        for (j, u) in users.iter().enumerate() {
            obj.push_neg_log(j, u.offset, u.gain, -1.0);
            obj.push_linear(j, -t * cfg.drain_reciprocal * u.norm_sq);
            row.push_linear(j, u.norm_sq);
        }
        let mut prob = SeparableConvexProblem::new(k, Sense::Maximize, obj);
        prob.constrain(row);
        prob.lower = vec![Some(0.0); k];
        let opts = SolveOptions {
            gap_tol: 1e-12,
            ..SolveOptions::default()
        };
        let rep = solve_convex(&prob, &opts).unwrap();
        if rep.status != SolveStatus::Optimal {
            return (false, format!("generic solver ended with {:?}", rep.status));
        }
        for j in 0..k {
            worst = worst.max((wf.powers[j] - rep.x[j]).abs());
        }
        let spent: f64 = users.iter().zip(&wf.powers).map(|(u, p)| u.norm_sq * p).sum();
        slack_ok &= wf.lambda >= 0.0 && spent <= budget * (1.0 + 1e-9);
        slack_ok &= wf.lambda * (budget - spent) <= 1e-9 * budget.max(1.0) * wf.lambda.max(1.0);
    }
    (
        worst < 1e-6 && slack_ok,
        format!(
            "max coordinate gap {worst:.2e}, complementary slackness {}",
            if slack_ok { "ok" } else { "violated" }
        ),
    )
}

const FOUR: [Pipeline; 4] = [Pipeline::Cwzf, Pipeline::Rzf, Pipeline::TfZf, Pipeline::TfRzf];

fn c4_monotone() -> (bool, String) {
    let mut cases = Vec::new();
    for cells in [1, 3] {
        for users in [4, 8, 12] {
            for trial in 0..20u64 {
                cases.push((cells, users, trial));
            }
        }
    }
    let results: Vec<(usize, usize, usize, Vec<String>)> = cases
        .par_iter()
        .map(|&(cells, users, trial)| {
            let cfg = config(4, 4, users, cells);
            let real = draw(&cfg, 4000 + trial);
            let (mut runs, mut converged, mut checked) = (0, 0, 0);
            let mut bad = Vec::new();
            for p in Pipeline::ALL {
                let rep = p.run(&real, &cfg);
                if !rep.is_feasible() {
                    continue;
                }
                runs += 1;
                if let Some(w) = rep.ee_trace.windows(2).find(|w| w[1] < w[0] - 1e-9) {
                    bad.push(format!(
                        "{p} {cells}c {users}u #{trial}: trace drop {:.2e}",
                        w[0] - w[1]
                    ));
                }
                if rep.status == RunStatus::Converged {
                    converged += 1;
                    checked += rep.rates_bps.iter().flatten().count();
                    let floor = cfg.qos_threshold_bps * (1.0 - 1e-6);
                    if let Some(r) = rep.rates_bps.iter().flatten().find(|&&r| r < floor) {
                        bad.push(format!("{p} {cells}c {users}u #{trial}: rate {r}"));
                    }
                }
            }
            (runs, converged, checked, bad)
        })
        .collect();
    let runs: usize = results.iter().map(|r| r.0).sum();
    let converged: usize = results.iter().map(|r| r.1).sum();
    let users: usize = results.iter().map(|r| r.2).sum();
    let bad: Vec<&String> = results.iter().flat_map(|r| &r.3).collect();
    (
        bad.is_empty() && converged > 0,
        format!(
            "{runs} feasible runs, {converged} converged, {users} user rates checked, {} violations{}",
            bad.len(),
            bad.first().map(|b| format!(" (first: {b})")).unwrap_or_default()
        ),
    )
}

fn c5_oracles() -> (bool, String) {
    let cfg = config(2, 2, 2, 1);
    let rows: Vec<(Pipeline, u64, Option<f64>)> = (0..10u64)
        .into_par_iter()
        .flat_map_iter(|seed| {
            let real = draw(&cfg, 5000 + seed);
            [Pipeline::Zf, Pipeline::Rzf, Pipeline::TfZf, Pipeline::TfRzf]
                .into_iter()
                .map(|p| {
                    let pset = build_precoders(&real, &cfg, p.beam_mode()).unwrap();
                    let rep = p.run_on(&pset, &cfg);
                    let best = if p.beam_mode().is_time_fraction() {
                        tf_oracle(&real, &pset, &cfg)
                    } else {
                        direct_oracle(&real, &pset, &cfg)
                    };
                    let gap = match best {
                        Some(b) if rep.is_feasible() => Some((rep.ee_bits - b).abs() / b),
                        None if !rep.is_feasible() => Some(0.0),
                        _ => None,
                    };
                    (p, seed, gap)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let mismatched: Vec<String> = rows
        .iter()
        .filter(|r| r.2.is_none_or(|g| g >= 1e-3))
        .map(|r| format!("{} seed {}", r.0, r.1))
        .collect();
    let worst = rows.iter().filter_map(|r| r.2).fold(0f64, f64::max);
    (
        mismatched.is_empty(),
        format!(
            "{} instances, worst relative gap {worst:.2e}, mismatches {mismatched:?}",
            rows.len()
        ),
    )
}

fn c6_speed() -> (bool, String) {
    let spec = SweepSpec {
        scenario: Scenario::Single,
        modes: FOUR.to_vec(),
        user_counts: vec![40],
        rho_values: vec![0.9],
        thresholds: vec![0.4],
        trials: 10,
        base_seed: 6000,
        workers: None,
    };
    let result = run_sweep(&spec, &NetworkConfig::default()).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for mode in FOUR {
        let recs: Vec<_> = result.records.iter().filter(|r| r.mode == mode).collect();
        let feasible = recs.iter().filter(|r| r.feasible()).count();
        let fast = recs
            .iter()
            .filter(|r| r.status == RunStatus::Converged && r.iterations <= 30)
            .count();
        let max_it = recs
            .iter()
            .filter(|r| r.feasible())
            .map(|r| r.iterations)
            .max()
            .unwrap_or(0);
        pass &= feasible > 0 && fast * 10 >= feasible * 8;
        parts.push(format!(
            "{mode} {fast}/{feasible} feasible ({}/10 total, max {max_it} it)",
            fast
        ));
    }
    (pass, parts.join("; "))
}

fn max_feasible(result: &SweepResult, mode: Pipeline, rho: f64) -> Option<usize> {
    result
        .points
        .iter()
        .filter(|p| p.mode == mode && p.rho == rho && p.feasibility() >= 0.5)
        .map(|p| p.users)
        .max()
}

fn majority(result: &SweepResult, mode: Pipeline, users: usize, rho: f64) -> Option<&mimo_ee::sweep::GridPoint> {
    result.point(mode, users, rho, 0.4).filter(|p| p.feasibility() >= 0.5)
}

fn c7_sweep() -> SweepResult {
    let spec = SweepSpec {
        scenario: Scenario::Single,
        modes: FOUR.to_vec(),
        user_counts: (1..=16).map(|i| 8 * i).collect(),
        rho_values: vec![0.9, 0.5],
        thresholds: vec![0.4],
        trials: 10,
        base_seed: 7000,
        workers: None,
    };
    run_sweep(&spec, &NetworkConfig::default()).unwrap()
}

fn c7a(r: &SweepResult) -> (bool, String) {
    let m = |p| max_feasible(r, p, 0.9);
    let (c, z, t) = (m(Pipeline::Cwzf), m(Pipeline::TfZf), m(Pipeline::TfRzf));
    let pass = matches!((c, z, t), (c, Some(z), Some(t)) if c.is_none_or(|c| c < z) && z < t);
    (
        pass,
        format!("max majority-feasible N_UE: CWZF {c:?}, TF-ZF {z:?}, TF-RZF {t:?}"),
    )
}

fn c7b(r: &SweepResult) -> (bool, String) {
    let beyond: Vec<String> = r
        .points
        .iter()
        .filter(|p| p.mode == Pipeline::TfRzf && p.rho == 0.9 && p.users > 64)
        .map(|p| format!("{}:{}/{}", p.users, p.feasible, p.trials))
        .collect();
    let pass = r
        .points
        .iter()
        .any(|p| p.mode == Pipeline::TfRzf && p.rho == 0.9 && p.users > 64 && p.feasibility() >= 0.5);
    (pass, format!("TF-RZF feasibility above 64 users: {}", beyond.join(" ")))
}

fn c7c(r: &SweepResult) -> (bool, String) {
    let mut pass = true;
    let mut compared = 0;
    let mut losses = Vec::new();
    for users in (1..=16).map(|i| 8 * i) {
        let (Some(a), Some(b)) = (
            majority(r, Pipeline::Rzf, users, 0.9),
            majority(r, Pipeline::TfRzf, users, 0.9),
        ) else {
            continue;
        };
        compared += 1;
        let (a, b) = (a.ee_mean.unwrap(), b.ee_mean.unwrap());
        if b < a {
            pass = false;
            losses.push(format!("{users}: TF-RZF {b:.3} < RZF {a:.3}"));
        }
    }
    pass &= compared > 0;
    (
        pass,
        format!("{compared} common N_UE, TF-RZF below RZF at [{}]", losses.join(", ")),
    )
}

fn c7d(r: &SweepResult) -> (bool, String) {
    let mut pass = true;
    let mut compared = 0;
    let mut low = Vec::new();
    let mut worst = f64::INFINITY;
    for mode in FOUR {
        for users in (1..=16).map(|i| 8 * i) {
            let (Some(a), Some(b)) = (majority(r, mode, users, 0.9), majority(r, mode, users, 0.5)) else {
                continue;
            };
            compared += 1;
            let ratio = b.ee_mean.unwrap() / a.ee_mean.unwrap();
            worst = worst.min(ratio);
            if ratio < 1.5 {
                pass = false;
                low.push(format!("{mode}@{users}: {ratio:.2}"));
            }
        }
    }
    pass &= compared > 0;
    (
        pass,
        format!(
            "{compared} matched points, min EE(0.5)/EE(0.9) {worst:.2}, below 1.5 at [{}]",
            low.join(", ")
        ),
    )
}

/// Judged on the criterion-7 setting (ρ = 0.9); ρ = 0.5 is printed for
/// reference.
fn c8_tau(r: &SweepResult) -> (bool, String) {
    let mut pass = true;
    let mut parts = Vec::new();
    for mode in [Pipeline::TfZf, Pipeline::TfRzf] {
        for rho in [0.9, 0.5] {
            let series: Vec<f64> = r
                .points
                .iter()
                .filter(|p| p.mode == mode && p.rho == rho && p.feasibility() >= 0.5)
                .filter_map(|p| p.tau_ratio_mean)
                .collect();
            let inversions = series.windows(2).filter(|w| w[1] > w[0]).count();
            if rho == 0.9 {
                pass &= series.len() >= 2 && inversions <= 1;
            }
            parts.push(format!(
                "{mode} ρ={rho}{}: [{}] inversions {inversions}",
                if rho == 0.9 { "" } else { " (info)" },
                series.iter().map(|v| format!("{v:.2}")).collect::<Vec<_>>().join(" ")
            ));
        }
    }
    (pass, parts.join("; "))
}

fn main() {
    let only: Option<Vec<String>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').map(|p| p.trim().to_string()).collect());
    let wanted = |id: &str| only.as_ref().is_none_or(|o| o.iter().any(|w| w == id));
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");

    let mut outcomes = Vec::new();
    if wanted("1") {
        outcomes.push(run("1", 10, c1_bounds));
    }
    if wanted("2") {
        outcomes.push(run("2", 5, c2_identities));
    }
    if wanted("3") {
        outcomes.push(run("3", 30, c3_waterfill));
    }
    if wanted("4") {
        outcomes.push(run("4", 300, c4_monotone));
    }
    if wanted("5") {
        outcomes.push(run("5", 120, c5_oracles));
    }
    if wanted("6") {
        outcomes.push(run("6", 900, c6_speed));
    }
    if wanted("7") || wanted("8") {
        let t0 = Instant::now();
        let sweep = c7_sweep();
        let spent = t0.elapsed().as_secs();
        println!("criterion 7/8 sweep finished in {spent}s");
        let budget = 7200u64.saturating_sub(spent);
        if wanted("7") {
            outcomes.push(run("7a", budget, || c7a(&sweep)));
            outcomes.push(run("7b", budget, || c7b(&sweep)));
            outcomes.push(run("7c", budget, || c7c(&sweep)));
            outcomes.push(run("7d", budget, || c7d(&sweep)));
        }
        if wanted("8") {
            outcomes.push(run("8", budget, || c8_tau(&sweep)));
        }
    }

    let failed: Vec<&Outcome> = outcomes.iter().filter(|o| !o.ok()).collect();
    println!(
        "acceptance: {} passed, {} failed{}",
        outcomes.len() - failed.len(),
        failed.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!(" ({})", failed.iter().map(|o| o.id).collect::<Vec<_>>().join(", "))
        }
    );
    let fatal = failed.iter().any(|o| strict || !o.id.starts_with('7'));
    if fatal {
        std::process::exit(1);
    }
}
