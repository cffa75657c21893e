use super::rates::{cell_powers, evaluate_ee, user_rates};
use super::{bits, EeReport, Pipeline, RunStatus, Scaled, MAX_OUTER, REL_TOL};
use crate::beamforming::PrecoderSet;
use crate::config::NetworkConfig;
use crate::sca::{
    bound_ln_x_over_y, solve_convex, solve_lp, ConvexFn, LinearProgram, LpStatus, RowKind, Sense,
    SeparableConvexProblem, SolveOptions, SolveStatus,
};

#[derive(Debug, Clone, PartialEq)]
pub enum InitOutcome {
    /// Direct powers and the optimal `max_i chi_i / P_max`.
    Feasible {
        powers: Vec<Vec<f64>>,
        value: f64,
    },
    Infeasible {
        value: Option<f64>,
        reason: String,
    },
}

/// `lambda(u)` in noise units for flattened beam powers `u`.
fn interference(sc: &Scaled, u: &[f64], cell_total: &[f64], k: usize) -> f64 {
    let mut y: f64 = sc.iui[k].iter().map(|&(l, c)| c * u[l]).sum();
    y += sc.ici[k].iter().map(|&(j, b)| b * cell_total[j]).sum::<f64>();
    y
}

fn cell_totals(sc: &Scaled, u: &[f64]) -> Vec<f64> {
    (0..sc.cells()).map(|i| u[sc.users_of(i)].iter().sum()).collect()
}

fn throughput(sc: &Scaled, u: &[f64]) -> f64 {
    let totals = cell_totals(sc, u);
    (0..sc.len())
        .map(|k| (sc.gain[k] * u[k] / (1.0 + interference(sc, u, &totals, k))).ln_1p())
        .sum()
}

fn consumption(sc: &Scaled, u: &[f64], config: &NetworkConfig) -> f64 {
    let total: f64 = u.iter().sum();
    config.drain_reciprocal * total + sc.cells() as f64 * config.circuit_power_w()
}

/// Appends `coef * (iui + ici)` of user `k` as linear terms.
fn push_interference(f: &mut ConvexFn, sc: &Scaled, k: usize, coef: f64) {
    for &(l, c) in &sc.iui[k] {
        f.push_linear(l, coef * c);
    }
    for &(j, b) in &sc.ici[k] {
        for m in sc.users_of(j) {
            f.push_linear(m, coef * b);
        }
    }
}

/// Solves `min max_i chi_i / P_max` subject to the linear QoS constraints.
pub fn init_feasible(pset: &PrecoderSet, config: &NetworkConfig) -> InitOutcome {
    let sc = Scaled::new(pset);
    match init_beam_powers(&sc, config.qos_threshold_nats().exp_m1(), config.max_power_w) {
        Ok((u, value)) => {
            let p: Vec<f64> = u.iter().zip(&sc.norm_sq).map(|(u, n)| u / n).collect();
            InitOutcome::Feasible {
                powers: sc.unflatten(&p),
                value,
            }
        }
        Err((value, reason)) => InitOutcome::Infeasible { value, reason },
    }
}

/// LP over beam powers `u` and the level `s`: `min s` s.t.
/// `sum_cell u <= s P` and `g u_k >= gamma (1 + lambda_k(u))`.
pub(crate) fn init_beam_powers(sc: &Scaled, gamma: f64, p_max: f64) -> Result<(Vec<f64>, f64), (Option<f64>, String)> {
    if !gamma.is_finite() {
        return Err((None, "QoS threshold overflows the SINR target".into()));
    }
    let n = sc.len();
    let mut cost = vec![0.0; n + 1];
    cost[n] = 1.0;
    let mut lp = LinearProgram::new(cost);
    for i in 0..sc.cells() {
        let mut row: Vec<(usize, f64)> = sc.users_of(i).map(|k| (k, 1.0 / p_max)).collect();
        row.push((n, -1.0));
        lp.row(row, RowKind::Le, 0.0);
    }
    if gamma > 0.0 {
        for k in 0..n {
            let mut f = ConvexFn::new().linear(k, sc.gain[k]);
            push_interference(&mut f, sc, k, -gamma);
            let mut row: Vec<(usize, f64)> = Vec::new();
            for t in &f.terms {
                if let crate::sca::Term::Linear { var, coef } = *t {
                    match row.iter_mut().find(|(v, _)| *v == var) {
                        Some(e) => e.1 += coef,
                        None => row.push((var, coef)),
                    }
                }
            }
            lp.row(row, RowKind::Ge, gamma);
        }
    }
    let r = solve_lp(&lp);
    match r.status {
        LpStatus::Optimal => {
            let s = r.x[n];
            if s > 1.0 + 1e-9 {
                Err((Some(s), format!("initial power level {s:.4} exceeds the budget")))
            } else {
                Ok((r.x[..n].to_vec(), s))
            }
        }
        LpStatus::Infeasible => Err((None, "QoS constraints cannot hold jointly".into())),
        st => Err((None, format!("initialization LP ended with {st:?}"))),
    }
}

pub(crate) fn solver_options(start: Vec<f64>) -> SolveOptions {
    SolveOptions {
        max_newton_steps: 500,
        start: Some(start),
        ..SolveOptions::default()
    }
}

/// Path-following over direct powers (ZF or RZF beams).
pub fn algorithm1(pset: &PrecoderSet, config: &NetworkConfig) -> EeReport {
    let pipeline = if pset.mode.is_regularized() {
        Pipeline::Rzf
    } else {
        Pipeline::Zf
    };
    let sc = Scaled::new(pset);
    let n = sc.len();
    let gamma = config.qos_threshold_nats().exp_m1();
    let p_max = config.max_power_w;
    let (u0, _) = match init_beam_powers(&sc, gamma, p_max) {
        Ok(v) => v,
        Err((_, reason)) => return EeReport::infeasible(pipeline, sc.cells(), reason),
    };
    let lower: Vec<f64> = (0..n)
        .map(|k| {
            if gamma > 0.0 {
                0.5 * gamma / sc.gain[k]
            } else {
                1e-9 * p_max / sc.users_of(sc.cell_of[k]).len() as f64
            }
        })
        .collect();
    let mut u: Vec<f64> = u0.iter().zip(&lower).map(|(a, b)| a.max(*b)).collect();
    let mut t = throughput(&sc, &u) / consumption(&sc, &u, config);
    let mut trace = vec![t];
    let mut status = RunStatus::MaxIter;
    let mut message = None;

    while trace.len() < MAX_OUTER {
        let totals = cell_totals(&sc, &u);
        let mut obj = ConvexFn::new().constant(-t * sc.cells() as f64 * config.circuit_power_w());
        for k in 0..n {
            let x = sc.gain[k] * u[k];
            let y = 1.0 + interference(&sc, &u, &totals, k);
            let Ok(m) = bound_ln_x_over_y(x, y) else {
                message = Some("degenerate anchor".into());
                status = RunStatus::Converged;
                break;
            };
            obj.constant += m.a - m.c;
            obj.push_inverse(k, -m.b / sc.gain[k]);
            push_interference(&mut obj, &sc, k, -m.c);
            obj.push_linear(k, -t * config.drain_reciprocal);
        }
        if message.is_some() {
            break;
        }
        let mut prob = SeparableConvexProblem::new(n, Sense::Maximize, obj);
        for (k, l) in lower.iter().enumerate() {
            prob.lower[k] = Some(*l);
        }
        for i in 0..sc.cells() {
            let mut f = ConvexFn::new().constant(-p_max);
            for k in sc.users_of(i) {
                f.push_linear(k, 1.0);
            }
            prob.constrain(f);
        }
        if gamma > 0.0 {
            for k in 0..n {
                let mut f = ConvexFn::new().constant(gamma).linear(k, -sc.gain[k]);
                push_interference(&mut f, &sc, k, gamma);
                prob.constrain(f);
            }
        }
        let rep = match solve_convex(&prob, &solver_options(u.clone())) {
            Ok(r) => r,
            Err(e) => {
                message = Some(e.to_string());
                break;
            }
        };
        if !matches!(rep.status, SolveStatus::Optimal | SolveStatus::MaxIter) || rep.max_violation > 0.0 {
            message = Some(format!("subproblem ended with {:?}", rep.status));
            status = RunStatus::Converged;
            break;
        }
        let t_new = throughput(&sc, &rep.x) / consumption(&sc, &rep.x, config);
        if t_new < t {
            // no further ascent at solver precision
            status = RunStatus::Converged;
            break;
        }
        trace.push(t_new);
        u = rep.x;
        let done = t_new - t <= REL_TOL * t.abs();
        t = t_new;
        if done {
            status = RunStatus::Converged;
            break;
        }
    }

    let p: Vec<f64> = u.iter().zip(&sc.norm_sq).map(|(u, n)| u / n).collect();
    let powers = sc.unflatten(&p);
    let mut report = direct_report(pipeline, pset, config, powers, trace, status);
    report.message = message;
    report
}

pub(crate) fn direct_report(
    pipeline: Pipeline,
    pset: &PrecoderSet,
    config: &NetworkConfig,
    powers: Vec<Vec<f64>>,
    trace: Vec<f64>,
    status: RunStatus,
) -> EeReport {
    let rates = user_rates(pset, &powers, None);
    let beam_power_w = pset
        .cells
        .iter()
        .zip(&powers)
        .map(|(c, p)| c.beam_norm_sq.iter().zip(p).map(|(n, p)| n * p).collect())
        .collect();
    EeReport {
        pipeline,
        status,
        iterations: trace.len().saturating_sub(1),
        ee_trace: trace,
        ee_bits: evaluate_ee(pset, &powers, None, config),
        cell_power_w: cell_powers(pset, &powers, None),
        rates_bps: rates.iter().map(|r| r.iter().map(|v| bits(*v)).collect()).collect(),
        beam_power_w,
        powers,
        tau: None,
        message: None,
    }
}
