use super::path_following::solver_options;
use super::rates::{cell_powers, evaluate_ee, user_rates};
use super::{bits, EeReport, Pipeline, RunStatus, Scaled, MAX_OUTER, REL_TOL};
use crate::beamforming::PrecoderSet;
use crate::config::NetworkConfig;
use crate::sca::{
    bound_ln_inv_xy, bound_ln_inv_xy_over_t, solve_convex, solve_lp, ConvexFn, LinearProgram, LpStatus, RowKind, Sense,
    SeparableConvexProblem, SolveStatus,
};

/// Starting point of the time-fraction path-following loop.
#[derive(Debug, Clone, PartialEq)]
pub struct TfStart {
    pub theta: [f64; 2],
    pub tau: [f64; 2],
    /// Inverse powers per cell.
    pub powers: Vec<Vec<f64>>,
    /// Optimal total weighted transmit power of the LP.
    pub value: f64,
}

/// First fractions tried after `theta = (2, 2)` fails.
const FALLBACK_TAU: [f64; 6] = [0.3, 0.7, 0.2, 0.8, 0.1, 0.9];

/// LP over beam powers `w = 1 / v` for fixed `theta`.
fn init_lp(sc: &Scaled, r_nats: f64, theta: [f64; 2], p_max: f64) -> Option<(Vec<f64>, f64)> {
    let n = sc.len();
    let weight = |k: usize| {
        if sc.group[k] == 0 {
            1.0 - 1.0 / theta[1]
        } else {
            1.0 / theta[1]
        }
    };
    let mut lp = LinearProgram::new((0..n).map(weight).collect());
    for k in 0..n {
        let floor = 1e-6 * p_max / sc.users_of(sc.cell_of[k]).len() as f64;
        lp.row(vec![(k, 1.0)], RowKind::Le, 3.0 * p_max);
        lp.row(vec![(k, 1.0)], RowKind::Ge, floor);
    }
    for i in 0..sc.cells() {
        lp.row(sc.users_of(i).map(|k| (k, weight(k))).collect(), RowKind::Le, p_max);
    }
    if r_nats > 0.0 {
        for k in 0..n {
            let gamma = (theta[sc.group[k]] * r_nats).exp_m1();
            if !gamma.is_finite() {
                return None;
            }
            let mut row = vec![(k, sc.gain[k])];
            row.extend(sc.iui[k].iter().map(|&(l, c)| (l, -gamma * c)));
            lp.row(row, RowKind::Ge, gamma);
        }
    }
    let r = solve_lp(&lp);
    (r.status == LpStatus::Optimal).then_some((r.x, r.objective))
}

fn theta_candidates() -> impl Iterator<Item = [f64; 2]> {
    std::iter::once([2.0, 2.0]).chain(FALLBACK_TAU.iter().map(|&t| [1.0 / t, 1.0 / (1.0 - t)]))
}

/// Finds feasible inverse powers for `theta0`, or for the first fallback
/// split that works when `theta0` is `None`.
pub fn tf_init(pset: &PrecoderSet, config: &NetworkConfig, theta0: Option<[f64; 2]>) -> Result<TfStart, String> {
    let sc = Scaled::new(pset);
    let (w, theta, value) = scaled_init(&sc, config, theta0)?;
    let inv: Vec<f64> = w.iter().zip(&sc.norm_sq).map(|(w, n)| n / w).collect();
    Ok(TfStart {
        theta,
        tau: [1.0 / theta[0], 1.0 / theta[1]],
        powers: sc.unflatten(&inv),
        value,
    })
}

fn scaled_init(
    sc: &Scaled,
    config: &NetworkConfig,
    theta0: Option<[f64; 2]>,
) -> Result<(Vec<f64>, [f64; 2], f64), String> {
    let r = config.qos_threshold_nats();
    let candidates: Vec<[f64; 2]> = match theta0 {
        Some(t) => vec![t],
        None => theta_candidates().collect(),
    };
    for theta in candidates {
        if !(theta[0] > 1.0 && theta[1] > 1.0 && 1.0 / theta[0] + 1.0 / theta[1] <= 1.0 + 1e-12) {
            return Err(format!("theta {theta:?} violates 1/theta1 + 1/theta2 <= 1"));
        }
        if let Some((w, value)) = init_lp(sc, r, theta, config.max_power_w) {
            return Ok((w, theta, value));
        }
    }
    Err("no time split admits the QoS constraints within the budget".into())
}

/// `(x, y)` of user `k` in noise units: `x = v / g`, `y = 1 + sum c / v`.
fn xy(sc: &Scaled, v: &[f64], k: usize) -> (f64, f64) {
    let y = 1.0 + sc.iui[k].iter().map(|&(l, c)| c / v[l]).sum::<f64>();
    (v[k] / sc.gain[k], y)
}

fn phi(sc: &Scaled, v: &[f64], theta: [f64; 2]) -> f64 {
    (0..sc.len())
        .map(|k| {
            let (x, y) = xy(sc, v, k);
            (1.0 / (x * y)).ln_1p() / theta[sc.group[k]]
        })
        .sum()
}

fn big_pi(sc: &Scaled, v: &[f64], theta2: f64, config: &NetworkConfig) -> f64 {
    let tx: f64 = (0..sc.len())
        .map(|k| {
            if sc.group[k] == 0 {
                (1.0 - 1.0 / theta2) / v[k]
            } else {
                1.0 / (v[k] * theta2)
            }
        })
        .sum();
    config.drain_reciprocal * tx + sc.cells() as f64 * config.circuit_power_w()
}

/// Majorant of one cell's time-averaged transmit power at anchor
/// `(v̄, θ̄2)`, tangent at the anchor.
fn power_majorant(sc: &Scaled, cell: usize, v: &[f64], theta2: f64, t2: usize) -> ConvexFn {
    let mut f = ConvexFn::new();
    for k in sc.users_of(cell) {
        if sc.group[k] == 0 {
            f.push_inverse(k, 1.0);
            f.push_linear(k, 1.0 / (v[k] * v[k] * theta2));
            f.push_linear(t2, 1.0 / (v[k] * theta2 * theta2));
            f.constant -= 3.0 / (v[k] * theta2);
        } else {
            f.push_inverse_product(k, t2, 1.0);
        }
    }
    f
}

/// Path-following over inverse powers and time fractions.
pub fn algorithm2(pset: &PrecoderSet, config: &NetworkConfig) -> EeReport {
    let pipeline = if pset.mode.is_regularized() {
        Pipeline::TfRzf
    } else {
        Pipeline::TfZf
    };
    let cells = pset.cell_count();
    if !pset.mode.is_time_fraction() {
        return EeReport::infeasible(pipeline, cells, "precoders are not time-fraction beams");
    }
    let sc = Scaled::new(pset);
    let n = sc.len();
    let (t1, t2) = (n, n + 1);
    let p_max = config.max_power_w;
    let r = config.qos_threshold_nats();
    let (w, mut theta, _) = match scaled_init(&sc, config, None) {
        Ok(v) => v,
        Err(e) => return EeReport::infeasible(pipeline, cells, e),
    };
    let v_floor = 1.0 / (3.0 * p_max);
    let mut v: Vec<f64> = w.iter().map(|w| (1.0 / w).max(v_floor)).collect();
    let mut t = phi(&sc, &v, theta) / big_pi(&sc, &v, theta[1], config);
    let mut trace = vec![t];
    let mut status = RunStatus::MaxIter;
    let mut message = None;

    while trace.len() < MAX_OUTER {
        let mut obj = ConvexFn::new().constant(-t * cells as f64 * config.circuit_power_w());
        let mut qos = Vec::new();
        for k in 0..n {
            let q = sc.group[k];
            let (x, y) = xy(&sc, &v, k);
            let (Ok(m), Ok(mq)) = (bound_ln_inv_xy_over_t(x, y, theta[q]), bound_ln_inv_xy(x, y)) else {
                message = Some("degenerate anchor".into());
                break;
            };
            obj.constant += m.a - m.c;
            obj.push_linear(k, -m.b / sc.gain[k]);
            for &(l, c) in &sc.iui[k] {
                obj.push_inverse(l, -m.c * c);
            }
            obj.push_linear(n + q, -m.d.unwrap_or(0.0));
            if r > 0.0 {
                let mut f = ConvexFn::new().constant(mq.c - mq.a).linear(n + q, r);
                f.push_linear(k, mq.b / sc.gain[k]);
                for &(l, c) in &sc.iui[k] {
                    f.push_inverse(l, mq.c * c);
                }
                qos.push(f);
            }
        }
        if message.is_some() {
            status = RunStatus::Converged;
            break;
        }
        let mut prob = SeparableConvexProblem::new(n + 2, Sense::Maximize, ConvexFn::new());
        for i in 0..cells {
            let maj = power_majorant(&sc, i, &v, theta[1], t2);
            obj.add_scaled(&maj, -t * config.drain_reciprocal);
            prob.constrain(maj.constant(-p_max));
        }
        prob.objective = obj;
        prob.constrain(ConvexFn::new().inverse(t1, 1.0).inverse(t2, 1.0).constant(-1.0));
        for f in qos {
            prob.constrain(f);
        }
        for k in 0..n {
            prob.lower[k] = Some(v_floor);
        }
        prob.lower[t1] = Some(1.0);
        prob.lower[t2] = Some(1.0);

        let mut start = v.clone();
        start.extend_from_slice(&theta);
        let rep = match solve_convex(&prob, &solver_options(start)) {
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
        let new_theta = [rep.x[t1], rep.x[t2]];
        let new_v = rep.x[..n].to_vec();
        let t_new = phi(&sc, &new_v, new_theta) / big_pi(&sc, &new_v, new_theta[1], config);
        if t_new < t {
            status = RunStatus::Converged;
            break;
        }
        trace.push(t_new);
        v = new_v;
        theta = new_theta;
        let done = t_new - t <= REL_TOL * t.abs();
        t = t_new;
        if done {
            status = RunStatus::Converged;
            break;
        }
    }

    let mut tau = [1.0 / theta[0], 1.0 / theta[1]];
    let sum = tau[0] + tau[1];
    if sum > 1.0 {
        tau = [tau[0] / sum, tau[1] / sum];
    }
    let inv: Vec<f64> = v.iter().zip(&sc.norm_sq).map(|(v, n)| v * n).collect();
    let powers = sc.unflatten(&inv);
    let rates = user_rates(pset, &powers, Some(tau));
    let beam_power_w = pset
        .cells
        .iter()
        .zip(&powers)
        .map(|(c, p)| c.beam_norm_sq.iter().zip(p).map(|(n, p)| n / p).collect())
        .collect();
    EeReport {
        pipeline,
        status,
        iterations: trace.len() - 1,
        ee_trace: trace,
        ee_bits: evaluate_ee(pset, &powers, Some(tau), config),
        cell_power_w: cell_powers(pset, &powers, Some(tau)),
        rates_bps: rates.iter().map(|r| r.iter().map(|v| bits(*v)).collect()).collect(),
        beam_power_w,
        powers,
        tau: Some(tau),
        message,
    }
}
