//! Log-barrier interior-point solver for small smooth convex programs.
//!
//! Functions are sums of a few term shapes that cover every surrogate
//! subproblem in the crate: affine terms, `w / x_v`, `w / (x_u x_v)` and
//! `-w ln(o + s x_v)`. With nonnegative weights every shape is convex on the
//! positive orthant, so a constraint `f(x) <= 0` is convex and a barrier
//! `-ln(-f(x))` is self-concordant enough for damped Newton to behave.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Term {
    /// `coef * x_var`
    Linear { var: usize, coef: f64 },
    /// `weight / x_var`
    Inverse { var: usize, weight: f64 },
    /// `weight / (x_u * x_v)`, `u != v`
    InverseProduct { u: usize, v: usize, weight: f64 },
    /// `-weight * ln(offset + slope * x_var)`
    NegLog {
        var: usize,
        offset: f64,
        slope: f64,
        weight: f64,
    },
}

impl Term {
    fn curvature_weight(&self) -> Option<f64> {
        match *self {
            Term::Linear { .. } => None,
            Term::Inverse { weight, .. } | Term::InverseProduct { weight, .. } | Term::NegLog { weight, .. } => {
                Some(weight)
            }
        }
    }
}

/// `constant + sum of terms`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvexFn {
    pub constant: f64,
    pub terms: Vec<Term>,
}

impl ConvexFn {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn linear(mut self, var: usize, coef: f64) -> Self {
        self.push_linear(var, coef);
        self
    }

    pub fn inverse(mut self, var: usize, weight: f64) -> Self {
        self.push_inverse(var, weight);
        self
    }

    pub fn push_linear(&mut self, var: usize, coef: f64) {
        if coef != 0.0 {
            self.terms.push(Term::Linear { var, coef });
        }
    }

    pub fn push_inverse(&mut self, var: usize, weight: f64) {
        if weight != 0.0 {
            self.terms.push(Term::Inverse { var, weight });
        }
    }

    pub fn push_inverse_product(&mut self, u: usize, v: usize, weight: f64) {
        if weight != 0.0 {
            self.terms.push(Term::InverseProduct { u, v, weight });
        }
    }

    pub fn push_neg_log(&mut self, var: usize, offset: f64, slope: f64, weight: f64) {
        if weight != 0.0 {
            self.terms.push(Term::NegLog {
                var,
                offset,
                slope,
                weight,
            });
        }
    }

    /// Appends `scale * other`.
    pub fn add_scaled(&mut self, other: &ConvexFn, scale: f64) {
        self.constant += scale * other.constant;
        for t in &other.terms {
            let t = match *t {
                Term::Linear { var, coef } => Term::Linear {
                    var,
                    coef: coef * scale,
                },
                Term::Inverse { var, weight } => Term::Inverse {
                    var,
                    weight: weight * scale,
                },
                Term::InverseProduct { u, v, weight } => Term::InverseProduct {
                    u,
                    v,
                    weight: weight * scale,
                },
                Term::NegLog {
                    var,
                    offset,
                    slope,
                    weight,
                } => Term::NegLog {
                    var,
                    offset,
                    slope,
                    weight: weight * scale,
                },
            };
            self.terms.push(t);
        }
    }

    pub fn is_affine(&self) -> bool {
        self.terms.iter().all(|t| matches!(t, Term::Linear { .. }))
    }

    fn is_convex(&self) -> bool {
        self.terms.iter().all(|t| t.curvature_weight().is_none_or(|w| w >= 0.0))
    }

    fn is_concave(&self) -> bool {
        self.terms.iter().all(|t| t.curvature_weight().is_none_or(|w| w <= 0.0))
    }

    /// Value at `x`, or `None` outside the domain.
    pub fn value(&self, x: &[f64]) -> Option<f64> {
        let mut v = self.constant;
        for t in &self.terms {
            v += match *t {
                Term::Linear { var, coef } => coef * x[var],
                Term::Inverse { var, weight } => {
                    if x[var] <= 0.0 {
                        return None;
                    }
                    weight / x[var]
                }
                Term::InverseProduct { u, v: w, weight } => {
                    if x[u] <= 0.0 || x[w] <= 0.0 {
                        return None;
                    }
                    weight / (x[u] * x[w])
                }
                Term::NegLog {
                    var,
                    offset,
                    slope,
                    weight,
                } => {
                    let arg = offset + slope * x[var];
                    if arg <= 0.0 {
                        return None;
                    }
                    -weight * arg.ln()
                }
            };
        }
        v.is_finite().then_some(v)
    }

    /// Adds `gs * grad` into `grad` and `hs * hess` into `hess`.
    fn accumulate(&self, x: &[f64], gs: f64, grad: &mut [f64], hs: f64, hess: Option<&mut DMatrix<f64>>) {
        let mut hess = hess;
        for t in &self.terms {
            match *t {
                Term::Linear { var, coef } => grad[var] += gs * coef,
                Term::Inverse { var, weight } => {
                    let xv = x[var];
                    grad[var] -= gs * weight / (xv * xv);
                    if let Some(h) = hess.as_deref_mut() {
                        h[(var, var)] += hs * 2.0 * weight / (xv * xv * xv);
                    }
                }
                Term::InverseProduct { u, v, weight } => {
                    let f = weight / (x[u] * x[v]);
                    grad[u] -= gs * f / x[u];
                    grad[v] -= gs * f / x[v];
                    if let Some(h) = hess.as_deref_mut() {
                        h[(u, u)] += hs * 2.0 * f / (x[u] * x[u]);
                        h[(v, v)] += hs * 2.0 * f / (x[v] * x[v]);
                        let c = hs * f / (x[u] * x[v]);
                        h[(u, v)] += c;
                        h[(v, u)] += c;
                    }
                }
                Term::NegLog {
                    var,
                    offset,
                    slope,
                    weight,
                } => {
                    let arg = offset + slope * x[var];
                    grad[var] -= gs * weight * slope / arg;
                    if let Some(h) = hess.as_deref_mut() {
                        h[(var, var)] += hs * weight * slope * slope / (arg * arg);
                    }
                }
            }
        }
    }

    fn vars(&self) -> impl Iterator<Item = usize> + '_ {
        self.terms.iter().flat_map(|t| {
            let (a, b) = match *t {
                Term::Linear { var, .. } | Term::Inverse { var, .. } | Term::NegLog { var, .. } => (var, None),
                Term::InverseProduct { u, v, .. } => (u, Some(v)),
            };
            std::iter::once(a).chain(b)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// `min/max objective(x)` subject to `constraints[i](x) <= 0` and box bounds.
#[derive(Debug, Clone)]
pub struct SeparableConvexProblem {
    pub n: usize,
    pub sense: Sense,
    pub objective: ConvexFn,
    pub constraints: Vec<ConvexFn>,
    pub lower: Vec<Option<f64>>,
    pub upper: Vec<Option<f64>>,
}

impl SeparableConvexProblem {
    pub fn new(n: usize, sense: Sense, objective: ConvexFn) -> Self {
        Self {
            n,
            sense,
            objective,
            constraints: Vec::new(),
            lower: vec![None; n],
            upper: vec![None; n],
        }
    }

    pub fn constrain(&mut self, f: ConvexFn) {
        self.constraints.push(f);
    }

    fn validate(&self) -> Result<(), ProblemError> {
        if self.lower.len() != self.n || self.upper.len() != self.n {
            return Err(ProblemError::Dimension);
        }
        let all = std::iter::once(&self.objective).chain(&self.constraints);
        if all.clone().flat_map(|f| f.vars()).any(|v| v >= self.n) {
            return Err(ProblemError::Dimension);
        }
        let objective_ok = match self.sense {
            Sense::Minimize => self.objective.is_convex(),
            Sense::Maximize => self.objective.is_concave(),
        };
        if !objective_ok {
            return Err(ProblemError::NotConvex("objective".into()));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if !c.is_convex() {
                return Err(ProblemError::NotConvex(format!("constraint {i}")));
            }
        }
        for f in all {
            for t in &f.terms {
                match *t {
                    Term::Inverse { var, .. } => self.require_positive_lower(var)?,
                    Term::InverseProduct { u, v, .. } => {
                        if u == v {
                            return Err(ProblemError::Dimension);
                        }
                        self.require_positive_lower(u)?;
                        self.require_positive_lower(v)?;
                    }
                    Term::NegLog { var, offset, slope, .. } => {
                        let ok = match (slope >= 0.0, self.lower[var], self.upper[var]) {
                            (true, Some(l), _) => offset + slope * l >= 0.0,
                            (false, _, Some(u)) => offset + slope * u >= 0.0,
                            _ => slope == 0.0 && offset > 0.0,
                        };
                        if !ok {
                            return Err(ProblemError::UnboundedDomain(var));
                        }
                    }
                    Term::Linear { .. } => {}
                }
            }
        }
        for v in 0..self.n {
            if let (Some(l), Some(u)) = (self.lower[v], self.upper[v]) {
                if !(l < u) {
                    return Err(ProblemError::EmptyBox(v));
                }
            }
        }
        Ok(())
    }

    fn require_positive_lower(&self, var: usize) -> Result<(), ProblemError> {
        match self.lower[var] {
            Some(l) if l > 0.0 => Ok(()),
            _ => Err(ProblemError::UnboundedDomain(var)),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("term refers to a variable outside the problem or bounds have wrong length")]
    Dimension,
    #[error("{0} has the wrong curvature")]
    NotConvex(String),
    #[error("variable {0} appears in a hyperbolic or log term without a bound keeping it in the domain")]
    UnboundedDomain(usize),
    #[error("variable {0} has an empty box")]
    EmptyBox(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    MaxIter,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub x: Vec<f64>,
    /// Objective in the problem's own sense.
    pub objective: f64,
    pub kkt_residual: f64,
    /// Newton steps over both phases.
    pub iterations: usize,
    pub status: SolveStatus,
    /// Largest positive constraint value at `x` (zero when strictly feasible).
    pub max_violation: f64,
    /// Phase-one optimum of `min s s.t. f_i(x) <= s`, when phase one ran to
    /// completion without finding an interior point.
    pub phase_one_value: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Newton-step cap per phase.
    pub max_newton_steps: usize,
    /// Barrier stops once `m / t <= gap_tol * max(1, |f0|)`.
    pub gap_tol: f64,
    pub mu: f64,
    /// Warm start; used when strictly inside the box.
    pub start: Option<Vec<f64>>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_newton_steps: 200,
            gap_tol: 1e-10,
            mu: 20.0,
            start: None,
        }
    }
}

/// Barrier state shared by both phases: minimize `t * obj(y) + barrier(y)`.
struct Barrier<'a> {
    n: usize,
    objective: Objective<'a>,
    constraints: Vec<Shifted<'a>>,
    lower: Vec<Option<f64>>,
    upper: Vec<Option<f64>>,
}

enum Objective<'a> {
    /// `scale * f(x)`
    Scaled(&'a ConvexFn, f64),
    /// Phase one: the slack variable at index `n - 1`.
    Slack,
}

/// `f(x) - slack` (phase one) or `f(x)`.
struct Shifted<'a> {
    f: &'a ConvexFn,
    slack: Option<usize>,
}

impl Shifted<'_> {
    fn value(&self, y: &[f64]) -> Option<f64> {
        Some(self.f.value(y)? - self.slack.map_or(0.0, |s| y[s]))
    }
}

impl Barrier<'_> {
    fn objective(&self, y: &[f64]) -> Option<f64> {
        match self.objective {
            Objective::Scaled(f, s) => f.value(y).map(|v| s * v),
            Objective::Slack => Some(y[self.n - 1]),
        }
    }

    fn barrier_count(&self) -> usize {
        self.constraints.len()
            + self.lower.iter().filter(|b| b.is_some()).count()
            + self.upper.iter().filter(|b| b.is_some()).count()
    }

    /// `t * obj + barrier`, or `None` outside the strict interior.
    fn phi(&self, y: &[f64], t: f64) -> Option<f64> {
        let mut v = t * self.objective(y)?;
        for c in &self.constraints {
            let f = c.value(y)?;
            if f >= 0.0 {
                return None;
            }
            v -= (-f).ln();
        }
        for (i, (lo, hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if let Some(l) = lo {
                let d = y[i] - l;
                if d <= 0.0 {
                    return None;
                }
                v -= d.ln();
            }
            if let Some(u) = hi {
                let d = u - y[i];
                if d <= 0.0 {
                    return None;
                }
                v -= d.ln();
            }
        }
        v.is_finite().then_some(v)
    }

    fn grad_hess(&self, y: &[f64], t: f64, scratch: &mut Scratch) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.n;
        let mut g = DVector::zeros(n);
        let mut h = DMatrix::zeros(n, n);
        match self.objective {
            Objective::Scaled(f, s) => f.accumulate(y, t * s, g.as_mut_slice(), t * s, Some(&mut h)),
            Objective::Slack => g[n - 1] += t,
        }
        for c in &self.constraints {
            let f = c.value(y).expect("interior point");
            let inv = 1.0 / (-f);
            // sparse gradient of the constraint
            scratch.clear();
            c.f.accumulate(y, 1.0, &mut scratch.dense, 0.0, None);
            if let Some(s) = c.slack {
                scratch.dense[s] -= 1.0;
            }
            scratch.collect(c.f, c.slack);
            for &(a, ga) in &scratch.sparse {
                g[a] += inv * ga;
                for &(b, gb) in &scratch.sparse {
                    h[(a, b)] += inv * inv * ga * gb;
                }
            }
            c.f.accumulate(y, 0.0, &mut scratch.dense, inv, Some(&mut h));
        }
        for i in 0..n {
            if let Some(l) = self.lower[i] {
                let d = y[i] - l;
                g[i] -= 1.0 / d;
                h[(i, i)] += 1.0 / (d * d);
            }
            if let Some(u) = self.upper[i] {
                let d = u - y[i];
                g[i] += 1.0 / d;
                h[(i, i)] += 1.0 / (d * d);
            }
        }
        (g, h)
    }
}

struct Scratch {
    dense: Vec<f64>,
    seen: Vec<bool>,
    sparse: Vec<(usize, f64)>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self {
            dense: vec![0.0; n],
            seen: vec![false; n],
            sparse: Vec::new(),
        }
    }

    fn clear(&mut self) {
        for &(i, _) in &self.sparse {
            self.dense[i] = 0.0;
            self.seen[i] = false;
        }
        self.sparse.clear();
    }

    fn collect(&mut self, f: &ConvexFn, slack: Option<usize>) {
        for v in f.vars().chain(slack) {
            if !self.seen[v] {
                self.seen[v] = true;
                self.sparse.push((v, 0.0));
            }
        }
        for e in &mut self.sparse {
            e.1 = self.dense[e.0];
        }
    }
}

fn newton_direction(g: &DVector<f64>, h: DMatrix<f64>) -> Option<DVector<f64>> {
    let neg = -g;
    if let Some(ch) = h.clone().cholesky() {
        return Some(ch.solve(&neg));
    }
    let n = h.nrows();
    let scale = (0..n).map(|i| h[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    let mut reg = h;
    for i in 0..n {
        reg[(i, i)] += 1e-12 * scale;
    }
    if let Some(ch) = reg.clone().cholesky() {
        return Some(ch.solve(&neg));
    }
    reg.lu().solve(&neg)
}

enum Centering {
    Centered,
    Stalled,
    Budget,
    /// Early exit requested by the phase-one callback.
    Stopped,
}

/// Damped Newton on `phi(., t)` starting from `y`.
fn center(
    b: &Barrier<'_>,
    y: &mut Vec<f64>,
    t: f64,
    steps: &mut usize,
    cap: usize,
    scratch: &mut Scratch,
    stop: &dyn Fn(&[f64]) -> bool,
) -> Centering {
    let mut polish = 0;
    loop {
        if stop(y) {
            return Centering::Stopped;
        }
        if *steps >= cap {
            return Centering::Budget;
        }
        let (g, h) = b.grad_hess(y, t, scratch);
        let Some(dx) = newton_direction(&g, h) else {
            return Centering::Stalled;
        };
        let decrement = -g.dot(&dx);
        if !(decrement > 0.0) {
            return Centering::Centered;
        }
        // inside the quadratic region full steps drive the gradient to
        // rounding level without relying on function differences, which
        // lose resolution once t is large
        if decrement <= 1e-3 {
            if polish == 8 || decrement <= 1e-24 {
                return Centering::Centered;
            }
            polish += 1;
            let trial: Vec<f64> = y.iter().zip(dx.iter()).map(|(a, d)| a + d).collect();
            if b.phi(&trial, t).is_none() {
                return Centering::Centered;
            }
            *steps += 1;
            *y = trial;
            continue;
        }
        *steps += 1;
        let phi0 = b.phi(y, t).expect("interior");
        let mut s = 1.0;
        let mut trial = y.clone();
        loop {
            for i in 0..y.len() {
                trial[i] = y[i] + s * dx[i];
            }
            if let Some(p) = b.phi(&trial, t) {
                if p <= phi0 - 0.25 * s * decrement {
                    break;
                }
            }
            s *= 0.5;
            if s < 1e-16 {
                return Centering::Stalled;
            }
        }
        if trial == *y {
            return Centering::Stalled;
        }
        std::mem::swap(y, &mut trial);
    }
}

fn interior_start(p: &SeparableConvexProblem, start: Option<&[f64]>) -> Vec<f64> {
    (0..p.n)
        .map(|i| {
            let hint = start.map(|s| s[i]);
            match (p.lower[i], p.upper[i]) {
                (Some(l), Some(u)) => match hint {
                    Some(x) if x > l && x < u => x,
                    _ => {
                        let w = u - l;
                        hint.map_or(l + 0.5 * w, |x| x.clamp(l + 1e-3 * w, u - 1e-3 * w))
                    }
                },
                (Some(l), None) => match hint {
                    Some(x) if x > l => x,
                    _ => l + l.abs().max(1.0),
                },
                (None, Some(u)) => match hint {
                    Some(x) if x < u => x,
                    _ => u - u.abs().max(1.0),
                },
                (None, None) => hint.unwrap_or(0.0),
            }
        })
        .collect()
}

fn max_constraint(p: &SeparableConvexProblem, x: &[f64]) -> Option<f64> {
    let mut m = f64::NEG_INFINITY;
    for c in &p.constraints {
        m = m.max(c.value(x)?);
    }
    Some(m)
}

/// Solves `problem` with a two-phase log-barrier method.
pub fn solve_convex(problem: &SeparableConvexProblem, options: &SolveOptions) -> Result<SolveReport, ProblemError> {
    problem.validate()?;
    let n = problem.n;
    let mut x = interior_start(problem, options.start.as_deref());
    let mut steps_total = 0;
    let mut scratch = Scratch::new(n + 1);
    let infeasible = |x: Vec<f64>, steps: usize, phase: Option<f64>, status: SolveStatus| {
        let viol = max_constraint(problem, &x).unwrap_or(f64::INFINITY).max(0.0);
        SolveReport {
            objective: problem.objective.value(&x).unwrap_or(f64::NAN),
            x,
            kkt_residual: f64::INFINITY,
            iterations: steps,
            status,
            max_violation: viol,
            phase_one_value: phase,
        }
    };

    // phase one
    let strictly_feasible =
        |x: &[f64]| max_constraint(problem, x).is_some_and(|m| m < 0.0) && problem.objective.value(x).is_some();
    if !strictly_feasible(&x) {
        let m0 = max_constraint(problem, &x).unwrap_or(f64::INFINITY);
        if !m0.is_finite() {
            // interior_start keeps hyperbolic variables positive, so this only
            // happens for log terms evaluated outside their domain
            return Ok(infeasible(x, 0, None, SolveStatus::Infeasible));
        }
        let mut y = x.clone();
        y.push(m0 + m0.abs().max(1.0));
        let mut lower = problem.lower.clone();
        lower.push(None);
        let mut upper = problem.upper.clone();
        upper.push(None);
        let barrier = Barrier {
            n: n + 1,
            objective: Objective::Slack,
            constraints: problem
                .constraints
                .iter()
                .map(|f| Shifted { f, slack: Some(n) })
                .collect(),
            lower,
            upper,
        };
        let m = barrier.barrier_count() as f64;
        let stop = |y: &[f64]| strictly_feasible(&y[..n]);
        let mut t = 1.0 / y[n].abs().max(1e-12);
        let mut steps = 0;
        let mut found = false;
        loop {
            match center(
                &barrier,
                &mut y,
                t,
                &mut steps,
                options.max_newton_steps,
                &mut scratch,
                &stop,
            ) {
                Centering::Stopped => {
                    found = true;
                    break;
                }
                Centering::Budget => {
                    y.truncate(n);
                    return Ok(infeasible(y, steps, None, SolveStatus::MaxIter));
                }
                Centering::Centered | Centering::Stalled => {}
            }
            let s = y[n];
            // duality bound: the phase-one optimum is at least s - m/t
            if s - m / t > 0.0 || m / t <= options.gap_tol * s.abs().max(1.0) {
                break;
            }
            t *= options.mu;
        }
        steps_total += steps;
        if !found {
            let s = y[n];
            y.truncate(n);
            return Ok(infeasible(y, steps_total, Some(s), SolveStatus::Infeasible));
        }
        y.truncate(n);
        x = y;
    }

    // phase two
    let sign = match problem.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let barrier = Barrier {
        n,
        objective: Objective::Scaled(&problem.objective, sign),
        constraints: problem.constraints.iter().map(|f| Shifted { f, slack: None }).collect(),
        lower: problem.lower.clone(),
        upper: problem.upper.clone(),
    };
    let m = barrier.barrier_count() as f64;
    let f0 = barrier.objective(&x).expect("objective domain checked");
    let mut t = if m > 0.0 { m / f0.abs().max(1.0) } else { 1.0 };
    let mut steps = 0;
    let never = |_: &[f64]| false;
    let status = loop {
        let outcome = center(
            &barrier,
            &mut x,
            t,
            &mut steps,
            options.max_newton_steps,
            &mut scratch,
            &never,
        );
        if matches!(outcome, Centering::Budget) {
            break SolveStatus::MaxIter;
        }
        let f = barrier.objective(&x).expect("interior");
        if f < -1e12 * f0.abs().max(1.0) || x.iter().any(|v| v.abs() > 1e15) {
            break SolveStatus::Unbounded;
        }
        if m == 0.0 || m / t <= options.gap_tol * f.abs().max(1.0) {
            break SolveStatus::Optimal;
        }
        t *= options.mu;
    };
    steps_total += steps;

    let kkt = kkt_residual(&barrier, &x, t);
    Ok(SolveReport {
        objective: problem.objective.value(&x).unwrap_or(f64::NAN),
        max_violation: max_constraint(problem, &x).map_or(f64::INFINITY, |v| v.max(0.0)),
        x,
        kkt_residual: kkt,
        iterations: steps_total,
        status,
        phase_one_value: None,
    })
}

/// Relative KKT residual: the larger of Lagrangian stationarity and
/// complementarity, each scaled by the objective. Multipliers come either
/// from the barrier (`1 / (t * slack)`) or from a nonnegative least-squares
/// fit on the near-active set; the smaller residual is reported.
fn kkt_residual(b: &Barrier<'_>, x: &[f64], t: f64) -> f64 {
    let n = b.n;
    let mut obj_grad = vec![0.0; n];
    if let Objective::Scaled(f, s) = b.objective {
        f.accumulate(x, s, &mut obj_grad, 0.0, None);
    }
    let scale = obj_grad.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let fscale = b.objective(x).unwrap_or(0.0).abs().max(1.0);

    // (gradient, value) of every inequality, box bounds included
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for c in &b.constraints {
        let mut g = vec![0.0; n];
        c.f.accumulate(x, 1.0, &mut g, 0.0, None);
        rows.push((g, c.value(x).unwrap_or(0.0)));
    }
    for i in 0..n {
        if let Some(l) = b.lower[i] {
            let mut g = vec![0.0; n];
            g[i] = -1.0;
            rows.push((g, l - x[i]));
        }
        if let Some(u) = b.upper[i] {
            let mut g = vec![0.0; n];
            g[i] = 1.0;
            rows.push((g, x[i] - u));
        }
    }

    let residual = |mult: &[f64]| {
        let mut r = obj_grad.clone();
        let mut comp = 0.0f64;
        for ((g, f), &l) in rows.iter().zip(mult) {
            if l != 0.0 {
                for (ri, gi) in r.iter_mut().zip(g) {
                    *ri += l * gi;
                }
                comp = comp.max(l * f.abs());
            }
        }
        let stat = r.iter().fold(0.0f64, |a, v| a.max(v.abs())) / scale;
        stat.max(comp / fscale)
    };

    let barrier_mult: Vec<f64> = rows
        .iter()
        .map(|(_, f)| 1.0 / (t * (-f).max(f64::MIN_POSITIVE)))
        .collect();
    let barrier_res = residual(&barrier_mult);

    let active: Vec<usize> = (0..rows.len())
        .filter(|&i| {
            let gnorm = rows[i].0.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            barrier_mult[i] * gnorm > 1e-8 * scale
        })
        .collect();
    if active.is_empty() {
        return barrier_res;
    }
    let mut active = active;
    let rhs = -DVector::from_column_slice(&obj_grad);
    let mut ls_res = f64::INFINITY;
    while !active.is_empty() {
        let j = DMatrix::from_fn(n, active.len(), |r, c| rows[active[c]].0[r]);
        let Ok(l) = j.svd(true, true).solve(&rhs, 1e-14) else {
            break;
        };
        let (worst, min) = l.argmin();
        if min < 0.0 {
            active.remove(worst);
            continue;
        }
        let mut mult = vec![0.0; rows.len()];
        for (c, &i) in active.iter().enumerate() {
            mult[i] = l[c];
        }
        ls_res = residual(&mult);
        break;
    }
    barrier_res.min(ls_res)
}
