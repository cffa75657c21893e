//! Dense two-phase simplex for small linear programs over `x >= 0`.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpRow {
    pub coefs: Vec<(usize, f64)>,
    pub kind: RowKind,
    pub rhs: f64,
}

/// `min c^T x` subject to `rows`, `x >= 0`.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    pub n: usize,
    pub cost: Vec<f64>,
    pub rows: Vec<LpRow>,
}

impl LinearProgram {
    pub fn new(cost: Vec<f64>) -> Self {
        Self {
            n: cost.len(),
            cost,
            rows: Vec::new(),
        }
    }

    pub fn row(&mut self, coefs: Vec<(usize, f64)>, kind: RowKind, rhs: f64) {
        self.rows.push(LpRow { coefs, kind, rhs });
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIter,
}

#[derive(Debug, Clone)]
pub struct LpReport {
    pub x: Vec<f64>,
    pub objective: f64,
    /// One multiplier per row; `b^T y` equals the optimum at optimality.
    pub duals: Vec<f64>,
    pub iterations: usize,
    pub status: LpStatus,
}

const TOL: f64 = 1e-11;

struct Tableau {
    m: usize,
    cols: usize,
    /// `m` rows of `cols + 1` entries (last is the right-hand side).
    a: Vec<Vec<f64>>,
    basis: Vec<usize>,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let piv = self.a[r][c];
        for v in self.a[r].iter_mut() {
            *v /= piv;
        }
        let pivot_row = self.a[r].clone();
        for (i, row) in self.a.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut r = cost.to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (j, rj) in r.iter_mut().enumerate() {
                    *rj -= cb * self.a[i][j];
                }
            }
        }
        r
    }

    /// Minimizes `cost` over the current basis; `allowed[j]` gates entering
    /// columns.
    fn optimize(&mut self, cost: &[f64], allowed: &[bool], iters: &mut usize, cap: usize) -> LpStatus {
        let mut degenerate_run = 0;
        loop {
            if *iters >= cap {
                return LpStatus::MaxIter;
            }
            let r = self.reduced_costs(cost);
            let bland = degenerate_run > 50;
            let mut enter = None;
            let mut best = -1e-9;
            for j in 0..self.cols {
                if !allowed[j] || self.basis.contains(&j) {
                    continue;
                }
                if r[j] < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = r[j];
                }
            }
            let Some(c) = enter else {
                return LpStatus::Optimal;
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let aic = self.a[i][c];
                if aic > TOL {
                    let ratio = self.a[i][self.cols] / aic;
                    let better = match leave {
                        None => true,
                        Some((l, best)) => {
                            ratio < best - 1e-12 || (ratio <= best + 1e-12 && self.basis[i] < self.basis[l])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r_idx, ratio)) = leave else {
                return LpStatus::Unbounded;
            };
            degenerate_run = if ratio.abs() < 1e-14 { degenerate_run + 1 } else { 0 };
            self.pivot(r_idx, c);
            *iters += 1;
        }
    }
}

/// Solves `lp` by the two-phase simplex method.
pub fn solve_lp(lp: &LinearProgram) -> LpReport {
    let n = lp.n;
    let m = lp.rows.len();
    // scale each row by its largest coefficient
    let scales: Vec<f64> = lp
        .rows
        .iter()
        .map(|r| {
            let s = r.coefs.iter().fold(0.0f64, |a, &(_, v)| a.max(v.abs()));
            if s > 0.0 {
                s
            } else {
                1.0
            }
        })
        .collect();
    let slack_count = lp.rows.iter().filter(|r| r.kind != RowKind::Eq).count();
    let slack0 = n;
    let art0 = n + slack_count;
    let cols = art0 + m;
    let mut a = vec![vec![0.0; cols + 1]; m];
    let mut signs = vec![1.0; m];
    let mut s = slack0;
    for (i, row) in lp.rows.iter().enumerate() {
        for &(j, v) in &row.coefs {
            a[i][j] += v / scales[i];
        }
        a[i][cols] = row.rhs / scales[i];
        match row.kind {
            RowKind::Le => {
                a[i][s] = 1.0;
                s += 1;
            }
            RowKind::Ge => {
                a[i][s] = -1.0;
                s += 1;
            }
            RowKind::Eq => {}
        }
        if a[i][cols] < 0.0 {
            signs[i] = -1.0;
            for v in a[i].iter_mut() {
                *v = -*v;
            }
        }
        a[i][art0 + i] = 1.0;
    }
    let mut t = Tableau {
        m,
        cols,
        a,
        basis: (art0..art0 + m).collect(),
    };
    let cap = 50 * (cols + m).max(10);
    let mut iters = 0;

    // phase one
    let mut c1 = vec![0.0; cols];
    for c in c1.iter_mut().skip(art0) {
        *c = 1.0;
    }
    let all = vec![true; cols];
    let st = t.optimize(&c1, &all, &mut iters, cap);
    let infeas: f64 = t
        .basis
        .iter()
        .enumerate()
        .filter(|(_, &b)| b >= art0)
        .map(|(i, _)| t.a[i][cols])
        .sum();
    let fail = |status, iterations| LpReport {
        x: vec![0.0; n],
        objective: f64::NAN,
        duals: vec![0.0; m],
        iterations,
        status,
    };
    if st == LpStatus::MaxIter {
        return fail(LpStatus::MaxIter, iters);
    }
    if infeas > 1e-9 {
        return fail(LpStatus::Infeasible, iters);
    }
    // drive zero-level artificials out of the basis where possible
    for i in 0..m {
        if t.basis[i] >= art0 {
            if let Some(j) = (0..art0).find(|&j| t.a[i][j].abs() > 1e-9) {
                t.pivot(i, j);
            }
        }
    }

    // phase two
    let mut c2 = vec![0.0; cols];
    c2[..n].copy_from_slice(&lp.cost);
    let mut allowed = vec![true; cols];
    for v in allowed.iter_mut().skip(art0) {
        *v = false;
    }
    let st = t.optimize(&c2, &allowed, &mut iters, cap);
    if st != LpStatus::Optimal {
        return fail(st, iters);
    }
    let mut x = vec![0.0; n];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] = t.a[i][cols].max(0.0);
        }
    }
    // y' = c_B B^-1, read from the artificial columns (initially the identity)
    let duals = (0..m)
        .map(|r| {
            let yr: f64 = t.basis.iter().enumerate().map(|(i, &b)| c2[b] * t.a[i][art0 + r]).sum();
            yr * signs[r] / scales[r]
        })
        .collect();
    let objective = lp.cost.iter().zip(&x).map(|(c, v)| c * v).sum();
    LpReport {
        x,
        objective,
        duals,
        iterations: iters,
        status: LpStatus::Optimal,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maximize_single_variable() {
        // max x s.t. x <= 1
        let mut lp = LinearProgram::new(vec![-1.0]);
        lp.row(vec![(0, 1.0)], RowKind::Le, 1.0);
        let r = solve_lp(&lp);
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.x[0] - 1.0).abs() < 1e-12);
        assert!((r.duals[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_pair() {
        let mut lp = LinearProgram::new(vec![1.0]);
        lp.row(vec![(0, 1.0)], RowKind::Le, 0.0);
        lp.row(vec![(0, 1.0)], RowKind::Ge, 1.0);
        assert_eq!(solve_lp(&lp).status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_ray() {
        let mut lp = LinearProgram::new(vec![-1.0, 0.0]);
        lp.row(vec![(0, 1.0), (1, -1.0)], RowKind::Le, 1.0);
        assert_eq!(solve_lp(&lp).status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_and_negative_rhs() {
        // min x + 2y s.t. x + y = 3, x - y >= -1  => x = 3, y = 0
        let mut lp = LinearProgram::new(vec![1.0, 2.0]);
        lp.row(vec![(0, 1.0), (1, 1.0)], RowKind::Eq, 3.0);
        lp.row(vec![(0, 1.0), (1, -1.0)], RowKind::Ge, -1.0);
        let r = solve_lp(&lp);
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.objective - 3.0).abs() < 1e-12);
        let dual_obj: f64 = r.duals.iter().zip([3.0, -1.0]).map(|(y, b)| y * b).sum();
        assert!((dual_obj - r.objective).abs() < 1e-10);
    }
}
