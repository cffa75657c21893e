//! Closed-form water-filling for the per-cell Dinkelbach subproblem
//! `max sum ln(a_k + b_k p_k / s2) - t * drain * sum n_k p_k`
//! subject to `sum n_k p_k <= budget`, `p >= 0`.

/// One user of the water-filling problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaterfillUser {
    /// Offset `a_k >= 1` inside the logarithm.
    pub offset: f64,
    /// Large-scale gain `b_k`.
    pub gain: f64,
    /// Beam norm `n_k = ‖f̄_k‖^2`.
    pub norm_sq: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Waterfill {
    pub powers: Vec<f64>,
    /// Budget multiplier; zero when the budget is slack.
    pub lambda: f64,
}

fn level(users: &[WaterfillUser], noise: f64, price: f64) -> Vec<f64> {
    users
        .iter()
        .map(|u| {
            if u.gain <= 0.0 {
                return 0.0;
            }
            (1.0 / (u.norm_sq * price) - u.offset * noise / u.gain).max(0.0)
        })
        .collect()
}

fn spent(users: &[WaterfillUser], p: &[f64]) -> f64 {
    users.iter().zip(p).map(|(u, p)| u.norm_sq * p).sum()
}

/// Solves the water-filling problem at Dinkelbach parameter `t >= 0`.
pub fn waterfill(t: f64, drain: f64, users: &[WaterfillUser], noise: f64, budget: f64) -> Waterfill {
    assert!(t >= 0.0 && drain > 0.0 && noise > 0.0);
    if budget <= 0.0 {
        return Waterfill {
            powers: vec![0.0; users.len()],
            lambda: f64::INFINITY,
        };
    }
    let base = t * drain;
    if base > 0.0 {
        let p = level(users, noise, base);
        if spent(users, &p) <= budget {
            return Waterfill { powers: p, lambda: 0.0 };
        }
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while spent(users, &level(users, noise, base + hi)) > budget {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        let s = spent(users, &level(users, noise, base + mid));
        if (s - budget).abs() <= 1e-12 * budget || hi - lo <= 1e-15 * hi {
            if s <= budget {
                hi = mid;
            }
            break;
        }
        if s > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // `hi` always satisfies the budget
    Waterfill {
        powers: level(users, noise, base + hi),
        lambda: hi,
    }
}
