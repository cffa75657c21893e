//! Tangent-plane bounds of convex functions.
//!
//! Each constructor linearizes a convex function at an anchor point; the
//! first-order expansion is a global under-estimator that touches the
//! function at the anchor.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("bound anchor must be strictly positive (got {0:?})")]
pub struct AnchorError(pub Vec<f64>);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    /// `ln(1 + 1/(xy)) / t >= a - b x - c y - d t`
    LnInvXyOverT,
    /// `ln(1 + 1/(xy)) >= a - b x - c y`
    LnInvXy,
    /// `ln(1 + x/y) >= a - b/x - c y`
    LnXOverY,
    /// `1/(z t) >= a - b z - c t`
    InvZt,
}

/// Coefficients of a tangent minorant together with its anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct MinorantCoeffs {
    pub kind: BoundKind,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Only present for [`BoundKind::LnInvXyOverT`].
    pub d: Option<f64>,
    /// `(x̄, ȳ)` or `(x̄, ȳ, t̄)`; `(z̄, t̄)` for [`BoundKind::InvZt`].
    pub anchor: Vec<f64>,
}

fn check(anchor: &[f64]) -> Result<(), AnchorError> {
    if anchor.iter().all(|v| *v > 0.0 && v.is_finite()) {
        Ok(())
    } else {
        Err(AnchorError(anchor.to_vec()))
    }
}

/// `ln(1 + 1/w)` for `w = xy`, accurate for large `w`.
fn ln1p_inv(w: f64) -> f64 {
    (1.0 / w).ln_1p()
}

pub fn bound_ln_inv_xy_over_t(x: f64, y: f64, t: f64) -> Result<MinorantCoeffs, AnchorError> {
    check(&[x, y, t])?;
    let w = x * y;
    let f = ln1p_inv(w) / t;
    let s = 1.0 / ((w + 1.0) * t);
    Ok(MinorantCoeffs {
        kind: BoundKind::LnInvXyOverT,
        a: 2.0 * f + 2.0 * s,
        b: s / x,
        c: s / y,
        d: Some(f / t),
        anchor: vec![x, y, t],
    })
}

pub fn bound_ln_inv_xy(x: f64, y: f64) -> Result<MinorantCoeffs, AnchorError> {
    check(&[x, y])?;
    let w = x * y;
    let s = 1.0 / (w + 1.0);
    Ok(MinorantCoeffs {
        kind: BoundKind::LnInvXy,
        a: ln1p_inv(w) + 2.0 * s,
        b: s / x,
        c: s / y,
        d: None,
        anchor: vec![x, y],
    })
}

pub fn bound_ln_x_over_y(x: f64, y: f64) -> Result<MinorantCoeffs, AnchorError> {
    check(&[x, y])?;
    let sum = x + y;
    Ok(MinorantCoeffs {
        kind: BoundKind::LnXOverY,
        a: (x / y).ln_1p() + 2.0 * x / sum,
        b: x * x / sum,
        c: x / (sum * y),
        d: None,
        anchor: vec![x, y],
    })
}

/// Lower bound on `1/(z t)`; callers negate it to majorize `-1/(z t)`.
pub fn bound_inv_zt(z: f64, t: f64) -> Result<MinorantCoeffs, AnchorError> {
    check(&[z, t])?;
    let f = 1.0 / (z * t);
    Ok(MinorantCoeffs {
        kind: BoundKind::InvZt,
        a: 3.0 * f,
        b: f / z,
        c: f / t,
        d: None,
        anchor: vec![z, t],
    })
}

impl MinorantCoeffs {
    /// Value of the bound at `point` (`t` ignored by the two-argument kinds).
    pub fn evaluate(&self, point: &[f64]) -> f64 {
        let (x, y) = (point[0], point[1]);
        match self.kind {
            BoundKind::LnInvXyOverT => self.a - self.b * x - self.c * y - self.d.unwrap_or(0.0) * point[2],
            BoundKind::LnInvXy | BoundKind::InvZt => self.a - self.b * x - self.c * y,
            BoundKind::LnXOverY => self.a - self.b / x - self.c * y,
        }
    }

    /// Value of the bounded function at `point`.
    pub fn exact(&self, point: &[f64]) -> f64 {
        let (x, y) = (point[0], point[1]);
        match self.kind {
            BoundKind::LnInvXyOverT => ln1p_inv(x * y) / point[2],
            BoundKind::LnInvXy => ln1p_inv(x * y),
            BoundKind::LnXOverY => (x / y).ln_1p(),
            BoundKind::InvZt => 1.0 / (x * y),
        }
    }

    pub fn coefficients_positive(&self) -> bool {
        self.a > 0.0 && self.b > 0.0 && self.c > 0.0 && self.d.is_none_or(|d| d > 0.0)
    }
}
