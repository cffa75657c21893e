//! Numerical engine: tangent bounds, barrier solver, simplex and
//! water-filling.

pub mod bounds;
pub mod convex;
pub mod lp;
pub mod waterfill;

pub use bounds::{
    bound_inv_zt, bound_ln_inv_xy, bound_ln_inv_xy_over_t, bound_ln_x_over_y, AnchorError, BoundKind, MinorantCoeffs,
};
pub use convex::{
    solve_convex, ConvexFn, ProblemError, Sense, SeparableConvexProblem, SolveOptions, SolveReport, SolveStatus, Term,
};
pub use lp::{solve_lp, LinearProgram, LpReport, LpStatus, RowKind};
pub use waterfill::{waterfill, Waterfill, WaterfillUser};
