//! Energy-efficiency maximizing power allocation for multi-cell massive-MIMO
//! downlinks under per-user QoS constraints.
//!
//! The crate is organised bottom-up:
//!
//! * [`network`] draws cell geometries and correlated Rayleigh channels,
//! * [`beamforming`] builds ZF / RZF beam directions (whole-cell or per
//!   time-fraction group) and the scalar coefficients the optimizers use,
//! * [`sca`] holds the tangent-plane bounds, a log-barrier interior-point
//!   solver, a simplex LP solver and the water-filling routine,
//! * [`algorithms`] runs the three pipelines: path-following SCA over direct
//!   powers, per-cell Dinkelbach water-filling (CWZF), and path-following over
//!   inverse powers and time fractions,
//! * [`sweep`] runs Monte-Carlo sweeps and writes CSV output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algorithms;
pub mod beamforming;
pub mod config;
pub mod network;
pub mod sca;
pub mod sweep;

pub type Complex64 = nalgebra::Complex<f64>;

pub use algorithms::{EeReport, Pipeline, RunStatus};
pub use beamforming::{BeamMode, PrecoderSet};
pub use config::NetworkConfig;
pub use network::{ChannelRealization, Geometry};
pub use sweep::{Scenario, SweepResult, SweepSpec};
