//! Network and physical-layer parameters.
//!
//! Defaults follow the large-scale fading setup used throughout the
//! experiments: 2 GHz carrier, 10 MHz bandwidth, 46 dBm budget per BS,
//! an 8x8 planar array and a 1 km hexagonal cell.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Converts a power in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

/// Converts a spectral efficiency in bps/Hz to nats/s/Hz.
pub fn bps_to_nats(bps: f64) -> f64 {
    bps * std::f64::consts::LN_2
}

/// Converts nats/s/Hz (or nats/Joule/Hz) to the corresponding bit unit.
pub fn nats_to_bits(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cell_count must be 1, 2 or 3 (got {0})")]
    CellCount(usize),
    #[error("near_count ({near}) + far_count ({far}) must equal users_per_cell ({users})")]
    UserSplit { near: usize, far: usize, users: usize },
    #[error("users_per_cell must be at least 1")]
    NoUsers,
    #[error("correlation must lie strictly inside (0, 1) (got {0})")]
    Correlation(f64),
    #[error("`{field}` must be strictly positive (got {value})")]
    NonPositive { field: &'static str, value: f64 },
    #[error("`{field}` must be nonnegative (got {value})")]
    Negative { field: &'static str, value: f64 },
    #[error("cwzf_threshold_bps ({cwzf}) must not be below qos_threshold_bps ({qos})")]
    CwzfThreshold { cwzf: f64, qos: f64 },
    #[error("ring `{field}` must satisfy 0 < lo <= hi < 1 (got [{lo}, {hi}])")]
    Ring { field: &'static str, lo: f64, hi: f64 },
    #[error("drain_reciprocal must exceed 1 (got {0})")]
    DrainReciprocal(f64),
}

/// Scenario geometry, Table-I physics and QoS thresholds for one network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub cell_count: usize,
    pub antenna_rows: usize,
    pub antenna_cols: usize,
    pub users_per_cell: usize,
    pub near_count: usize,
    pub far_count: usize,
    pub cell_radius_km: f64,
    pub correlation: f64,
    pub carrier_ghz: f64,
    pub bandwidth_hz: f64,
    pub pathloss_intercept_db: f64,
    pub pathloss_slope_db: f64,
    pub shadowing_std_db: f64,
    pub noise_density_dbm_hz: f64,
    pub noise_figure_db: f64,
    /// Reciprocal of the amplifier drain efficiency.
    pub drain_reciprocal: f64,
    /// Circuit power per antenna (W).
    pub antenna_power_w: f64,
    /// Non-transmission power per BS (W).
    pub static_power_w: f64,
    /// Transmit power budget per BS (W).
    pub max_power_w: f64,
    pub qos_threshold_bps: f64,
    pub cwzf_threshold_bps: f64,
    /// Near users are drawn at `U(lo, hi) * cell_radius` from their BS.
    pub near_ring: (f64, f64),
    /// Far users are drawn at `U(lo, hi)` times the distance to the
    /// hexagon boundary along their bearing.
    pub far_ring: (f64, f64),
    pub rng_seed: u64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            cell_count: 1,
            antenna_rows: 8,
            antenna_cols: 8,
            users_per_cell: 20,
            near_count: 10,
            far_count: 10,
            cell_radius_km: 1.0,
            correlation: 0.9,
            carrier_ghz: 2.0,
            bandwidth_hz: 10e6,
            pathloss_intercept_db: 128.1,
            pathloss_slope_db: 37.6,
            shadowing_std_db: 8.0,
            noise_density_dbm_hz: -174.0,
            noise_figure_db: 9.0,
            drain_reciprocal: 1.0 / 0.388,
            antenna_power_w: 0.189,
            static_power_w: dbm_to_watts(40.0),
            max_power_w: dbm_to_watts(46.0),
            qos_threshold_bps: 0.4,
            cwzf_threshold_bps: 0.6,
            near_ring: (0.1, 0.4),
            far_ring: (0.8, 0.95),
            rng_seed: 1,
        }
    }
}

impl NetworkConfig {
    /// Sets the per-cell user count and splits it evenly into near and far
    /// users (the extra user of an odd count is a far user).
    pub fn with_users(mut self, users: usize) -> Self {
        self.users_per_cell = users;
        self.near_count = users / 2;
        self.far_count = users - users / 2;
        self
    }

    /// Sets the QoS threshold and the matching default CWZF threshold.
    pub fn with_threshold(mut self, qos_bps: f64) -> Self {
        self.qos_threshold_bps = qos_bps;
        self.cwzf_threshold_bps = default_cwzf_threshold(qos_bps);
        self
    }

    pub fn antennas(&self) -> usize {
        self.antenna_rows * self.antenna_cols
    }

    /// Thermal noise power over the bandwidth, including the noise figure (W).
    pub fn noise_power_w(&self) -> f64 {
        dbm_to_watts(self.noise_density_dbm_hz + self.noise_figure_db) * self.bandwidth_hz
    }

    /// Circuit plus static power of one BS, `N P_a + P_c` (W).
    pub fn circuit_power_w(&self) -> f64 {
        self.antennas() as f64 * self.antenna_power_w + self.static_power_w
    }

    pub fn qos_threshold_nats(&self) -> f64 {
        bps_to_nats(self.qos_threshold_bps)
    }

    pub fn cwzf_threshold_nats(&self) -> f64 {
        bps_to_nats(self.cwzf_threshold_bps)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(1..=3).contains(&self.cell_count) {
            return Err(ConfigError::CellCount(self.cell_count));
        }
        if self.users_per_cell == 0 {
            return Err(ConfigError::NoUsers);
        }
        if self.near_count + self.far_count != self.users_per_cell {
            return Err(ConfigError::UserSplit {
                near: self.near_count,
                far: self.far_count,
                users: self.users_per_cell,
            });
        }
        if !(self.correlation > 0.0 && self.correlation < 1.0) {
            return Err(ConfigError::Correlation(self.correlation));
        }
        let positive = [
            ("antenna_rows", self.antenna_rows as f64),
            ("antenna_cols", self.antenna_cols as f64),
            ("cell_radius_km", self.cell_radius_km),
            ("carrier_ghz", self.carrier_ghz),
            ("bandwidth_hz", self.bandwidth_hz),
            ("antenna_power_w", self.antenna_power_w),
            ("static_power_w", self.static_power_w),
            ("max_power_w", self.max_power_w),
        ];
        for (field, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(ConfigError::NonPositive { field, value });
            }
        }
        let nonneg = [
            ("shadowing_std_db", self.shadowing_std_db),
            ("qos_threshold_bps", self.qos_threshold_bps),
            ("cwzf_threshold_bps", self.cwzf_threshold_bps),
        ];
        for (field, value) in nonneg {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(ConfigError::Negative { field, value });
            }
        }
        if !(self.drain_reciprocal > 1.0) {
            return Err(ConfigError::DrainReciprocal(self.drain_reciprocal));
        }
        if self.cwzf_threshold_bps < self.qos_threshold_bps {
            return Err(ConfigError::CwzfThreshold {
                cwzf: self.cwzf_threshold_bps,
                qos: self.qos_threshold_bps,
            });
        }
        for (field, (lo, hi)) in [("near_ring", self.near_ring), ("far_ring", self.far_ring)] {
            if !(lo > 0.0 && lo <= hi && hi < 1.0) {
                return Err(ConfigError::Ring { field, lo, hi });
            }
        }
        Ok(())
    }
}

/// CWZF compensation threshold used when none is given: +0.2 bps/Hz for
/// thresholds up to 0.4 bps/Hz, +0.4 bps/Hz above.
pub fn default_cwzf_threshold(qos_bps: f64) -> f64 {
    if qos_bps <= 0.4 + 1e-12 {
        qos_bps + 0.2
    } else {
        qos_bps + 0.4
    }
}
