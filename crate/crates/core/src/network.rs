//! Cell layout, large-scale fading and spatially correlated small-scale
//! channels.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_3, FRAC_PI_6, PI};
use thiserror::Error;

use crate::config::{ConfigError, NetworkConfig};
use crate::Complex64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("distance must be strictly positive (got {0} km)")]
    NonPositiveDistance(f64),
    #[error("correlation coefficient must lie in (0, 1) (got {0})")]
    Correlation(f64),
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix is not positive semidefinite (smallest eigenvalue {0:e})")]
    NotPsd(f64),
}

pub type Point = [f64; 2];

/// Base-station and user positions in km.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub cell_radius_km: f64,
    pub bs_positions: Vec<Point>,
    /// `ue_positions[i][k]` is user `k` of cell `i`.
    pub ue_positions: Vec<Vec<Point>>,
    pub near_mask: Vec<Vec<bool>>,
}

impl Geometry {
    pub fn distance_km(&self, bs: usize, cell: usize, user: usize) -> f64 {
        let b = self.bs_positions[bs];
        let u = self.ue_positions[cell][user];
        ((b[0] - u[0]).powi(2) + (b[1] - u[1]).powi(2)).sqrt()
    }

    /// Whether `p` lies inside the (pointy-top) hexagon of cell `cell`.
    pub fn in_cell(&self, cell: usize, p: Point) -> bool {
        let c = self.bs_positions[cell];
        let inradius = self.cell_radius_km * 3f64.sqrt() / 2.0;
        (0..6).all(|m| {
            let psi = m as f64 * FRAC_PI_3;
            (p[0] - c[0]) * psi.cos() + (p[1] - c[1]) * psi.sin() <= inradius * (1.0 + 1e-12)
        })
    }
}

/// Centres of 1, 2 or 3 pointy-top hexagons of circumradius `radius`.
/// Two cells share an edge; three cells meet at a common corner.
pub fn bs_layout(cell_count: usize, radius: f64) -> Vec<Point> {
    let d = 3f64.sqrt() * radius;
    let all = [[0.0, 0.0], [d, 0.0], [d * FRAC_PI_3.cos(), d * FRAC_PI_3.sin()]];
    all[..cell_count.min(3)].to_vec()
}

/// Distance from a hexagon centre to its boundary along bearing `phi`.
fn hex_boundary_distance(radius: f64, phi: f64) -> f64 {
    let inradius = radius * 3f64.sqrt() / 2.0;
    // deviation from the nearest edge normal, in [-30deg, 30deg]
    let dev = (phi + FRAC_PI_6).rem_euclid(FRAC_PI_3) - FRAC_PI_6;
    inradius / dev.cos()
}

/// Places the users of every cell on two jittered rings: near users (the
/// first `near_count` indices) close to the BS, far users near the hexagon
/// boundary. Angular spacing within each ring is uniform.
pub fn place_users<R: Rng + ?Sized>(config: &NetworkConfig, rng: &mut R) -> Geometry {
    let radius = config.cell_radius_km;
    let bs_positions = bs_layout(config.cell_count, radius);
    let mut ue_positions = Vec::with_capacity(config.cell_count);
    let mut near_mask = Vec::with_capacity(config.cell_count);
    for centre in &bs_positions {
        let mut users = Vec::with_capacity(config.users_per_cell);
        let mut mask = Vec::with_capacity(config.users_per_cell);
        for (count, near) in [(config.near_count, true), (config.far_count, false)] {
            if count == 0 {
                continue;
            }
            let spacing = 2.0 * PI / count as f64;
            let offset = rng.random::<f64>() * 2.0 * PI;
            for k in 0..count {
                let jitter = (rng.random::<f64>() - 0.5) * 0.5 * spacing;
                let phi = offset + k as f64 * spacing + jitter;
                let u = rng.random::<f64>();
                let r = if near {
                    let (lo, hi) = config.near_ring;
                    (lo + (hi - lo) * u) * radius
                } else {
                    let (lo, hi) = config.far_ring;
                    (lo + (hi - lo) * u) * hex_boundary_distance(radius, phi)
                };
                users.push([centre[0] + r * phi.cos(), centre[1] + r * phi.sin()]);
                mask.push(near);
            }
        }
        ue_positions.push(users);
        near_mask.push(mask);
    }
    Geometry {
        cell_radius_km: radius,
        bs_positions,
        ue_positions,
        near_mask,
    }
}

/// Linear large-scale gain for a link of `distance_km` with `shadow_db` of
/// shadowing added to the path loss.
pub fn large_scale_gain(distance_km: f64, shadow_db: f64, config: &NetworkConfig) -> Result<f64, ChannelError> {
    if !(distance_km > 0.0) {
        return Err(ChannelError::NonPositiveDistance(distance_km));
    }
    let loss_db = config.pathloss_intercept_db + config.pathloss_slope_db * distance_km.log10() + shadow_db;
    Ok(10f64.powf(-loss_db / 10.0))
}

/// Exponential correlation for a `rows x cols` planar array: the entry for
/// antennas `(p, q)` and `(m, n)` is `rho^(|p-m| + |q-n|)`. Antenna `(p, q)`
/// has linear index `p * cols + q`.
pub fn correlation_matrix(rho: f64, rows: usize, cols: usize) -> Result<DMatrix<f64>, ChannelError> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(ChannelError::Correlation(rho));
    }
    let n = rows * cols;
    Ok(DMatrix::from_fn(n, n, |a, b| {
        let (p, q) = (a / cols, a % cols);
        let (m, l) = (b / cols, b % cols);
        rho.powi((p.abs_diff(m) + q.abs_diff(l)) as i32)
    }))
}

/// Symmetric square root of a PSD matrix via eigendecomposition, with
/// negative round-off eigenvalues clamped to zero.
pub fn psd_sqrt(theta: &DMatrix<f64>) -> Result<DMatrix<f64>, ChannelError> {
    let asym = (theta - theta.transpose()).amax();
    if asym > 1e-12 * theta.amax().max(1.0) {
        return Err(ChannelError::NotSymmetric(asym));
    }
    let eig = theta.clone().symmetric_eigen();
    let max = eig.eigenvalues.max().max(1.0);
    let min = eig.eigenvalues.min();
    if min < -1e-8 * max {
        return Err(ChannelError::NotPsd(min));
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let v = &eig.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&roots) * v.transpose())
}

/// Draws `Theta^{1/2} w` with `w` circularly-symmetric standard complex
/// Gaussian.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    sqrt: DMatrix<Complex64>,
}

impl ChannelSampler {
    pub fn new(theta: &DMatrix<f64>) -> Result<Self, ChannelError> {
        let sqrt = psd_sqrt(theta)?.map(|x| Complex64::new(x, 0.0));
        Ok(Self { sqrt })
    }

    pub fn dim(&self) -> usize {
        self.sqrt.nrows()
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<Complex64> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let w = DVector::from_fn(self.dim(), |_, _| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re * s, im * s)
        });
        &self.sqrt * w
    }
}

/// One-shot draw of a correlated channel vector.
pub fn draw_channel<R: Rng + ?Sized>(theta: &DMatrix<f64>, rng: &mut R) -> Result<DVector<Complex64>, ChannelError> {
    Ok(ChannelSampler::new(theta)?.draw(rng))
}

/// Large-scale gains and small-scale vectors for every BS-user pair.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// `beta[j][i][k]`: gain from BS `j` to user `(i, k)`.
    pub beta: Vec<Vec<Vec<f64>>>,
    /// `h[j][i][k]`: small-scale vector from BS `j` to user `(i, k)`.
    pub h: Vec<Vec<Vec<DVector<Complex64>>>>,
    /// Spatial correlation of BS `j`'s array.
    pub theta: Vec<DMatrix<f64>>,
    pub noise_power: f64,
}

impl ChannelRealization {
    pub fn cell_count(&self) -> usize {
        self.beta.len()
    }

    pub fn users(&self, cell: usize) -> usize {
        self.beta[cell][cell].len()
    }

    pub fn antennas(&self) -> usize {
        self.theta[0].nrows()
    }

    /// `H_{i,i}`: the `N x K` matrix whose columns are `h_{i,i,k}`.
    pub fn serving_matrix(&self, cell: usize) -> DMatrix<Complex64> {
        self.channel_matrix(cell, cell, None)
    }

    /// Channel matrix from BS `bs` to the users of `cell`, restricted to
    /// `users` when given.
    pub fn channel_matrix(&self, bs: usize, cell: usize, users: Option<&[usize]>) -> DMatrix<Complex64> {
        let all: Vec<usize>;
        let idx = match users {
            Some(u) => u,
            None => {
                all = (0..self.users(cell)).collect();
                &all
            }
        };
        let cols: Vec<_> = idx.iter().map(|&k| self.h[bs][cell][k].clone()).collect();
        DMatrix::from_columns(&cols)
    }
}

/// Assembles a realization: lognormal shadowing independent per link, and
/// channels correlated by the transmitting BS's array.
pub fn build_realization<R: Rng + ?Sized>(
    config: &NetworkConfig,
    geometry: &Geometry,
    rng: &mut R,
) -> Result<ChannelRealization, ChannelError> {
    config.validate()?;
    let cells = config.cell_count;
    let shadow = Normal::new(0.0, config.shadowing_std_db).expect("validated std");
    let mut beta = vec![vec![Vec::new(); cells]; cells];
    for (j, beta_j) in beta.iter_mut().enumerate() {
        for (i, beta_ji) in beta_j.iter_mut().enumerate() {
            for k in 0..geometry.ue_positions[i].len() {
                let s = shadow.sample(rng);
                beta_ji.push(large_scale_gain(geometry.distance_km(j, i, k), s, config)?);
            }
        }
    }
    let theta_one = correlation_matrix(config.correlation, config.antenna_rows, config.antenna_cols)?;
    let sampler = ChannelSampler::new(&theta_one)?;
    let mut h = vec![vec![Vec::new(); cells]; cells];
    for h_j in h.iter_mut() {
        for (i, h_ji) in h_j.iter_mut().enumerate() {
            for _ in 0..geometry.ue_positions[i].len() {
                h_ji.push(sampler.draw(rng));
            }
        }
    }
    Ok(ChannelRealization {
        beta,
        h,
        theta: vec![theta_one; cells],
        noise_power: config.noise_power_w(),
    })
}

/// Geometry and channels drawn from a stream seeded with `seed`.
pub fn realize(config: &NetworkConfig, seed: u64) -> Result<(Geometry, ChannelRealization), ChannelError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let geometry = place_users(config, &mut rng);
    let realization = build_realization(config, &geometry, &mut rng)?;
    Ok((geometry, realization))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn single_cell_two_users_rings() {
        let cfg = NetworkConfig::default().with_users(2);
        let g = place_users(&cfg, &mut rng(3));
        assert_eq!(g.near_mask[0], vec![true, false]);
        let dn = g.distance_km(0, 0, 0);
        let df = g.distance_km(0, 0, 1);
        assert!((0.1..=0.4).contains(&dn));
        assert!(df >= 0.8 * 3f64.sqrt() / 2.0 && df <= 0.95);
        assert!(g.in_cell(0, g.ue_positions[0][1]));
    }

    #[test]
    fn three_cell_layout_adjacent() {
        let b = bs_layout(3, 1.0);
        for (a, c) in [(0, 1), (0, 2), (1, 2)] {
            let d = ((b[a][0] - b[c][0]).powi(2) + (b[a][1] - b[c][1]).powi(2)).sqrt();
            assert!((d - 3f64.sqrt()).abs() < 1e-12);
        }
        // common corner at distance R from all three centres
        let corner = [3f64.sqrt() / 2.0, 0.5];
        for p in &b {
            let d = ((p[0] - corner[0]).powi(2) + (p[1] - corner[1]).powi(2)).sqrt();
            assert!((d - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn every_user_inside_its_cell() {
        let mut cfg = NetworkConfig::default().with_users(60);
        cfg.cell_count = 3;
        let g = place_users(&cfg, &mut rng(11));
        for i in 0..3 {
            for (k, p) in g.ue_positions[i].iter().enumerate() {
                assert!(g.in_cell(i, *p), "user ({i},{k}) outside its cell");
                let d = g.distance_km(i, i, k);
                if g.near_mask[i][k] {
                    assert!(d <= 0.4 + 1e-12);
                } else {
                    assert!(d >= 0.8 * 3f64.sqrt() / 2.0 - 1e-12);
                }
            }
        }
    }

    #[test]
    fn placement_is_deterministic() {
        let cfg = NetworkConfig::default().with_users(10);
        assert_eq!(place_users(&cfg, &mut rng(5)), place_users(&cfg, &mut rng(5)));
    }

    #[test]
    fn pathloss_reference_points() {
        let cfg = NetworkConfig::default();
        let b1 = large_scale_gain(1.0, 0.0, &cfg).unwrap();
        assert!((b1 / 10f64.powf(-12.81) - 1.0).abs() < 1e-12);
        let b01 = large_scale_gain(0.1, 0.0, &cfg).unwrap();
        assert!((b01 / 10f64.powf(-9.05) - 1.0).abs() < 1e-12);
        // 128.1 + 37.6 log10(0.5) + 8 = 124.781... dB, evaluated by hand
        let b = large_scale_gain(0.5, 8.0, &cfg).unwrap();
        let loss_db: f64 = 128.1 + 37.6 * -std::f64::consts::LOG10_2 + 8.0;
        assert!((loss_db - 124.781_272_163_034_3).abs() < 1e-9);
        assert!((b / 10f64.powf(-12.478_127_216_303_43) - 1.0).abs() < 1e-10);
        assert_eq!(
            large_scale_gain(0.0, 0.0, &cfg),
            Err(ChannelError::NonPositiveDistance(0.0))
        );
    }

    #[test]
    fn gain_decreases_with_distance() {
        let cfg = NetworkConfig::default();
        let mut prev = f64::INFINITY;
        for d in [0.05, 0.1, 0.3, 0.7, 1.0, 2.5] {
            let b = large_scale_gain(d, 3.0, &cfg).unwrap();
            assert!(b > 0.0 && b < prev);
            prev = b;
        }
    }

    #[test]
    fn correlation_entries() {
        let t = correlation_matrix(0.9, 8, 8).unwrap();
        // antennas (1,1) and (2,3) in 1-based indexing
        assert!((t[(0, 8 + 2)] - 0.729).abs() < 1e-12);
        for a in 0..64 {
            assert_eq!(t[(a, a)], 1.0);
        }
        assert!(correlation_matrix(1.0, 2, 2).is_err());
        assert!(correlation_matrix(0.0, 2, 2).is_err());
    }

    #[test]
    fn correlation_two_by_two_enumerated() {
        // antennas (0,0) (0,1) (1,0) (1,1); exponent = Manhattan distance
        let expected = [
            [1.0, 0.5, 0.5, 0.25],
            [0.5, 1.0, 0.25, 0.5],
            [0.5, 0.25, 1.0, 0.5],
            [0.25, 0.5, 0.5, 1.0],
        ];
        let t = correlation_matrix(0.5, 2, 2).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                assert_eq!(t[(a, b)], expected[a][b]);
            }
        }
    }

    #[test]
    fn correlation_is_psd() {
        for rho in [0.1, 0.5, 0.9, 0.99] {
            let t = correlation_matrix(rho, 8, 8).unwrap();
            assert_eq!(t, t.transpose());
            let eig = t.symmetric_eigen();
            assert!(eig.eigenvalues.min() >= -1e-10);
        }
    }

    #[test]
    fn sqrt_rejects_non_psd() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(psd_sqrt(&m), Err(ChannelError::NotPsd(_))));
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.0, 1.0]);
        assert!(matches!(psd_sqrt(&m), Err(ChannelError::NotSymmetric(_))));
    }

    #[test]
    fn identity_channel_has_unit_variance() {
        let theta = DMatrix::<f64>::identity(4, 4);
        let s = ChannelSampler::new(&theta).unwrap();
        let mut r = rng(7);
        let draws = 10_000;
        let mut var = [0.0; 4];
        for _ in 0..draws {
            let h = s.draw(&mut r);
            for (v, x) in var.iter_mut().zip(h.iter()) {
                *v += x.norm_sqr();
            }
        }
        for v in var {
            assert!((v / draws as f64 - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn draw_is_replayable() {
        let theta = correlation_matrix(0.9, 2, 4).unwrap();
        let a = draw_channel(&theta, &mut rng(9)).unwrap();
        let b = draw_channel(&theta, &mut rng(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn noise_and_zero_shadowing() {
        let mut cfg = NetworkConfig::default().with_users(4);
        cfg.shadowing_std_db = 0.0;
        let (g, r) = realize(&cfg, 2).unwrap();
        assert!((r.noise_power - 3.162_277_660_168_379e-13).abs() < 1e-23);
        for k in 0..4 {
            let expect = large_scale_gain(g.distance_km(0, 0, k), 0.0, &cfg).unwrap();
            assert_eq!(r.beta[0][0][k], expect);
        }
    }
}
