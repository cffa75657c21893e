//! Fixed beam directions and the scalar coefficients derived from them.
//!
//! Powers are applied on top of predetermined directions `f̄_{i,k}`: either
//! the ZF right inverse `H (H^H H)^-1` or the regularized
//! `H (H^H H + eta I)^-1`. In time-fraction modes each cell splits its users
//! into two groups and computes directions per group.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::NetworkConfig;
use crate::network::ChannelRealization;
use crate::Complex64;

/// Gram-matrix condition number beyond which ZF is refused.
pub const ZF_CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeamError {
    #[error("channel Gram matrix is ill-conditioned (condition number {cond:e})")]
    IllConditioned { cond: f64 },
    #[error("regularization requires positive inputs (group size {group_size}, noise {noise}, budget {budget})")]
    InvalidEta { group_size: usize, noise: f64, budget: f64 },
    #[error("time-fraction mode needs nonempty near and far groups")]
    EmptyGroup,
    #[error("unsupported cell count {0}")]
    UnsupportedCellCount(usize),
    #[error("beam/mode mismatch: {0}")]
    ModeMismatch(String),
    #[error("inverse-power entry ({cell}, {user}) must be strictly positive")]
    NonPositiveInversePower { cell: usize, user: usize },
    #[error("regularized gain 1 - eta g_kk = {0} is not positive")]
    RegularizedGain(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BeamMode {
    #[serde(rename = "ZF")]
    Zf,
    #[serde(rename = "RZF")]
    Rzf,
    #[serde(rename = "TF-ZF")]
    TfZf,
    #[serde(rename = "TF-RZF")]
    TfRzf,
}

impl BeamMode {
    pub fn is_time_fraction(self) -> bool {
        matches!(self, BeamMode::TfZf | BeamMode::TfRzf)
    }

    pub fn is_regularized(self) -> bool {
        matches!(self, BeamMode::Rzf | BeamMode::TfRzf)
    }
}

fn hermitian_eigen_extremes(m: &DMatrix<Complex64>) -> (f64, f64) {
    let eig = m.clone().symmetric_eigen();
    (eig.eigenvalues.min(), eig.eigenvalues.max())
}

fn hermitian_inverse(m: DMatrix<Complex64>) -> Option<DMatrix<Complex64>> {
    m.cholesky().map(|c| c.inverse())
}

/// ZF directions `H (H^H H)^-1` for an `N x K` channel matrix.
pub fn zf_precoder(h: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>, BeamError> {
    let (n, k) = h.shape();
    if k > n {
        return Err(BeamError::IllConditioned { cond: f64::INFINITY });
    }
    let gram = h.adjoint() * h;
    let (lo, hi) = hermitian_eigen_extremes(&gram);
    let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(cond <= ZF_CONDITION_LIMIT) {
        return Err(BeamError::IllConditioned { cond });
    }
    let inv = hermitian_inverse(gram).ok_or(BeamError::IllConditioned { cond })?;
    Ok(h * inv)
}

/// RZF directions `H G` with `G = (H^H H + eta I)^-1`; returns `(F̄, G)`.
pub fn rzf_precoder(h: &DMatrix<Complex64>, eta: f64) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>), BeamError> {
    if !(eta > 0.0) {
        return Err(BeamError::ModeMismatch(format!("RZF needs eta > 0 (got {eta})")));
    }
    let k = h.ncols();
    let reg = h.adjoint() * h + DMatrix::<Complex64>::identity(k, k) * Complex64::new(eta, 0.0);
    let g = hermitian_inverse(reg)
        .ok_or_else(|| BeamError::ModeMismatch("regularized Gram matrix not positive definite".into()))?;
    Ok((h * &g, g))
}

/// `group_size * sigma2 / p_max`, the regularization for a group of
/// simultaneously served users.
pub fn regularization_eta(group_size: usize, sigma2: f64, p_max: f64) -> Result<f64, BeamError> {
    if group_size == 0 || !(sigma2 > 0.0) || !(p_max > 0.0) {
        return Err(BeamError::InvalidEta {
            group_size,
            noise: sigma2,
            budget: p_max,
        });
    }
    Ok(group_size as f64 * sigma2 / p_max)
}

/// The two time-fraction groups of each cell. Cell 0 serves its near users
/// in the first fraction and its far users in the second; every other cell
/// does the opposite.
pub fn tf_partition(config: &NetworkConfig) -> Result<Vec<[Vec<usize>; 2]>, BeamError> {
    if !(1..=3).contains(&config.cell_count) {
        return Err(BeamError::UnsupportedCellCount(config.cell_count));
    }
    let near: Vec<usize> = (0..config.near_count).collect();
    let far: Vec<usize> = (config.near_count..config.users_per_cell).collect();
    Ok((0..config.cell_count)
        .map(|i| {
            if i == 0 {
                [near.clone(), far.clone()]
            } else {
                [far.clone(), near.clone()]
            }
        })
        .collect())
}

/// Beam directions for one set of simultaneously served users.
#[derive(Debug, Clone)]
pub struct GroupBeams {
    pub users: Vec<usize>,
    /// `N x |users|`; column `c` belongs to user `users[c]`.
    pub fbar: DMatrix<Complex64>,
    /// `(H^H H + eta I)^-1` for regularized modes.
    pub g: Option<DMatrix<Complex64>>,
    /// Regularization (zero for ZF).
    pub eta: f64,
}

/// Builds the beam directions of every cell for `mode`.
pub fn build_beams(
    realization: &ChannelRealization,
    config: &NetworkConfig,
    mode: BeamMode,
) -> Result<Vec<Vec<GroupBeams>>, BeamError> {
    let cells = realization.cell_count();
    let groups: Vec<Vec<Vec<usize>>> = if mode.is_time_fraction() {
        let parts = tf_partition(config)?;
        if parts.iter().any(|p| p[0].is_empty() || p[1].is_empty()) {
            return Err(BeamError::EmptyGroup);
        }
        parts.into_iter().map(|p| p.to_vec()).collect()
    } else {
        (0..cells).map(|i| vec![(0..realization.users(i)).collect()]).collect()
    };
    let mut out = Vec::with_capacity(cells);
    for (i, cell_groups) in groups.into_iter().enumerate() {
        let mut beams = Vec::with_capacity(cell_groups.len());
        for users in cell_groups {
            let h = realization.channel_matrix(i, i, Some(&users));
            let gb = if mode.is_regularized() {
                let eta = regularization_eta(users.len(), realization.noise_power, config.max_power_w)?;
                let (fbar, g) = rzf_precoder(&h, eta)?;
                GroupBeams {
                    users,
                    fbar,
                    g: Some(g),
                    eta,
                }
            } else {
                GroupBeams {
                    users,
                    fbar: zf_precoder(&h)?,
                    g: None,
                    eta: 0.0,
                }
            };
            beams.push(gb);
        }
        out.push(beams);
    }
    Ok(out)
}

/// Precomputed coefficients of one cell.
#[derive(Debug, Clone)]
pub struct CellPrecoder {
    pub groups: Vec<GroupBeams>,
    /// Group index of each user.
    pub group_of: Vec<usize>,
    /// `alpha_k = beta_{i,i,k} |h_{i,i,k}^H f̄_k|^2`.
    pub alpha: Vec<f64>,
    /// `‖f̄_k‖^2`.
    pub beam_norm_sq: Vec<f64>,
    /// `iui[(k, l)] = beta_{i,i,k} |h_{i,i,k}^H f̄_l|^2` for `l != k` in the
    /// same group; zero elsewhere.
    pub iui_gain: DMatrix<f64>,
    /// `ici_gain[k][j] = beta_{j,i,k}` for `j != i`, zero for `j == i`.
    pub ici_gain: Vec<Vec<f64>>,
}

impl CellPrecoder {
    pub fn users(&self) -> usize {
        self.alpha.len()
    }

    /// Column of user `k` in its group's beam matrix.
    pub fn beam(&self, k: usize) -> nalgebra::DVectorView<'_, Complex64> {
        let g = &self.groups[self.group_of[k]];
        let c = g.users.iter().position(|&u| u == k).expect("user in its group");
        g.fbar.column(c)
    }
}

/// Beam directions and derived coefficients for a whole network.
#[derive(Debug, Clone)]
pub struct PrecoderSet {
    pub mode: BeamMode,
    pub cells: Vec<CellPrecoder>,
    pub noise_power: f64,
}

impl PrecoderSet {
    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }
}

/// Derives `alpha`, beam norms, inter-user and inter-cell coefficients from
/// `beams` built for `realization`.
///
/// Inter-user gains are exactly zero in ZF modes and take the
/// `eta^2 beta |g_{k,l}|^2` form in RZF modes.
pub fn derive_coefficients(
    realization: &ChannelRealization,
    beams: Vec<Vec<GroupBeams>>,
    mode: BeamMode,
) -> Result<PrecoderSet, BeamError> {
    let cells = realization.cell_count();
    if beams.len() != cells {
        return Err(BeamError::ModeMismatch(format!(
            "{} beam sets for {} cells",
            beams.len(),
            cells
        )));
    }
    let expected_groups = if mode.is_time_fraction() { 2 } else { 1 };
    let mut out = Vec::with_capacity(cells);
    for (i, groups) in beams.into_iter().enumerate() {
        let k_total = realization.users(i);
        if groups.len() != expected_groups {
            return Err(BeamError::ModeMismatch(format!(
                "cell {i}: {} groups for mode {mode:?}",
                groups.len()
            )));
        }
        let mut group_of = vec![usize::MAX; k_total];
        for (q, g) in groups.iter().enumerate() {
            if g.fbar.ncols() != g.users.len() || g.fbar.nrows() != realization.antennas() {
                return Err(BeamError::ModeMismatch(format!("cell {i} group {q}: beam shape")));
            }
            if mode.is_regularized() != g.g.is_some() {
                return Err(BeamError::ModeMismatch(format!(
                    "cell {i} group {q}: G matrix presence does not match {mode:?}"
                )));
            }
            for &u in &g.users {
                if u >= k_total || group_of[u] != usize::MAX {
                    return Err(BeamError::ModeMismatch(format!("cell {i}: bad user index {u}")));
                }
                group_of[u] = q;
            }
        }
        if group_of.contains(&usize::MAX) {
            return Err(BeamError::ModeMismatch(format!("cell {i}: users not covered")));
        }
        let mut alpha = vec![0.0; k_total];
        let mut norms = vec![0.0; k_total];
        let mut iui = DMatrix::<f64>::zeros(k_total, k_total);
        for g in &groups {
            for (ck, &k) in g.users.iter().enumerate() {
                let beta = realization.beta[i][i][k];
                let h = &realization.h[i][i][k];
                let f = g.fbar.column(ck);
                alpha[k] = beta * h.dotc(&f).norm_sqr();
                norms[k] = f.norm_squared();
                if let Some(gm) = &g.g {
                    let gain = 1.0 - g.eta * gm[(ck, ck)].re;
                    if !(gain > 0.0) {
                        return Err(BeamError::RegularizedGain(gain));
                    }
                    for (cl, &l) in g.users.iter().enumerate() {
                        if cl != ck {
                            iui[(k, l)] = g.eta * g.eta * beta * gm[(ck, cl)].norm_sqr();
                        }
                    }
                }
            }
        }
        let ici_gain = (0..k_total)
            .map(|k| {
                (0..cells)
                    .map(|j| if j == i { 0.0 } else { realization.beta[j][i][k] })
                    .collect()
            })
            .collect();
        out.push(CellPrecoder {
            groups,
            group_of,
            alpha,
            beam_norm_sq: norms,
            iui_gain: iui,
            ici_gain,
        });
    }
    Ok(PrecoderSet {
        mode,
        cells: out,
        noise_power: realization.noise_power,
    })
}

/// [`build_beams`] followed by [`derive_coefficients`].
pub fn build_precoders(
    realization: &ChannelRealization,
    config: &NetworkConfig,
    mode: BeamMode,
) -> Result<PrecoderSet, BeamError> {
    let beams = build_beams(realization, config, mode)?;
    derive_coefficients(realization, beams, mode)
}

/// Transmit power of each cell. Direct modes: `sum ‖f̄‖^2 p`; time-fraction
/// modes treat `powers` as inverse powers and return `sum ‖f̄‖^2 / p` over
/// all users of the cell (both fractions, unweighted).
pub fn transmit_power(pset: &PrecoderSet, powers: &[Vec<f64>]) -> Result<Vec<f64>, BeamError> {
    if powers.len() != pset.cell_count() {
        return Err(BeamError::ModeMismatch("power vector per cell expected".into()));
    }
    pset.cells
        .iter()
        .zip(powers)
        .enumerate()
        .map(|(i, (cell, p))| {
            if p.len() != cell.users() {
                return Err(BeamError::ModeMismatch(format!("cell {i}: power length")));
            }
            if pset.mode.is_time_fraction() {
                let mut total = 0.0;
                for (k, (&n, &pk)) in cell.beam_norm_sq.iter().zip(p).enumerate() {
                    if !(pk > 0.0) {
                        return Err(BeamError::NonPositiveInversePower { cell: i, user: k });
                    }
                    total += n / pk;
                }
                Ok(total)
            } else {
                Ok(cell.beam_norm_sq.iter().zip(p).map(|(n, pk)| n * pk).sum())
            }
        })
        .collect()
}

/// `trace(G H^H H G diag(1/p))` for one RZF group; equals the group's
/// `sum ‖f̄_k‖^2 / p_k`.
pub fn group_power_trace(
    realization: &ChannelRealization,
    cell: usize,
    group: &GroupBeams,
    inverse_powers: &[f64],
) -> Option<f64> {
    let g = group.g.as_ref()?;
    let h = realization.channel_matrix(cell, cell, Some(&group.users));
    let inner = g * h.adjoint() * &h * g;
    Some(
        group
            .users
            .iter()
            .enumerate()
            .map(|(c, &u)| inner[(c, c)].re / inverse_powers[u])
            .sum(),
    )
}
