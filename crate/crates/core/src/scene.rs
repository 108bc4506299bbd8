//! Scene geometry, path loss, steering vectors, and line-of-sight channel
//! synthesis.
//!
//! The base station sits at `bs_pos`, the user at `user_pos`, and `K` small
//! IRSs at `irs_pos`, all in a 2-D plane measured in meters. Every array is a
//! uniform linear array; the response toward broadside angle `phi` has entry
//! `exp(j 2 pi d m sin(phi))` for element `m` and spacing `d` in wavelengths.
//! Each link is a deterministic rank-one outer product of steering vectors
//! weighted by the amplitude path loss `sqrt(alpha / d^c)`.

use crate::numerics::{economy_svd, CMat, CVec, Cx};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Distances entering the path-loss law are clamped to this value so the
/// `alpha / d^c` singularity cannot blow up when endpoints nearly touch.
pub const MIN_PATHLOSS_DISTANCE_M: f64 = 1.0;

/// Positions closer than this are considered coincident and rejected.
pub const COINCIDENT_TOL_M: f64 = 1e-9;

/// Relative singular-value threshold for numerical channel ranks.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SceneError {
    #[error("invalid scene config: {0}")]
    InvalidConfig(String),
    #[error("path-loss distance must be positive, got {0}")]
    NonPositiveDistance(f64),
    #[error("coincident positions for {0}")]
    CoincidentPositions(String),
}

/// Scene description: array sizes, geometry, power budgets, and noise levels.
///
/// All powers are in watts and all distances in meters. Fields left out of a
/// config file fall back to [`SceneConfig::default`], which reproduces the
/// reference simulation setup (`M = Nu = 8`, four IRSs of 16 elements,
/// `P_B = 1` W, `P_I = 0.04` W, both noise floors at 1e-7 W).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneConfig {
    /// Base-station antenna count `M`.
    pub bs_antennas: usize,
    /// User antenna count `Nu`.
    pub user_antennas: usize,
    /// Number of small IRSs `K`.
    pub irs_count: usize,
    /// Elements per IRS `Nk`; the virtual large IRS has `N_I = K * Nk`.
    pub elements_per_irs: usize,
    pub bs_pos: [f64; 2],
    pub user_pos: [f64; 2],
    /// Explicit IRS positions; `None` selects [`default_irs_positions`].
    pub irs_pos: Option<Vec<[f64; 2]>>,
    /// Fractions of `irs_power_w` assigned to each IRS; `None` means uniform.
    pub per_irs_power_split: Option<Vec<f64>>,
    /// BS transmit power budget `P_B` in watts.
    pub bs_power_w: f64,
    /// Total IRS reflect power budget `P_I` in watts.
    pub irs_power_w: f64,
    /// Per-IRS noise power `sigma_k^2` in watts.
    pub irs_noise_w: f64,
    /// Receiver noise power `sigma_z^2` in watts.
    pub user_noise_w: f64,
    /// Path-loss coefficient `alpha` in `alpha / d^c`.
    pub pathloss_alpha: f64,
    /// Path-loss exponent `c`.
    pub pathloss_exp: f64,
    /// Element spacing in wavelengths.
    pub element_spacing: f64,
    /// Uniform jitter half-width applied to IRS positions, in meters.
    /// Zero (the default) keeps placement fully deterministic.
    pub placement_jitter_m: f64,
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            bs_antennas: 8,
            user_antennas: 8,
            irs_count: 4,
            elements_per_irs: 16,
            bs_pos: [0.0, 0.0],
            user_pos: [100.0, 0.0],
            irs_pos: None,
            per_irs_power_split: None,
            bs_power_w: 1.0,
            irs_power_w: 0.04,
            irs_noise_w: 1e-7,
            user_noise_w: 1e-7,
            pathloss_alpha: 1e-2,
            pathloss_exp: 2.0,
            element_spacing: 0.5,
            placement_jitter_m: 0.0,
            seed: 1,
        }
    }
}

impl SceneConfig {
    /// Total element count of the virtual large IRS, `N_I = K * Nk`.
    pub fn total_elements(&self) -> usize {
        self.irs_count * self.elements_per_irs
    }

    /// Noise power of the virtual large IRS, `sigma_n^2 = K * sigma_k^2`.
    pub fn virtual_irs_noise_w(&self) -> f64 {
        self.irs_count as f64 * self.irs_noise_w
    }

    /// Per-IRS power budgets `P_{I_k}` in watts.
    pub fn per_irs_power_w(&self) -> Vec<f64> {
        self.power_split()
            .into_iter()
            .map(|f| f * self.irs_power_w)
            .collect()
    }

    /// Power-split fractions, uniform unless overridden.
    pub fn power_split(&self) -> Vec<f64> {
        match &self.per_irs_power_split {
            Some(s) => s.clone(),
            None => vec![1.0 / self.irs_count as f64; self.irs_count],
        }
    }

    /// IRS positions with defaults and optional seeded jitter applied.
    pub fn resolved_irs_positions(&self) -> Vec<[f64; 2]> {
        let mut positions = match &self.irs_pos {
            Some(p) => p.clone(),
            None => default_irs_positions(self.irs_count, self.bs_pos, self.user_pos),
        };
        if self.placement_jitter_m > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            for p in positions.iter_mut() {
                p[0] += (rng.gen::<f64>() * 2.0 - 1.0) * self.placement_jitter_m;
                p[1] += (rng.gen::<f64>() * 2.0 - 1.0) * self.placement_jitter_m;
            }
        }
        positions
    }

    /// Path loss `alpha / d^c` at distance `d` meters (clamped to
    /// [`MIN_PATHLOSS_DISTANCE_M`]).
    pub fn path_loss(&self, d: f64) -> Result<f64, SceneError> {
        path_loss(self.pathloss_alpha, self.pathloss_exp, d)
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let fail = |msg: String| Err(SceneError::InvalidConfig(msg));
        if self.irs_count == 0 || self.elements_per_irs == 0 {
            return fail("irs_count and elements_per_irs must be at least 1".into());
        }
        if self.bs_antennas < self.irs_count {
            return fail(format!(
                "bs_antennas ({}) must be >= irs_count ({})",
                self.bs_antennas, self.irs_count
            ));
        }
        if self.user_antennas < self.irs_count {
            return fail(format!(
                "user_antennas ({}) must be >= irs_count ({})",
                self.user_antennas, self.irs_count
            ));
        }
        for (name, value) in [
            ("bs_power_w", self.bs_power_w),
            ("irs_power_w", self.irs_power_w),
            ("irs_noise_w", self.irs_noise_w),
            ("user_noise_w", self.user_noise_w),
            ("pathloss_alpha", self.pathloss_alpha),
            ("element_spacing", self.element_spacing),
        ] {
            if !value.is_finite() || value <= 0.0 {
                return fail(format!("{name} must be positive and finite, got {value}"));
            }
        }
        if let Some(positions) = &self.irs_pos {
            if positions.len() != self.irs_count {
                return fail(format!(
                    "irs_pos has {} entries but irs_count is {}",
                    positions.len(),
                    self.irs_count
                ));
            }
        }
        if let Some(split) = &self.per_irs_power_split {
            if split.len() != self.irs_count {
                return fail(format!(
                    "per_irs_power_split has {} entries but irs_count is {}",
                    split.len(),
                    self.irs_count
                ));
            }
            if split.iter().any(|&f| f < 0.0) {
                return fail("per_irs_power_split entries must be nonnegative".into());
            }
            let sum: f64 = split.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return fail(format!("per_irs_power_split sums to {sum}, expected 1"));
            }
        }
        Ok(())
    }
}

/// Per-IRS channels plus their stacked virtual-IRS forms.
///
/// `h_block(k)` is the `Nk x M` BS-to-IRS-k channel and `g_block(k)` the
/// `Nk x Nu` matrix whose adjoint is the IRS-k-to-user channel. `h()` and
/// `g()` are the row-stacks over `k`. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    h_blocks: Vec<CMat>,
    g_blocks: Vec<CMat>,
    h: CMat,
    g: CMat,
}

impl ChannelSet {
    pub fn from_blocks(h_blocks: Vec<CMat>, g_blocks: Vec<CMat>) -> Result<Self, SceneError> {
        if h_blocks.is_empty() || h_blocks.len() != g_blocks.len() {
            return Err(SceneError::InvalidConfig(
                "channel block lists must be equal-length and non-empty".into(),
            ));
        }
        let nk = h_blocks[0].nrows();
        let m = h_blocks[0].ncols();
        let nu = g_blocks[0].ncols();
        for (k, (hb, gb)) in h_blocks.iter().zip(g_blocks.iter()).enumerate() {
            if hb.nrows() != nk || hb.ncols() != m || gb.nrows() != nk || gb.ncols() != nu {
                return Err(SceneError::InvalidConfig(format!(
                    "inconsistent block dimensions at IRS {k}"
                )));
            }
            if crate::numerics::ensure_finite(hb).is_err()
                || crate::numerics::ensure_finite(gb).is_err()
            {
                return Err(SceneError::InvalidConfig(format!(
                    "non-finite channel entry at IRS {k}"
                )));
            }
        }
        let h = stack_rows(&h_blocks);
        let g = stack_rows(&g_blocks);
        Ok(ChannelSet {
            h_blocks,
            g_blocks,
            h,
            g,
        })
    }

    pub fn irs_count(&self) -> usize {
        self.h_blocks.len()
    }

    pub fn elements_per_irs(&self) -> usize {
        self.h_blocks[0].nrows()
    }

    pub fn bs_antennas(&self) -> usize {
        self.h.ncols()
    }

    pub fn user_antennas(&self) -> usize {
        self.g.ncols()
    }

    pub fn h_block(&self, k: usize) -> &CMat {
        &self.h_blocks[k]
    }

    pub fn g_block(&self, k: usize) -> &CMat {
        &self.g_blocks[k]
    }

    pub fn h_blocks(&self) -> &[CMat] {
        &self.h_blocks
    }

    pub fn g_blocks(&self) -> &[CMat] {
        &self.g_blocks
    }

    /// Stacked `N_I x M` channel.
    pub fn h(&self) -> &CMat {
        &self.h
    }

    /// Stacked `N_I x Nu` channel (its adjoint maps the IRS plane to the user).
    pub fn g(&self) -> &CMat {
        &self.g
    }
}

fn stack_rows(blocks: &[CMat]) -> CMat {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks[0].ncols();
    let mut out = CMat::zeros(rows, cols);
    let mut offset = 0;
    for b in blocks {
        out.view_mut((offset, 0), (b.nrows(), cols)).copy_from(b);
        offset += b.nrows();
    }
    out
}

/// Path loss `alpha / d^c`; errors for `d <= 0`, clamps `d` below
/// [`MIN_PATHLOSS_DISTANCE_M`].
pub fn path_loss(alpha: f64, exponent: f64, d: f64) -> Result<f64, SceneError> {
    if d.is_nan() || d <= 0.0 {
        return Err(SceneError::NonPositiveDistance(d));
    }
    Ok(alpha / d.max(MIN_PATHLOSS_DISTANCE_M).powf(exponent))
}

/// Uniform-linear-array response: entry `m` is
/// `exp(j 2 pi spacing m sin(angle))`, so every entry has unit modulus.
pub fn steering_vector(n_elements: usize, spacing: f64, angle: f64) -> CVec {
    let phase_step = 2.0 * PI * spacing * angle.sin();
    CVec::from_fn(n_elements, |m, _| {
        Cx::from_polar(1.0, phase_step * m as f64)
    })
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn azimuth(from: [f64; 2], to: [f64; 2]) -> f64 {
    (to[1] - from[1]).atan2(to[0] - from[0])
}

/// Default IRS placement.
///
/// The reference layouts are used for `K = 1, 2, 4`; other counts are placed
/// uniformly on two radius-25 m arcs centered between BS and user, mirrored
/// across the BS-user axis. Echo the resolved positions (`mirsim show-config`)
/// when reporting results.
pub fn default_irs_positions(k: usize, bs: [f64; 2], user: [f64; 2]) -> Vec<[f64; 2]> {
    match k {
        1 => vec![[80.0, 20.0]],
        2 => vec![[80.0, 20.0], [90.0, 30.0]],
        4 => vec![[80.0, 20.0], [90.0, 30.0], [80.0, -20.0], [90.0, -30.0]],
        _ => {
            let center = [(bs[0] + user[0]) / 2.0, (bs[1] + user[1]) / 2.0];
            let radius = 25.0;
            let upper = k - k / 2;
            let lower = k / 2;
            let mut out = Vec::with_capacity(k);
            for i in 0..upper {
                let t = PI * (i + 1) as f64 / (upper + 1) as f64;
                out.push([center[0] + radius * t.cos(), center[1] + radius * t.sin()]);
            }
            for i in 0..lower {
                let t = PI * (i + 1) as f64 / (lower + 1) as f64;
                out.push([center[0] + radius * t.cos(), center[1] - radius * t.sin()]);
            }
            out
        }
    }
}

/// Builds the per-IRS channels `H_k` and `G_k` from the scene geometry.
///
/// `H_k = sqrt(loss(bs, irs_k)) a_irs(phi_k) a_bs(psi_k)^H` and
/// `G_k^H = sqrt(loss(irs_k, user)) a_user(omega_k) a_irs(chi_k)^H`, with all
/// angles derived from the 2-D positions. Deterministic given the config.
pub fn synthesize_channels(cfg: &SceneConfig) -> Result<ChannelSet, SceneError> {
    cfg.validate()?;
    let positions = cfg.resolved_irs_positions();
    let m = cfg.bs_antennas;
    let nu = cfg.user_antennas;
    let nk = cfg.elements_per_irs;
    let spacing = cfg.element_spacing;

    let mut h_blocks = Vec::with_capacity(cfg.irs_count);
    let mut g_blocks = Vec::with_capacity(cfg.irs_count);
    for (k, &irs) in positions.iter().enumerate() {
        let d_bs = distance(cfg.bs_pos, irs);
        if d_bs < COINCIDENT_TOL_M {
            return Err(SceneError::CoincidentPositions(format!("BS and IRS {k}")));
        }
        let d_user = distance(irs, cfg.user_pos);
        if d_user < COINCIDENT_TOL_M {
            return Err(SceneError::CoincidentPositions(format!("IRS {k} and user")));
        }
        let gain_bs = cfg.path_loss(d_bs)?.sqrt();
        let gain_user = cfg.path_loss(d_user)?.sqrt();

        let a_irs_rx = steering_vector(nk, spacing, azimuth(irs, cfg.bs_pos));
        let a_bs = steering_vector(m, spacing, azimuth(cfg.bs_pos, irs));
        let h_k = (&a_irs_rx * a_bs.adjoint()) * Cx::new(gain_bs, 0.0);

        let a_irs_tx = steering_vector(nk, spacing, azimuth(irs, cfg.user_pos));
        let a_user = steering_vector(nu, spacing, azimuth(cfg.user_pos, irs));
        // G_k^H = gain * a_user a_irs^H, so G_k = gain * a_irs a_user^H.
        let g_k = (&a_irs_tx * a_user.adjoint()) * Cx::new(gain_user, 0.0);

        h_blocks.push(h_k);
        g_blocks.push(g_k);
    }
    ChannelSet::from_blocks(h_blocks, g_blocks)
}

/// Spatial degrees-of-freedom bound `min(K, M, Nu)` with the achieved
/// numerical ranks of the stacked channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DofReport {
    pub bound: usize,
    pub rank_h: usize,
    pub rank_g: usize,
    /// True when an achieved rank falls short of the bound.
    pub deficient: bool,
}

pub fn dof_bound(cs: &ChannelSet, m: usize, nu: usize, k: usize) -> DofReport {
    let bound = k.min(m).min(nu);
    let rank = |mat: &CMat| -> usize {
        // economy_svd only fails on non-finite input, which ChannelSet rejects
        let (_, s, _) = economy_svd(mat).expect("finite channel matrix");
        let smax = s.first().copied().unwrap_or(0.0);
        if smax <= 0.0 {
            0
        } else {
            s.iter().filter(|&&x| x > RANK_TOL * smax).count()
        }
    };
    let rank_h = rank(cs.h());
    let rank_g = rank(cs.g());
    DofReport {
        bound,
        rank_h,
        rank_g,
        deficient: rank_h.min(rank_g) < bound,
    }
}
