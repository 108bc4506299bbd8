//! SINR and sum-rate evaluation, large-IRS-power limits, per-IRS SINR
//! proportionality, and leading-order FLOP counts.
//!
//! Two rate conventions coexist. The per-stream form treats each IRS and its
//! stream separately and sums `log2(1 + gamma_k)`; it matches the closed-form
//! per-stream designs. The determinant form treats all IRSs as one virtual
//! surface with noise power `sigma_n^2` and evaluates
//! `log2 det(I + Btilde^{-1/2} Atilde Btilde^{-1/2})`. All powers are watts;
//! dBm conversion is centralized here.

use crate::numerics::{hermitian_part, CMat, CVec, Cx};
use crate::scene::ChannelSet;
use crate::solution::{BeamformerSolution, Method, SolverError};
use std::f64::consts::LN_2;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// `diag(theta) * mat`: scales row `n` by `theta[n]`.
pub(crate) fn theta_scaled(mat: &CMat, theta: &CVec) -> CMat {
    let mut out = mat.clone();
    for n in 0..out.nrows() {
        let t = theta[n];
        for c in 0..out.ncols() {
            out[(n, c)] *= t;
        }
    }
    out
}

/// `G^H Theta` for the stacked channel, shape `Nu x N_I`.
pub(crate) fn gh_theta(g: &CMat, theta: &CVec) -> CMat {
    theta_scaled(g, &theta.conjugate()).adjoint()
}

/// Per-stream SINRs including inter-stream leakage, reflected IRS noise, and
/// receiver noise. Stream `k` transmits with `stream_power_w[k]`.
pub fn per_stream_sinr(
    sol: &BeamformerSolution,
    cs: &ChannelSet,
    sigma_irs_sq: f64,
    sigma_z_sq: f64,
) -> Vec<f64> {
    let k_streams = sol.stream_count();
    let k_irs = cs.irs_count();
    // cascade vectors w_j = Theta_j H_j v_j for the stream j routed via IRS j
    let mut cascades: Vec<CVec> = Vec::with_capacity(k_irs);
    for j in 0..k_irs {
        let hv = cs.h_block(j) * sol.v.column(j);
        let w = CVec::from_fn(hv.len(), |n, _| sol.theta[j][n] * hv[n]);
        cascades.push(w);
    }
    let mut gammas = Vec::with_capacity(k_streams);
    for k in 0..k_streams {
        let u_k = sol.u.column(k);
        let mut signal = 0.0;
        let mut leakage = 0.0;
        let mut irs_noise = 0.0;
        for j in 0..k_irs {
            let g_j_u = cs.g_block(j) * u_k; // length Nk
                                             // u_k^H G_j^H Theta_j H_j v_j
            let c: Cx = g_j_u
                .iter()
                .zip(cascades[j].iter())
                .map(|(gu, w)| gu.conj() * w)
                .sum();
            let p_j = sol.stream_power_w[j];
            if j == k {
                signal = p_j * c.norm_sqr();
            } else {
                leakage += p_j * c.norm_sqr();
            }
            // ||u_k^H G_j^H Theta_j||^2
            let row_sq: f64 = g_j_u
                .iter()
                .zip(sol.theta[j].iter())
                .map(|(gu, t)| gu.norm_sqr() * t.norm_sqr())
                .sum();
            irs_noise += sigma_irs_sq * row_sq;
        }
        let user_noise = sigma_z_sq * u_k.norm_squared();
        gammas.push(signal / (leakage + irs_noise + user_noise));
    }
    gammas
}

/// `sum_k log2(1 + gamma_k)` in bits/s/Hz.
pub fn sum_rate_streams(gamma: &[f64]) -> f64 {
    gamma.iter().map(|&g| g.max(0.0).ln_1p() / LN_2).sum()
}

fn logdet_ratio(a: &CMat, b: &CMat) -> Result<f64, SolverError> {
    // log2 det(I + B^{-1/2} A B^{-1/2}) through the Cholesky factor of B
    let chol = b.clone().cholesky().ok_or(SolverError::Conditioning {
        message: "rate denominator matrix is singular".into(),
    })?;
    let l = chol.l();
    let m1 = l
        .solve_lower_triangular(a)
        .ok_or(SolverError::Conditioning {
            message: "triangular solve failed".into(),
        })?;
    let m2 = l
        .solve_lower_triangular(&m1.adjoint())
        .ok_or(SolverError::Conditioning {
            message: "triangular solve failed".into(),
        })?;
    let whitened = hermitian_part(&m2.adjoint());
    let eig = whitened
        .try_symmetric_eigen(f64::EPSILON, 0)
        .ok_or(SolverError::Conditioning {
            message: "eigendecomposition failed".into(),
        })?;
    Ok(eig
        .eigenvalues
        .iter()
        .map(|&lam| lam.max(0.0).ln_1p() / LN_2)
        .sum())
}

/// Determinant rate with an explicit receive matrix (`K`-dimensional form).
///
/// `v_eff` must carry the transmit power (`||v_eff||_F^2` is the radiated
/// power); `theta` is the stacked virtual-IRS vector.
pub fn rate_determinant(
    u: &CMat,
    v_eff: &CMat,
    theta: &CVec,
    cs: &ChannelSet,
    sigma_n_sq: f64,
    sigma_z_sq: f64,
) -> Result<f64, SolverError> {
    let ght = gh_theta(cs.g(), theta); // Nu x N_I
    let front = u.adjoint() * &ght; // K x N_I
    let f = &front * (cs.h() * v_eff); // K x K
    let a_tilde = &f * f.adjoint();
    let b_tilde = &front * front.adjoint() * Cx::new(sigma_n_sq, 0.0)
        + u.adjoint() * u * Cx::new(sigma_z_sq, 0.0);
    logdet_ratio(&a_tilde, &hermitian_part(&b_tilde))
}

/// Receiver-free determinant rate (`Nu`-dimensional form). Equals
/// [`rate_determinant`] whenever `u` is the MMSE receiver.
pub fn rate_determinant_ufree(
    v_eff: &CMat,
    theta: &CVec,
    cs: &ChannelSet,
    sigma_n_sq: f64,
    sigma_z_sq: f64,
) -> Result<f64, SolverError> {
    let nu = cs.user_antennas();
    let ght = gh_theta(cs.g(), theta); // Nu x N_I
    let s = &ght * (cs.h() * v_eff); // Nu x K
    let a_tilde = &s * s.adjoint();
    let b_tilde = &ght * ght.adjoint() * Cx::new(sigma_n_sq, 0.0)
        + CMat::identity(nu, nu) * Cx::new(sigma_z_sq, 0.0);
    logdet_ratio(&a_tilde, &hermitian_part(&b_tilde))
}

/// Per-stream SINR ceiling as the IRS power budget grows without bound.
///
/// Returns `P_B A_1 / (K A_3)`; infinite (flagged by `f64::INFINITY`) when
/// the IRS noise vanishes.
pub fn asymptotic_sinr_limit(
    k: usize,
    cs: &ChannelSet,
    sol: &BeamformerSolution,
    p_b: f64,
    sigma_irs_sq: f64,
) -> f64 {
    let streams = sol.stream_count() as f64;
    let hv = cs.h_block(k) * sol.v.column(k);
    let gu = cs.g_block(k) * sol.u.column(k);
    let mut theta_dir = sol.theta[k].clone();
    let norm = theta_dir.norm();
    if norm > 0.0 {
        theta_dir /= Cx::new(norm, 0.0);
    }
    let denom: f64 = hv
        .iter()
        .zip(theta_dir.iter())
        .map(|(h, t)| (h * t).norm_sqr())
        .sum::<f64>()
        + sigma_irs_sq;
    let gu_sq = gu.norm_squared();
    let tilde_sq = theta_dir.norm_squared();
    let a1 = gu_sq * tilde_sq * hv.norm_squared() / denom;
    let a3 = sigma_irs_sq * gu_sq * tilde_sq / denom;
    if a3 == 0.0 {
        return f64::INFINITY;
    }
    p_b * a1 / (streams * a3)
}

/// Determinant-rate ceiling as the IRS power grows, evaluated from the
/// normalized phase direction. Scale-invariant in `theta_dir`.
pub fn asymptotic_rate_limit(
    u: &CMat,
    v_eff: &CMat,
    theta_dir: &CVec,
    cs: &ChannelSet,
    sigma_n_sq: f64,
) -> Result<f64, SolverError> {
    let ght = gh_theta(cs.g(), theta_dir);
    let front = u.adjoint() * &ght; // K x N_I
    let hv = cs.h() * v_eff; // N_I x K
    let denom: f64 =
        theta_scaled(&hv, theta_dir).norm_squared() + theta_dir.norm_squared() * sigma_n_sq;
    if denom <= 0.0 {
        return Err(SolverError::Conditioning {
            message: "zero reflected power in asymptotic rate".into(),
        });
    }
    let p = &front * &hv; // K x K
    let q1 = &p * p.adjoint() * Cx::new(1.0 / denom, 0.0);
    let q2 = &front * front.adjoint() * Cx::new(sigma_n_sq / denom, 0.0);
    logdet_ratio(&q1, &hermitian_part(&q2))
}

/// Input SINR at IRS `k`, the large-`P_I` user SINR of the stream it serves,
/// and the proportionality constant tying them together.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrsSinrRelation {
    /// Average SINR observed across the IRS elements.
    pub gamma0: f64,
    /// User-side stream SINR in the infinite-IRS-power regime.
    pub gamma_u: f64,
    /// `gamma_u / gamma0`, from element averages of the cascade gains.
    pub c1: f64,
}

pub fn irs_sinr_relation(
    cs: &ChannelSet,
    sol: &BeamformerSolution,
    p_b: f64,
    sigma_i_sq: f64,
    k: usize,
) -> IrsSinrRelation {
    let nk = cs.elements_per_irs();
    let hv = cs.h_block(k) * sol.v.column(k); // b_n = h_k(n)^H v_k
    let gu = cs.g_block(k) * sol.u.column(k); // conj(a_n) = (G_k u_k)_n, a_n = u_k^H g_k(n)
    let b_sq: Vec<f64> = hv.iter().map(|z| z.norm_sqr()).collect();
    let a_sq: Vec<f64> = gu.iter().map(|z| z.norm_sqr()).collect();
    let ab_sq: Vec<f64> = hv
        .iter()
        .zip(gu.iter())
        .map(|(b, a)| (a.conj() * b).norm_sqr())
        .collect();
    let sum = |v: &[f64]| v.iter().sum::<f64>();
    let mean = |v: &[f64]| sum(v) / nk as f64;
    let gamma0 = p_b * sum(&b_sq) / (nk as f64 * sigma_i_sq);
    let gamma_u = p_b * sum(&ab_sq) / (sigma_i_sq * sum(&a_sq));
    let c1 = mean(&ab_sq) / (mean(&a_sq) * mean(&b_sq));
    IrsSinrRelation {
        gamma0,
        gamma_u,
        c1,
    }
}

/// Every rate quantity of one solution on one scene.
#[derive(Debug, Clone, PartialEq)]
pub struct RateBreakdown {
    /// Per-stream SINRs, linear.
    pub gamma: Vec<f64>,
    /// `sum_k log2(1 + gamma_k)`.
    pub rate_streams: f64,
    /// Determinant rate with the solution's receive matrix.
    pub rate_det: f64,
    /// Receiver-free determinant rate; an upper bound on `rate_det`.
    pub rate_det_nofix: f64,
    /// Per-stream SINR ceilings as the IRS power grows.
    pub asymptotic_gamma: Vec<f64>,
    /// Determinant-rate ceiling as the IRS power grows.
    pub asymptotic_rate: f64,
    /// Per-IRS input SINR.
    pub gamma0: Vec<f64>,
    /// Per-stream user SINR in the large-IRS-power regime.
    pub gamma_u: Vec<f64>,
    /// Proportionality constants `gamma_u / gamma0`.
    pub c1: Vec<f64>,
}

/// Evaluates the whole [`RateBreakdown`] for a solution under the scene's
/// noise model (per-IRS noise for the stream quantities, the stacked
/// `K sigma_k^2` for the determinant forms).
pub fn rate_breakdown(
    sol: &BeamformerSolution,
    cs: &ChannelSet,
    cfg: &crate::scene::SceneConfig,
) -> Result<RateBreakdown, SolverError> {
    let gamma = per_stream_sinr(sol, cs, cfg.irs_noise_w, cfg.user_noise_w);
    let rate_streams = sum_rate_streams(&gamma);
    let v_eff = sol.v_effective();
    let theta = sol.stacked_theta();
    let sigma_n_sq = cfg.virtual_irs_noise_w();
    let rate_det = rate_determinant(&sol.u, &v_eff, &theta, cs, sigma_n_sq, cfg.user_noise_w)?;
    let rate_det_nofix = rate_determinant_ufree(&v_eff, &theta, cs, sigma_n_sq, cfg.user_noise_w)?;
    let k = sol.stream_count();
    let asymptotic_gamma: Vec<f64> = (0..k)
        .map(|j| asymptotic_sinr_limit(j, cs, sol, cfg.bs_power_w, cfg.irs_noise_w))
        .collect();
    let asymptotic_rate = asymptotic_rate_limit(&sol.u, &v_eff, &theta, cs, sigma_n_sq)?;
    let mut gamma0 = Vec::with_capacity(k);
    let mut gamma_u = Vec::with_capacity(k);
    let mut c1 = Vec::with_capacity(k);
    for j in 0..k {
        let rel = irs_sinr_relation(cs, sol, cfg.bs_power_w, cfg.irs_noise_w, j);
        gamma0.push(rel.gamma0);
        gamma_u.push(rel.gamma_u);
        c1.push(rel.c1);
    }
    Ok(RateBreakdown {
        gamma,
        rate_streams,
        rate_det,
        rate_det_nofix,
        asymptotic_gamma,
        asymptotic_rate,
        gamma0,
        gamma_u,
        c1,
    })
}

/// Leading-order floating-point operation count for one solve.
#[derive(Debug, Clone, PartialEq)]
pub struct FlopsOrder {
    pub units: f64,
    pub expression: &'static str,
}

/// `l1` and `l2` are the outer and inner iteration counts of the alternating
/// method; the closed-form methods ignore them.
pub fn flops_order(
    method: Method,
    k: usize,
    nk: usize,
    m: usize,
    nu: usize,
    l1: usize,
    l2: usize,
) -> FlopsOrder {
    let (k, nk, m, nu) = (k as f64, nk as f64, m as f64, nu as f64);
    let (l1, l2) = (l1 as f64, l2 as f64);
    match method {
        Method::MaxTrSvd => FlopsOrder {
            units: k.powi(3) * nk.powi(3) + nu * k.powi(2) * nk.powi(2) + k * m.powi(2) * nk,
            expression: "K^3 Nk^3 + Nu K^2 Nk^2 + K M^2 Nk",
        },
        Method::NspZfPa => FlopsOrder {
            units: k * (2.0 * k.powi(3) * nk.powi(3) + nk.powi(2)),
            expression: "K (2 K^3 Nk^3 + Nk^2)",
        },
        Method::WmmsePc => FlopsOrder {
            units: l1
                * (k.powf(3.5) * nk.powf(3.5) + l2 * k.powi(3) * nk.powi(3) + 2.0 * k.powi(3)),
            expression: "L1 (K^3.5 Nk^3.5 + L2 K^3 Nk^3 + 2 K^3)",
        },
    }
}
