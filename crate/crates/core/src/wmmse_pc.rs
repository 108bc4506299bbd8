//! Weighted-MMSE alternating optimization over the virtual large IRS with an
//! explicit IRS power constraint.
//!
//! Outer loop per round: MMSE receiver update, weight update `W = E^{-1}`,
//! precoder update by a two-constraint convex QCQP solved through nested
//! dual bisection, and phase update by majorization-minimization on the
//! unit-modulus direction with the amplitude pinned to power equality. Every
//! step can only improve the weighted-MSE surrogate, so the rate objective
//! trace is non-decreasing up to roundoff; the phase step keeps the previous
//! vector whenever the MM result fails to improve the surrogate.

use crate::numerics::{
    economy_svd, hermitian_eig_max, hermitian_part, CMat, CVec, Cx, RANK_REL_TOL,
};
use crate::rate::{self, gh_theta, theta_scaled};
use crate::scene::{ChannelSet, SceneConfig};
use crate::solution::{BeamformerSolution, Method, SolverError, SolverReport};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

#[derive(Debug, Clone)]
pub struct WmmseOptions {
    /// Outer iteration cap.
    pub max_outer: usize,
    /// Relative objective change that stops the outer loop.
    pub outer_tol: f64,
    /// Relative surrogate change that stops the inner MM loop.
    pub mm_tol: f64,
    pub mm_max_iter: usize,
    /// Relative constraint tolerance targeted by the dual bisection.
    pub bisect_tol: f64,
    pub bisect_max_iter: usize,
    /// Seed for the random unit-modulus phase initialization.
    pub seed: u64,
}

impl Default for WmmseOptions {
    fn default() -> Self {
        WmmseOptions {
            max_outer: 200,
            outer_tol: 1e-5,
            mm_tol: 1e-6,
            mm_max_iter: 500,
            bisect_tol: 1e-12,
            bisect_max_iter: 200,
            seed: 1,
        }
    }
}

/// Iterate state: precoder (power folded in), receiver, stacked phase vector,
/// weight matrix, MSE matrix, and the objective trace so far.
#[derive(Debug, Clone)]
pub struct WmmseState {
    pub v: CMat,
    pub u: CMat,
    pub theta: CVec,
    pub w: CMat,
    pub e: CMat,
    pub objective_trace: Vec<f64>,
}

/// MSE matrix `E = (U^H G^H Theta H V - I)(...)^H + sigma_n^2 (U^H G^H Theta)
/// (...)^H + sigma_z^2 U^H U`, symmetrized.
pub fn mse_matrix(
    u: &CMat,
    v_eff: &CMat,
    theta: &CVec,
    cs: &ChannelSet,
    sigma_n_sq: f64,
    sigma_z_sq: f64,
) -> CMat {
    let k = u.ncols();
    let front = u.adjoint() * gh_theta(cs.g(), theta); // K x N_I
    let fv = &front * (cs.h() * v_eff) - CMat::identity(k, k);
    let e = &fv * fv.adjoint()
        + &front * front.adjoint() * Cx::new(sigma_n_sq, 0.0)
        + u.adjoint() * u * Cx::new(sigma_z_sq, 0.0);
    hermitian_part(&e)
}

/// MMSE receiver `U = (F F^H + C)^{-1} F` with `F = G^H Theta H V` and
/// `C = sigma_n^2 (G^H Theta)(G^H Theta)^H + sigma_z^2 I`.
pub fn update_u(
    v_eff: &CMat,
    theta: &CVec,
    cs: &ChannelSet,
    sigma_n_sq: f64,
    sigma_z_sq: f64,
) -> Result<CMat, SolverError> {
    let nu = cs.user_antennas();
    let ght = gh_theta(cs.g(), theta); // Nu x N_I
    let f = &ght * (cs.h() * v_eff); // Nu x K
    let c = &ght * ght.adjoint() * Cx::new(sigma_n_sq, 0.0)
        + CMat::identity(nu, nu) * Cx::new(sigma_z_sq, 0.0);
    let lhs = hermitian_part(&(&f * f.adjoint() + c));
    let chol = lhs.cholesky().ok_or(SolverError::Conditioning {
        message: "receiver normal matrix is not positive definite".into(),
    })?;
    Ok(chol.solve(&f))
}

/// Weight update `W = E^{-1}`; errors when `E` is singular to relative
/// tolerance 1e-12.
pub fn update_w(e: &CMat) -> Result<CMat, SolverError> {
    let eig = hermitian_part(e)
        .try_symmetric_eigen(f64::EPSILON, 0)
        .ok_or(SolverError::Conditioning {
            message: "MSE eigendecomposition failed".into(),
        })?;
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |a, &l| a.max(l.abs()));
    let n = e.nrows();
    let mut w = CMat::zeros(n, n);
    for i in 0..n {
        let l = eig.eigenvalues[i];
        if l <= 1e-12 * lmax {
            return Err(SolverError::Conditioning {
                message: format!("MSE matrix is singular (eigenvalue {l:.3e})"),
            });
        }
        let q = eig.eigenvectors.column(i);
        w += &q * q.adjoint() * Cx::new(1.0 / l, 0.0);
    }
    Ok(hermitian_part(&w))
}

/// Diagnostics from one precoder QCQP solve.
#[derive(Debug, Clone, Copy)]
pub struct QcqpInfo {
    pub mu1: f64,
    pub mu2: f64,
    /// `||V||_F^2` at the solution.
    pub bs_power: f64,
    /// `||Theta H V||_F^2` at the solution.
    pub irs_signal_power: f64,
    /// Quadratic objective `Tr(V^H A V) - 2 Re Tr(W F V)` (constants dropped).
    pub objective: f64,
}

struct QcqpProblem {
    a: CMat,   // F^H W F, M x M PSD
    rhs: CMat, // F^H W, M x K
    d: CMat,   // (Theta H)^H (Theta H), M x M PSD
    lh: CMat,  // Theta H, N_I x M
    p_b: f64,
}

impl QcqpProblem {
    fn bs_power(&self, v: &CMat) -> f64 {
        v.norm_squared()
    }

    fn irs_power(&self, v: &CMat) -> f64 {
        (&self.lh * v).norm_squared()
    }

    fn objective(&self, v: &CMat) -> f64 {
        let quad = (v.adjoint() * &self.a * v).trace().re;
        let lin = (self.rhs.adjoint() * v).trace().re;
        quad - 2.0 * lin
    }

    /// For fixed `mu2`, diagonalizes `A + mu2 D` once; the BS power is then a
    /// scalar rational function of `mu1` and the inner root-find is cheap.
    /// Returns the smallest `mu1 >= 0` with a feasible BS power and its `V`.
    fn inner(&self, mu2: f64, opts: &WmmseOptions) -> Result<(f64, CMat), SolverError> {
        let base = hermitian_part(&(&self.a + &self.d * Cx::new(mu2, 0.0)));
        let eig = base
            .try_symmetric_eigen(f64::EPSILON, 0)
            .ok_or(SolverError::Conditioning {
                message: "QCQP eigendecomposition failed".into(),
            })?;
        let proj = eig.eigenvectors.adjoint() * &self.rhs; // M x K
        let row_sq: Vec<f64> = (0..proj.nrows())
            .map(|i| proj.row(i).norm_squared())
            .collect();
        let lmax = eig.eigenvalues.iter().fold(0.0f64, |a, &l| a.max(l.abs()));
        let cutoff = RANK_REL_TOL * lmax;
        // weights 1/(lambda_i + mu1); at mu1 = 0 the minimum-norm solution
        // drops the null directions
        let g1 = |mu1: f64| -> f64 {
            eig.eigenvalues
                .iter()
                .zip(row_sq.iter())
                .map(|(&l, &r)| {
                    if mu1 == 0.0 && l <= cutoff {
                        0.0
                    } else {
                        r / (l.max(0.0) + mu1).powi(2)
                    }
                })
                .sum()
        };
        let v_of = |mu1: f64| -> CMat {
            let mut scaled = proj.clone();
            for i in 0..scaled.nrows() {
                let l = eig.eigenvalues[i];
                let w = if mu1 == 0.0 && l <= cutoff {
                    0.0
                } else {
                    1.0 / (l.max(0.0) + mu1)
                };
                let w = Cx::new(w, 0.0);
                for j in 0..scaled.ncols() {
                    scaled[(i, j)] *= w;
                }
            }
            &eig.eigenvectors * scaled
        };
        if g1(0.0) <= self.p_b * (1.0 + opts.bisect_tol) {
            return Ok((0.0, v_of(0.0)));
        }
        // ||V(mu1)||_F <= ||rhs||_F / mu1 makes this bracket feasible
        let mut hi = self.rhs.norm() / self.p_b.sqrt();
        while g1(hi) > self.p_b {
            hi *= 10.0;
        }
        let mut lo = 0.0f64;
        let mut mu1 = hi;
        for _ in 0..opts.bisect_max_iter {
            let mid = 0.5 * (lo + hi);
            let g = g1(mid);
            if (g - self.p_b).abs() <= opts.bisect_tol * self.p_b {
                mu1 = mid;
                break;
            }
            if g > self.p_b {
                lo = mid;
            } else {
                hi = mid;
                mu1 = mid;
            }
        }
        Ok((mu1, v_of(mu1)))
    }
}

/// Precoder update: minimizes `Tr(W E)` over `V` subject to the BS power
/// budget and the IRS reflect-power budget, by nested bisection on the two
/// KKT multipliers of `V(mu1, mu2) = (F^H W F + mu1 I + mu2 (Theta H)^H
/// (Theta H))^{-1} F^H W`.
#[allow(clippy::too_many_arguments)]
pub fn update_v_qcqp(
    w: &CMat,
    u: &CMat,
    theta: &CVec,
    cs: &ChannelSet,
    p_b: f64,
    p_i: f64,
    sigma_n_sq: f64,
    opts: &WmmseOptions,
) -> Result<(CMat, QcqpInfo), SolverError> {
    let p_i_eff = p_i - sigma_n_sq * theta.norm_squared();
    if p_i_eff <= 0.0 {
        return Err(SolverError::IrsPowerInfeasible {
            floor_w: sigma_n_sq * theta.norm_squared(),
            budget_w: p_i,
        });
    }
    let f = u.adjoint() * gh_theta(cs.g(), theta) * cs.h(); // K x M
    let rhs = f.adjoint() * w; // F^H W
    let lh = theta_scaled(cs.h(), theta);
    let problem = QcqpProblem {
        a: hermitian_part(&(f.adjoint() * w * &f)),
        rhs,
        d: hermitian_part(&(lh.adjoint() * &lh)),
        lh,
        p_b,
    };

    if problem.rhs.norm() == 0.0 {
        let m = cs.bs_antennas();
        let k = u.ncols();
        let v = CMat::zeros(m, k);
        let info = QcqpInfo {
            mu1: 0.0,
            mu2: 0.0,
            bs_power: 0.0,
            irs_signal_power: 0.0,
            objective: 0.0,
        };
        return Ok((v, info));
    }

    let (mu1_at_zero, v_at_zero) = problem.inner(0.0, opts)?;
    let (mu1, mu2, v) = if problem.irs_power(&v_at_zero) <= p_i_eff * (1.0 + opts.bisect_tol) {
        (mu1_at_zero, 0.0, v_at_zero)
    } else {
        let mut hi = 4.0 * problem.rhs.norm() * p_b.sqrt() / p_i_eff;
        let mut pair = problem.inner(hi, opts)?;
        while problem.irs_power(&pair.1) > p_i_eff {
            hi *= 10.0;
            pair = problem.inner(hi, opts)?;
        }
        let mut lo = 0.0f64;
        let mut best = (pair.0, hi, pair.1);
        for _ in 0..opts.bisect_max_iter {
            let mid = 0.5 * (lo + hi);
            let (m1, v) = problem.inner(mid, opts)?;
            let g = problem.irs_power(&v);
            if (g - p_i_eff).abs() <= opts.bisect_tol * p_i_eff {
                best = (m1, mid, v);
                break;
            }
            if g > p_i_eff {
                lo = mid;
            } else {
                hi = mid;
                best = (m1, mid, v);
            }
        }
        best
    };

    let info = QcqpInfo {
        mu1,
        mu2,
        bs_power: problem.bs_power(&v),
        irs_signal_power: problem.irs_power(&v),
        objective: problem.objective(&v),
    };
    Ok((v, info))
}

/// Diagnostics from one MM phase solve.
#[derive(Debug, Clone, Copy)]
pub struct MmInfo {
    pub iterations: usize,
    pub f_initial: f64,
    pub f_final: f64,
    /// Largest observed increase of the surrogate between consecutive
    /// iterates (should be ~0).
    pub max_increase: f64,
}

// Exact eigendecomposition is affordable up to this size; beyond it the
// spectral radius comes from power iteration with a small safety inflation.
const EXACT_EIG_LIMIT: usize = 384;

fn spectral_radius_psd(omega: &CMat) -> Result<f64, SolverError> {
    if omega.nrows() <= EXACT_EIG_LIMIT {
        let (lmax, _) = hermitian_eig_max(omega)?;
        return Ok(lmax.max(0.0));
    }
    let n = omega.nrows();
    let mut v = CVec::from_fn(n, |i, _| Cx::new(1.0, (i % 7) as f64 * 0.1));
    v /= Cx::new(v.norm(), 0.0);
    let mut lambda = 0.0f64;
    for _ in 0..5000 {
        let w = omega * &v;
        let next = v.dotc(&w).re;
        let norm = w.norm();
        if norm == 0.0 {
            return Ok(0.0);
        }
        v = w / Cx::new(norm, 0.0);
        if (next - lambda).abs() <= 1e-12 * next.abs().max(1e-300) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    Ok(lambda.max(0.0) * (1.0 + 1e-6))
}

struct MmSurrogate {
    omega: CMat,
    c_conj: CVec, // conj of the diagonal of C_hat
    lambda_x: f64,
    gamma: f64,
}

impl MmSurrogate {
    fn build(
        w: &CMat,
        u: &CMat,
        v_eff: &CMat,
        cs: &ChannelSet,
        p_i: f64,
        sigma_n_sq: f64,
    ) -> Result<Self, SolverError> {
        let n_i = cs.h().nrows();
        let t = cs.g() * u; // N_I x K
        let s = cs.h() * v_eff; // N_I x K
        let a_hat = &t * w * t.adjoint();
        let b_hat = &s * s.adjoint();
        // c_n = (C_hat)_{nn} with C_hat = -H V W U^H G^H
        let sw = &s * w; // N_I x K
        let c = CVec::from_fn(n_i, |n, _| {
            -(0..w.ncols())
                .map(|j| sw[(n, j)] * t[(n, j)].conj())
                .sum::<Cx>()
        });
        let mut omega = CMat::from_fn(n_i, n_i, |m, n| a_hat[(m, n)] * b_hat[(n, m)]);
        for n in 0..n_i {
            omega[(n, n)] += Cx::new(sigma_n_sq, 0.0) * a_hat[(n, n)];
        }
        let omega = hermitian_part(&omega);
        let lambda_x = spectral_radius_psd(&omega)?;
        if !lambda_x.is_finite() {
            return Err(SolverError::Conditioning {
                message: "non-finite spectral radius in MM step".into(),
            });
        }
        // unit-modulus direction: the reflected power is independent of the
        // phases, so gamma is a constant of the iteration
        let hv_sq = s.norm_squared(); // = ||diag(theta_tilde) H V||_F^2 for unit-modulus
        let gamma = (p_i / (hv_sq + n_i as f64 * sigma_n_sq)).sqrt();
        Ok(MmSurrogate {
            omega,
            c_conj: c.conjugate(),
            lambda_x,
            gamma,
        })
    }

    fn f(&self, theta: &CVec) -> f64 {
        let quad = theta.dotc(&(&self.omega * theta)).re;
        let lin = theta.dotc(&self.c_conj).re;
        quad + 2.0 * lin
    }
}

/// One run of the MM algorithm for the phase vector.
///
/// Starts from the phases of `theta_init`, keeps every iterate on the
/// power-equality sphere (`theta = gamma * theta_tilde` with unit-modulus
/// entries), and stops when the surrogate objective stalls to `mm_tol`.
#[allow(clippy::too_many_arguments)]
pub fn update_theta_mm(
    w: &CMat,
    u: &CMat,
    v_eff: &CMat,
    cs: &ChannelSet,
    p_i: f64,
    sigma_n_sq: f64,
    theta_init: &CVec,
    opts: &WmmseOptions,
) -> Result<(CVec, MmInfo), SolverError> {
    let sur = MmSurrogate::build(w, u, v_eff, cs, p_i, sigma_n_sq)?;
    let n_i = theta_init.len();
    let unit_phase = |z: Cx| -> Cx {
        if z.norm() == 0.0 {
            Cx::new(1.0, 0.0)
        } else {
            Cx::from_polar(1.0, z.arg())
        }
    };
    let mut theta = CVec::from_fn(n_i, |i, _| {
        unit_phase(theta_init[i]) * Cx::new(sur.gamma, 0.0)
    });
    let mut f_prev = sur.f(&theta);
    let f_initial = f_prev;
    let mut max_increase = 0.0f64;
    let mut iterations = 0usize;
    for _ in 0..opts.mm_max_iter {
        iterations += 1;
        let q = &theta * Cx::new(sur.lambda_x, 0.0) - &sur.omega * &theta - &sur.c_conj;
        theta = CVec::from_fn(n_i, |i, _| unit_phase(q[i]) * Cx::new(sur.gamma, 0.0));
        let f = sur.f(&theta);
        max_increase = max_increase.max(f - f_prev);
        let scale = f.abs().max(1e-300);
        if (f - f_prev).abs() / scale <= opts.mm_tol {
            f_prev = f;
            break;
        }
        f_prev = f;
    }
    Ok((
        theta,
        MmInfo {
            iterations,
            f_initial,
            f_final: f_prev,
            max_increase,
        },
    ))
}

/// Objective of the alternating loop: the receiver-free determinant rate.
pub fn objective(
    v_eff: &CMat,
    theta: &CVec,
    cs: &ChannelSet,
    sigma_n_sq: f64,
    sigma_z_sq: f64,
) -> Result<f64, SolverError> {
    rate::rate_determinant_ufree(v_eff, theta, cs, sigma_n_sq, sigma_z_sq)
}

pub fn solve(
    cs: &ChannelSet,
    cfg: &SceneConfig,
    opts: &WmmseOptions,
) -> Result<(BeamformerSolution, SolverReport), SolverError> {
    let start = Instant::now();
    let k = cs.irs_count();
    let n_i = cs.h().nrows();
    let sigma_n_sq = cfg.virtual_irs_noise_w();
    let sigma_z_sq = cfg.user_noise_w;
    let p_b = cfg.bs_power_w;
    let p_i = cfg.irs_power_w;

    // initialization: top right singular vectors of H at full BS power,
    // random unit-modulus phases at IRS power equality
    let (_, _, v_h) = economy_svd(cs.h())?;
    let col_gain = Cx::new((p_b / k as f64).sqrt(), 0.0);
    let v0 = CMat::from_fn(cs.bs_antennas(), k, |i, j| v_h[(i, j)] * col_gain);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let theta_dir = CVec::from_fn(n_i, |_, _| Cx::from_polar(1.0, rng.gen::<f64>() * 2.0 * PI));
    let hv_sq = theta_scaled(&(cs.h() * &v0), &theta_dir).norm_squared();
    let gamma0 = (p_i / (hv_sq + n_i as f64 * sigma_n_sq)).sqrt();

    let mut state = WmmseState {
        v: v0,
        u: CMat::zeros(cs.user_antennas(), k),
        theta: theta_dir * Cx::new(gamma0, 0.0),
        w: CMat::identity(k, k),
        e: CMat::identity(k, k),
        objective_trace: Vec::new(),
    };
    let mut prev =
        objective(&state.v, &state.theta, cs, sigma_n_sq, sigma_z_sq).map_err(|e| e_at(e, 0))?;
    let mut mm_total = 0usize;
    let mut last_qcqp: Option<QcqpInfo> = None;
    let mut converged = false;
    let mut iterations = 0usize;

    for s in 1..=opts.max_outer {
        iterations = s;
        state.u =
            update_u(&state.v, &state.theta, cs, sigma_n_sq, sigma_z_sq).map_err(|e| e_at(e, s))?;
        state.e = mse_matrix(&state.u, &state.v, &state.theta, cs, sigma_n_sq, sigma_z_sq);
        state.w = update_w(&state.e).map_err(|e| e_at(e, s))?;
        let (v_new, qcqp) = update_v_qcqp(
            &state.w,
            &state.u,
            &state.theta,
            cs,
            p_b,
            p_i,
            sigma_n_sq,
            opts,
        )
        .map_err(|e| e_at(e, s))?;
        state.v = v_new;
        last_qcqp = Some(qcqp);

        let (theta_new, mm) = update_theta_mm(
            &state.w,
            &state.u,
            &state.v,
            cs,
            p_i,
            sigma_n_sq,
            &state.theta,
            opts,
        )
        .map_err(|e| e_at(e, s))?;
        mm_total += mm.iterations;
        // keep the old phases when MM fails to improve the surrogate under
        // the refreshed precoder; the old point stays feasible
        let tr_we = |th: &CVec| -> f64 {
            (&state.w * mse_matrix(&state.u, &state.v, th, cs, sigma_n_sq, sigma_z_sq))
                .trace()
                .re
        };
        if tr_we(&theta_new) <= tr_we(&state.theta) {
            state.theta = theta_new;
        }

        // every accepted iterate is feasible
        debug_assert!(state.v.norm_squared() <= p_b * (1.0 + 1e-8));
        debug_assert!({
            let reflected = theta_scaled(&(cs.h() * &state.v), &state.theta).norm_squared()
                + sigma_n_sq * state.theta.norm_squared();
            reflected <= p_i * (1.0 + 1e-8)
        });

        let obj = objective(&state.v, &state.theta, cs, sigma_n_sq, sigma_z_sq)
            .map_err(|e| e_at(e, s))?;
        state.objective_trace.push(obj);
        if (obj - prev).abs() < opts.outer_tol * prev.abs().max(1e-12) {
            converged = true;
            break;
        }
        prev = obj;
    }
    let WmmseState {
        v,
        u,
        theta,
        objective_trace: trace,
        ..
    } = state;

    // constraint residuals (violations only; the IRS constraint need not be
    // tight at a solution)
    let bs_power = v.norm_squared();
    let irs_power =
        theta_scaled(&(cs.h() * &v), &theta).norm_squared() + sigma_n_sq * theta.norm_squared();
    let residual_power = ((bs_power - p_b).max(0.0) / p_b).max((irs_power - p_i).max(0.0) / p_i);

    let nk = cs.elements_per_irs();
    let stream_power: Vec<f64> = (0..k).map(|j| v.column(j).norm_squared()).collect();
    let mut v_unit = v.clone();
    for j in 0..k {
        let n = v_unit.column(j).norm();
        if n > 0.0 {
            for i in 0..v_unit.nrows() {
                v_unit[(i, j)] /= Cx::new(n, 0.0);
            }
        }
    }
    let mut u_unit = u.clone();
    for j in 0..k {
        let n = u_unit.column(j).norm();
        if n > 0.0 {
            for i in 0..u_unit.nrows() {
                u_unit[(i, j)] /= Cx::new(n, 0.0);
            }
        }
    }
    let theta_blocks: Vec<CVec> = (0..k)
        .map(|j| theta.rows(j * nk, nk).into_owned())
        .collect();
    let rho: Vec<f64> = theta_blocks.iter().map(|t| t.norm()).collect();
    let sol = BeamformerSolution {
        method: Method::WmmsePc,
        v: v_unit,
        u: u_unit,
        theta: theta_blocks,
        rho,
        stream_power_w: stream_power,
    };

    let sinr = rate::per_stream_sinr(&sol, cs, cfg.irs_noise_w, cfg.user_noise_w);
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("converged".to_string(), if converged { 1.0 } else { 0.0 });
    diagnostics.insert("mm_iterations_total".to_string(), mm_total as f64);
    diagnostics.insert("bs_power_w".to_string(), bs_power);
    diagnostics.insert("irs_power_w".to_string(), irs_power);
    if let Some(q) = last_qcqp {
        diagnostics.insert("qcqp_mu1".to_string(), q.mu1);
        diagnostics.insert("qcqp_mu2".to_string(), q.mu2);
        let gap = q.mu1 * (q.bs_power - p_b).abs()
            + q.mu2 * (q.irs_signal_power - (p_i - sigma_n_sq * theta.norm_squared())).abs();
        diagnostics.insert("qcqp_slackness_gap".to_string(), gap);
    }
    let report = SolverReport {
        iterations,
        objective_trace: trace,
        per_stream_sinr: sinr,
        residual_nsp: 0.0,
        residual_zf: 0.0,
        residual_power,
        diagnostics,
        solve_seconds: start.elapsed().as_secs_f64(),
    };
    Ok((sol, report))
}

fn e_at(err: SolverError, iteration: usize) -> SolverError {
    err.at_iteration(iteration)
}
