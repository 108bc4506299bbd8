//! Low-complexity baseline: beamformers from the channel SVDs, phase vector
//! from a generalized Rayleigh quotient that maximizes the received signal
//! trace under the IRS power constraint.
//!
//! No iteration and no randomness; the whole design is three
//! decompositions.

use crate::numerics::{economy_svd, generalized_rayleigh_max, CMat, CVec, Cx};
use crate::rate;
use crate::scene::{dof_bound, ChannelSet, SceneConfig, RANK_TOL};
use crate::solution::{BeamformerSolution, Method, SolverError, SolverReport};
use std::time::Instant;

/// Symbol convention used inside the phase-vector objective.
///
/// The phase shifts cannot track individual symbols, so the default designs
/// for the symbol ensemble (`E[s s^H] = I`), the same reading the alternating
/// method uses for its power constraint. `Fixed` optimizes for one pilot
/// vector instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SymbolMode {
    /// Fixed pilot `s = (1, ..., 1) / sqrt(K)`.
    Fixed,
    /// Average the objective over unit-power symbols (`E[s s^H] = I`).
    #[default]
    Averaged,
}

/// Transmit matrix from the top right singular vectors of `H` (scaled so
/// `||V||_F^2 = P_B`, uniform per column) and receive matrix from the top
/// left singular vectors of `G^H` (unit columns).
pub fn svd_beamformers(
    h: &CMat,
    g: &CMat,
    k: usize,
    p_b: f64,
) -> Result<(CMat, CMat), SolverError> {
    let (_, s_h, v_h) = economy_svd(h)?;
    let rank_h = numerical_rank(&s_h);
    if rank_h < k {
        return Err(SolverError::RankDeficient {
            required: k,
            found: rank_h,
        });
    }
    let gh = g.adjoint();
    let (u_g, s_g, _) = economy_svd(&gh)?;
    let rank_g = numerical_rank(&s_g);
    if rank_g < k {
        return Err(SolverError::RankDeficient {
            required: k,
            found: rank_g,
        });
    }
    let col_gain = Cx::new((p_b / k as f64).sqrt(), 0.0);
    let v = CMat::from_fn(h.ncols(), k, |i, j| v_h[(i, j)] * col_gain);
    let u = CMat::from_fn(gh.nrows(), k, |i, j| u_g[(i, j)]);
    Ok((v, u))
}

fn numerical_rank(s: &[f64]) -> usize {
    let smax = s.first().copied().unwrap_or(0.0);
    if smax <= 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > RANK_TOL * smax).count()
}

/// Phase vector maximizing the received signal trace.
///
/// Solves the generalized Rayleigh quotient with diagonal denominator
/// `(diag(HVs)^H diag(HVs) + sigma_n^2 I) / P_I` and rescales so the IRS
/// power constraint holds with equality. Returns `(theta, rho, trace)`.
pub fn theta_max_trace(
    h: &CMat,
    g: &CMat,
    v: &CMat,
    s_mode: SymbolMode,
    p_i: f64,
    sigma_n_sq: f64,
) -> Result<(CVec, f64, f64), SolverError> {
    let n_i = h.nrows();
    let gg = g * g.adjoint(); // N_I x N_I
    let (num, den): (CMat, Vec<f64>) = match s_mode {
        SymbolMode::Fixed => {
            let k = v.ncols();
            let s = CVec::from_element(k, Cx::new(1.0 / (k as f64).sqrt(), 0.0));
            let w = h * v * s; // N_I
            if w.norm() < 1e-15 {
                return Err(SolverError::Conditioning {
                    message: "effective signal H V s is zero".into(),
                });
            }
            let num = CMat::from_fn(n_i, n_i, |m, n| w[m].conj() * gg[(m, n)] * w[n]);
            let den = w
                .iter()
                .map(|z| (z.norm_sqr() + sigma_n_sq) / p_i)
                .collect();
            (num, den)
        }
        SymbolMode::Averaged => {
            let hv = h * v;
            let b = &hv * hv.adjoint(); // E[w w^H]
            if b.norm() < 1e-30 {
                return Err(SolverError::Conditioning {
                    message: "effective signal H V is zero".into(),
                });
            }
            let num = CMat::from_fn(n_i, n_i, |m, n| gg[(m, n)] * b[(n, m)]);
            let den = (0..n_i)
                .map(|n| (b[(n, n)].re + sigma_n_sq) / p_i)
                .collect();
            (num, den)
        }
    };
    let theta_hat = generalized_rayleigh_max(&num, &den)?;
    let constraint: f64 = theta_hat
        .iter()
        .zip(den.iter())
        .map(|(t, d)| t.norm_sqr() * d * p_i)
        .sum();
    let rho = (p_i / constraint).sqrt();
    let theta = &theta_hat * Cx::new(rho, 0.0);
    let trace = {
        let q = theta.dotc(&(&num * &theta));
        q.re
    };
    Ok((theta, rho, trace))
}

/// Composes the SVD beamformers with the max-trace phase vector.
pub fn solve(
    cs: &ChannelSet,
    cfg: &SceneConfig,
) -> Result<(BeamformerSolution, SolverReport), SolverError> {
    solve_with_mode(cs, cfg, SymbolMode::default())
}

pub fn solve_with_mode(
    cs: &ChannelSet,
    cfg: &SceneConfig,
    s_mode: SymbolMode,
) -> Result<(BeamformerSolution, SolverReport), SolverError> {
    let start = Instant::now();
    let k = cs.irs_count();
    let dof = dof_bound(cs, cs.bs_antennas(), cs.user_antennas(), k);
    if dof.bound < k || dof.deficient {
        return Err(SolverError::InsufficientDof {
            required: k,
            available: dof.bound.min(dof.rank_h).min(dof.rank_g),
        });
    }
    let sigma_n_sq = cfg.virtual_irs_noise_w();
    let (v_scaled, u) = svd_beamformers(cs.h(), cs.g(), k, cfg.bs_power_w)?;
    let (theta, rho_hat, trace) = theta_max_trace(
        cs.h(),
        cs.g(),
        &v_scaled,
        s_mode,
        cfg.irs_power_w,
        sigma_n_sq,
    )?;

    // store unit columns + per-stream powers
    let nk = cs.elements_per_irs();
    let stream_power: Vec<f64> = (0..k).map(|j| v_scaled.column(j).norm_squared()).collect();
    let mut v_unit = v_scaled.clone();
    for j in 0..k {
        let n = v_unit.column(j).norm();
        if n > 0.0 {
            for i in 0..v_unit.nrows() {
                v_unit[(i, j)] /= Cx::new(n, 0.0);
            }
        }
    }
    let theta_blocks: Vec<CVec> = (0..k)
        .map(|j| theta.rows(j * nk, nk).into_owned())
        .collect();
    let rho: Vec<f64> = theta_blocks.iter().map(|t| t.norm()).collect();
    let sol = BeamformerSolution {
        method: Method::MaxTrSvd,
        v: v_unit,
        u,
        theta: theta_blocks,
        rho,
        stream_power_w: stream_power,
    };

    // recompute the power constraint from scratch
    let residual_power = {
        let hv = cs.h() * sol.v_effective();
        let s = match s_mode {
            SymbolMode::Fixed => {
                let s = CVec::from_element(k, Cx::new(1.0 / (k as f64).sqrt(), 0.0));
                let w = &hv * s;
                w.iter()
                    .zip(theta.iter())
                    .map(|(z, t)| (z * t).norm_sqr())
                    .sum::<f64>()
            }
            SymbolMode::Averaged => rate::theta_scaled(&hv, &theta).norm_squared(),
        };
        let reflected = s + sigma_n_sq * theta.norm_squared();
        (reflected - cfg.irs_power_w).abs() / cfg.irs_power_w
    };

    let sinr = rate::per_stream_sinr(&sol, cs, cfg.irs_noise_w, cfg.user_noise_w);
    let sum_rate = rate::rate_determinant(
        &sol.u,
        &sol.v_effective(),
        &theta,
        cs,
        sigma_n_sq,
        cfg.user_noise_w,
    )?;
    let mut diagnostics = std::collections::BTreeMap::new();
    diagnostics.insert("trace_objective".to_string(), trace);
    diagnostics.insert("rho_hat".to_string(), rho_hat);
    let report = SolverReport {
        iterations: 1,
        objective_trace: vec![sum_rate],
        per_stream_sinr: sinr,
        residual_nsp: 0.0,
        residual_zf: 0.0,
        residual_power,
        diagnostics,
        solve_seconds: start.elapsed().as_secs_f64(),
    };
    Ok((sol, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{synthesize_channels, SceneConfig};
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn diagonal_channel_selects_strongest_columns() {
        // H = diag(1, 3, 2) padded to 3x3, G arbitrary full rank
        let h = CMat::from_fn(3, 3, |i, j| {
            if i == j {
                Cx::new([1.0, 3.0, 2.0][i], 0.0)
            } else {
                Cx::new(0.0, 0.0)
            }
        });
        let g = CMat::identity(3, 3);
        let (v, _) = svd_beamformers(&h, &g, 2, 4.0).unwrap();
        // columns ordered by singular value: e_2 then e_3, scaled to sqrt(2)
        assert_relative_eq!(v.column(0)[1].norm(), 2f64.sqrt(), epsilon = 1e-10);
        assert_relative_eq!(v.column(1)[2].norm(), 2f64.sqrt(), epsilon = 1e-10);
        assert_relative_eq!(v.norm_squared(), 4.0, epsilon = 1e-10);
    }

    #[test]
    fn transmit_power_always_equals_budget() {
        let cfg = SceneConfig::default();
        let cs = synthesize_channels(&cfg).unwrap();
        let (v, u) = svd_beamformers(cs.h(), cs.g(), 4, cfg.bs_power_w).unwrap();
        assert_relative_eq!(v.norm_squared(), cfg.bs_power_w, max_relative = 1e-10);
        for j in 0..4 {
            assert_relative_eq!(u.column(j).norm(), 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn transmit_spans_principal_subspace() {
        let cfg = SceneConfig::default();
        let cs = synthesize_channels(&cfg).unwrap();
        let (v, _) = svd_beamformers(cs.h(), cs.g(), 4, cfg.bs_power_w).unwrap();
        let (_, _, v_ref) = economy_svd(cs.h()).unwrap();
        let top = CMat::from_fn(v_ref.nrows(), 4, |i, j| v_ref[(i, j)]);
        // principal angles via singular values of the cross-Gram of
        // orthonormalized bases
        let mut v_ortho = v.clone();
        for j in 0..4 {
            let n = v_ortho.column(j).norm();
            for i in 0..v_ortho.nrows() {
                v_ortho[(i, j)] /= Cx::new(n, 0.0);
            }
        }
        let cross = top.adjoint() * &v_ortho;
        let (_, s, _) = economy_svd(&cross).unwrap();
        for sv in s {
            assert!((sv - 1.0).abs() <= 1e-8, "principal angle too large: {sv}");
        }
    }

    #[test]
    fn rank_deficiency_detected() {
        let cfg = SceneConfig {
            irs_count: 1,
            ..SceneConfig::default()
        };
        let cs = synthesize_channels(&cfg).unwrap();
        assert!(matches!(
            svd_beamformers(cs.h(), cs.g(), 2, 1.0),
            Err(SolverError::RankDeficient {
                required: 2,
                found: 1
            })
        ));
    }

    #[test]
    fn theta_single_element_closed_form() {
        let h = CMat::from_element(1, 1, Cx::new(0.4, -0.2));
        let g = CMat::from_element(1, 1, Cx::new(0.9, 0.1));
        let v = CMat::from_element(1, 1, Cx::new(1.2, 0.0));
        let p_i = 0.05;
        let s_n = 1e-6;
        let (theta, _, _) = theta_max_trace(&h, &g, &v, SymbolMode::Fixed, p_i, s_n).unwrap();
        let hvs = h[(0, 0)] * v[(0, 0)]; // s = 1
        assert_relative_eq!(
            theta[0].norm_sqr(),
            p_i / (hvs.norm_sqr() + s_n),
            max_relative = 1e-10
        );
    }

    #[test]
    fn theta_quotient_beats_random_sampling() {
        let cfg = SceneConfig::default();
        let cs = synthesize_channels(&cfg).unwrap();
        let (v, _) = svd_beamformers(cs.h(), cs.g(), 4, cfg.bs_power_w).unwrap();
        let s_n = cfg.virtual_irs_noise_w();
        let (theta, rho, _) =
            theta_max_trace(cs.h(), cs.g(), &v, SymbolMode::Fixed, cfg.irs_power_w, s_n).unwrap();
        let theta_hat = &theta / Cx::new(rho, 0.0);

        let k = 4usize;
        let s = CVec::from_element(k, Cx::new(0.5, 0.0));
        let w = cs.h() * &v * s;
        let gg = cs.g() * cs.g().adjoint();
        let n_i = w.len();
        let quotient = |x: &CVec| -> f64 {
            let num: Cx = (0..n_i)
                .map(|m| {
                    (0..n_i)
                        .map(|n| x[m].conj() * w[m].conj() * gg[(m, n)] * w[n] * x[n])
                        .sum::<Cx>()
                })
                .sum();
            let den: f64 = x
                .iter()
                .zip(w.iter())
                .map(|(xi, wi)| xi.norm_sqr() * (wi.norm_sqr() + s_n) / cfg.irs_power_w)
                .sum();
            num.re / den
        };
        let q_star = quotient(&theta_hat);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10_000 {
            let mut cand = CVec::from_fn(n_i, |_, _| {
                Cx::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
            });
            cand /= Cx::new(cand.norm(), 0.0);
            assert!(quotient(&cand) <= q_star * (1.0 + 1e-9));
        }
    }

    #[test]
    fn irs_power_scaling_scales_amplitude_only() {
        let cfg = SceneConfig::default();
        let cs = synthesize_channels(&cfg).unwrap();
        let (v, _) = svd_beamformers(cs.h(), cs.g(), 4, cfg.bs_power_w).unwrap();
        let s_n = cfg.virtual_irs_noise_w();
        let (t1, r1, _) =
            theta_max_trace(cs.h(), cs.g(), &v, SymbolMode::Fixed, 0.04, s_n).unwrap();
        let (t2, r2, _) =
            theta_max_trace(cs.h(), cs.g(), &v, SymbolMode::Fixed, 0.16, s_n).unwrap();
        assert_relative_eq!(r2, 2.0 * r1, max_relative = 1e-9);
        let d1 = &t1 / Cx::new(r1, 0.0);
        let d2 = &t2 / Cx::new(r2, 0.0);
        assert!((d1 - d2).norm() < 1e-9);
    }

    #[test]
    fn solve_meets_power_constraint_and_reports_trace() {
        let cfg = SceneConfig::default();
        let cs = synthesize_channels(&cfg).unwrap();
        let (sol, report) = solve(&cs, &cfg).unwrap();
        assert!(report.residual_power <= 1e-9);
        assert_eq!(sol.theta.len(), 4);

        // ensemble trace objective recomputed independently:
        // E_s || G^H Theta H V s ||^2 = || G^H Theta H V ||_F^2
        let theta = sol.stacked_theta();
        let hv = cs.h() * sol.v_effective();
        let eff = CMat::from_fn(hv.nrows(), hv.ncols(), |n, j| theta[n] * hv[(n, j)]);
        let trace = (cs.g().adjoint() * eff).norm_squared();
        assert_relative_eq!(
            report.diagnostics["trace_objective"],
            trace,
            max_relative = 1e-10
        );
    }

    #[test]
    fn fixed_pilot_mode_recomputed_trace_and_power() {
        let cfg = SceneConfig::default();
        let cs = synthesize_channels(&cfg).unwrap();
        let (sol, report) = solve_with_mode(&cs, &cfg, SymbolMode::Fixed).unwrap();
        assert!(report.residual_power <= 1e-9);

        let theta = sol.stacked_theta();
        let k = 4usize;
        let s = CVec::from_element(k, Cx::new(0.5, 0.0));
        let w = cs.h() * sol.v_effective() * s;
        let eff: CVec = CVec::from_fn(w.len(), |n, _| theta[n] * w[n]);
        let trace = (cs.g().adjoint() * eff).norm_squared();
        assert_relative_eq!(
            report.diagnostics["trace_objective"],
            trace,
            max_relative = 1e-10
        );
    }

    #[test]
    fn single_irs_reduces_to_matched_design() {
        let cfg = SceneConfig {
            irs_count: 1,
            elements_per_irs: 16,
            ..SceneConfig::default()
        };
        let cs = synthesize_channels(&cfg).unwrap();
        let (sol, report) = solve(&cs, &cfg).unwrap();
        assert_eq!(sol.stream_count(), 1);
        assert!(report.objective_trace[0] > 0.0);
    }
}
