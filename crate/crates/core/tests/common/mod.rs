//! Shared test oracles. Everything here is deliberately independent of the
//! library's solver paths: the projected-gradient oracle only uses matrix
//! products and convex projections, and channel instances are built directly
//! from random blocks.

#![allow(dead_code)] // shared by several test binaries, each using a subset

use mirsim::numerics::{CMat, Cx};
use mirsim::scene::ChannelSet;
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_cmat(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        Cx::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    })
}

pub fn random_pd(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    let b = random_cmat(rng, n, n);
    let h = &b * b.adjoint() + CMat::identity(n, n) * Cx::new(0.4, 0.0);
    (&h + h.adjoint()) * Cx::new(0.5, 0.0)
}

pub fn random_channels(
    rng: &mut ChaCha8Rng,
    k: usize,
    nk: usize,
    m: usize,
    nu: usize,
) -> ChannelSet {
    let h_blocks = (0..k).map(|_| random_cmat(rng, nk, m)).collect();
    let g_blocks = (0..k).map(|_| random_cmat(rng, nk, nu)).collect();
    ChannelSet::from_blocks(h_blocks, g_blocks).unwrap()
}

/// Quadratic program data shared by the solver under test and the oracle:
/// minimize `Tr(V^H A V) - 2 Re Tr(rhs^H V)` subject to
/// `||V||_F^2 <= p_b` and `||lh V||_F^2 <= p_i_eff`.
pub struct QcqpData {
    pub a: CMat,
    pub rhs: CMat,
    pub lh: CMat,
    pub p_b: f64,
    pub p_i_eff: f64,
}

pub fn qcqp_objective(data: &QcqpData, v: &CMat) -> f64 {
    (v.adjoint() * &data.a * v).trace().re - 2.0 * (data.rhs.adjoint() * v).trace().re
}

fn hermitian_eigen(a: &CMat) -> (Vec<f64>, CMat) {
    let sym = (a + a.adjoint()) * Cx::new(0.5, 0.0);
    let eig = sym
        .try_symmetric_eigen(f64::EPSILON, 0)
        .expect("eigendecomposition");
    (eig.eigenvalues.as_slice().to_vec(), eig.eigenvectors)
}

fn project_frobenius_ball(v: &CMat, cap: f64) -> CMat {
    let p = v.norm_squared();
    if p <= cap {
        v.clone()
    } else {
        v * Cx::new((cap / p).sqrt(), 0.0)
    }
}

/// Exact projection onto `{X : ||lh X||_F^2 <= cap}` in the eigenbasis of
/// `lh^H lh`: shrink row `i` by `1/(1 + lambda d_i)` with `lambda` from a
/// scalar bisection.
fn project_irs_set(d_vals: &[f64], d_vecs: &CMat, v: &CMat, cap: f64) -> CMat {
    let y = d_vecs.adjoint() * v;
    let row_sq: Vec<f64> = (0..y.nrows()).map(|i| y.row(i).norm_squared()).collect();
    let power = |lam: f64| -> f64 {
        d_vals
            .iter()
            .zip(row_sq.iter())
            .map(|(&d, &r)| d.max(0.0) * r / (1.0 + lam * d.max(0.0)).powi(2))
            .sum()
    };
    if power(0.0) <= cap {
        return v.clone();
    }
    let mut hi = 1.0;
    while power(hi) > cap {
        hi *= 10.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let p = power(mid);
        if (p - cap).abs() <= 1e-14 * cap {
            hi = mid;
            break;
        }
        if p > cap {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lam = hi;
    let mut shrunk = y;
    for i in 0..shrunk.nrows() {
        let s = Cx::new(1.0 / (1.0 + lam * d_vals[i].max(0.0)), 0.0);
        for j in 0..shrunk.ncols() {
            shrunk[(i, j)] *= s;
        }
    }
    d_vecs * shrunk
}

/// Dykstra's alternating-projection scheme for the intersection of the two
/// constraint sets.
fn project_intersection(d_vals: &[f64], d_vecs: &CMat, v0: &CMat, p_b: f64, p_i_eff: f64) -> CMat {
    let mut x = v0.clone();
    let mut p = DMatrix::zeros(v0.nrows(), v0.ncols());
    let mut q = DMatrix::zeros(v0.nrows(), v0.ncols());
    for _ in 0..500 {
        let y = project_frobenius_ball(&(&x + &p), p_b);
        let p_new = &x + &p - &y;
        let x_new = project_irs_set(d_vals, d_vecs, &(&y + &q), p_i_eff);
        let q_new = &y + &q - &x_new;
        let moved = (&x_new - &x).norm();
        x = x_new;
        p = p_new;
        q = q_new;
        if moved <= 1e-14 * x.norm().max(1.0) {
            break;
        }
    }
    x
}

/// Projected-gradient solver for [`QcqpData`], run until the objective stalls
/// to `rel_tol`. Independent of the dual-bisection path under test.
pub fn projected_gradient_qcqp(data: &QcqpData, rel_tol: f64, max_iter: usize) -> (CMat, f64) {
    let (a_vals, _) = hermitian_eigen(&data.a);
    let lmax = a_vals
        .iter()
        .fold(0.0f64, |m, &l| m.max(l.abs()))
        .max(1e-12);
    let d = data.lh.adjoint() * &data.lh;
    let (d_vals, d_vecs) = hermitian_eigen(&d);

    let mut v = project_intersection(
        &d_vals,
        &d_vecs,
        &DMatrix::zeros(data.a.nrows(), data.rhs.ncols()),
        data.p_b,
        data.p_i_eff,
    );
    let mut f_prev = qcqp_objective(data, &v);
    let step = Cx::new(1.0 / lmax, 0.0);
    for it in 1..=max_iter {
        let grad = &data.a * &v - &data.rhs;
        let cand = &v - grad * step;
        v = project_intersection(&d_vals, &d_vecs, &cand, data.p_b, data.p_i_eff);
        if it % 100 == 0 {
            let f = qcqp_objective(data, &v);
            if (f_prev - f).abs() <= rel_tol * f.abs().max(1e-300) {
                return (v, f);
            }
            f_prev = f;
        }
    }
    let f = qcqp_objective(data, &v);
    (v, f)
}

/// One PASS/FAIL line per acceptance criterion.
pub fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "acceptance {criterion}: {} - {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "acceptance {criterion} failed: {detail}");
}
