//! Dense complex linear algebra shared by all solvers.
//!
//! Thin contracts over nalgebra's complex kernels: Hermitian inputs are
//! symmetrized before eigendecomposition, singular values come back sorted
//! descending, eigenvector phases are pinned so results are reproducible
//! across runs, and rank decisions use one crate-wide relative cutoff.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

pub type Cx = Complex64;
pub type CMat = DMatrix<Cx>;
pub type CVec = DVector<Cx>;

/// Singular values below `RANK_REL_TOL * sigma_max` are treated as zero when
/// forming pseudo-inverses and projectors.
pub const RANK_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("expected a square matrix, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {context} (expected {expected}, got {found})")]
    Dimension {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("non-finite entry at ({row},{col})")]
    NonFinite { row: usize, col: usize },
    #[error("diagonal weight {index} must be positive, got {value}")]
    NonPositiveDiagonal { index: usize, value: f64 },
    #[error("{0} did not converge")]
    NoConvergence(&'static str),
}

pub fn ensure_finite(a: &CMat) -> Result<(), NumericsError> {
    for col in 0..a.ncols() {
        for row in 0..a.nrows() {
            let z = a[(row, col)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(NumericsError::NonFinite { row, col });
            }
        }
    }
    Ok(())
}

/// `(A + A^H) / 2`.
pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()) * Cx::new(0.5, 0.0)
}

/// Rotates `v` so that its largest-magnitude entry is real and positive.
/// Ties (within 1e-9 relative, so that symmetric magnitude profiles pick the
/// same entry under rounding) go to the lowest index. A zero vector is left
/// untouched.
pub fn fix_phase(v: &mut CVec) {
    let best_mag = v.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
    if best_mag == 0.0 {
        return;
    }
    let best = v
        .iter()
        .position(|z| z.norm() >= best_mag * (1.0 - 1e-9))
        .expect("max exists");
    let pick = v[best];
    let rot = pick.conj() / Cx::new(pick.norm(), 0.0);
    for z in v.iter_mut() {
        *z *= rot;
    }
}

/// Largest eigenvalue and a unit eigenvector of a Hermitian matrix.
///
/// The input is symmetrized as `(A + A^H)/2` before decomposition, so callers
/// may pass matrices that are Hermitian only up to rounding. The returned
/// eigenvector satisfies `||A e - lambda e|| <= 1e-8 ||A||` and carries the
/// deterministic phase of [`fix_phase`].
pub fn hermitian_eig_max(a: &CMat) -> Result<(f64, CVec), NumericsError> {
    if a.nrows() != a.ncols() {
        return Err(NumericsError::NonSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    ensure_finite(a)?;
    let herm = hermitian_part(a);
    let eig = herm
        .try_symmetric_eigen(f64::EPSILON, 0)
        .ok_or(NumericsError::NoConvergence("symmetric eigendecomposition"))?;
    let mut best = 0usize;
    for i in 1..eig.eigenvalues.len() {
        if eig.eigenvalues[i] > eig.eigenvalues[best] {
            best = i;
        }
    }
    let mut vec = eig.eigenvectors.column(best).into_owned();
    let norm = vec.norm();
    if norm > 0.0 {
        vec /= Cx::new(norm, 0.0);
    }
    fix_phase(&mut vec);
    Ok((eig.eigenvalues[best], vec))
}

/// Full singular value decomposition `A = U S V^H` with square unitary
/// factors and singular values sorted descending.
#[derive(Debug, Clone)]
pub struct SvdDecomposition {
    /// `m x m` unitary.
    pub u: CMat,
    /// `min(m, n)` singular values, descending.
    pub singular_values: Vec<f64>,
    /// `n x n` unitary.
    pub v: CMat,
}

impl SvdDecomposition {
    /// Rebuilds `U S V^H`; used by tests and residual checks.
    pub fn reconstruct(&self) -> CMat {
        let m = self.u.nrows();
        let n = self.v.nrows();
        let mut s = CMat::zeros(m, n);
        for (i, &sv) in self.singular_values.iter().enumerate() {
            s[(i, i)] = Cx::new(sv, 0.0);
        }
        &self.u * s * self.v.adjoint()
    }

    /// Count of singular values above `rel_tol * sigma_max`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let smax = self.singular_values.first().copied().unwrap_or(0.0);
        if smax <= 0.0 {
            return 0;
        }
        self.singular_values
            .iter()
            .filter(|&&s| s > rel_tol * smax)
            .count()
    }
}

/// One-sided Jacobi SVD of a tall matrix (`m >= n`): right-multiplies by
/// plane rotations until the columns are mutually orthogonal, which computes
/// singular values to high relative accuracy and handles exactly
/// rank-deficient input without a Gram-matrix squaring step.
fn jacobi_svd_tall(a: &CMat) -> Result<(CMat, Vec<f64>, CMat), NumericsError> {
    let m = a.nrows();
    let n = a.ncols();
    let mut work = a.clone(); // converges to U * diag(s)
    let mut v = CMat::identity(n, n);
    let tol = 1e-15;
    let max_sweeps = 64;
    // columns this far below the matrix scale are rounding debris; pairing
    // them with a parallel large column would rotate forever
    let zero_floor_sq = (1e-15 * a.norm()).powi(2);
    let mut converged = n < 2;
    for _ in 0..max_sweeps {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut app = 0.0f64;
                let mut aqq = 0.0f64;
                let mut apq = Cx::new(0.0, 0.0);
                for i in 0..m {
                    let x = work[(i, p)];
                    let y = work[(i, q)];
                    app += x.norm_sqr();
                    aqq += y.norm_sqr();
                    apq += x.conj() * y;
                }
                let c = apq.norm();
                if c == 0.0
                    || app <= zero_floor_sq
                    || aqq <= zero_floor_sq
                    || c <= tol * (app * aqq).sqrt()
                {
                    continue;
                }
                rotated = true;
                let phase = apq / Cx::new(c, 0.0);
                let tau = (aqq - app) / (2.0 * c);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                let (cs, sn) = (Cx::new(cs, 0.0), Cx::new(sn, 0.0));
                let ph_conj = phase.conj();
                for i in 0..m {
                    let x = work[(i, p)];
                    let y = work[(i, q)] * ph_conj;
                    work[(i, p)] = x * cs - y * sn;
                    work[(i, q)] = x * sn + y * cs;
                }
                for i in 0..n {
                    let x = v[(i, p)];
                    let y = v[(i, q)] * ph_conj;
                    v[(i, p)] = x * cs - y * sn;
                    v[(i, q)] = x * sn + y * cs;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(NumericsError::NoConvergence("Jacobi SVD"));
    }

    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n).map(|j| work.column(j).norm()).collect();
    order.sort_by(|&i, &j| {
        norms[j]
            .partial_cmp(&norms[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let s: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let v_sorted = CMat::from_fn(n, n, |i, j| v[(i, order[j])]);
    // normalize nonzero columns into U; exactly-zero ones get a deterministic
    // orthonormal fill at the tail
    let mut u_cols: Vec<CVec> = Vec::with_capacity(n);
    for (rank_pos, &j) in order.iter().enumerate() {
        if s[rank_pos] > 0.0 {
            u_cols.push(work.column(j).into_owned() / Cx::new(s[rank_pos], 0.0));
        }
    }
    let u_cols = extend_orthonormal(u_cols, m, n);
    let u = CMat::from_fn(m, n, |i, j| u_cols[j][i]);
    Ok((u, s, v_sorted))
}

/// Thin SVD: `u` is `m x r`, `v` is `n x r` with `r = min(m, n)`, singular
/// values descending. Cheaper than [`svd`] when the unitary completion is not
/// needed (projectors, pseudo-inverses of wide stacks).
pub fn economy_svd(a: &CMat) -> Result<(CMat, Vec<f64>, CMat), NumericsError> {
    ensure_finite(a)?;
    if a.nrows() >= a.ncols() {
        jacobi_svd_tall(a)
    } else {
        let (u, s, v) = jacobi_svd_tall(&a.adjoint())?;
        Ok((v, s, u))
    }
}

/// Extends `cols` (orthonormal vectors in `C^dim`) to `target` vectors by
/// repeatedly adding the standard basis vector with the largest residual.
/// Deterministic.
fn extend_orthonormal(mut cols: Vec<CVec>, dim: usize, target: usize) -> Vec<CVec> {
    while cols.len() < target {
        let mut best: Option<(f64, CVec)> = None;
        for i in 0..dim {
            let mut w = CVec::zeros(dim);
            w[i] = Cx::new(1.0, 0.0);
            for _ in 0..2 {
                for b in &cols {
                    let coeff = b.dotc(&w);
                    w -= b * coeff;
                }
            }
            let n = w.norm();
            if best.as_ref().map_or(true, |(bn, _)| n > *bn) {
                best = Some((n, w));
            }
        }
        let (n, w) = best.expect("nonzero dimension");
        cols.push(w / Cx::new(n, 0.0));
    }
    cols
}

fn complete_unitary(thin: &CMat) -> CMat {
    let m = thin.nrows();
    let cols: Vec<CVec> = (0..thin.ncols())
        .map(|j| thin.column(j).into_owned())
        .collect();
    let cols = extend_orthonormal(cols, m, m);
    CMat::from_fn(m, m, |i, j| cols[j][i])
}

/// Full SVD with unitary `U` (`m x m`) and `V` (`n x n`).
///
/// Reconstruction satisfies `||A - U S V^H|| <= 1e-8 ||A||`.
pub fn svd(a: &CMat) -> Result<SvdDecomposition, NumericsError> {
    let (u_thin, s, v_thin) = economy_svd(a)?;
    Ok(SvdDecomposition {
        u: complete_unitary(&u_thin),
        singular_values: s,
        v: complete_unitary(&v_thin),
    })
}

/// Moore-Penrose pseudo-inverse via SVD.
///
/// Singular values below `RANK_REL_TOL * sigma_max` are treated as zero, so
/// rank-deficient and even all-zero inputs are fine.
pub fn pseudo_inverse(a: &CMat) -> Result<CMat, NumericsError> {
    let (u, s, v) = economy_svd(a)?;
    let smax = s.first().copied().unwrap_or(0.0);
    let cutoff = RANK_REL_TOL * smax;
    let r = s.len();
    let mut sinv = CMat::zeros(r, r);
    for (i, &sv) in s.iter().enumerate() {
        if sv > cutoff {
            sinv[(i, i)] = Cx::new(1.0 / sv, 0.0);
        }
    }
    Ok(&v * sinv * u.adjoint())
}

/// Maximizer of `(x^H Num x) / (x^H diag(den) x)` over unit vectors.
///
/// Whitens by the diagonal, takes the top eigenvector there, and maps back;
/// the result is unit-norm with the [`fix_phase`] convention.
pub fn generalized_rayleigh_max(num: &CMat, den_diag: &[f64]) -> Result<CVec, NumericsError> {
    if num.nrows() != num.ncols() {
        return Err(NumericsError::NonSquare {
            rows: num.nrows(),
            cols: num.ncols(),
        });
    }
    if den_diag.len() != num.nrows() {
        return Err(NumericsError::Dimension {
            context: "generalized Rayleigh diagonal",
            expected: num.nrows(),
            found: den_diag.len(),
        });
    }
    for (index, &value) in den_diag.iter().enumerate() {
        if !value.is_finite() || value <= 0.0 {
            return Err(NumericsError::NonPositiveDiagonal { index, value });
        }
    }
    let isqrt: Vec<f64> = den_diag.iter().map(|d| 1.0 / d.sqrt()).collect();
    let n = num.nrows();
    let whitened = CMat::from_fn(n, n, |i, j| num[(i, j)] * isqrt[i] * isqrt[j]);
    let (_, e) = hermitian_eig_max(&whitened)?;
    let mut x = CVec::from_fn(n, |i, _| e[i] * isqrt[i]);
    let norm = x.norm();
    if norm > 0.0 {
        x /= Cx::new(norm, 0.0);
    }
    fix_phase(&mut x);
    Ok(x)
}

/// Minimum-norm solution of `A X = B` for Hermitian positive semidefinite
/// `A`, dropping eigenvalues below `rel_tol * lambda_max`.
pub fn solve_hermitian_psd(a: &CMat, rhs: &CMat, rel_tol: f64) -> Result<CMat, NumericsError> {
    if a.nrows() != a.ncols() {
        return Err(NumericsError::NonSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    let eig = hermitian_part(a)
        .try_symmetric_eigen(f64::EPSILON, 0)
        .ok_or(NumericsError::NoConvergence("symmetric eigendecomposition"))?;
    let lmax = eig
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, &l| acc.max(l.abs()));
    if lmax == 0.0 {
        return Ok(CMat::zeros(a.nrows(), rhs.ncols()));
    }
    let cutoff = rel_tol * lmax;
    let mut x = CMat::zeros(a.nrows(), rhs.ncols());
    for i in 0..eig.eigenvalues.len() {
        let l = eig.eigenvalues[i];
        if l > cutoff {
            let q = eig.eigenvectors.column(i);
            let coeff = q.adjoint() * rhs;
            x += q * coeff * Cx::new(1.0 / l, 0.0);
        }
    }
    Ok(x)
}
