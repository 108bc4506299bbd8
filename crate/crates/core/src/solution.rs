//! Shared solver output types and errors.

use crate::numerics::{CMat, CVec, Cx, NumericsError};
use crate::scene::SceneError;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Beamforming method tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    NspZfPa,
    WmmsePc,
    MaxTrSvd,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::NspZfPa, Method::WmmsePc, Method::MaxTrSvd];

    pub fn tag(&self) -> &'static str {
        match self {
            Method::NspZfPa => "nsp-zf-pa",
            Method::WmmsePc => "wmmse-pc",
            Method::MaxTrSvd => "max-tr-svd",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "nsp-zf-pa" => Ok(Method::NspZfPa),
            "wmmse-pc" => Ok(Method::WmmsePc),
            "max-tr-svd" => Ok(Method::MaxTrSvd),
            other => Err(format!(
                "unknown method '{other}' (expected nsp-zf-pa, wmmse-pc, or max-tr-svd)"
            )),
        }
    }
}

/// Joint transmit / receive / phase-shift design produced by any method.
///
/// Beamformer columns are stored unit-norm; the power each stream actually
/// transmits lives in `stream_power_w`, so the effective precoder is
/// `V diag(sqrt(stream_power_w))`. `theta[k]` carries the IRS-k reflection
/// coefficients with amplitudes included (`Theta_k = diag(theta[k])`).
#[derive(Debug, Clone)]
pub struct BeamformerSolution {
    pub method: Method,
    /// `M x K`, unit-norm columns `v_k`.
    pub v: CMat,
    /// `Nu x K`, unit-norm columns `u_k`.
    pub u: CMat,
    /// Per-IRS reflection vectors `theta_k`, each of length `Nk`.
    pub theta: Vec<CVec>,
    /// Per-IRS amplitude scalars (`||theta_k||` for methods that do not
    /// design them directly).
    pub rho: Vec<f64>,
    /// Transmit power assigned to each stream, watts.
    pub stream_power_w: Vec<f64>,
}

impl BeamformerSolution {
    pub fn stream_count(&self) -> usize {
        self.v.ncols()
    }

    pub fn irs_count(&self) -> usize {
        self.theta.len()
    }

    /// Concatenation of the per-IRS vectors into the virtual large-IRS
    /// phase vector of length `N_I`.
    pub fn stacked_theta(&self) -> CVec {
        let total: usize = self.theta.iter().map(|t| t.len()).sum();
        let mut out = CVec::zeros(total);
        let mut offset = 0;
        for t in &self.theta {
            out.rows_mut(offset, t.len()).copy_from(t);
            offset += t.len();
        }
        out
    }

    /// `V diag(sqrt(stream_power_w))`: the precoder with power folded in.
    pub fn v_effective(&self) -> CMat {
        let mut v = self.v.clone();
        for (k, &p) in self.stream_power_w.iter().enumerate() {
            let scale = Cx::new(p.sqrt(), 0.0);
            v.column_mut(k).scale_mut(1.0);
            for i in 0..v.nrows() {
                v[(i, k)] *= scale;
            }
        }
        v
    }
}

/// Convergence and residual diagnostics emitted by every solver.
#[derive(Debug, Clone, Default)]
pub struct SolverReport {
    /// Outer iterations executed (1 for the closed-form methods).
    pub iterations: usize,
    /// Objective value after each outer iteration (so its length never
    /// exceeds the iteration cap); single entry when closed-form.
    pub objective_trace: Vec<f64>,
    /// Per-stream SINRs of the returned solution, linear scale.
    pub per_stream_sinr: Vec<f64>,
    /// `max_k ||H_{-k} v_k|| / ||H_{-k}||` (null-space projection leakage).
    pub residual_nsp: f64,
    /// `max_{i != k} ||u_i^H G_k^H|| / ||G_k||` (receive zero-forcing leakage).
    pub residual_zf: f64,
    /// Worst relative violation (or equality gap) of the power constraints.
    pub residual_power: f64,
    /// Named scalar diagnostics (dual multipliers, trace objectives, ...).
    pub diagnostics: BTreeMap<String, f64>,
    pub solve_seconds: f64,
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(
        "stream {stream}: desired channel lies in the interferers' span (degenerate null space)"
    )]
    DegenerateNullspace { stream: usize },
    #[error("stream {stream}: cascade gain is zero, stream is blocked")]
    BlockedStream { stream: usize },
    #[error("channel rank {found} is below the {required} required streams")]
    RankDeficient { required: usize, found: usize },
    #[error("spatial DoF {available} below the {required} requested streams")]
    InsufficientDof { required: usize, available: usize },
    #[error("IRS power constraint infeasible: reflected noise floor {floor_w} W exceeds budget {budget_w} W")]
    IrsPowerInfeasible { floor_w: f64, budget_w: f64 },
    #[error("conditioning failure: {message}")]
    Conditioning { message: String },
    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<SolverError>,
    },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

impl SolverError {
    pub fn at_iteration(self, iteration: usize) -> SolverError {
        SolverError::AtIteration {
            iteration,
            source: Box::new(self),
        }
    }
}
