//! Experiment harness: declarative sweeps over scene parameters, CSV
//! emission, convergence traces, and seeded determinism.
//!
//! A sweep is a cartesian product of axis values, methods, and repetitions.
//! Every point gets the deterministic seed `base_seed XOR point_index`, and
//! points run independently on a work pool; rows are sorted afterwards, so
//! the output is byte-identical across reruns of the same spec. Wall-clock
//! timing is zeroed by default for exactly that reason; opt into
//! [`TimingMode::Measured`] when profiling.

use crate::rate;
use crate::scene::{synthesize_channels, SceneConfig, SceneError};
use crate::solution::{Method, SolverReport};
use crate::wmmse_pc::WmmseOptions;
use crate::{max_tr_svd, nsp_zf_pa, wmmse_pc};
use rayon::prelude::*;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Sweep axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Total IRS elements `N_I` at fixed `K` (so `Nk = N_I / K`).
    TotalElements,
    /// IRS count `K` at fixed `N_I`; positions re-derived per `K`.
    IrsCount,
    /// IRS power budget `P_I` in watts.
    IrsPower,
    /// Power split `beta`: `P_I = beta P_T`, `P_B = (1 - beta) P_T`.
    Beta,
    /// BS-user distance in meters; the user moves along the x-axis.
    Distance,
}

impl Axis {
    pub fn name(&self) -> &'static str {
        match self {
            Axis::TotalElements => "N_I",
            Axis::IrsCount => "K",
            Axis::IrsPower => "P_I",
            Axis::Beta => "beta",
            Axis::Distance => "distance",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "n_i" | "ni" => Ok(Axis::TotalElements),
            "k" => Ok(Axis::IrsCount),
            "p_i" | "pi" => Ok(Axis::IrsPower),
            "beta" => Ok(Axis::Beta),
            "distance" | "d" => Ok(Axis::Distance),
            other => Err(format!(
                "unknown axis '{other}' (expected N_I, K, P_I, beta, or distance)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimingMode {
    /// Report zero runtimes so identical sweeps produce identical bytes.
    #[default]
    Zeroed,
    Measured,
}

/// Everything needed to reproduce one sweep.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub base: SceneConfig,
    pub methods: Vec<Method>,
    pub axis: Axis,
    pub values: Vec<f64>,
    /// Total power for beta sweeps, watts.
    pub p_total_w: f64,
    pub repetitions: usize,
    pub base_seed: u64,
    pub timing: TimingMode,
    pub wmmse: WmmseOptions,
}

impl ExperimentSpec {
    pub fn new(base: SceneConfig, methods: Vec<Method>, axis: Axis, values: Vec<f64>) -> Self {
        ExperimentSpec {
            base,
            methods,
            axis,
            values,
            p_total_w: 1.0,
            repetitions: 1,
            base_seed: 1,
            timing: TimingMode::default(),
            wmmse: WmmseOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |m: String| Err(HarnessError::Config(m));
        if self.methods.is_empty() {
            return fail("at least one method is required".into());
        }
        if self.values.is_empty() {
            return fail("at least one axis value is required".into());
        }
        if self.repetitions == 0 {
            return fail("repetitions must be >= 1".into());
        }
        if !self.values.windows(2).all(|w| w[0] < w[1]) {
            return fail("axis values must be strictly increasing".into());
        }
        for &v in &self.values {
            match self.axis {
                Axis::TotalElements => {
                    let k = self.base.irs_count;
                    if v <= 0.0 || v.fract() != 0.0 {
                        return fail(format!("N_I value {v} must be a positive integer"));
                    }
                    if (v as usize) % k != 0 {
                        return fail(format!("N_I value {v} is not divisible by K = {k}"));
                    }
                }
                Axis::IrsCount => {
                    if v <= 0.0 || v.fract() != 0.0 {
                        return fail(format!("K value {v} must be a positive integer"));
                    }
                    let k = v as usize;
                    let n_i = self.base.total_elements();
                    if n_i % k != 0 {
                        return fail(format!("N_I = {n_i} is not divisible by K value {k}"));
                    }
                    if self.base.bs_antennas < k || self.base.user_antennas < k {
                        return fail(format!(
                            "K value {k} exceeds the antenna counts (M = {}, Nu = {})",
                            self.base.bs_antennas, self.base.user_antennas
                        ));
                    }
                }
                Axis::IrsPower => {
                    if v <= 0.0 {
                        return fail(format!("P_I value {v} must be positive (watts)"));
                    }
                }
                Axis::Beta => {
                    if !(v > 0.0 && v < 1.0) {
                        return fail(format!("beta value {v} must lie in (0, 1)"));
                    }
                    if self.p_total_w <= 0.0 {
                        return fail("p_total_w must be positive for beta sweeps".into());
                    }
                }
                Axis::Distance => {
                    if v <= 0.0 {
                        return fail(format!("distance value {v} must be positive (meters)"));
                    }
                }
            }
        }
        self.base.validate()?;
        Ok(())
    }

    /// Scene for one sweep point.
    fn scene_for(&self, value: f64, seed: u64) -> SceneConfig {
        let mut cfg = self.base.clone();
        cfg.seed = seed;
        match self.axis {
            Axis::TotalElements => {
                cfg.elements_per_irs = value as usize / cfg.irs_count;
            }
            Axis::IrsCount => {
                let k = value as usize;
                cfg.elements_per_irs = self.base.total_elements() / k;
                cfg.irs_count = k;
                cfg.irs_pos = None;
                cfg.per_irs_power_split = None;
            }
            Axis::IrsPower => {
                cfg.irs_power_w = value;
            }
            Axis::Beta => {
                cfg.irs_power_w = value * self.p_total_w;
                cfg.bs_power_w = (1.0 - value) * self.p_total_w;
            }
            Axis::Distance => {
                cfg.user_pos = [cfg.bs_pos[0] + value, cfg.bs_pos[1]];
            }
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RowStatus {
    Ok,
    Failed(String),
}

impl RowStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, RowStatus::Ok)
    }
}

/// One solved sweep point.
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub method: Method,
    pub axis: Axis,
    pub axis_value: f64,
    /// Method-native sum rate: per-stream for the closed-form design,
    /// determinant rate for the virtual-IRS designs.
    pub sum_rate_bps_hz: f64,
    /// Determinant rate of the solution under the virtual-IRS noise model,
    /// comparable across methods.
    pub rate_det_bps_hz: f64,
    pub per_stream_sinr: Vec<f64>,
    pub iterations: usize,
    pub residual_power: f64,
    pub residual_zf: f64,
    pub runtime_s: f64,
    pub seed: u64,
    pub status: RowStatus,
}

fn solve_method(
    method: Method,
    cs: &crate::scene::ChannelSet,
    cfg: &SceneConfig,
    wmmse: &WmmseOptions,
) -> Result<(crate::solution::BeamformerSolution, SolverReport), crate::solution::SolverError> {
    match method {
        Method::NspZfPa => nsp_zf_pa::solve(cs, cfg),
        Method::WmmsePc => wmmse_pc::solve(cs, cfg, wmmse),
        Method::MaxTrSvd => max_tr_svd::solve(cs, cfg),
    }
}

fn run_point(spec: &ExperimentSpec, value: f64, method: Method, seed: u64) -> ResultRow {
    let started = Instant::now();
    let mut row = ResultRow {
        method,
        axis: spec.axis,
        axis_value: value,
        sum_rate_bps_hz: 0.0,
        rate_det_bps_hz: 0.0,
        per_stream_sinr: Vec::new(),
        iterations: 0,
        residual_power: 0.0,
        residual_zf: 0.0,
        runtime_s: 0.0,
        seed,
        status: RowStatus::Ok,
    };
    let cfg = spec.scene_for(value, seed);
    let mut wmmse = spec.wmmse.clone();
    wmmse.seed = seed;
    let outcome = (|| -> Result<(), String> {
        let cs = synthesize_channels(&cfg).map_err(|e| e.to_string())?;
        let (sol, report) = solve_method(method, &cs, &cfg, &wmmse).map_err(|e| e.to_string())?;
        row.sum_rate_bps_hz = match method {
            Method::NspZfPa => rate::sum_rate_streams(&report.per_stream_sinr),
            _ => *report.objective_trace.last().unwrap_or(&0.0),
        };
        row.rate_det_bps_hz = rate::rate_determinant(
            &sol.u,
            &sol.v_effective(),
            &sol.stacked_theta(),
            &cs,
            cfg.virtual_irs_noise_w(),
            cfg.user_noise_w,
        )
        .map_err(|e| e.to_string())?;
        row.per_stream_sinr = report.per_stream_sinr.clone();
        row.iterations = report.iterations;
        row.residual_power = report.residual_power;
        row.residual_zf = report.residual_zf;
        Ok(())
    })();
    if let Err(msg) = outcome {
        row.status = RowStatus::Failed(msg);
    }
    if spec.timing == TimingMode::Measured {
        row.runtime_s = started.elapsed().as_secs_f64();
    }
    row
}

/// Runs the full sweep. Per-point solver failures land in the row status;
/// only configuration problems abort.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<Vec<ResultRow>, HarnessError> {
    spec.validate()?;
    let reps = spec.repetitions;
    let n_methods = spec.methods.len();
    let points: Vec<(usize, usize, usize)> = (0..spec.values.len())
        .flat_map(|ai| (0..n_methods).flat_map(move |mi| (0..reps).map(move |r| (ai, mi, r))))
        .collect();
    let mut rows: Vec<(usize, ResultRow)> = points
        .par_iter()
        .map(|&(ai, mi, rep)| {
            let point_index = (ai * n_methods + mi) * reps + rep;
            let seed = spec.base_seed ^ point_index as u64;
            let row = run_point(spec, spec.values[ai], spec.methods[mi], seed);
            (point_index, row)
        })
        .collect();
    rows.sort_by_key(|(idx, _)| *idx);
    Ok(rows.into_iter().map(|(_, r)| r).collect())
}

/// 12 significant digits, scientific; round-trips through `f64::from_str`.
fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.11e}")
    }
}

pub const CSV_HEADER: &str = "method,axis_name,axis_value,sum_rate_bps_hz,rate_det_bps_hz,iterations,residual_power,residual_zf,runtime_s,seed,status";

pub fn write_csv_to<W: Write>(rows: &[ResultRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        let status = match &r.status {
            RowStatus::Ok => "ok".to_string(),
            RowStatus::Failed(msg) => {
                format!("error: {}", msg.replace([',', '\n'], ";"))
            }
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.method,
            r.axis.name(),
            fmt_sig(r.axis_value),
            fmt_sig(r.sum_rate_bps_hz),
            fmt_sig(r.rate_det_bps_hz),
            r.iterations,
            fmt_sig(r.residual_power),
            fmt_sig(r.residual_zf),
            fmt_sig(r.runtime_s),
            r.seed,
            status
        )?;
    }
    Ok(())
}

pub fn write_csv(rows: &[ResultRow], path: &Path) -> Result<(), HarnessError> {
    let map_io = |source: std::io::Error| HarnessError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = std::fs::File::create(path).map_err(map_io)?;
    write_csv_to(rows, std::io::BufWriter::new(file)).map_err(map_io)
}

/// Per-outer-iteration objective values; closed-form methods yield a single
/// point.
pub fn convergence_trace(
    method: Method,
    cfg: &SceneConfig,
    wmmse: &WmmseOptions,
) -> Result<Vec<(usize, f64)>, HarnessError> {
    let cs = synthesize_channels(cfg)?;
    let report: SolverReport = match method {
        Method::WmmsePc => {
            wmmse_pc::solve(&cs, cfg, wmmse)
                .map_err(|e| HarnessError::Config(format!("solver failed: {e}")))?
                .1
        }
        Method::NspZfPa => {
            nsp_zf_pa::solve(&cs, cfg)
                .map_err(|e| HarnessError::Config(format!("solver failed: {e}")))?
                .1
        }
        Method::MaxTrSvd => {
            max_tr_svd::solve(&cs, cfg)
                .map_err(|e| HarnessError::Config(format!("solver failed: {e}")))?
                .1
        }
    };
    Ok(report
        .objective_trace
        .iter()
        .enumerate()
        .map(|(i, &v)| (i + 1, v))
        .collect())
}

/// Parses a flat TOML config into a [`SceneConfig`]; unknown keys are errors.
pub fn load_scene_config(text: &str) -> Result<SceneConfig, HarnessError> {
    let cfg: SceneConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}
