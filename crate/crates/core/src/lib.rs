//! Simulator for point-to-point links assisted by multiple distributed
//! active intelligent reflecting surfaces (IRSs).
//!
//! A base station with `M` antennas reaches an `Nu`-antenna user only through
//! `K` small active IRSs, each carrying `Nk` reflecting elements. The library
//! synthesizes the line-of-sight channels of that scene and solves the joint
//! transmit / receive / phase-shift design with three methods:
//!
//! - [`nsp_zf_pa`]: closed-form per-stream beamformers. Null-space projection
//!   at the transmitter, zero-forcing at the receiver, and per-IRS phase
//!   alignment.
//! - [`wmmse_pc`]: weighted-MMSE alternating optimization over the virtual
//!   large IRS, with a dual-bisection QCQP precoder step and a
//!   majorization-minimization phase update under the IRS power constraint.
//! - [`max_tr_svd`]: low-complexity baseline from the channel SVDs plus a
//!   generalized Rayleigh-quotient phase vector.
//!
//! [`rate`] evaluates per-stream SINRs, stream-sum and determinant rates, and
//! the large-IRS-power limits of those rates. [`harness`] drives experiment
//! sweeps and CSV output; the `mirsim` binary exposes it on the command line.

pub mod harness;
pub mod max_tr_svd;
pub mod nsp_zf_pa;
pub mod numerics;
pub mod rate;
pub mod scene;
pub mod solution;
pub mod wmmse_pc;

pub use scene::{ChannelSet, SceneConfig};
pub use solution::{BeamformerSolution, Method, SolverError, SolverReport};
