//! Throughput optimization for RIS-aided multi-user downlinks in which the
//! optimized ("coherent") phase shifts must first be delivered to the surface
//! over a rate-limited control link, while a second group of "fixed" elements
//! keeps random phases that cost nothing to deliver.
//!
//! The crate provides
//!
//! * the system model ([`model`]) and a geometry-driven channel generator
//!   ([`channel`]),
//! * the quadratic-transform machinery ([`fp`]) and the per-block convex
//!   programs ([`subproblems`]) solved through a conic interior-point backend
//!   ([`conic`]),
//! * the alternating optimizer tying them together ([`ao`]),
//! * the closed-form element-count analysis with brute-force oracles
//!   ([`analysis`]),
//! * a Monte-Carlo sweep harness with JSON/CSV output ([`sweep`]).

// Links the system OpenBLAS used by the semidefinite cone backend.
use openblas_src as _;

pub mod analysis;
pub mod ao;
pub mod channel;
pub mod conic;
pub mod error;
pub mod fp;
pub mod linalg;
pub mod model;
pub mod subproblems;
pub mod sweep;

pub use ao::{solve, SolveStatus, SolveTrace, SolverOptions};
pub use channel::{FadingParams, Geometry};
pub use error::{Block, Error, Result};
pub use model::{
    BeamformerSet, ChannelRealization, HybridPhaseConfig, Solution, SystemConfig,
};
