//! # swflow
//!
//! Particle simulation and analysis of the sliced-Wasserstein flow (SWF).
//!
//! A source measure, discretized as a weighted particle cloud, is advected
//! toward a fixed target cloud by the velocity field
//!
//! ```text
//! v(x) = avg over directions θ of ( T_θ(x·θ) − x·θ ) θ
//! ```
//!
//! where `T_θ` is the monotone (quantile) transport map between the 1D
//! projections of the current cloud and of the target along `θ`.
//!
//! ## Layout
//!
//! - [`measures`]: particle clouds, scenario samplers, direction sets on the sphere.
//! - [`ot1d`]: exact 1D optimal transport and the grid entropy-inequality check.
//! - [`sliced`]: sliced-Wasserstein distance, the SWF velocity field, the
//!   constants `c_{p,d}` and the hyperplane-integration identity.
//! - [`flow`]: explicit Euler integration, the IDT variant and flow-map bookkeeping.
//! - [`diagnostics`]: moments, support radius, entropy, exact assignment,
//!   monotonicity probes and decay fitting.
//! - [`experiment`]: config files, the built-in scenario catalogue, the batch
//!   runner and output verification used by the `swf` binary.
//!
//! Each capability has a runnable program under `examples/`; run them with
//! `cargo run --release --example <name>`.

#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod flow;
pub mod measures;
pub mod ot1d;
pub mod sliced;

pub use error::{Error, Result};
pub use measures::{DirectionMode, DirectionSet, ParticleCloud, ScenarioKind, ScenarioSpec};
