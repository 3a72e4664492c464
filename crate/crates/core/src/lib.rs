//! Ultrasound characterization of cancellous bone as a Biot poroelastic
//! medium immersed in water.
//!
//! The crate has two halves. The forward half ([`material`], [`domain`],
//! [`solver`]) simulates a pressure pulse crossing a fluid-saturated bone
//! specimen with an explicit finite-volume scheme and records the trace at a
//! receiver. The inverse half ([`inference`], [`optim`]) recovers the six Biot
//! parameters from a noisy trace, either as a posterior conditional mean from
//! an affine-invariant ensemble sampler or as a MAP point from Nelder–Mead.
//!
//! [`config`] and [`pipeline`] wire the pieces into the `biotinv` command line
//! tool; `examples/` shows each capability on its own.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod domain;
pub mod error;
pub mod inference;
pub mod io;
pub mod material;
pub mod optim;
pub mod pipeline;
pub mod report;
pub mod solver;

pub use domain::{build_domain, source_amplitude, Domain, GeometryConfig, SignalTrace};
pub use error::{Error, Result};
pub use material::{elastic_constants, max_wave_speed, BiotParams, ElasticConstants, FluidProps, Param};
pub use solver::{forward_map, BiotForward, ForwardModel, SolverOptions, StepControl};
