//! Bayesian estimation of the Biot parameters from a receiver trace.
//!
//! A Gaussian noise model gives the likelihood, independent Gaussian or
//! uniform factors (truncated to physical bounds) give the prior, and an
//! affine-invariant ensemble sampler explores the posterior. The conditional
//! mean and central credible intervals summarize the chain.

mod likelihood;
mod prior;
mod sampler;
pub mod stats;
mod synth;

pub use likelihood::{
    check_sampling, log_likelihood, log_posterior, simulate_or_reject, squared_misfit, LogDensity,
    NoiseModel, Posterior,
};
pub use prior::{ParamSubset, Prior};
pub use sampler::{
    acceptance_probability, ensemble_sample, init_walkers, stretch_factor, PosteriorSamples,
    SamplerConfig,
};
pub use stats::{conditional_mean, credible_interval, mc_standard_error};
pub use synth::{add_noise, synthesize_data};
