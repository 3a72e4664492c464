//! Point estimation by derivative-free minimization.
//!
//! The MAP estimate minimizes the squared misfit plus a weighted negative
//! log-prior with a Nelder–Mead simplex search. Points outside the prior
//! support score `+∞` and lose every comparison.

mod map;
mod simplex;

pub use map::{default_sigma_reg, estimate_map, map_objective, MapEstimate, MapProblem};
pub use simplex::{
    nelder_mead, LogEntry, NMConfig, NMResult, Operation, Simplex, StepReport, Termination,
};
