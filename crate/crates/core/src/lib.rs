//! Simulation and drift estimation for Ornstein–Uhlenbeck processes driven by
//! Hermite processes.
//!
//! The pipeline is: [`noise`] draws stationary Gaussian sequences, [`hermite`]
//! turns them into Hermite paths, [`ou`] solves `dX = θX dt + ε dZ` on those
//! paths, and [`estimator`] recovers `θ` by minimizing an L1 distance.
//! [`harness`] runs the Monte Carlo experiments behind the CLI.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod hermite;
pub mod integrals;
pub mod noise;
pub mod ou;
pub mod par;
pub mod path;

pub use error::{Error, Result};
pub use estimator::{
    j0_objective, minimize_l1, objective_s, separation_g, zeta_solver, EstimateResult,
    EstimatorConfig,
};
pub use hermite::{hermite_constant, hermite_exponent, GeneratorKind, HermiteSpec, PathSampler};
pub use integrals::{
    build_y, covariance_functional, covariance_r, wiener_integral, Interp, SampledFunction,
};
pub use noise::{fgn_autocov, make_rng, sample_stationary_gaussian, AutocovSequence, RngState};
pub use ou::{deterministic_solution, euler_solution, exact_solution, OuSpec};
pub use path::{running_max_abs, GridPath, Provenance};
