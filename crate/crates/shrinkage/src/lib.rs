//! Bayesian shrinkage and variable-selection regression.
//!
//! Gibbs samplers for a catalog of hierarchical priors, fast Gaussian
//! posterior kernels, CAVI for spike-and-slab regression, analytic evidence
//! for the conjugate model, Bayesian quantile regression and a Monte Carlo
//! harness for the simulation studies.

pub mod cli_io;
pub mod error;
pub mod evidence;
pub mod gibbs_engine;
pub mod prior_library;
pub mod quantile;
pub mod sampling_kernels;
pub mod simulation_harness;
pub mod variational_engine;

pub use cli_io::Dataset;
pub use error::{Error, Result};
