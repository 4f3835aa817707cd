//! Exact Gaussian-process regression on the unit hypercube.

mod dataset;
pub(crate) mod fit;
mod kernel;
mod model;

pub use dataset::Dataset;
pub use fit::{
    fit_hyperparameters, fit_hyperparameters_with, log_marginal_likelihood,
    log_marginal_likelihood_with_gradient, FitOptions, GammaPrior, HyperBounds,
};
pub use kernel::{KernelConfig, KernelFamily};
pub use model::{GaussianProcessModel, JITTER_LEVELS};
