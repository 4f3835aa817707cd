//! Path-aware Bayesian optimization.
//!
//! The crate is organised around the pieces of a movement-cost-aware
//! optimization loop:
//!
//! - [`gp`]: exact Gaussian-process regression with marginal-likelihood fitting.
//! - [`sampling`]: pathwise posterior samples built from random Fourier features,
//!   and their maximization.
//! - [`acquisition`]: expected improvement, its per-unit-cost variant and the
//!   uncertainty-gated deletion test used for self-stopping.
//! - [`benchmarks`]: test functions on the unit hypercube and input-change cost models.
//! - [`planner`]: Thompson batches ordered by a travelling-salesman solver, point
//!   deletion, step truncation and the campaign loop with its baselines.
//! - [`multi`]: random scalarizations, Pareto fronts and front-distance metrics.
//!
//! Everything maximizes. Minimization test functions are negated by the
//! benchmark layer.

pub mod acquisition;
pub mod benchmarks;
pub mod error;
pub mod gp;
pub mod multi;
pub mod planner;
pub mod rng;
pub mod sampling;

pub use acquisition::{expected_improvement, Predictor, StoppingConfig};
pub use benchmarks::{Benchmark, CostModel};
pub use error::{Error, Result};
pub use gp::{Dataset, GaussianProcessModel, KernelConfig, KernelFamily};
pub use multi::{ParetoFront, Scalarization, ScalarizationKind};
pub use planner::{run_campaign, CampaignTrace, PlannerConfig, Strategy, Termination};
pub use sampling::{draw_sample, maximize_sample, PosteriorSample};

/// A point in the unit hypercube.
pub type Point = Vec<f64>;

pub(crate) fn check_unit_cube(x: &[f64]) -> Result<()> {
    if x.iter().all(|v| (0.0..=1.0).contains(v)) {
        Ok(())
    } else {
        Err(Error::OutOfDomain(x.to_vec()))
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
