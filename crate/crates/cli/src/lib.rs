//! Experiment harness around `snake-core`: multi-seed campaigns from a TOML
//! spec, regret-vs-cost curves, summary tables and plots.

pub mod aggregate;
pub mod error;
pub mod plot;
pub mod runner;
pub mod spec;

pub use aggregate::{AggregateResult, Curve, GroupSummary, Stat};
pub use error::{CliError, Result};
pub use runner::{campaign_seed, run_experiment, workers_from_env, WORKERS_ENV};
pub use spec::{CostSpec, Experiment, ExperimentSpec, RunGroup};

use snake_core::multi::{gd, igd, mpfe, pareto_front};
use snake_core::ParetoFront;

/// GD, IGD and MPFE of the non-dominated part of `approx` (extracted with
/// tolerance `epsilon`) against `truth`.
pub fn front_metrics(approx: &ParetoFront, truth: &ParetoFront, epsilon: f64) -> Result<[f64; 3]> {
    let objs: Vec<Vec<f64>> = approx.objectives().map(<[f64]>::to_vec).collect();
    let front = pareto_front(&objs, epsilon);
    Ok([
        gd(&front, truth)?,
        igd(&front, truth)?,
        mpfe(&front, truth)?,
    ])
}
