//! Multi-objective pieces: random scalarizations, Pareto fronts and the
//! GD / IGD / MPFE front-distance metrics.

mod metrics;
mod pareto;
mod scalarize;

pub use metrics::{gd, igd, mpfe};
pub use pareto::{
    pareto_front, pareto_front_with_inputs, read_front_csv, write_front_csv, FrontPoint,
    ParetoFront, RELAXED_EPSILON,
};
pub use scalarize::{
    sample_scalarized_maximizer, scalarize, tchebyshev_reference, Scalarization, ScalarizationKind,
    WeightDistribution,
};
