//! Test functions on the unit hypercube and input-change cost models.

mod cost;
mod functions;

pub use cost::{CostModel, StepCost, Violation};
pub use functions::{
    branin, hartmann3, hartmann6, mo_shekel, shekel, synthetic_snar, Benchmark, Objective,
    BENCHMARK_NAMES,
};

use crate::multi::{pareto_front_with_inputs, FrontPoint, ParetoFront};
use crate::{Error, Point, Result};

/// Upper bound on the number of grid points evaluated by [`reference_front`].
pub const GRID_CAPACITY: usize = 4_000_000;

/// Dense-grid approximation of the true Pareto front: the non-dominated subset
/// of all `grid_resolution^dim` grid evaluations (noiseless). For a single
/// objective this is the grid argmax.
pub fn reference_front(b: &Benchmark, grid_resolution: usize) -> Result<ParetoFront> {
    if grid_resolution < 2 {
        return Err(Error::InvalidInput(
            "grid resolution must be at least 2".into(),
        ));
    }
    if b.dim() > 4 {
        return Err(Error::Config(format!(
            "reference grid supports at most 4 dimensions, {} has {}",
            b.name(),
            b.dim()
        )));
    }
    let total = (grid_resolution as u128).pow(b.dim() as u32);
    if total > GRID_CAPACITY as u128 {
        return Err(Error::Capacity {
            requested: total.min(usize::MAX as u128) as usize,
            limit: GRID_CAPACITY,
        });
    }
    let total = total as usize;
    let step = 1.0 / (grid_resolution - 1) as f64;
    let mut inputs: Vec<Point> = Vec::with_capacity(total);
    let mut values: Vec<Vec<f64>> = Vec::with_capacity(total);
    for flat in 0..total {
        let mut rem = flat;
        let x: Point = (0..b.dim())
            .map(|_| {
                let i = rem % grid_resolution;
                rem /= grid_resolution;
                i as f64 * step
            })
            .collect();
        values.push(b.evaluate_clean(&x)?);
        inputs.push(x);
    }
    if b.objective_count() == 1 {
        let mut best = 0;
        for (i, v) in values.iter().enumerate() {
            if v[0] > values[best][0] {
                best = i;
            }
        }
        return Ok(ParetoFront::new(
            vec![FrontPoint {
                objectives: values.swap_remove(best),
                input: Some(inputs.swap_remove(best)),
            }],
            0.0,
        ));
    }
    Ok(pareto_front_with_inputs(&values, Some(&inputs), 0.0))
}
