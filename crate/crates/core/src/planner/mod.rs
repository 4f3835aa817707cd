//! Planning queries under input-change costs.
//!
//! Each SnAKe iteration draws one Thompson-sample maximizer per remaining
//! query, optionally deletes points from that batch, orders what is left into
//! an open travelling-salesman tour from the current input and queries the
//! first point of the tour (truncated to `delta_max` for `tr_snake`). The
//! batch is rebuilt from scratch every iteration.

mod batch;
mod campaign;
mod config;
mod surrogate;
mod trace;
mod tsp;

pub use batch::{
    create_batch, create_batch_with, create_scalarized_batch, ei_point_deletion,
    ell_point_deletion, truncate_step, ProposedBatch,
};
pub use campaign::run_campaign;
pub use config::{
    Deletion, EipuCost, ModelConfig, PlannerConfig, SamplingConfig, Strategy, TspConfig,
};
pub use surrogate::{AcquisitionMax, Standardized, Surrogate};
pub use trace::{CampaignTrace, Termination, TraceSummary};
pub use tsp::{order_batch, order_points, path_cost, OrderedPath};

/// Seed streams used by [`run_campaign`], exposed so a campaign can be
/// replayed step by step.
pub mod seeds {
    use rand::Rng;

    use crate::rng::{derive_seed, rng_from_seed};
    use crate::Point;

    /// `count` uniform points in `[0,1]^dim`.
    pub fn initial_design(seed: u64, dim: usize, count: usize) -> Vec<Point> {
        let mut r = rng_from_seed(derive_seed(seed, 1));
        (0..count)
            .map(|_| (0..dim).map(|_| r.random()).collect())
            .collect()
    }

    pub fn fit(seed: u64) -> u64 {
        derive_seed(seed, 2)
    }

    pub fn random_plan(seed: u64) -> u64 {
        derive_seed(seed, 3)
    }

    pub fn query_noise(seed: u64, t: usize) -> u64 {
        derive_seed(derive_seed(seed, 4), t as u64)
    }

    /// Root of everything drawn while choosing query number `t`.
    pub fn iteration(seed: u64, t: usize) -> u64 {
        derive_seed(derive_seed(seed, 5), t as u64)
    }

    pub fn batch(iteration: u64) -> u64 {
        derive_seed(iteration, 0)
    }

    pub fn tsp(iteration: u64) -> u64 {
        derive_seed(iteration, 1)
    }

    pub fn acquisition(iteration: u64) -> u64 {
        derive_seed(iteration, 2)
    }
}
