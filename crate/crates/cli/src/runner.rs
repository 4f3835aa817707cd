use std::path::{Path, PathBuf};

use rayon::prelude::*;
use snake_core::benchmarks::reference_front;
use snake_core::rng::derive_seed;
use snake_core::{run_campaign, Benchmark, CampaignTrace, ParetoFront};

use crate::aggregate::{aggregate, write_outputs, AggregateResult};
use crate::error::{CliError, Result};
use crate::spec::Experiment;

/// Environment variable holding the number of concurrent campaigns.
pub const WORKERS_ENV: &str = "SNAKE_WORKERS";

/// Seed of campaign `seed_index` for the planner at `planner_index`.
pub fn campaign_seed(base_seed: u64, planner_index: usize, seed_index: usize) -> u64 {
    derive_seed(
        derive_seed(base_seed, planner_index as u64),
        seed_index as u64,
    )
}

/// Worker count from [`WORKERS_ENV`], defaulting to the available parallelism.
pub fn workers_from_env() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(CliError::Config(format!(
                "{WORKERS_ENV} must be a positive integer, got {v:?}"
            ))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Outcome of one campaign; failures carry the error message.
pub type CampaignOutcome = std::result::Result<CampaignTrace, String>;

pub fn group_dir(e: &Experiment, label: &str) -> PathBuf {
    e.output.join(&e.benchmark).join(label)
}

pub fn trace_path(dir: &Path, seed_index: usize) -> PathBuf {
    dir.join(format!("seed_{seed_index}.csv"))
}

/// Runs every (planner, seed) campaign on `workers` threads, writes traces,
/// curves and the aggregate table, and returns the aggregate.
///
/// A failing campaign does not stop the others; it is counted in
/// [`AggregateResult::failed`] and its message goes to
/// `seed_<n>.error.txt`.
pub fn run_experiment(e: &Experiment, workers: usize) -> Result<AggregateResult> {
    let benchmark = Benchmark::by_name(&e.benchmark)?;
    let jobs: Vec<(usize, usize)> = (0..e.groups.len())
        .flat_map(|g| (0..e.seeds).map(move |s| (g, s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|err| CliError::Config(err.to_string()))?;
    let flat: Vec<CampaignOutcome> = pool.install(|| {
        jobs.par_iter()
            .map(|&(g, s)| {
                let group = &e.groups[g];
                let seed = campaign_seed(e.base_seed, group.planner_index, s);
                run_campaign(&benchmark, &e.cost_model, &group.config, seed)
                    .map_err(|err| err.to_string())
            })
            .collect()
    });
    let mut outcomes: Vec<Vec<CampaignOutcome>> = Vec::with_capacity(e.groups.len());
    let mut it = flat.into_iter();
    for _ in &e.groups {
        outcomes.push(it.by_ref().take(e.seeds).collect());
    }

    for (group, runs) in e.groups.iter().zip(&outcomes) {
        let dir = group_dir(e, &group.label);
        std::fs::create_dir_all(&dir)?;
        for (s, run) in runs.iter().enumerate() {
            let path = trace_path(&dir, s);
            match run {
                Ok(trace) => trace.save(&path)?,
                Err(msg) => {
                    eprintln!("{} seed {s}: {msg}", group.label);
                    std::fs::write(path.with_extension("error.txt"), format!("{msg}\n"))?;
                }
            }
        }
    }

    let truth = truth_front(e, &benchmark)?;
    let result = aggregate(e, &outcomes, truth.as_ref())?;
    write_outputs(e, &result)?;
    Ok(result)
}

/// Dense-grid front used for GD/IGD/MPFE, when the benchmark has one.
fn truth_front(e: &Experiment, b: &Benchmark) -> Result<Option<ParetoFront>> {
    if b.objective_count() < 2 {
        return Ok(None);
    }
    if b.dim() > 4 {
        eprintln!(
            "{}: no reference grid above 4 dimensions, front metrics skipped",
            b.name()
        );
        return Ok(None);
    }
    Ok(Some(reference_front(b, e.reference_grid)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_differ_per_planner_and_index() {
        let a = campaign_seed(0, 0, 0);
        assert_ne!(a, campaign_seed(0, 1, 0));
        assert_ne!(a, campaign_seed(0, 0, 1));
        assert_ne!(a, campaign_seed(1, 0, 0));
        assert_eq!(a, campaign_seed(0, 0, 0));
    }
}
