//! Experiment specification files.
//!
//! ```toml
//! benchmark = "branin"
//! seeds = 25
//! budgets = [250]
//! output = "results"
//!
//! [cost_model]
//! preset = "truncated"
//! delta_max = 0.1
//!
//! [[planners]]
//! strategy = "snake"
//!
//! [[planners]]
//! label = "tr_snake"
//! strategy = "tr_snake"
//! delta_max = 0.1
//! ```
//!
//! Each `[[planners]]` table holds the fields of a planner configuration
//! except `budget`, which comes from `budgets`. With more than one budget the
//! label gets a `_T<budget>` suffix.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use snake_core::benchmarks::GRID_CAPACITY;
use snake_core::{Benchmark, CostModel, PlannerConfig};

use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum CostSpec {
    SelfStopping { alpha: f64 },
    Truncated { delta_max: f64 },
    MovementOnly,
    Custom(CostModel),
}

impl CostSpec {
    pub fn model(&self) -> CostModel {
        match self {
            CostSpec::SelfStopping { alpha } => CostModel::self_stopping(*alpha),
            CostSpec::Truncated { delta_max } => CostModel::truncated(*delta_max),
            CostSpec::MovementOnly => CostModel::movement_only(),
            CostSpec::Custom(cm) => cm.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Budgets {
    One(usize),
    Many(Vec<usize>),
}

impl Budgets {
    pub fn to_vec(&self) -> Vec<usize> {
        match self {
            Budgets::One(b) => vec![*b],
            Budgets::Many(v) => v.clone(),
        }
    }
}

fn default_seeds() -> usize {
    25
}

fn default_grid_points() -> usize {
    101
}

fn default_reference_grid() -> usize {
    20
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

/// The file format. Use [`ExperimentSpec::resolve`] to validate it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub benchmark: String,
    pub cost_model: CostSpec,
    pub planners: Vec<toml::Table>,
    #[serde(alias = "budget")]
    pub budgets: Budgets,
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// Points on the shared cost axis of the regret curves.
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    /// Per-dimension resolution of the dense grid used as the true front.
    #[serde(default = "default_reference_grid")]
    pub reference_grid: usize,
    /// Tolerance used when extracting a campaign's approximate front.
    #[serde(default)]
    pub front_epsilon: f64,
}

/// One planner at one budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunGroup {
    pub label: String,
    /// Position of the planner in the spec file; seeds are derived from it so
    /// the same planner at two budgets sees the same initial conditions.
    pub planner_index: usize,
    pub config: PlannerConfig,
}

/// A validated spec, also written out as `spec.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub benchmark: String,
    pub cost_model: CostModel,
    pub seeds: usize,
    pub base_seed: u64,
    pub output: PathBuf,
    pub grid_points: usize,
    pub reference_grid: usize,
    pub front_epsilon: f64,
    pub groups: Vec<RunGroup>,
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn resolve(&self) -> Result<Experiment> {
        let cfg_err = |m: String| CliError::Config(m);
        let benchmark = Benchmark::by_name(&self.benchmark).map_err(|e| cfg_err(e.to_string()))?;
        let cost_model = self.cost_model.model();
        if self.seeds == 0 {
            return Err(cfg_err("seeds must be at least 1".into()));
        }
        let budgets = self.budgets.to_vec();
        if budgets.is_empty() {
            return Err(cfg_err("at least one budget is required".into()));
        }
        if self.planners.is_empty() {
            return Err(cfg_err(
                "at least one [[planners]] entry is required".into(),
            ));
        }
        if self.grid_points < 2 {
            return Err(cfg_err("grid_points must be at least 2".into()));
        }
        if !(self.front_epsilon.is_finite() && self.front_epsilon >= 0.0) {
            return Err(cfg_err("front_epsilon must be non-negative".into()));
        }

        let mut groups = Vec::new();
        let mut labels = BTreeSet::new();
        for (i, table) in self.planners.iter().enumerate() {
            let mut table = table.clone();
            let label = match table.remove("label") {
                Some(toml::Value::String(s)) => Some(s),
                Some(other) => return Err(cfg_err(format!("label must be a string, got {other}"))),
                None => None,
            };
            if table.contains_key("budget") {
                return Err(cfg_err(
                    "planner tables take their budget from `budgets`".into(),
                ));
            }
            for &budget in &budgets {
                let mut t = table.clone();
                t.insert("budget".into(), toml::Value::Integer(budget as i64));
                let config: PlannerConfig = toml::Value::Table(t)
                    .try_into()
                    .map_err(|e| cfg_err(format!("planner {}: {e}", i + 1)))?;
                config
                    .validate(&benchmark, &cost_model)
                    .map_err(|e| cfg_err(format!("planner {}: {e}", i + 1)))?;
                let base = label
                    .clone()
                    .unwrap_or_else(|| config.strategy.name().to_string());
                let label = if budgets.len() > 1 {
                    format!("{base}_T{budget}")
                } else {
                    base
                };
                if label.is_empty() || label.contains(['/', '\\']) || label.starts_with('.') {
                    return Err(cfg_err(format!(
                        "label {label:?} is not a valid directory name"
                    )));
                }
                if !labels.insert(label.clone()) {
                    return Err(cfg_err(format!("duplicate label {label:?}")));
                }
                groups.push(RunGroup {
                    label,
                    planner_index: i,
                    config,
                });
            }
        }

        if benchmark.objective_count() > 1 && benchmark.dim() <= 4 {
            let total = (self.reference_grid as u128).pow(benchmark.dim() as u32);
            if self.reference_grid < 2 || total > GRID_CAPACITY as u128 {
                return Err(cfg_err(format!(
                    "reference_grid {} gives {total} points for {}",
                    self.reference_grid, self.benchmark
                )));
            }
        }

        Ok(Experiment {
            benchmark: self.benchmark.clone(),
            cost_model,
            seeds: self.seeds,
            base_seed: self.base_seed,
            output: self.output.clone(),
            grid_points: self.grid_points,
            reference_grid: self.reference_grid,
            front_epsilon: self.front_epsilon,
            groups,
        })
    }
}
