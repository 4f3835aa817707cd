use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::PlannerConfig;
use crate::benchmarks::CostModel;
use crate::{euclidean, Point, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    BudgetExhausted,
    SelfStopped,
}

/// Everything a campaign did, one entry per query.
#[derive(Clone, Debug, PartialEq)]
pub struct CampaignTrace {
    pub benchmark: String,
    pub seed: u64,
    pub config: PlannerConfig,
    pub cost_model: CostModel,
    pub inputs: Vec<Point>,
    /// Observed (possibly noisy) objective values.
    pub observations: Vec<Vec<f64>>,
    pub step_costs: Vec<f64>,
    /// Penalty part of each step cost.
    pub penalties: Vec<f64>,
    pub cumulative_cost: Vec<f64>,
    /// Simple regret of the best noiseless value so far; `None` without a
    /// known optimum (multi-objective benchmarks).
    pub regret: Option<Vec<f64>>,
    pub termination: Termination,
}

/// JSON sidecar written next to the trace CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub benchmark: String,
    pub seed: u64,
    pub config: PlannerConfig,
    pub cost_model: CostModel,
    pub termination: Termination,
    pub queries: usize,
    pub total_cost: f64,
    pub total_penalty: f64,
    pub final_regret: Option<f64>,
}

impl CampaignTrace {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn total_cost(&self) -> f64 {
        self.cumulative_cost.last().copied().unwrap_or(0.0)
    }

    pub fn total_penalty(&self) -> f64 {
        self.penalties.iter().sum()
    }

    pub fn final_regret(&self) -> Option<f64> {
        self.regret.as_ref().and_then(|r| r.last().copied())
    }

    /// Euclidean lengths of consecutive steps (the first query has length 0).
    pub fn step_lengths(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for i in 0..self.len() {
            out.push(if i == 0 {
                0.0
            } else {
                euclidean(&self.inputs[i - 1], &self.inputs[i])
            });
        }
        out
    }

    pub fn summary(&self) -> TraceSummary {
        TraceSummary {
            benchmark: self.benchmark.clone(),
            seed: self.seed,
            config: self.config.clone(),
            cost_model: self.cost_model.clone(),
            termination: self.termination,
            queries: self.len(),
            total_cost: self.total_cost(),
            total_penalty: self.total_penalty(),
            final_regret: self.final_regret(),
        }
    }

    /// Columns `iter, x1..xd, y1..yK, step_cost, cum_cost, regret`; regret is
    /// left empty when unknown.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        let d = self.inputs.first().map_or(0, Vec::len);
        let k = self.observations.first().map_or(0, Vec::len);
        let mut header = vec!["iter".to_string()];
        header.extend((1..=d).map(|i| format!("x{i}")));
        header.extend((1..=k).map(|i| format!("y{i}")));
        header.extend(["step_cost", "cum_cost", "regret"].map(String::from));
        writeln!(w, "{}", header.join(","))?;
        for t in 0..self.len() {
            let mut row = vec![t.to_string()];
            row.extend(self.inputs[t].iter().map(f64::to_string));
            row.extend(self.observations[t].iter().map(f64::to_string));
            row.push(self.step_costs[t].to_string());
            row.push(self.cumulative_cost[t].to_string());
            row.push(
                self.regret
                    .as_ref()
                    .map_or(String::new(), |r| r[t].to_string()),
            );
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn write_json(&self, w: impl Write) -> Result<()> {
        serde_json::to_writer_pretty(w, &self.summary())?;
        Ok(())
    }

    /// Writes `path` (CSV) and the sidecar `path` with a `.json` extension.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut csv = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(&mut csv)?;
        csv.flush()?;
        let mut json = std::io::BufWriter::new(std::fs::File::create(path.with_extension("json"))?);
        self.write_json(&mut json)?;
        writeln!(json)?;
        json.flush()?;
        Ok(())
    }
}
