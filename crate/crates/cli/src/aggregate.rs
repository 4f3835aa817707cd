//! Aggregation of per-seed traces into curves and summary rows.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use snake_core::multi::{gd, igd, mpfe, pareto_front};
use snake_core::{CampaignTrace, ParetoFront, Strategy};

use crate::error::Result;
use crate::runner::{group_dir, CampaignOutcome};
use crate::spec::Experiment;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Stat> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(Stat { mean, std })
    }
}

/// Regret against cumulative cost on the experiment's shared cost grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub mean_regret: Vec<f64>,
    pub half_std: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub label: String,
    pub strategy: Strategy,
    pub budget: usize,
    pub seeds: usize,
    pub failed: usize,
    /// Mean number of queries made (the "average budget used").
    pub avg_budget_used: f64,
    pub cost: Stat,
    pub final_regret: Option<Stat>,
    pub gd: Option<Stat>,
    pub igd: Option<Stat>,
    pub mpfe: Option<Stat>,
    pub curve: Option<Curve>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateResult {
    pub benchmark: String,
    /// Shared cost axis of every curve; empty without regret.
    pub cost_grid: Vec<f64>,
    pub groups: Vec<GroupSummary>,
}

impl AggregateResult {
    /// Number of failed campaigns across all groups.
    pub fn failed(&self) -> usize {
        self.groups.iter().map(|g| g.failed).sum()
    }
}

/// Best-so-far regret of `trace` once `cost` has been spent. Before the first
/// query completes the first regret value is used.
pub fn regret_at_cost(trace: &CampaignTrace, regret: &[f64], cost: f64) -> f64 {
    let k = trace.cumulative_cost.partition_point(|c| *c <= cost);
    regret[k.saturating_sub(1)]
}

pub fn cost_grid(traces: &[&CampaignTrace], points: usize) -> Vec<f64> {
    let max = traces.iter().map(|t| t.total_cost()).fold(0.0, f64::max);
    (0..points)
        .map(|i| max * (i as f64 / (points - 1) as f64))
        .collect()
}

fn curve(traces: &[&CampaignTrace], grid: &[f64]) -> Option<Curve> {
    if traces.is_empty() || traces.iter().any(|t| t.regret.is_none()) {
        return None;
    }
    let mut mean_regret = Vec::with_capacity(grid.len());
    let mut half_std = Vec::with_capacity(grid.len());
    for &c in grid {
        let vals: Vec<f64> = traces
            .iter()
            .map(|t| regret_at_cost(t, t.regret.as_deref().expect("checked"), c))
            .collect();
        let s = Stat::of(&vals).expect("non-empty");
        mean_regret.push(s.mean);
        half_std.push(0.5 * s.std);
    }
    Some(Curve {
        mean_regret,
        half_std,
    })
}

fn front_stats(
    traces: &[&CampaignTrace],
    truth: &ParetoFront,
    eps: f64,
) -> Result<[Option<Stat>; 3]> {
    let mut cols: [Vec<f64>; 3] = Default::default();
    for t in traces {
        let approx = pareto_front(&t.observations, eps);
        cols[0].push(gd(&approx, truth)?);
        cols[1].push(igd(&approx, truth)?);
        cols[2].push(mpfe(&approx, truth)?);
    }
    Ok(cols.map(|c| Stat::of(&c)))
}

pub fn aggregate(
    e: &Experiment,
    outcomes: &[Vec<CampaignOutcome>],
    truth: Option<&ParetoFront>,
) -> Result<AggregateResult> {
    let all: Vec<&CampaignTrace> = outcomes.iter().flatten().flatten().collect();
    let has_regret = !all.is_empty() && all.iter().all(|t| t.regret.is_some());
    let grid = if has_regret {
        cost_grid(&all, e.grid_points)
    } else {
        Vec::new()
    };

    let mut groups = Vec::new();
    for (g, runs) in e.groups.iter().zip(outcomes) {
        let ok: Vec<&CampaignTrace> = runs.iter().flatten().collect();
        let lens: Vec<f64> = ok.iter().map(|t| t.len() as f64).collect();
        let costs: Vec<f64> = ok.iter().map(|t| t.total_cost()).collect();
        let regrets: Vec<f64> = ok.iter().filter_map(|t| t.final_regret()).collect();
        let [gd, igd, mpfe] = match truth {
            Some(front) if !ok.is_empty() => front_stats(&ok, front, e.front_epsilon)?,
            _ => [None, None, None],
        };
        groups.push(GroupSummary {
            label: g.label.clone(),
            strategy: g.config.strategy,
            budget: g.config.budget,
            seeds: e.seeds,
            failed: runs.len() - ok.len(),
            avg_budget_used: Stat::of(&lens).map_or(f64::NAN, |s| s.mean),
            cost: Stat::of(&costs).unwrap_or(Stat {
                mean: f64::NAN,
                std: f64::NAN,
            }),
            final_regret: Stat::of(&regrets),
            gd,
            igd,
            mpfe,
            curve: if has_regret { curve(&ok, &grid) } else { None },
        });
    }
    Ok(AggregateResult {
        benchmark: e.benchmark.clone(),
        cost_grid: grid,
        groups,
    })
}

pub const AGGREGATE_HEADER: [&str; 16] = [
    "label",
    "strategy",
    "budget",
    "seeds",
    "failed",
    "avg_budget_used",
    "cost_mean",
    "cost_std",
    "regret_mean",
    "regret_std",
    "gd_mean",
    "gd_std",
    "igd_mean",
    "igd_std",
    "mpfe_mean",
    "mpfe_std",
];

fn opt(s: Option<Stat>) -> [String; 2] {
    s.map_or([String::new(), String::new()], |s| {
        [s.mean.to_string(), s.std.to_string()]
    })
}

pub fn write_aggregate_csv(result: &AggregateResult, w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(AGGREGATE_HEADER)?;
    for g in &result.groups {
        let mut row = vec![
            g.label.clone(),
            g.strategy.to_string(),
            g.budget.to_string(),
            g.seeds.to_string(),
            g.failed.to_string(),
            g.avg_budget_used.to_string(),
            g.cost.mean.to_string(),
            g.cost.std.to_string(),
        ];
        for s in [g.final_regret, g.gd, g.igd, g.mpfe] {
            row.extend(opt(s));
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_curve_csv(grid: &[f64], curve: &Curve, w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["cost", "mean_regret", "half_std"])?;
    for ((c, m), h) in grid.iter().zip(&curve.mean_regret).zip(&curve.half_std) {
        out.write_record([c.to_string(), m.to_string(), h.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    Ok(std::io::BufWriter::new(std::fs::File::create(path)?))
}

/// Writes `aggregate.csv`, `spec.json` and one `curve.csv` per group.
pub fn write_outputs(e: &Experiment, result: &AggregateResult) -> Result<()> {
    let root = e.output.join(&e.benchmark);
    std::fs::create_dir_all(&root)?;
    write_aggregate_csv(result, create(&root.join("aggregate.csv"))?)?;
    let mut spec = create(&root.join("spec.json"))?;
    serde_json::to_writer_pretty(&mut spec, e)?;
    writeln!(spec)?;
    spec.flush()?;
    for g in &result.groups {
        if let Some(c) = &g.curve {
            let dir = group_dir(e, &g.label);
            std::fs::create_dir_all(&dir)?;
            write_curve_csv(&result.cost_grid, c, create(&dir.join("curve.csv"))?)?;
        }
    }
    Ok(())
}
