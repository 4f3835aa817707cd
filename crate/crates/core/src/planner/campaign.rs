use rand::Rng;

use super::surrogate::{maximize_acquisition, Denominator, Standardized, Surrogate};
use super::{
    create_batch_with, create_scalarized_batch, ei_point_deletion, ell_point_deletion,
    order_points, seeds, truncate_step, CampaignTrace, EipuCost, PlannerConfig, ProposedBatch,
    Strategy, Termination, TspConfig,
};
use crate::benchmarks::{Benchmark, CostModel};
use crate::multi::{tchebyshev_reference, ScalarizationKind, WeightDistribution};
use crate::{rng, Point, Result};

struct Run<'a> {
    benchmark: &'a Benchmark,
    cm: &'a CostModel,
    cfg: &'a PlannerConfig,
    seed: u64,
    trace: CampaignTrace,
    best_clean: f64,
}

impl Run<'_> {
    fn n(&self) -> usize {
        self.trace.inputs.len()
    }

    fn current(&self) -> &[f64] {
        self.trace
            .inputs
            .last()
            .expect("initial design queried first")
    }

    fn query(&mut self, x: Point) -> Result<()> {
        let t = self.n();
        let y = self
            .benchmark
            .evaluate(&x, self.cfg.noise_sd, seeds::query_noise(self.seed, t))?;
        let from = self.trace.inputs.last().unwrap_or(&x);
        let cost = self.cm.breakdown(from, &x)?;
        let step = cost.total();
        let cum = self.trace.cumulative_cost.last().copied().unwrap_or(0.0) + step;
        if let Some(reg) = &mut self.trace.regret {
            let clean = if self.cfg.noise_sd > 0.0 {
                self.benchmark.evaluate_clean(&x)?[0]
            } else {
                y[0]
            };
            self.best_clean = self.best_clean.max(clean);
            let opt = self
                .benchmark
                .known_optimum()
                .expect("regret implies a known optimum")[0];
            reg.push((opt - self.best_clean).max(0.0));
        }
        self.trace.inputs.push(x);
        self.trace.observations.push(y);
        self.trace.step_costs.push(step);
        self.trace.penalties.push(cost.penalty);
        self.trace.cumulative_cost.push(cum);
        Ok(())
    }
}

enum Step {
    Query(Point),
    Stop,
}

fn tsp_config(cfg: &PlannerConfig, seed: u64) -> TspConfig {
    TspConfig {
        seed: rng::derive_seed(seed, cfg.tsp.seed),
        ..cfg.tsp.clone()
    }
}

/// Smallest lengthscale per dimension across the objective models.
fn min_lengthscales(models: &[Standardized]) -> Vec<f64> {
    let mut ls = models[0].model.kernel().lengthscales.clone();
    for m in &models[1..] {
        for (a, b) in ls.iter_mut().zip(&m.model.kernel().lengthscales) {
            *a = a.min(*b);
        }
    }
    ls
}

/// Runs one optimization campaign to budget exhaustion or self-stop.
///
/// Queries are counted against `cfg.budget` including the initial design. All
/// randomness is derived from `seed`, so identical arguments give identical
/// traces.
pub fn run_campaign(
    benchmark: &Benchmark,
    cm: &CostModel,
    cfg: &PlannerConfig,
    seed: u64,
) -> Result<CampaignTrace> {
    cfg.validate(benchmark, cm)?;
    let regret =
        (benchmark.objective_count() == 1 && benchmark.known_optimum().is_some()).then(Vec::new);
    let mut run = Run {
        benchmark,
        cm,
        cfg,
        seed,
        trace: CampaignTrace {
            benchmark: benchmark.name().to_string(),
            seed,
            config: cfg.clone(),
            cost_model: cm.clone(),
            inputs: Vec::new(),
            observations: Vec::new(),
            step_costs: Vec::new(),
            penalties: Vec::new(),
            cumulative_cost: Vec::new(),
            regret,
            termination: Termination::BudgetExhausted,
        },
        best_clean: f64::NEG_INFINITY,
    };
    let d = benchmark.dim();
    for x in seeds::initial_design(seed, d, cfg.initial_design.min(cfg.budget)) {
        run.query(x)?;
    }

    let mut surrogate = Surrogate::new(
        d,
        benchmark.objective_count(),
        &cfg.model,
        cfg.refit_every,
        seeds::fit(seed),
    )?;
    let mut random_plan = Vec::new().into_iter();
    if cfg.strategy == Strategy::Random && run.n() < cfg.budget {
        let mut r = rng::rng_from_seed(seeds::random_plan(seed));
        let pts: Vec<Point> = (run.n()..cfg.budget)
            .map(|_| (0..d).map(|_| r.random()).collect())
            .collect();
        let tsp = tsp_config(cfg, seeds::iteration(seed, run.n()));
        random_plan = order_points(&pts, run.current(), cm, &tsp)
            .points
            .into_iter();
    }

    while run.n() < cfg.budget {
        let step = if cfg.strategy == Strategy::Random {
            Step::Query(
                random_plan
                    .next()
                    .expect("one planned point per remaining query"),
            )
        } else {
            let models = surrogate.models(&run.trace.inputs, &run.trace.observations)?;
            next_step(&run, &models)?
        };
        match step {
            Step::Query(x) => run.query(x)?,
            Step::Stop => {
                run.trace.termination = Termination::SelfStopped;
                break;
            }
        }
    }
    Ok(run.trace)
}

fn next_step(run: &Run<'_>, models: &[Standardized]) -> Result<Step> {
    let cfg = run.cfg;
    let cm = run.cm;
    let n = run.n();
    let current = run.current().to_vec();
    let it = seeds::iteration(run.seed, n);
    let remaining = cfg.budget - n;

    // EI per unit cost denominator, floored so it stays positive.
    let fixed_only = cfg.eipu_cost == EipuCost::Fixed;
    let floor = cfg.eipu_cost_floor;
    let cur = current.clone();
    let cost0 = move |x: &[f64]| {
        if fixed_only {
            cm.fixed_cost(x)
        } else {
            (cm.fixed_cost(x) + cm.movement_cost(&cur, x)).max(floor)
        }
    };

    let strategy = cfg.strategy;
    match strategy {
        Strategy::Snake | Strategy::SsSnake | Strategy::TrSnake | Strategy::MoSnake => {
            let batch = build_batch(cfg, models, remaining, seeds::batch(it), n)?;
            let mut points = batch.points;
            if cfg.deletion == super::Deletion::Ell {
                let kept = ell_point_deletion(&points, &current, &min_lengthscales(models));
                // an emptied batch falls back to the full one
                if !kept.is_empty() {
                    points = kept;
                }
            }
            if strategy == Strategy::SsSnake {
                let st = cfg.stopping.as_ref().expect("validated");
                let b = ProposedBatch {
                    points,
                    created_at: n,
                };
                let (reduced, stop) =
                    ei_point_deletion(&b, &models[0].model, models[0].best(), &cost0, st)?;
                if stop {
                    return Ok(Step::Stop);
                }
                points = reduced.points;
            }
            let path = order_points(&points, &current, cm, &tsp_config(cfg, seeds::tsp(it)));
            let mut next = path.points.into_iter().next().expect("batch is non-empty");
            if strategy == Strategy::TrSnake {
                next = truncate_step(&current, &next, cfg.delta_max.expect("validated"));
            }
            Ok(Step::Query(next))
        }
        Strategy::Ts => {
            let batch = build_batch(cfg, models, 1, seeds::batch(it), n)?;
            Ok(Step::Query(
                batch.points.into_iter().next().expect("one point"),
            ))
        }
        Strategy::Ei | Strategy::TrEi | Strategy::Eipu | Strategy::EipuStd => {
            let uses_cost = matches!(strategy, Strategy::Eipu | Strategy::EipuStd);
            let denom: Box<Denominator<'_>> = if !uses_cost {
                Box::new(|_: &[f64], g: &mut [f64]| {
                    g.fill(0.0);
                    1.0
                })
            } else if fixed_only {
                Box::new(|x: &[f64], g: &mut [f64]| {
                    g.fill(0.0);
                    cm.fixed_cost(x)
                })
            } else {
                let cur = current.clone();
                let scale = cm.movement_scale;
                Box::new(move |x: &[f64], g: &mut [f64]| {
                    let dist = crate::euclidean(x, &cur);
                    let c = cm.fixed_cost(x) + scale * dist;
                    if c <= floor || dist == 0.0 {
                        g.fill(0.0);
                    } else {
                        for ((gi, xi), ci) in g.iter_mut().zip(x).zip(&cur) {
                            *gi = scale * (xi - ci) / dist;
                        }
                    }
                    c.max(floor)
                })
            };
            let best =
                maximize_acquisition(&models[0], &*denom, &cfg.sampling, seeds::acquisition(it))?;
            if let Some(st) = &cfg.stopping {
                let stop = match strategy {
                    Strategy::Eipu => best.score < st.delta,
                    Strategy::EipuStd => st.deletes(best.score, best.variance),
                    _ => false,
                };
                if stop {
                    return Ok(Step::Stop);
                }
            }
            let mut next = best.point;
            if strategy == Strategy::TrEi {
                next = truncate_step(&current, &next, cfg.delta_max.expect("validated"));
            }
            Ok(Step::Query(next))
        }
        Strategy::Random => unreachable!("random campaigns follow their up-front plan"),
    }
}

fn build_batch(
    cfg: &PlannerConfig,
    models: &[Standardized],
    size: usize,
    seed: u64,
    created_at: usize,
) -> Result<ProposedBatch> {
    if models.len() == 1 {
        return create_batch_with(&models[0].model, size, &cfg.sampling, seed, created_at);
    }
    let gps: Vec<_> = models.iter().map(|m| m.model.clone()).collect();
    let reference = match cfg.scalarization {
        ScalarizationKind::Tchebyshev => {
            let n = models[0].model.data().len();
            let obs: Vec<Vec<f64>> = (0..n)
                .map(|i| models.iter().map(|m| m.model.data().outputs()[i]).collect())
                .collect();
            tchebyshev_reference(&obs)
        }
        ScalarizationKind::Linear => None,
    };
    create_scalarized_batch(
        &gps,
        size,
        &WeightDistribution::UniformSimplex,
        cfg.scalarization,
        reference.as_deref(),
        &cfg.sampling,
        seed,
        created_at,
    )
}
