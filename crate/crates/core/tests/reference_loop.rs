//! Plain SnAKe without deletion is the textbook loop: refit, draw a batch of
//! Thompson maximizers for the remaining budget, order it from the current
//! input and query the first point. Rebuilding that loop from the public
//! pieces must reproduce `run_campaign` exactly.

use snake_core::benchmarks::{branin, hartmann3};
use snake_core::planner::{create_batch_with, order_points, seeds, Surrogate, TspConfig};
use snake_core::rng::derive_seed;
use snake_core::{run_campaign, Benchmark, CostModel, PlannerConfig, Strategy};

fn reference_inputs(
    b: &Benchmark,
    cm: &CostModel,
    cfg: &PlannerConfig,
    seed: u64,
) -> Vec<Vec<f64>> {
    let mut inputs = seeds::initial_design(seed, b.dim(), cfg.initial_design);
    let mut obs: Vec<Vec<f64>> = inputs
        .iter()
        .enumerate()
        .map(|(t, x)| {
            b.evaluate(x, cfg.noise_sd, seeds::query_noise(seed, t))
                .unwrap()
        })
        .collect();
    let mut surrogate =
        Surrogate::new(b.dim(), 1, &cfg.model, cfg.refit_every, seeds::fit(seed)).unwrap();
    while inputs.len() < cfg.budget {
        let n = inputs.len();
        let it = seeds::iteration(seed, n);
        let models = surrogate.models(&inputs, &obs).unwrap();
        let batch = create_batch_with(
            &models[0].model,
            cfg.budget - n,
            &cfg.sampling,
            seeds::batch(it),
            n,
        )
        .unwrap();
        assert_eq!(batch.len(), cfg.budget - n);
        let tsp = TspConfig {
            seed: derive_seed(seeds::tsp(it), cfg.tsp.seed),
            ..cfg.tsp.clone()
        };
        let path = order_points(&batch.points, &inputs[n - 1], cm, &tsp);
        let x = path.points[0].clone();
        obs.push(
            b.evaluate(&x, cfg.noise_sd, seeds::query_noise(seed, n))
                .unwrap(),
        );
        inputs.push(x);
    }
    inputs
}

#[test]
fn snake_matches_reference_loop() {
    let cm = CostModel::truncated(0.1);
    let mut cfg = PlannerConfig::new(Strategy::Snake, 30);
    cfg.sampling.features = 128;
    cfg.sampling.candidates = 128;
    let trace = run_campaign(&branin(), &cm, &cfg, 4).unwrap();
    assert_eq!(trace.inputs, reference_inputs(&branin(), &cm, &cfg, 4));
}

#[test]
fn noisy_snake_matches_reference_loop() {
    let cm = CostModel::self_stopping(0.1);
    let mut cfg = PlannerConfig::new(Strategy::Snake, 20);
    cfg.noise_sd = 0.05;
    cfg.initial_design = 3;
    cfg.sampling.features = 128;
    cfg.sampling.candidates = 128;
    let trace = run_campaign(&hartmann3(), &cm, &cfg, 8).unwrap();
    assert_eq!(trace.inputs, reference_inputs(&hartmann3(), &cm, &cfg, 8));
}
