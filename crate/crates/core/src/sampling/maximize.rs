use rand::Rng;

use super::PosteriorSample;
use crate::{rng, Point, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct MaximizeOptions {
    pub restarts: usize,
    pub steps: usize,
    pub learning_rate: f64,
}

impl Default for MaximizeOptions {
    fn default() -> Self {
        Self {
            restarts: 10,
            steps: 200,
            learning_rate: 0.02,
        }
    }
}

/// Projected Adam ascent on `[0,1]^d` with a cosine-decayed step size.
/// Returns the best iterate seen, which is never worse than `start`.
pub fn ascend(
    mut f: impl FnMut(&[f64], &mut [f64]) -> f64,
    start: &[f64],
    steps: usize,
    learning_rate: f64,
) -> (Point, f64) {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    let d = start.len();
    let mut x = start.to_vec();
    let mut g = vec![0.0; d];
    let mut m = vec![0.0; d];
    let mut v = vec![0.0; d];
    let mut best_val = f(&x, &mut g);
    let mut best = x.clone();
    for t in 0..steps {
        let lr =
            learning_rate * 0.5 * (1.0 + (std::f64::consts::PI * t as f64 / steps as f64).cos());
        let k = (t + 1) as i32;
        for i in 0..d {
            m[i] = B1 * m[i] + (1.0 - B1) * g[i];
            v[i] = B2 * v[i] + (1.0 - B2) * g[i] * g[i];
            let mh = m[i] / (1.0 - B1.powi(k));
            let vh = v[i] / (1.0 - B2.powi(k));
            x[i] = (x[i] + lr * mh / (vh.sqrt() + 1e-8)).clamp(0.0, 1.0);
        }
        let val = f(&x, &mut g);
        if val > best_val {
            best_val = val;
            best.copy_from_slice(&x);
        }
    }
    (best, best_val)
}

/// Multi-start ascent from uniform random starts seeded by the sample's
/// provenance.
pub fn maximize_sample(sample: &PosteriorSample, restarts: usize) -> Result<Point> {
    let opts = MaximizeOptions {
        restarts,
        ..MaximizeOptions::default()
    };
    let mut r = rng::rng_from_seed(rng::derive_seed(sample.provenance().seed, 0xA5CE_17));
    Ok(maximize_sample_with(sample, &opts, &mut r))
}

pub fn maximize_sample_with(
    sample: &PosteriorSample,
    opts: &MaximizeOptions,
    rng: &mut impl Rng,
) -> Point {
    let d = sample.dim();
    let mut best: Option<(Point, f64)> = None;
    for _ in 0..opts.restarts.max(1) {
        let start: Point = (0..d).map(|_| rng.random()).collect();
        let (x, v) = ascend(
            |x, g| sample.evaluate_with_gradient(x, g),
            &start,
            opts.steps,
            opts.learning_rate,
        );
        if best.as_ref().is_none_or(|(_, bv)| v > *bv) {
            best = Some((x, v));
        }
    }
    best.expect("at least one restart").0
}
