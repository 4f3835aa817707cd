use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::gp::GaussianProcessModel;
use crate::sampling::{ascend, MaximizeOptions, PosteriorSample, DEFAULT_FEATURES};
use crate::{check_dim, rng, Error, Point, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarizationKind {
    Linear,
    Tchebyshev,
}

/// `linear: sum_k w_k v_k`, `tchebyshev: min_k w_k (v_k - z_k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scalarization {
    kind: ScalarizationKind,
    weights: Vec<f64>,
    reference: Option<Vec<f64>>,
}

impl Scalarization {
    pub fn linear(weights: Vec<f64>) -> Result<Self> {
        check_weights(&weights)?;
        Ok(Self {
            kind: ScalarizationKind::Linear,
            weights,
            reference: None,
        })
    }

    pub fn tchebyshev(weights: Vec<f64>, reference: Vec<f64>) -> Result<Self> {
        check_weights(&weights)?;
        check_dim(weights.len(), reference.len())?;
        Ok(Self {
            kind: ScalarizationKind::Tchebyshev,
            weights,
            reference: Some(reference),
        })
    }

    pub fn new(
        kind: ScalarizationKind,
        weights: Vec<f64>,
        reference: Option<Vec<f64>>,
    ) -> Result<Self> {
        match kind {
            ScalarizationKind::Linear => Self::linear(weights),
            ScalarizationKind::Tchebyshev => {
                let z = reference.ok_or_else(|| {
                    Error::Config("tchebyshev scalarization needs a reference point".into())
                })?;
                Self::tchebyshev(weights, z)
            }
        }
    }

    pub fn kind(&self) -> ScalarizationKind {
        self.kind
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn apply(&self, values: &[f64]) -> Result<f64> {
        check_dim(self.weights.len(), values.len())?;
        Ok(self.apply_unchecked(values))
    }

    pub(crate) fn apply_unchecked(&self, values: &[f64]) -> f64 {
        match &self.reference {
            None => self.weights.iter().zip(values).map(|(w, v)| w * v).sum(),
            Some(z) => self
                .weights
                .iter()
                .zip(values)
                .zip(z)
                .map(|((w, v), zk)| w * (v - zk))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Value and gradient of the scalarized combination of `samples` at `x`.
    /// Tchebyshev uses the gradient of the active (minimizing) term.
    pub(crate) fn value_and_gradient(
        &self,
        samples: &[&PosteriorSample],
        x: &[f64],
        grad: &mut [f64],
        scratch: &mut [f64],
    ) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        match &self.reference {
            None => {
                let mut total = 0.0;
                for (s, w) in samples.iter().zip(&self.weights) {
                    total += w * s.evaluate_with_gradient(x, scratch);
                    grad.iter_mut()
                        .zip(scratch.iter())
                        .for_each(|(g, v)| *g += w * v);
                }
                total
            }
            Some(z) => {
                let mut best = f64::INFINITY;
                for ((s, w), zk) in samples.iter().zip(&self.weights).zip(z) {
                    let v = w * (s.evaluate_with_gradient(x, scratch) - zk);
                    if v < best {
                        best = v;
                        grad.iter_mut()
                            .zip(scratch.iter())
                            .for_each(|(g, d)| *g = w * d);
                    }
                }
                best
            }
        }
    }
}

/// `scalarize(s, values)` as a free function.
pub fn scalarize(s: &Scalarization, values: &[f64]) -> Result<f64> {
    s.apply(values)
}

fn check_weights(w: &[f64]) -> Result<()> {
    let sum: f64 = w.iter().sum();
    if w.is_empty() || w.iter().any(|v| !(*v >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "scalarization weights must be non-negative and sum to 1, got {w:?}"
        )));
    }
    Ok(())
}

/// Distribution of the scalarization weights.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightDistribution {
    /// Uniform on the probability simplex.
    #[default]
    UniformSimplex,
    Fixed(Vec<f64>),
}

impl WeightDistribution {
    pub fn sample(&self, k: usize, rng: &mut impl Rng) -> Vec<f64> {
        match self {
            Self::Fixed(w) => w.clone(),
            Self::UniformSimplex => {
                let e: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
                let s: f64 = e.iter().sum();
                e.into_iter().map(|v| v / s).collect()
            }
        }
    }
}

/// Reference point for Tchebyshev scalarization: per-objective minimum of the
/// observations minus 1% of the observed range.
pub fn tchebyshev_reference(observations: &[Vec<f64>]) -> Option<Vec<f64>> {
    let k = observations.first()?.len();
    Some(
        (0..k)
            .map(|j| {
                let lo = observations
                    .iter()
                    .map(|o| o[j])
                    .fold(f64::INFINITY, f64::min);
                let hi = observations
                    .iter()
                    .map(|o| o[j])
                    .fold(f64::NEG_INFINITY, f64::max);
                lo - 0.01 * (hi - lo)
            })
            .collect(),
    )
}

/// Draws one posterior sample per objective and a weight vector, then returns
/// the maximizer of the scalarized combination over `[0,1]^d`.
pub fn sample_scalarized_maximizer(
    models: &[GaussianProcessModel],
    p_lambda: &WeightDistribution,
    kind: ScalarizationKind,
    reference: Option<&[f64]>,
    seed: u64,
) -> Result<Point> {
    if models.len() < 2 {
        return Err(Error::Config(
            "random scalarization needs at least 2 objectives".into(),
        ));
    }
    let d = models[0].dim();
    for m in models {
        check_dim(d, m.dim())?;
    }
    let samples: Vec<PosteriorSample> = models
        .iter()
        .enumerate()
        .map(|(k, m)| {
            crate::sampling::draw_sample_with(m, rng::derive_seed(seed, k as u64), DEFAULT_FEATURES)
        })
        .collect::<Result<_>>()?;
    let mut r = rng::rng_from_seed(rng::derive_seed(seed, 0x1a3b));
    let weights = p_lambda.sample(models.len(), &mut r);
    let s = Scalarization::new(kind, weights, reference.map(<[f64]>::to_vec))?;
    let refs: Vec<&PosteriorSample> = samples.iter().collect();
    let opts = MaximizeOptions::default();
    let mut scratch = vec![0.0; d];
    let mut best: Option<(Point, f64)> = None;
    for _ in 0..opts.restarts {
        let start: Point = (0..d).map(|_| r.random()).collect();
        let (x, v) = ascend(
            |x, g| s.value_and_gradient(&refs, x, g, &mut scratch),
            &start,
            opts.steps,
            opts.learning_rate,
        );
        if best.as_ref().is_none_or(|(_, bv)| v > *bv) {
            best = Some((x, v));
        }
    }
    Ok(best.expect("restarts >= 1").0)
}
