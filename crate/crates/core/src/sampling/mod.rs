//! Pathwise posterior samples.
//!
//! A sample is a random-Fourier-feature draw from the prior plus a
//! data-dependent correction,
//!
//! ```text
//! f(x) = m + phi(x)^T w + k(x, X) (K + s2 I)^-1 (y - m - Phi(X) w - eps)
//! ```
//!
//! so it can be evaluated (and differentiated) anywhere without touching the
//! model again. Samples drawn together share one feature basis, which lets
//! a whole batch be screened on a candidate set with two matrix products.

mod features;
mod maximize;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub use features::FeatureBasis;
pub use maximize::{ascend, maximize_sample, maximize_sample_with, MaximizeOptions};

use crate::gp::{GaussianProcessModel, KernelConfig};
use crate::{check_dim, rng, Point, Result};

pub const DEFAULT_FEATURES: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleProvenance {
    pub model_id: u64,
    pub seed: u64,
}

/// One function drawn (approximately) from a GP posterior.
#[derive(Clone, Debug)]
pub struct PosteriorSample {
    basis: Arc<FeatureBasis>,
    /// Feature weights, already multiplied by the basis amplitude.
    weights: DVector<f64>,
    anchors: Arc<Vec<Point>>,
    update: DVector<f64>,
    kernel: KernelConfig,
    offset: f64,
    scale: f64,
    provenance: SampleProvenance,
}

impl PosteriorSample {
    /// Builds a sample from explicit parts: `offset + scale * (prior + update)`
    /// where the prior uses `weights` on `basis` (pre-scaled) and the update is
    /// `sum_j update_j k(x, anchor_j)`.
    pub fn from_parts(
        basis: FeatureBasis,
        weights: Vec<f64>,
        kernel: KernelConfig,
        anchors: Vec<Point>,
        update: Vec<f64>,
        offset: f64,
        scale: f64,
    ) -> Result<Self> {
        kernel.validate()?;
        check_dim(basis.feature_count(), weights.len())?;
        check_dim(anchors.len(), update.len())?;
        if basis.feature_count() > 0 {
            check_dim(kernel.dim(), basis.dim())?;
        }
        for a in &anchors {
            check_dim(kernel.dim(), a.len())?;
        }
        Ok(Self {
            basis: Arc::new(basis),
            weights: DVector::from_vec(weights),
            anchors: Arc::new(anchors),
            update: DVector::from_vec(update),
            kernel,
            offset,
            scale,
            provenance: SampleProvenance {
                model_id: 0,
                seed: 0,
            },
        })
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    pub fn feature_count(&self) -> usize {
        self.basis.feature_count()
    }

    pub fn provenance(&self) -> SampleProvenance {
        self.provenance
    }

    /// Affine output map applied on top of the current one.
    pub fn rescaled(mut self, offset: f64, scale: f64) -> Self {
        self.offset = offset + scale * self.offset;
        self.scale *= scale;
        self
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let prior = self.basis.weighted_sum(x, self.weights.as_slice());
        let upd: f64 = self
            .anchors
            .iter()
            .zip(self.update.iter())
            .map(|(a, u)| u * self.kernel.eval(x, a))
            .sum();
        self.offset + self.scale * (prior + upd)
    }

    /// Value at `x`; writes the gradient into `grad`.
    pub fn evaluate_with_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let prior = self
            .basis
            .weighted_sum_with_gradient(x, self.weights.as_slice(), grad);
        let mut upd = 0.0;
        for (a, u) in self.anchors.iter().zip(self.update.iter()) {
            upd += u * self.kernel.eval(x, a);
            self.kernel.accumulate_grad_x(x, a, *u, grad);
        }
        grad.iter_mut().for_each(|g| *g *= self.scale);
        self.offset + self.scale * (prior + upd)
    }
}

/// Samples drawn from one model with a shared feature basis.
#[derive(Clone, Debug)]
pub struct SampleBatch {
    basis: Arc<FeatureBasis>,
    anchors: Arc<Vec<Point>>,
    kernel: KernelConfig,
    /// F x S, pre-scaled.
    weights: DMatrix<f64>,
    /// n x S.
    updates: DMatrix<f64>,
    offset: f64,
    scale: f64,
    model_id: u64,
    seed: u64,
}

impl SampleBatch {
    pub fn draw(
        model: &GaussianProcessModel,
        count: usize,
        features: usize,
        seed: u64,
    ) -> Result<Self> {
        let kernel = model.kernel().clone();
        let mut rng = rng::rng_from_seed(seed);
        let basis = FeatureBasis::sample(&kernel, features, &mut rng)?;
        let amp = basis.amplitude();
        let weights = DMatrix::from_fn(features, count, |_, _| {
            amp * rng.sample::<f64, _>(StandardNormal)
        });
        let anchors: Vec<Point> = model.data().inputs().to_vec();
        let n = anchors.len();
        let updates = match model.cholesky() {
            None => DMatrix::zeros(0, count),
            Some(chol) => {
                let phi = basis.feature_matrix(&anchors);
                let prior_at_data = &phi * &weights;
                let noise_sd = kernel.noise_variance.sqrt();
                let m = model.mean_offset();
                let ys = model.data().outputs();
                let resid = DMatrix::from_fn(n, count, |i, j| {
                    let eps = if noise_sd > 0.0 {
                        noise_sd * rng.sample::<f64, _>(StandardNormal)
                    } else {
                        0.0
                    };
                    ys[i] - m - prior_at_data[(i, j)] - eps
                });
                chol.solve(&resid)
            }
        };
        Ok(Self {
            basis: Arc::new(basis),
            anchors: Arc::new(anchors),
            kernel,
            weights,
            updates,
            offset: model.mean_offset(),
            scale: 1.0,
            model_id: model_fingerprint(model),
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    /// Applies `offset + scale * value` to every sample.
    pub fn rescale(&mut self, offset: f64, scale: f64) {
        self.offset = offset + scale * self.offset;
        self.scale *= scale;
    }

    pub fn sample(&self, j: usize) -> PosteriorSample {
        PosteriorSample {
            basis: Arc::clone(&self.basis),
            weights: self.weights.column(j).into_owned(),
            anchors: Arc::clone(&self.anchors),
            update: self.updates.column(j).into_owned(),
            kernel: self.kernel.clone(),
            offset: self.offset,
            scale: self.scale,
            provenance: SampleProvenance {
                model_id: self.model_id,
                seed: rng::derive_seed(self.seed, j as u64),
            },
        }
    }

    pub fn samples(&self) -> Vec<PosteriorSample> {
        (0..self.len()).map(|j| self.sample(j)).collect()
    }

    /// Values of every sample at every candidate: a `candidates x samples` matrix.
    pub fn evaluate_candidates(&self, candidates: &[Point]) -> DMatrix<f64> {
        let phi = self.basis.feature_matrix(candidates);
        let mut out = &phi * &self.weights;
        if !self.anchors.is_empty() {
            let kc = DMatrix::from_fn(candidates.len(), self.anchors.len(), |i, j| {
                self.kernel.eval(&candidates[i], &self.anchors[j])
            });
            out += &kc * &self.updates;
        }
        out.apply(|v| *v = self.offset + self.scale * *v);
        out
    }
}

/// Cheap identity for a fitted model, used as sample provenance.
pub fn model_fingerprint(model: &GaussianProcessModel) -> u64 {
    let mut h = rng::mix64(model.data().len() as u64);
    for v in model
        .kernel()
        .lengthscales
        .iter()
        .chain([
            &model.kernel().signal_variance,
            &model.kernel().noise_variance,
        ])
        .chain(model.data().outputs())
    {
        h = rng::mix64(h ^ v.to_bits());
    }
    h
}

/// Draws one posterior sample with the default feature count.
pub fn draw_sample(model: &GaussianProcessModel, seed: u64) -> Result<PosteriorSample> {
    draw_sample_with(model, seed, DEFAULT_FEATURES)
}

pub fn draw_sample_with(
    model: &GaussianProcessModel,
    seed: u64,
    features: usize,
) -> Result<PosteriorSample> {
    let batch = SampleBatch::draw(model, 1, features, seed)?;
    let mut s = batch.sample(0);
    s.provenance.seed = seed;
    Ok(s)
}
