//! Expected improvement and the per-unit-cost stopping test.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::gp::GaussianProcessModel;
use crate::{Error, Point, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Anything that yields posterior moments `(mean, variance)` at a point.
pub trait Predictor {
    fn predict(&self, x: &[f64]) -> Result<(f64, f64)>;

    fn predict_many(&self, xs: &[Point]) -> Result<Vec<(f64, f64)>> {
        xs.iter().map(|x| self.predict(x)).collect()
    }
}

impl Predictor for GaussianProcessModel {
    fn predict(&self, x: &[f64]) -> Result<(f64, f64)> {
        self.posterior(x)
    }

    fn predict_many(&self, xs: &[Point]) -> Result<Vec<(f64, f64)>> {
        self.posterior_many(xs)
    }
}

pub fn normal_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Closed-form EI for maximization given posterior moments.
pub fn ei_from_moments(mean: f64, variance: f64, best: f64) -> f64 {
    let sigma = variance.max(0.0).sqrt();
    if sigma <= 0.0 {
        return (mean - best).max(0.0);
    }
    let z = (mean - best) / sigma;
    (sigma * (z * normal_cdf(z) + normal_pdf(z))).max(0.0)
}

pub fn expected_improvement(model: &impl Predictor, x: &[f64], best: f64) -> Result<f64> {
    let (m, v) = model.predict(x)?;
    Ok(ei_from_moments(m, v, best))
}

/// `EI(x) / cost0(x)`.
pub fn ei_per_unit_cost(
    model: &impl Predictor,
    x: &[f64],
    best: f64,
    cost0: impl Fn(&[f64]) -> f64,
) -> Result<f64> {
    let c = cost0(x);
    if !(c > 0.0) {
        return Err(Error::InvalidCost(c));
    }
    Ok(expected_improvement(model, x, best)? / c)
}

/// Thresholds for deleting a proposed point: EI per unit cost below `delta`
/// and posterior variance below `nu`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoppingConfig {
    pub delta: f64,
    pub nu: f64,
}

impl StoppingConfig {
    pub fn new(delta: f64, nu: f64) -> Result<Self> {
        let cfg = Self { delta, nu };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `delta = 1e-3 * range`, `nu = 0.1 * signal_variance`.
    pub fn from_scale(range_estimate: f64, signal_variance: f64) -> Result<Self> {
        Self::new(1e-3 * range_estimate, 0.1 * signal_variance)
    }

    pub fn validate(&self) -> Result<()> {
        if self.delta > 0.0 && self.nu > 0.0 {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "stopping thresholds must be positive, got delta={} nu={}",
                self.delta, self.nu
            )))
        }
    }

    /// Both conditions must hold for deletion.
    pub fn deletes(&self, eipu: f64, variance: f64) -> bool {
        eipu < self.delta && variance < self.nu
    }
}

pub fn should_delete(
    model: &impl Predictor,
    x: &[f64],
    best: f64,
    cost0: impl Fn(&[f64]) -> f64,
    cfg: &StoppingConfig,
) -> Result<bool> {
    let c = cost0(x);
    if !(c > 0.0) {
        return Err(Error::InvalidCost(c));
    }
    let (m, v) = model.predict(x)?;
    Ok(cfg.deletes(ei_from_moments(m, v, best) / c, v))
}
