use serde::{Deserialize, Serialize};

use crate::{check_dim, Error, Result};

const SQRT5: f64 = 2.236_067_977_499_79;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum KernelFamily {
    #[serde(rename = "squared-exponential", alias = "se")]
    SquaredExponential,
    #[default]
    #[serde(rename = "matern-5/2", alias = "matern52")]
    Matern52,
}

/// Stationary covariance with per-dimension lengthscales.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub family: KernelFamily,
    pub lengthscales: Vec<f64>,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl KernelConfig {
    pub fn new(
        family: KernelFamily,
        lengthscales: Vec<f64>,
        signal_variance: f64,
        noise_variance: f64,
    ) -> Result<Self> {
        let k = Self {
            family,
            lengthscales,
            signal_variance,
            noise_variance,
        };
        k.validate()?;
        Ok(k)
    }

    /// Isotropic kernel with the same lengthscale in every dimension.
    pub fn isotropic(
        family: KernelFamily,
        dim: usize,
        lengthscale: f64,
        signal_variance: f64,
        noise_variance: f64,
    ) -> Result<Self> {
        Self::new(
            family,
            vec![lengthscale; dim],
            signal_variance,
            noise_variance,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.lengthscales.is_empty() {
            return Err(Error::Config(
                "kernel needs at least one lengthscale".into(),
            ));
        }
        if !self.lengthscales.iter().all(|l| l.is_finite() && *l > 0.0) {
            return Err(Error::Config(format!(
                "lengthscales must be positive, got {:?}",
                self.lengthscales
            )));
        }
        if !(self.signal_variance.is_finite() && self.signal_variance > 0.0) {
            return Err(Error::Config(format!(
                "signal variance must be positive, got {}",
                self.signal_variance
            )));
        }
        if !(self.noise_variance.is_finite() && self.noise_variance >= 0.0) {
            return Err(Error::Config(format!(
                "noise variance must be non-negative, got {}",
                self.noise_variance
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        check_dim(self.dim(), x.len())
    }

    #[inline]
    pub(crate) fn scaled_sq_dist(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .zip(&self.lengthscales)
            .map(|((x, y), l)| {
                let d = (x - y) / l;
                d * d
            })
            .sum()
    }

    /// Covariance as a function of the squared scaled distance.
    #[inline]
    pub(crate) fn profile(&self, r2: f64) -> f64 {
        match self.family {
            KernelFamily::SquaredExponential => self.signal_variance * (-0.5 * r2).exp(),
            KernelFamily::Matern52 => {
                let r = r2.sqrt();
                self.signal_variance * (1.0 + SQRT5 * r + 5.0 / 3.0 * r2) * (-SQRT5 * r).exp()
            }
        }
    }

    /// d k / d (r^2).
    #[inline]
    pub(crate) fn profile_derivative(&self, r2: f64) -> f64 {
        match self.family {
            KernelFamily::SquaredExponential => -0.5 * self.signal_variance * (-0.5 * r2).exp(),
            KernelFamily::Matern52 => {
                let r = r2.sqrt();
                -self.signal_variance * 5.0 / 6.0 * (1.0 + SQRT5 * r) * (-SQRT5 * r).exp()
            }
        }
    }

    /// Noise-free covariance k(a, b).
    #[inline]
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        self.profile(self.scaled_sq_dist(a, b))
    }

    /// Adds `weight * dk(x, anchor)/dx` into `grad`.
    #[inline]
    pub(crate) fn accumulate_grad_x(
        &self,
        x: &[f64],
        anchor: &[f64],
        weight: f64,
        grad: &mut [f64],
    ) {
        let r2 = self.scaled_sq_dist(x, anchor);
        let dk = self.profile_derivative(r2) * weight;
        for (((g, xi), ai), l) in grad.iter_mut().zip(x).zip(anchor).zip(&self.lengthscales) {
            *g += dk * 2.0 * (xi - ai) / (l * l);
        }
    }

    /// k(a, b) together with its derivatives with respect to `ln l_d` (first
    /// `dim` slots) and `ln signal_variance` (last slot).
    pub(crate) fn eval_with_log_grads(&self, a: &[f64], b: &[f64], grads: &mut [f64]) -> f64 {
        let r2 = self.scaled_sq_dist(a, b);
        let k = self.profile(r2);
        let dk = self.profile_derivative(r2);
        for (d, ((x, y), l)) in a.iter().zip(b).zip(&self.lengthscales).enumerate() {
            let u = ((x - y) / l).powi(2);
            grads[d] = -2.0 * u * dk;
        }
        grads[self.dim()] = k;
        k
    }
}
