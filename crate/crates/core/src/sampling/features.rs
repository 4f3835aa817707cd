use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::gp::{KernelConfig, KernelFamily};
use crate::{Point, Result};

/// Random Fourier features `amplitude * cos(omega_i . x + b_i)`.
///
/// Frequencies are drawn from the kernel's spectral density: Gaussian for the
/// squared exponential, multivariate Student-t with 5 degrees of freedom for
/// Matern-5/2, each scaled by the inverse lengthscales.
#[derive(Clone, Debug)]
pub struct FeatureBasis {
    dim: usize,
    /// F x d
    frequencies: DMatrix<f64>,
    phases: Vec<f64>,
    amplitude: f64,
}

impl FeatureBasis {
    pub fn sample(kernel: &KernelConfig, count: usize, rng: &mut impl Rng) -> Result<Self> {
        kernel.validate()?;
        let d = kernel.dim();
        let chi = ChiSquared::new(5.0).expect("valid dof");
        let mut frequencies = DMatrix::zeros(count, d);
        let mut phases = Vec::with_capacity(count);
        for i in 0..count {
            let t_scale = match kernel.family {
                KernelFamily::SquaredExponential => 1.0,
                KernelFamily::Matern52 => (5.0_f64 / chi.sample(rng)).sqrt(),
            };
            for j in 0..d {
                let z: f64 = rng.sample(StandardNormal);
                frequencies[(i, j)] = z * t_scale / kernel.lengthscales[j];
            }
            phases.push(rng.random_range(0.0..std::f64::consts::TAU));
        }
        let amplitude = if count == 0 {
            0.0
        } else {
            (2.0 * kernel.signal_variance / count as f64).sqrt()
        };
        Ok(Self {
            dim: d,
            frequencies,
            phases,
            amplitude,
        })
    }

    /// A basis with no features (a sample that is pure data update).
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            frequencies: DMatrix::zeros(0, dim),
            phases: Vec::new(),
            amplitude: 0.0,
        }
    }

    pub fn feature_count(&self) -> usize {
        self.phases.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    #[inline]
    fn arg(&self, i: usize, x: &[f64]) -> f64 {
        let mut a = self.phases[i];
        for (j, xj) in x.iter().enumerate() {
            a += self.frequencies[(i, j)] * xj;
        }
        a
    }

    /// Unscaled features `cos(omega . x + b)` for each point (rows).
    pub fn feature_matrix(&self, points: &[Point]) -> DMatrix<f64> {
        DMatrix::from_fn(points.len(), self.feature_count(), |r, i| {
            self.arg(i, &points[r]).cos()
        })
    }

    pub fn weighted_sum(&self, x: &[f64], weights: &[f64]) -> f64 {
        weights
            .iter()
            .enumerate()
            .map(|(i, w)| w * self.arg(i, x).cos())
            .sum()
    }

    /// Adds the gradient of `weighted_sum` into `grad` and returns the value.
    pub fn weighted_sum_with_gradient(&self, x: &[f64], weights: &[f64], grad: &mut [f64]) -> f64 {
        let mut total = 0.0;
        for (i, w) in weights.iter().enumerate() {
            let (s, c) = self.arg(i, x).sin_cos();
            total += w * c;
            for (j, g) in grad.iter_mut().enumerate() {
                *g -= w * s * self.frequencies[(i, j)];
            }
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    /// Monte-Carlo kernel reconstruction: E[phi(x) phi(y)] over many bases
    /// should recover k(x, y).
    #[test]
    fn features_reconstruct_kernel() {
        for family in [KernelFamily::SquaredExponential, KernelFamily::Matern52] {
            let k = KernelConfig::new(family, vec![0.3, 0.5], 1.5, 0.0).unwrap();
            let mut r = rng::rng_from_seed(42);
            let basis = FeatureBasis::sample(&k, 200_000, &mut r).unwrap();
            let x = vec![0.2, 0.3];
            for y in [vec![0.2, 0.3], vec![0.35, 0.4], vec![0.6, 0.9]] {
                let fx = basis.feature_matrix(&[x.clone(), y.clone()]);
                let approx = basis.amplitude().powi(2) * fx.row(0).dot(&fx.row(1));
                let exact = k.eval(&x, &y);
                assert!(
                    (approx - exact).abs() < 0.02,
                    "{family:?} {y:?}: {approx} vs {exact}"
                );
            }
        }
    }
}
