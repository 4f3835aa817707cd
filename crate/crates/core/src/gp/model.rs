use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::{Dataset, KernelConfig};
use crate::{check_dim, Error, Point, Result};

/// Diagonal jitter tried, in order, when the Gram matrix is not numerically
/// positive definite.
pub const JITTER_LEVELS: [f64; 5] = [0.0, 1e-8, 1e-7, 1e-6, 1e-5];
const MAX_JITTER: f64 = 1e-4;

/// A fitted GP posterior.
///
/// The prior mean is the constant sample mean of the outputs (zero for an
/// empty dataset). The Cholesky factor of `K + (noise + jitter) I` is computed
/// once at construction; changing data or kernel means building a new model.
#[derive(Clone, Debug)]
pub struct GaussianProcessModel {
    kernel: KernelConfig,
    data: Arc<Dataset>,
    mean_offset: f64,
    jitter: f64,
    chol: Option<Cholesky<f64, Dyn>>,
    alpha: DVector<f64>,
}

pub(crate) fn gram(kernel: &KernelConfig, inputs: &[Point]) -> DMatrix<f64> {
    let n = inputs.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = kernel.signal_variance;
        for j in 0..i {
            let v = kernel.eval(&inputs[i], &inputs[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Factorizes `k + noise I`, escalating the jitter until it succeeds.
pub(crate) fn factorize(k: &DMatrix<f64>, noise: f64) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let levels = JITTER_LEVELS
        .iter()
        .copied()
        .chain(std::iter::once(MAX_JITTER));
    for jitter in levels {
        let mut m = k.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += noise + jitter;
        }
        if let Some(ch) = Cholesky::new(m) {
            let diag_ok = ch
                .l_dirty()
                .diagonal()
                .iter()
                .all(|d| d.is_finite() && *d > 0.0);
            if diag_ok {
                return Ok((ch, jitter));
            }
        }
    }
    Err(Error::NumericalFailure { jitter: MAX_JITTER })
}

impl GaussianProcessModel {
    pub fn fit(kernel: KernelConfig, data: Dataset) -> Result<Self> {
        Self::fit_shared(kernel, Arc::new(data))
    }

    pub fn fit_shared(kernel: KernelConfig, data: Arc<Dataset>) -> Result<Self> {
        kernel.validate()?;
        check_dim(kernel.dim(), data.dim())?;
        let n = data.len();
        if n == 0 {
            return Ok(Self {
                kernel,
                data,
                mean_offset: 0.0,
                jitter: 0.0,
                chol: None,
                alpha: DVector::zeros(0),
            });
        }
        let mean_offset = data.outputs().iter().sum::<f64>() / n as f64;
        let k = gram(&kernel, data.inputs());
        let (chol, jitter) = factorize(&k, kernel.noise_variance)?;
        let centered = DVector::from_iterator(n, data.outputs().iter().map(|y| y - mean_offset));
        let alpha = chol.solve(&centered);
        Ok(Self {
            kernel,
            data,
            mean_offset,
            jitter,
            chol: Some(chol),
            alpha,
        })
    }

    /// Rebuilds the model with new data under the same kernel.
    pub fn with_data(&self, data: Dataset) -> Result<Self> {
        Self::fit(self.kernel.clone(), data)
    }

    pub fn kernel(&self) -> &KernelConfig {
        &self.kernel
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    pub fn mean_offset(&self) -> f64 {
        self.mean_offset
    }

    /// Diagonal jitter that had to be added beyond the noise variance.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub(crate) fn cholesky(&self) -> Option<&Cholesky<f64, Dyn>> {
        self.chol.as_ref()
    }

    fn cross_cov(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.data.len(),
            self.data.inputs().iter().map(|xi| self.kernel.eval(x, xi)),
        )
    }

    /// Posterior mean and variance of the latent function at `x`.
    pub fn posterior(&self, x: &[f64]) -> Result<(f64, f64)> {
        check_dim(self.dim(), x.len())?;
        let prior = self.kernel.signal_variance;
        let Some(chol) = &self.chol else {
            return Ok((self.mean_offset, prior));
        };
        let ks = self.cross_cov(x);
        let mean = self.mean_offset + ks.dot(&self.alpha);
        let v = chol
            .l_dirty()
            .solve_lower_triangular(&ks)
            .expect("Cholesky factor has a positive diagonal");
        let var = (prior - v.norm_squared()).max(0.0);
        Ok((mean, var))
    }

    /// Posterior moments at many points; same values as calling
    /// [`posterior`](Self::posterior) per point.
    pub fn posterior_many(&self, xs: &[Point]) -> Result<Vec<(f64, f64)>> {
        for x in xs {
            check_dim(self.dim(), x.len())?;
        }
        let prior = self.kernel.signal_variance;
        let Some(chol) = &self.chol else {
            return Ok(vec![(self.mean_offset, prior); xs.len()]);
        };
        let n = self.data.len();
        let mut ks = DMatrix::zeros(n, xs.len());
        for (j, x) in xs.iter().enumerate() {
            for (i, xi) in self.data.inputs().iter().enumerate() {
                ks[(i, j)] = self.kernel.eval(x, xi);
            }
        }
        let means = ks.tr_mul(&self.alpha);
        let v = chol
            .l_dirty()
            .solve_lower_triangular(&ks)
            .expect("Cholesky factor has a positive diagonal");
        Ok((0..xs.len())
            .map(|j| {
                let var = (prior - v.column(j).norm_squared()).max(0.0);
                (self.mean_offset + means[j], var)
            })
            .collect())
    }

    /// Posterior mean and variance at `x` with their gradients in `x`.
    pub fn posterior_with_gradient(
        &self,
        x: &[f64],
        mean_grad: &mut [f64],
        var_grad: &mut [f64],
    ) -> Result<(f64, f64)> {
        check_dim(self.dim(), x.len())?;
        mean_grad.fill(0.0);
        var_grad.fill(0.0);
        let prior = self.kernel.signal_variance;
        let Some(chol) = &self.chol else {
            return Ok((self.mean_offset, prior));
        };
        let ks = self.cross_cov(x);
        let w = chol.solve(&ks);
        let var = prior - ks.dot(&w);
        for (i, xi) in self.data.inputs().iter().enumerate() {
            self.kernel
                .accumulate_grad_x(x, xi, self.alpha[i], mean_grad);
            self.kernel.accumulate_grad_x(x, xi, -2.0 * w[i], var_grad);
        }
        if var <= 0.0 {
            var_grad.fill(0.0);
        }
        Ok((self.mean_offset + ks.dot(&self.alpha), var.max(0.0)))
    }

    /// Log marginal likelihood of the (centered) outputs under this model.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let Some(chol) = &self.chol else {
            return 0.0;
        };
        let n = self.data.len() as f64;
        let centered = DVector::from_iterator(
            self.data.len(),
            self.data.outputs().iter().map(|y| y - self.mean_offset),
        );
        let log_det: f64 = chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum();
        -0.5 * centered.dot(&self.alpha) - log_det - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::KernelFamily;
    use proptest::prelude::*;
    use rand::Rng;

    fn se(dim: usize, l: f64, noise: f64) -> KernelConfig {
        KernelConfig::isotropic(KernelFamily::SquaredExponential, dim, l, 1.3, noise).unwrap()
    }

    /// Independent route: explicit inverse of the Gram matrix.
    fn oracle(kernel: &KernelConfig, data: &Dataset, x: &[f64]) -> (f64, f64) {
        let n = data.len();
        let mut k = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                k[(i, j)] = kernel.eval(&data.inputs()[i], &data.inputs()[j]);
            }
            k[(i, i)] += kernel.noise_variance;
        }
        let kinv = k.try_inverse().unwrap();
        let m = data.outputs().iter().sum::<f64>() / n as f64;
        let y = DVector::from_iterator(n, data.outputs().iter().map(|v| v - m));
        let ks = DVector::from_iterator(n, data.inputs().iter().map(|xi| kernel.eval(x, xi)));
        let mean = m + (ks.transpose() * &kinv * &y)[0];
        let var = kernel.eval(x, x) - (ks.transpose() * &kinv * &ks)[0];
        (mean, var)
    }

    #[test]
    fn empty_dataset_gives_prior() {
        let m = GaussianProcessModel::fit(se(2, 0.3, 0.0), Dataset::new(2)).unwrap();
        let (mu, var) = m.posterior(&[0.2, 0.9]).unwrap();
        assert_eq!(mu, 0.0);
        assert_eq!(var, 1.3);
    }

    #[test]
    fn noiseless_interpolation() {
        let ds = Dataset::from_parts(
            1,
            vec![vec![0.1], vec![0.5], vec![0.8]],
            vec![1.0, -2.0, 0.5],
        )
        .unwrap();
        let m = GaussianProcessModel::fit(se(1, 0.2, 0.0), ds).unwrap();
        let (mu, var) = m.posterior(&[0.5]).unwrap();
        assert!((mu + 2.0).abs() < 1e-6);
        assert!(var < 1e-6);
    }

    #[test]
    fn three_point_matches_direct_inverse() {
        let ds = Dataset::from_parts(
            2,
            vec![vec![0.1, 0.2], vec![0.7, 0.4], vec![0.3, 0.9]],
            vec![0.4, 1.1, -0.3],
        )
        .unwrap();
        let k = se(2, 0.35, 1e-3);
        let m = GaussianProcessModel::fit(k.clone(), ds.clone()).unwrap();
        for x in [[0.5, 0.5], [0.0, 1.0], [0.1, 0.2]] {
            let (mu, var) = m.posterior(&x).unwrap();
            let (omu, ovar) = oracle(&k, &ds, &x);
            assert!((mu - omu).abs() < 1e-8);
            assert!((var - ovar).abs() < 1e-8);
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let m = GaussianProcessModel::fit(se(2, 0.3, 0.0), Dataset::new(2)).unwrap();
        assert!(matches!(
            m.posterior(&[0.1]),
            Err(Error::DimensionMismatch {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn duplicate_points_need_jitter() {
        let ds = Dataset::from_parts(1, vec![vec![0.3], vec![0.3]], vec![1.0, 1.0]).unwrap();
        let m = GaussianProcessModel::fit(se(1, 0.2, 0.0), ds).unwrap();
        assert!(m.jitter() > 0.0);
    }

    #[test]
    fn batched_posterior_matches_pointwise() {
        let mut rng = crate::rng::rng_from_seed(3);
        let pts: Vec<Point> = (0..6).map(|_| vec![rng.random(), rng.random()]).collect();
        let ys: Vec<f64> = (0..6).map(|_| rng.random()).collect();
        let m = GaussianProcessModel::fit(
            KernelConfig::isotropic(KernelFamily::Matern52, 2, 0.3, 1.0, 1e-4).unwrap(),
            Dataset::from_parts(2, pts, ys).unwrap(),
        )
        .unwrap();
        let qs: Vec<Point> = (0..10).map(|_| vec![rng.random(), rng.random()]).collect();
        let batch = m.posterior_many(&qs).unwrap();
        for (q, (bm, bv)) in qs.iter().zip(batch) {
            let (pm, pv) = m.posterior(q).unwrap();
            assert!((pm - bm).abs() < 1e-12 && (pv - bv).abs() < 1e-12);
        }
    }

    #[test]
    fn posterior_gradient_matches_finite_differences() {
        for seed in 0..6 {
            let (mut k, ds) = random_problem(seed, 7);
            k.noise_variance = 1e-4;
            let m = GaussianProcessModel::fit(k, ds).unwrap();
            let x = [0.37, 0.61];
            let (mut gm, mut gv) = ([0.0; 2], [0.0; 2]);
            let (mean, var) = m.posterior_with_gradient(&x, &mut gm, &mut gv).unwrap();
            let (pm, pv) = m.posterior(&x).unwrap();
            assert!((mean - pm).abs() < 1e-10 && (var - pv).abs() < 1e-10);
            let h = 1e-6;
            for d in 0..2 {
                let (mut up, mut dn) = (x, x);
                up[d] += h;
                dn[d] -= h;
                let (mu, vu) = m.posterior(&up).unwrap();
                let (md, vd) = m.posterior(&dn).unwrap();
                assert!(
                    (gm[d] - (mu - md) / (2.0 * h)).abs() < 1e-5,
                    "mean grad seed {seed}"
                );
                assert!(
                    (gv[d] - (vu - vd) / (2.0 * h)).abs() < 1e-5,
                    "var grad seed {seed}"
                );
            }
        }
    }

    fn random_problem(seed: u64, n: usize) -> (KernelConfig, Dataset) {
        let mut rng = crate::rng::rng_from_seed(seed);
        let d = 2;
        let pts: Vec<Point> = (0..n)
            .map(|_| (0..d).map(|_| rng.random()).collect())
            .collect();
        let ys: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let family = if seed % 2 == 0 {
            KernelFamily::Matern52
        } else {
            KernelFamily::SquaredExponential
        };
        let k = KernelConfig::new(
            family,
            vec![rng.random_range(0.1..0.8), rng.random_range(0.1..0.8)],
            rng.random_range(0.5..2.0),
            0.0,
        )
        .unwrap();
        (k, Dataset::from_parts(d, pts, ys).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn variance_bounded_by_prior(seed in 0u64..10_000, q0 in 0.0f64..1.0, q1 in 0.0f64..1.0) {
            let (mut k, ds) = random_problem(seed, 5);
            k.noise_variance = 1e-3;
            let m = GaussianProcessModel::fit(k.clone(), ds).unwrap();
            let (_, var) = m.posterior(&[q0, q1]).unwrap();
            prop_assert!(var >= 0.0);
            prop_assert!(var <= k.signal_variance + k.noise_variance + 1e-6);
        }

        #[test]
        fn extra_observation_never_increases_variance(
            seed in 0u64..10_000, q0 in 0.0f64..1.0, q1 in 0.0f64..1.0,
            a0 in 0.0f64..1.0, a1 in 0.0f64..1.0,
        ) {
            let (k, ds) = random_problem(seed, 4);
            let before = GaussianProcessModel::fit(k.clone(), ds.clone()).unwrap();
            let mut more = ds.clone();
            more.push(vec![a0, a1], 0.0).unwrap();
            let after = GaussianProcessModel::fit(k, more).unwrap();
            let (_, v0) = before.posterior(&[q0, q1]).unwrap();
            let (_, v1) = after.posterior(&[q0, q1]).unwrap();
            prop_assert!(v1 <= v0 + 1e-6);
        }
    }
}
