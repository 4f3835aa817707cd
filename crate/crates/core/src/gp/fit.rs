//! Marginal-likelihood hyperparameter fitting.
//!
//! Parameters are optimized in log space: `ln l_1 .. ln l_d, ln signal_variance,
//! ln noise_variance`, inside a box given by [`HyperBounds`]. Each start runs a
//! projected L-BFGS ascent on the analytic gradient.

use std::collections::VecDeque;

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::model::{factorize, gram};
use super::{Dataset, GaussianProcessModel, KernelConfig};
use crate::{check_dim, rng, Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct HyperBounds {
    pub lengthscale: (f64, f64),
    pub signal_variance: (f64, f64),
    pub noise_variance: (f64, f64),
}

impl Default for HyperBounds {
    fn default() -> Self {
        Self {
            lengthscale: (1e-2, 10.0),
            signal_variance: (1e-4, 1e2),
            noise_variance: (1e-8, 10.0),
        }
    }
}

/// Gamma(shape, rate) prior on each lengthscale. With a prior the fit
/// maximizes `lml + sum_d ((shape - 1) ln l_d - rate l_d)` instead of the
/// plain marginal likelihood.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaPrior {
    pub shape: f64,
    pub rate: f64,
}

impl GammaPrior {
    /// Unnormalized log density at `l` and its derivative in `ln l`.
    fn log_density(&self, l: f64) -> (f64, f64) {
        (
            (self.shape - 1.0) * l.ln() - self.rate * l,
            (self.shape - 1.0) - self.rate * l,
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitOptions {
    pub restarts: usize,
    pub max_iters: usize,
    pub bounds: HyperBounds,
    pub lengthscale_prior: Option<GammaPrior>,
    /// Seeds the random restart locations.
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            restarts: 5,
            max_iters: 100,
            bounds: HyperBounds::default(),
            lengthscale_prior: None,
            seed: 0x5eed,
        }
    }
}

pub fn log_marginal_likelihood(kernel: &KernelConfig, data: &Dataset) -> Result<f64> {
    Ok(GaussianProcessModel::fit(kernel.clone(), data.clone())?.log_marginal_likelihood())
}

/// Log marginal likelihood and its gradient with respect to
/// `(ln l_1 .. ln l_d, ln signal_variance, ln noise_variance)`.
pub fn log_marginal_likelihood_with_gradient(
    kernel: &KernelConfig,
    data: &Dataset,
) -> Result<(f64, Vec<f64>)> {
    kernel.validate()?;
    check_dim(kernel.dim(), data.dim())?;
    let d = kernel.dim();
    let n = data.len();
    if n == 0 {
        return Ok((0.0, vec![0.0; d + 2]));
    }
    let k = gram(kernel, data.inputs());
    let (chol, _) = factorize(&k, kernel.noise_variance)?;
    let mean = data.outputs().iter().sum::<f64>() / n as f64;
    let y = DVector::from_iterator(n, data.outputs().iter().map(|v| v - mean));
    let alpha = chol.solve(&y);
    let log_det: f64 = chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum();
    let lml = -0.5 * y.dot(&alpha) - log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();

    // W = alpha alpha^T - K^-1 ; dL/dtheta = 0.5 tr(W dK/dtheta)
    let kinv = chol.inverse();
    let mut grad = vec![0.0; d + 2];
    let mut pair = vec![0.0; d + 1];
    let inputs = data.inputs();
    for i in 0..n {
        for j in 0..=i {
            let w = alpha[i] * alpha[j] - kinv[(i, j)];
            let factor = if i == j { 0.5 } else { 1.0 };
            kernel.eval_with_log_grads(&inputs[i], &inputs[j], &mut pair);
            for (g, p) in grad.iter_mut().zip(&pair) {
                *g += factor * w * p;
            }
        }
    }
    let trace_w: f64 = (0..n).map(|i| alpha[i] * alpha[i] - kinv[(i, i)]).sum();
    grad[d + 1] = 0.5 * trace_w * kernel.noise_variance;
    Ok((lml, grad))
}

fn to_log(kernel: &KernelConfig, bounds: &HyperBounds) -> Vec<f64> {
    let mut p: Vec<f64> = kernel.lengthscales.iter().map(|l| l.ln()).collect();
    p.push(kernel.signal_variance.ln());
    p.push(kernel.noise_variance.max(bounds.noise_variance.0).ln());
    p
}

fn from_log(template: &KernelConfig, p: &[f64]) -> KernelConfig {
    let d = template.dim();
    KernelConfig {
        family: template.family,
        lengthscales: p[..d].iter().map(|v| v.exp()).collect(),
        signal_variance: p[d].exp(),
        noise_variance: p[d + 1].exp(),
    }
}

fn log_box(dim: usize, b: &HyperBounds) -> (Vec<f64>, Vec<f64>) {
    let mut lo = vec![b.lengthscale.0.ln(); dim];
    let mut hi = vec![b.lengthscale.1.ln(); dim];
    lo.push(b.signal_variance.0.ln());
    hi.push(b.signal_variance.1.ln());
    lo.push(b.noise_variance.0.ln());
    hi.push(b.noise_variance.1.ln());
    (lo, hi)
}

fn project(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for ((v, l), h) in x.iter_mut().zip(lo).zip(hi) {
        *v = v.clamp(*l, *h);
    }
}

/// Projected L-BFGS minimization of `f` over the box `[lo, hi]`.
/// `f` returns `None` where it cannot be evaluated; that counts as `+inf`.
pub(crate) fn minimize_box(
    mut f: impl FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
    x0: &[f64],
    lo: &[f64],
    hi: &[f64],
    max_iters: usize,
) -> Option<(Vec<f64>, f64)> {
    const MEMORY: usize = 6;
    let mut x = x0.to_vec();
    project(&mut x, lo, hi);
    let (mut fx, mut g) = f(&x)?;
    let mut hist: VecDeque<(Vec<f64>, Vec<f64>)> = VecDeque::new();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>();

    for _ in 0..max_iters {
        // two-loop recursion
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(hist.len());
        for (s, y) in hist.iter().rev() {
            let rho = 1.0 / dot(y, s);
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push((a, rho));
        }
        if let Some((s, y)) = hist.back() {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        } else {
            let gn = dot(&g, &g).sqrt().max(1e-12);
            q.iter_mut().for_each(|v| *v /= gn);
        }
        for ((s, y), (a, rho)) in hist.iter().zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        if dot(&dir, &g) >= 0.0 {
            hist.clear();
            let gn = dot(&g, &g).sqrt().max(1e-12);
            dir = g.iter().map(|v| -v / gn).collect();
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let mut xn: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + step * b).collect();
            project(&mut xn, lo, hi);
            let moved: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
            let decrease = dot(&g, &moved);
            if decrease >= 0.0 {
                step *= 0.5;
                continue;
            }
            if let Some((fnew, gnew)) = f(&xn) {
                if fnew.is_finite() && fnew <= fx + 1e-4 * decrease {
                    accepted = Some((xn, fnew, gnew));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((xn, fnew, gnew)) = accepted else {
            break;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gnew.iter().zip(&g).map(|(a, b)| a - b).collect();
        let improvement = fx - fnew;
        if dot(&s, &y) > 1e-12 {
            hist.push_back((s, y));
            if hist.len() > MEMORY {
                hist.pop_front();
            }
        }
        x = xn;
        g = gnew;
        fx = fnew;
        if improvement.abs() < 1e-10 * (1.0 + fx.abs()) {
            break;
        }
    }
    Some((x, fx))
}

/// Maximizes the log marginal likelihood from `init` plus `restarts - 1`
/// random starts, with default bounds and iteration budget.
pub fn fit_hyperparameters(
    data: &Dataset,
    init: &KernelConfig,
    restarts: usize,
) -> Result<KernelConfig> {
    fit_hyperparameters_with(
        data,
        init,
        &FitOptions {
            restarts,
            ..FitOptions::default()
        },
    )
}

pub fn fit_hyperparameters_with(
    data: &Dataset,
    init: &KernelConfig,
    opts: &FitOptions,
) -> Result<KernelConfig> {
    if data.is_empty() {
        return Err(Error::InvalidInput(
            "cannot fit hyperparameters to an empty dataset".into(),
        ));
    }
    if opts.restarts == 0 {
        return Err(Error::InvalidInput("restarts must be at least 1".into()));
    }
    init.validate()?;
    check_dim(init.dim(), data.dim())?;
    let log_prior = |k: &KernelConfig, grad: Option<&mut [f64]>| -> f64 {
        let Some(prior) = opts.lengthscale_prior else {
            return 0.0;
        };
        let mut total = 0.0;
        let mut grad = grad;
        for (i, l) in k.lengthscales.iter().enumerate() {
            let (v, dv) = prior.log_density(*l);
            total += v;
            if let Some(g) = grad.as_deref_mut() {
                g[i] += dv;
            }
        }
        total
    };
    // Fails with the jitter level reached if the starting point is singular.
    let init_score = log_marginal_likelihood(init, data)? + log_prior(init, None);

    let d = init.dim();
    let (lo, hi) = log_box(d, &opts.bounds);
    let objective = |p: &[f64]| {
        let k = from_log(init, p);
        log_marginal_likelihood_with_gradient(&k, data)
            .ok()
            .map(|(v, mut g)| {
                let v = v + log_prior(&k, Some(&mut g));
                (-v, g.into_iter().map(|x| -x).collect())
            })
    };

    let mut rng = rng::rng_from_seed(rng::derive_seed(opts.seed, data.len() as u64));
    let mut starts = vec![to_log(init, &opts.bounds)];
    for _ in 1..opts.restarts {
        let mut p: Vec<f64> = (0..d)
            .map(|_| rng.random_range(0.05f64.ln()..1.5f64.ln()))
            .collect();
        p.push(rng.random_range(0.1f64.ln()..10.0f64.ln()));
        p.push(rng.random_range(1e-6f64.ln()..1e-1f64.ln()));
        starts.push(p);
    }

    let mut best: Option<(Vec<f64>, f64)> = None;
    for s in &starts {
        if let Some((p, v)) = minimize_box(objective, s, &lo, &hi, opts.max_iters) {
            if best.as_ref().is_none_or(|(_, bv)| v < *bv) {
                best = Some((p, v));
            }
        }
    }
    match best {
        Some((p, v)) if -v >= init_score => Ok(from_log(init, &p)),
        _ => Ok(init.clone()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::KernelFamily;
    use nalgebra::DMatrix;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn toy(seed: u64, n: usize) -> Dataset {
        let mut r = rng::rng_from_seed(seed);
        let xs: Vec<Vec<f64>> = (0..n).map(|_| vec![r.random(), r.random()]).collect();
        let ys = xs
            .iter()
            .map(|x| (6.0 * x[0]).sin() + x[1] * x[1] + 0.05 * r.random::<f64>())
            .collect();
        Dataset::from_parts(2, xs, ys).unwrap()
    }

    #[test]
    fn gradient_matches_central_differences() {
        let data = toy(1, 12);
        for family in [KernelFamily::Matern52, KernelFamily::SquaredExponential] {
            let k = KernelConfig::new(family, vec![0.3, 0.6], 0.8, 1e-2).unwrap();
            let (_, g) = log_marginal_likelihood_with_gradient(&k, &data).unwrap();
            let bounds = HyperBounds::default();
            let p = to_log(&k, &bounds);
            for i in 0..p.len() {
                let h = 1e-5;
                let mut pp = p.clone();
                let mut pm = p.clone();
                pp[i] += h;
                pm[i] -= h;
                let fp = log_marginal_likelihood(&from_log(&k, &pp), &data).unwrap();
                let fm = log_marginal_likelihood(&from_log(&k, &pm), &data).unwrap();
                let fd = (fp - fm) / (2.0 * h);
                let rel = (g[i] - fd).abs() / fd.abs().max(1e-3);
                assert!(rel < 1e-4, "param {i}: analytic {} vs fd {}", g[i], fd);
            }
        }
    }

    #[test]
    fn gamma_prior_derivative_in_log_lengthscale() {
        let prior = GammaPrior {
            shape: 3.0,
            rate: 6.0,
        };
        for l in [0.05_f64, 0.3, 1.7] {
            let h = 1e-6;
            let fd = (prior.log_density((l.ln() + h).exp()).0
                - prior.log_density((l.ln() - h).exp()).0)
                / (2.0 * h);
            assert!((prior.log_density(l).1 - fd).abs() < 1e-6);
        }
        // mode of the density in l is (shape - 1) / rate
        assert_eq!(prior.log_density(1.0 / 3.0).1, 2.0 - 2.0);
    }

    #[test]
    fn prior_pulls_in_runaway_lengthscales() {
        // a linear trend sends the likelihood-only lengthscale to its bound
        let xs: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64 / 5.0]).collect();
        let ys = xs.iter().map(|x| x[0]).collect();
        let data = Dataset::from_parts(1, xs, ys).unwrap();
        let init = KernelConfig::isotropic(KernelFamily::Matern52, 1, 0.2, 1.0, 1e-6).unwrap();
        let mut opts = FitOptions {
            restarts: 3,
            ..FitOptions::default()
        };
        let plain = fit_hyperparameters_with(&data, &init, &opts).unwrap();
        opts.lengthscale_prior = Some(GammaPrior {
            shape: 3.0,
            rate: 6.0,
        });
        let map = fit_hyperparameters_with(&data, &init, &opts).unwrap();
        assert!(
            map.lengthscales[0] < 0.5 * plain.lengthscales[0],
            "{map:?} vs {plain:?}"
        );
    }

    #[test]
    fn single_observation_never_worse() {
        let data = Dataset::from_parts(1, vec![vec![0.4]], vec![2.0]).unwrap();
        let init = KernelConfig::isotropic(KernelFamily::Matern52, 1, 0.2, 1.0, 1e-3).unwrap();
        let fitted = fit_hyperparameters(&data, &init, 3).unwrap();
        assert!(
            log_marginal_likelihood(&fitted, &data).unwrap()
                >= log_marginal_likelihood(&init, &data).unwrap()
        );
    }

    #[test]
    fn improves_on_init() {
        let data = toy(4, 25);
        let init = KernelConfig::isotropic(KernelFamily::Matern52, 2, 2.0, 5.0, 0.5).unwrap();
        let fitted = fit_hyperparameters(&data, &init, 3).unwrap();
        let a = log_marginal_likelihood(&init, &data).unwrap();
        let b = log_marginal_likelihood(&fitted, &data).unwrap();
        assert!(b > a + 1.0, "{a} -> {b}");
    }

    #[test]
    fn empty_data_and_zero_restarts_rejected() {
        let init = KernelConfig::isotropic(KernelFamily::Matern52, 1, 0.2, 1.0, 0.0).unwrap();
        assert!(fit_hyperparameters(&Dataset::new(1), &init, 1).is_err());
        let data = Dataset::from_parts(1, vec![vec![0.4]], vec![2.0]).unwrap();
        assert!(fit_hyperparameters(&data, &init, 0).is_err());
    }

    /// Draws `n` noisy values from an SE-kernel GP with the given lengthscale.
    fn draw_se_gp(seed: u64, n: usize, lengthscale: f64) -> Dataset {
        let mut r = rng::rng_from_seed(seed);
        let xs: Vec<Vec<f64>> = (0..n).map(|_| vec![r.random()]).collect();
        let k = KernelConfig::isotropic(KernelFamily::SquaredExponential, 1, lengthscale, 1.0, 0.0)
            .unwrap();
        let mut g = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                g[(i, j)] = k.eval(&xs[i], &xs[j]);
            }
            g[(i, i)] += 1e-4;
        }
        let l = g.cholesky().unwrap().unpack();
        let z = DVector::from_iterator(n, (0..n).map(|_| r.sample::<f64, _>(StandardNormal)));
        let y = l * z;
        Dataset::from_parts(1, xs, y.iter().copied().collect()).unwrap()
    }

    #[test]
    fn recovers_known_lengthscale() {
        let init =
            KernelConfig::isotropic(KernelFamily::SquaredExponential, 1, 0.5, 1.0, 1e-2).unwrap();
        let mut within = 0;
        for seed in 0..10 {
            let data = draw_se_gp(100 + seed, 20, 0.2);
            let fitted = fit_hyperparameters(&data, &init, 5).unwrap();
            let l = fitted.lengthscales[0];
            if (0.1..=0.4).contains(&l) {
                within += 1;
            }
        }
        assert!(within >= 8, "only {within}/10 fits within a factor of 2");
    }

    #[test]
    fn constant_outputs_favour_noise() {
        let xs: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 / 9.0]).collect();
        let data = Dataset::from_parts(1, xs, vec![3.0; 10]).unwrap();
        let init = KernelConfig::isotropic(KernelFamily::Matern52, 1, 0.3, 1.0, 1e-2).unwrap();
        let fitted = fit_hyperparameters(&data, &init, 5).unwrap();
        assert!(
            fitted.signal_variance <= fitted.noise_variance + 1e-3,
            "{fitted:?}"
        );

        // brute-force grid over (signal, noise) at the fitted lengthscale
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        for i in 0..=30 {
            for j in 0..=30 {
                let s = 10f64.powf(-4.0 + 6.0 * i as f64 / 30.0);
                let n = 10f64.powf(-8.0 + 9.0 * j as f64 / 30.0);
                let k = KernelConfig {
                    signal_variance: s,
                    noise_variance: n,
                    ..fitted.clone()
                };
                let v = log_marginal_likelihood(&k, &data).unwrap();
                if v > best.0 {
                    best = (v, s, n);
                }
            }
        }
        assert!(best.1 <= best.2 + 1e-3, "grid optimum {best:?}");
    }
}
