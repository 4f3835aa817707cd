use rand::Rng;
use rand_distr::StandardNormal;

use super::{ModelConfig, SamplingConfig};
use crate::acquisition::{ei_from_moments, normal_cdf, normal_pdf};
use crate::gp::{
    fit_hyperparameters_with, Dataset, FitOptions, GaussianProcessModel, HyperBounds, KernelConfig,
};
use crate::sampling::ascend;
use crate::{rng, Point, Result};

/// A GP over standardized outputs `z = (y - mean) / scale`.
#[derive(Clone, Debug)]
pub struct Standardized {
    pub model: GaussianProcessModel,
    pub mean: f64,
    pub scale: f64,
}

impl Standardized {
    pub fn best(&self) -> f64 {
        self.model
            .data()
            .outputs()
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Per-objective GP hyperparameters and the schedule on which they are refit.
///
/// Hyperparameters are refit by marginal likelihood once `min_fit_points`
/// observations exist, again whenever the data has doubled since the last fit,
/// and every `refit_every` observations after that.
#[derive(Clone, Debug)]
pub struct Surrogate {
    kernels: Vec<KernelConfig>,
    cfg: ModelConfig,
    refit_every: usize,
    last_fit: Option<usize>,
    seed: u64,
}

impl Surrogate {
    pub fn new(
        dim: usize,
        objectives: usize,
        cfg: &ModelConfig,
        refit_every: usize,
        seed: u64,
    ) -> Result<Self> {
        let k = KernelConfig::isotropic(cfg.kernel, dim, cfg.initial_lengthscale, 1.0, 1e-6)?;
        Ok(Self {
            kernels: vec![k; objectives],
            cfg: cfg.clone(),
            refit_every: refit_every.max(1),
            last_fit: None,
            seed,
        })
    }

    pub fn kernels(&self) -> &[KernelConfig] {
        &self.kernels
    }

    pub fn should_refit(&self, n: usize) -> bool {
        if n < self.cfg.min_fit_points.max(1) {
            return false;
        }
        match self.last_fit {
            None => true,
            Some(m) => n >= m + m.min(self.refit_every),
        }
    }

    /// Standardized models for every objective, refitting hyperparameters
    /// first when the schedule says so. `observations[i][k]` is objective `k`
    /// at `inputs[i]`.
    pub fn models(
        &mut self,
        inputs: &[Point],
        observations: &[Vec<f64>],
    ) -> Result<Vec<Standardized>> {
        let n = inputs.len();
        let dim = self.kernels[0].dim();
        let refit = self.should_refit(n);
        let mut out = Vec::with_capacity(self.kernels.len());
        for k in 0..self.kernels.len() {
            let ys: Vec<f64> = observations.iter().map(|o| o[k]).collect();
            let mean = ys.iter().sum::<f64>() / n.max(1) as f64;
            let var = if n > 1 {
                ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1) as f64
            } else {
                0.0
            };
            let scale = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
            let z: Vec<f64> = ys.iter().map(|y| (y - mean) / scale).collect();
            let data = Dataset::from_parts(dim, inputs.to_vec(), z)?;
            if refit {
                let opts = FitOptions {
                    restarts: self.cfg.fit_restarts,
                    max_iters: self.cfg.fit_iterations,
                    seed: rng::derive_seed(self.seed, k as u64),
                    bounds: HyperBounds {
                        lengthscale: self.cfg.lengthscale_bounds,
                        signal_variance: self.cfg.signal_variance_bounds,
                        noise_variance: self.cfg.noise_variance_bounds,
                    },
                    lengthscale_prior: self.cfg.lengthscale_prior,
                };
                // a failed fit keeps the previous hyperparameters
                if let Ok(kc) = fit_hyperparameters_with(&data, &self.kernels[k], &opts) {
                    self.kernels[k] = kc;
                }
            }
            let model = GaussianProcessModel::fit(self.kernels[k].clone(), data)?;
            out.push(Standardized { model, mean, scale });
        }
        if refit {
            self.last_fit = Some(n);
        }
        Ok(out)
    }
}

/// Cost denominator for EI per unit cost, with its gradient in `x`.
pub(crate) type Denominator<'a> = dyn Fn(&[f64], &mut [f64]) -> f64 + 'a;

/// Value of `EI / c(x)` and its gradient.
fn score_with_gradient(
    model: &GaussianProcessModel,
    best: f64,
    denom: &Denominator<'_>,
    x: &[f64],
    grad: &mut [f64],
    scratch: &mut [Vec<f64>; 3],
) -> f64 {
    let [gm, gv, gc] = scratch;
    let Ok((m, v)) = model.posterior_with_gradient(x, gm, gv) else {
        grad.fill(0.0);
        return f64::NEG_INFINITY;
    };
    let c = denom(x, gc);
    let ei = ei_from_moments(m, v, best);
    let s = v.max(0.0).sqrt();
    for i in 0..grad.len() {
        let dei = if s > 0.0 {
            let z = (m - best) / s;
            normal_cdf(z) * gm[i] + normal_pdf(z) * gv[i] / (2.0 * s)
        } else if m > best {
            gm[i]
        } else {
            0.0
        };
        grad[i] = (dei * c - ei * gc[i]) / (c * c);
    }
    ei / c
}

/// Result of maximizing EI (per unit cost) over the unit cube.
#[derive(Clone, Debug, PartialEq)]
pub struct AcquisitionMax {
    pub point: Point,
    pub score: f64,
    pub variance: f64,
}

/// Screens uniform candidates, observed inputs and perturbations of the best
/// observations, then refines the top three by projected Adam.
pub(crate) fn maximize_acquisition(
    s: &Standardized,
    denom: &Denominator<'_>,
    cfg: &SamplingConfig,
    seed: u64,
) -> Result<AcquisitionMax> {
    let model = &s.model;
    let best = s.best();
    let d = model.dim();
    let mut r = rng::rng_from_seed(seed);
    let mut cands: Vec<Point> = (0..2 * cfg.candidates)
        .map(|_| (0..d).map(|_| r.random()).collect())
        .collect();
    let data = model.data();
    cands.extend(data.inputs().iter().cloned());
    let mut ranked: Vec<usize> = (0..data.len()).collect();
    ranked.sort_by(|&a, &b| {
        data.outputs()[b]
            .total_cmp(&data.outputs()[a])
            .then(a.cmp(&b))
    });
    for &i in ranked.iter().take(5) {
        for _ in 0..8 {
            let p = data.inputs()[i]
                .iter()
                .map(|v| (v + 0.05 * r.sample::<f64, _>(StandardNormal)).clamp(0.0, 1.0))
                .collect();
            cands.push(p);
        }
    }
    let moments = model.posterior_many(&cands)?;
    let mut scratch = vec![0.0; d];
    let scores: Vec<f64> = cands
        .iter()
        .zip(&moments)
        .map(|(x, &(m, v))| ei_from_moments(m, v, best) / denom(x, &mut scratch))
        .collect();
    let mut order: Vec<usize> = (0..cands.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));

    let mut sc = [vec![0.0; d], vec![0.0; d], vec![0.0; d]];
    let mut best_pt: Option<(Point, f64)> = None;
    for &i in order.iter().take(3) {
        let (x, v) = ascend(
            |x, g| score_with_gradient(model, best, denom, x, g, &mut sc),
            &cands[i],
            2 * cfg.refine_steps,
            cfg.learning_rate,
        );
        if best_pt.as_ref().is_none_or(|(_, bv)| v > *bv) {
            best_pt = Some((x, v));
        }
    }
    let (point, score) = best_pt.expect("candidate set is non-empty");
    let (_, variance) = model.posterior(&point)?;
    Ok(AcquisitionMax {
        point,
        score,
        variance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::KernelFamily;

    fn toy(n: usize) -> (Vec<Point>, Vec<Vec<f64>>) {
        let mut r = rng::rng_from_seed(4);
        let xs: Vec<Point> = (0..n).map(|_| vec![r.random(), r.random()]).collect();
        let ys = xs
            .iter()
            .map(|x| vec![100.0 + 50.0 * (6.0 * x[0]).sin() * x[1]])
            .collect();
        (xs, ys)
    }

    #[test]
    fn refit_schedule() {
        let cfg = ModelConfig::default();
        let mut s = Surrogate::new(2, 1, &cfg, 25, 0).unwrap();
        let mut fits = Vec::new();
        let (xs, ys) = toy(120);
        for n in 1..=120 {
            if s.should_refit(n) {
                fits.push(n);
            }
            s.models(&xs[..n], &ys[..n]).unwrap();
        }
        assert_eq!(fits, vec![4, 8, 16, 32, 57, 82, 107]);
    }

    #[test]
    fn few_scattered_points_keep_their_signal() {
        let mut r = rng::rng_from_seed(9);
        let xs: Vec<Point> = (0..4)
            .map(|_| (0..6).map(|_| r.random()).collect())
            .collect();
        let ys: Vec<Vec<f64>> = (0..4).map(|i| vec![(i as f64).sin()]).collect();
        let mut s = Surrogate::new(6, 1, &ModelConfig::default(), 25, 1).unwrap();
        s.models(&xs, &ys).unwrap();
        let k = &s.kernels()[0];
        assert!(k.noise_variance <= 0.1 + 1e-12);
        assert!(k.signal_variance > k.noise_variance, "{k:?}");
    }

    #[test]
    fn outputs_are_standardized() {
        let (xs, ys) = toy(30);
        let mut s = Surrogate::new(2, 1, &ModelConfig::default(), 25, 0).unwrap();
        let m = s.models(&xs, &ys).unwrap().remove(0);
        let z = m.model.data().outputs();
        let mean = z.iter().sum::<f64>() / 30.0;
        let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 29.0;
        assert!(mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-12);
        for (zi, yi) in z.iter().zip(&ys) {
            assert!((zi * m.scale + m.mean - yi[0]).abs() < 1e-9);
        }
    }

    #[test]
    fn score_gradient_matches_finite_differences() {
        let (xs, ys) = toy(10);
        let k = KernelConfig::isotropic(KernelFamily::Matern52, 2, 0.3, 1.0, 1e-6).unwrap();
        let z: Vec<f64> = ys.iter().map(|y| (y[0] - 100.0) / 50.0).collect();
        let model = GaussianProcessModel::fit(k, Dataset::from_parts(2, xs, z).unwrap()).unwrap();
        let cur = [0.2, 0.8];
        let denom = |x: &[f64], g: &mut [f64]| {
            let dist = crate::euclidean(x, &cur);
            for i in 0..2 {
                g[i] = (x[i] - cur[i]) / dist;
            }
            0.1 + dist
        };
        let best = 0.5;
        let mut sc = [vec![0.0; 2], vec![0.0; 2], vec![0.0; 2]];
        let x = [0.55, 0.45];
        let mut g = [0.0; 2];
        score_with_gradient(&model, best, &denom, &x, &mut g, &mut sc);
        let h = 1e-6;
        let mut tmp = [0.0; 2];
        for i in 0..2 {
            let (mut up, mut dn) = (x, x);
            up[i] += h;
            dn[i] -= h;
            let fu = score_with_gradient(&model, best, &denom, &up, &mut tmp, &mut sc);
            let fd = score_with_gradient(&model, best, &denom, &dn, &mut tmp, &mut sc);
            let fdg = (fu - fd) / (2.0 * h);
            assert!(
                (g[i] - fdg).abs() < 1e-5 * (1.0 + fdg.abs()),
                "{} vs {fdg}",
                g[i]
            );
        }
    }

    #[test]
    fn acquisition_max_beats_grid() {
        let (xs, ys) = toy(12);
        let mut s = Surrogate::new(2, 1, &ModelConfig::default(), 25, 0).unwrap();
        let m = s.models(&xs, &ys).unwrap().remove(0);
        let one = |_: &[f64], g: &mut [f64]| {
            g.fill(0.0);
            1.0
        };
        let got = maximize_acquisition(&m, &one, &SamplingConfig::default(), 1).unwrap();
        let best = m.best();
        let mut grid = 0.0f64;
        for i in 0..=100 {
            for j in 0..=100 {
                let (mu, v) = m
                    .model
                    .posterior(&[i as f64 / 100.0, j as f64 / 100.0])
                    .unwrap();
                grid = grid.max(ei_from_moments(mu, v, best));
            }
        }
        assert!(got.score >= 0.97 * grid, "{} vs grid {grid}", got.score);
    }
}
