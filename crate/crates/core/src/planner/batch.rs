use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SamplingConfig;
use crate::acquisition::{ei_from_moments, Predictor, StoppingConfig};
use crate::gp::GaussianProcessModel;
use crate::multi::{Scalarization, ScalarizationKind, WeightDistribution};
use crate::sampling::{ascend, PosteriorSample, SampleBatch};
use crate::{check_dim, euclidean, rng, Error, Point, Result};

/// Candidate inputs waiting to be ordered and queried.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProposedBatch {
    pub points: Vec<Point>,
    pub created_at: usize,
}

impl ProposedBatch {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Uniform candidates followed by the observed inputs.
fn candidate_set(models: &[GaussianProcessModel], count: usize, seed: u64) -> Vec<Point> {
    let d = models[0].dim();
    let mut r = rng::rng_from_seed(seed);
    let mut c: Vec<Point> = (0..count)
        .map(|_| (0..d).map(|_| r.random()).collect())
        .collect();
    c.extend(models[0].data().inputs().iter().cloned());
    c
}

/// Row index of the largest entry in column `j` (lowest index on ties).
fn column_argmax(m: &DMatrix<f64>, j: usize) -> usize {
    let mut best = 0;
    for i in 1..m.nrows() {
        if m[(i, j)] > m[(best, j)] {
            best = i;
        }
    }
    best
}

/// `remaining` Thompson-sample maximizers with the default sampling budget.
pub fn create_batch(
    model: &GaussianProcessModel,
    remaining: usize,
    seed: u64,
) -> Result<ProposedBatch> {
    create_batch_with(model, remaining, &SamplingConfig::default(), seed, 0)
}

/// One maximizer per posterior sample. All samples are screened on a shared
/// candidate set, then each is refined by projected Adam from its best candidate.
pub fn create_batch_with(
    model: &GaussianProcessModel,
    remaining: usize,
    cfg: &SamplingConfig,
    seed: u64,
    created_at: usize,
) -> Result<ProposedBatch> {
    if remaining == 0 {
        return Err(Error::InvalidInput("batch size must be at least 1".into()));
    }
    let samples = SampleBatch::draw(model, remaining, cfg.features, rng::derive_seed(seed, 1))?;
    let cands = candidate_set(
        std::slice::from_ref(model),
        cfg.candidates,
        rng::derive_seed(seed, 2),
    );
    let values = samples.evaluate_candidates(&cands);
    let points = (0..remaining)
        .map(|j| {
            let s = samples.sample(j);
            let start = &cands[column_argmax(&values, j)];
            ascend(
                |x, g| s.evaluate_with_gradient(x, g),
                start,
                cfg.refine_steps,
                cfg.learning_rate,
            )
            .0
        })
        .collect();
    Ok(ProposedBatch { points, created_at })
}

/// Random-scalarization Thompson batch over independent per-objective models:
/// each batch point maximizes a scalarization of one joint sample under its
/// own weight draw.
pub fn create_scalarized_batch(
    models: &[GaussianProcessModel],
    remaining: usize,
    p_lambda: &WeightDistribution,
    kind: ScalarizationKind,
    reference: Option<&[f64]>,
    cfg: &SamplingConfig,
    seed: u64,
    created_at: usize,
) -> Result<ProposedBatch> {
    if models.len() < 2 {
        return Err(Error::Config(
            "random scalarization needs at least 2 objectives".into(),
        ));
    }
    if remaining == 0 {
        return Err(Error::InvalidInput("batch size must be at least 1".into()));
    }
    let d = models[0].dim();
    for m in models {
        check_dim(d, m.dim())?;
    }
    let k = models.len();
    let batches: Vec<SampleBatch> = models
        .iter()
        .enumerate()
        .map(|(i, m)| {
            SampleBatch::draw(
                m,
                remaining,
                cfg.features,
                rng::derive_seed(seed, 10 + i as u64),
            )
        })
        .collect::<Result<_>>()?;
    let mut wr = rng::rng_from_seed(rng::derive_seed(seed, 3));
    let scalarizations: Vec<Scalarization> = (0..remaining)
        .map(|_| {
            Scalarization::new(
                kind,
                p_lambda.sample(k, &mut wr),
                reference.map(<[f64]>::to_vec),
            )
        })
        .collect::<Result<_>>()?;
    let cands = candidate_set(models, cfg.candidates, rng::derive_seed(seed, 2));
    let values: Vec<DMatrix<f64>> = batches
        .iter()
        .map(|b| b.evaluate_candidates(&cands))
        .collect();
    let mut scratch = vec![0.0; d];
    let mut v = vec![0.0; k];
    let points = (0..remaining)
        .map(|j| {
            let s = &scalarizations[j];
            let mut best = (0, f64::NEG_INFINITY);
            for c in 0..cands.len() {
                for (vi, m) in v.iter_mut().zip(&values) {
                    *vi = m[(c, j)];
                }
                let val = s.apply_unchecked(&v);
                if val > best.1 {
                    best = (c, val);
                }
            }
            let samples: Vec<PosteriorSample> = batches.iter().map(|b| b.sample(j)).collect();
            let refs: Vec<&PosteriorSample> = samples.iter().collect();
            ascend(
                |x, g| s.value_and_gradient(&refs, x, g, &mut scratch),
                &cands[best.0],
                cfg.refine_steps,
                cfg.learning_rate,
            )
            .0
        })
        .collect();
    Ok(ProposedBatch { points, created_at })
}

/// Removes path points within one lengthscale of `queried` in the scaled
/// sup-norm `max_j |p_j - x_j| / l_j`.
pub fn ell_point_deletion(path: &[Point], queried: &[f64], lengthscales: &[f64]) -> Vec<Point> {
    path.iter()
        .filter(|p| {
            let scaled = p
                .iter()
                .zip(queried)
                .zip(lengthscales)
                .map(|((a, b), l)| (a - b).abs() / l)
                .fold(0.0, f64::max);
            scaled >= 1.0
        })
        .cloned()
        .collect()
}

/// Drops every point whose EI per unit cost is below `cfg.delta` and whose
/// variance is below `cfg.nu`. The flag is true when nothing is left.
pub fn ei_point_deletion(
    batch: &ProposedBatch,
    model: &impl Predictor,
    best: f64,
    cost0: impl Fn(&[f64]) -> f64,
    cfg: &StoppingConfig,
) -> Result<(ProposedBatch, bool)> {
    let moments = model.predict_many(&batch.points)?;
    let mut kept = Vec::with_capacity(batch.len());
    for (p, (m, v)) in batch.points.iter().zip(moments) {
        let c = cost0(p);
        if !(c > 0.0) {
            return Err(Error::InvalidCost(c));
        }
        if !cfg.deletes(ei_from_moments(m, v, best) / c, v) {
            kept.push(p.clone());
        }
    }
    let terminate = kept.is_empty();
    Ok((
        ProposedBatch {
            points: kept,
            created_at: batch.created_at,
        },
        terminate,
    ))
}

/// Moves from `current` towards `proposed` by at most `delta_max`
/// (Euclidean), then clamps to the unit cube.
pub fn truncate_step(current: &[f64], proposed: &[f64], delta_max: f64) -> Point {
    let dist = euclidean(current, proposed);
    if dist <= delta_max {
        return proposed.to_vec();
    }
    let mut len = delta_max;
    loop {
        let x: Point = current
            .iter()
            .zip(proposed)
            .map(|(c, p)| (c + (p - c) / dist * len).clamp(0.0, 1.0))
            .collect();
        // rounding can overshoot by an ulp
        if euclidean(current, &x) <= delta_max {
            return x;
        }
        len *= 1.0 - 1e-12;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::{Dataset, KernelConfig, KernelFamily};
    use proptest::prelude::*;

    #[test]
    fn truncation_examples() {
        assert_eq!(truncate_step(&[0.0, 0.0], &[1.0, 0.0], 0.1), vec![0.1, 0.0]);
        assert_eq!(
            truncate_step(&[0.5, 0.5], &[0.53, 0.54], 0.1),
            vec![0.53, 0.54]
        );
        let x = truncate_step(&[0.5, 0.5], &[0.8, 0.9], 0.25);
        assert!((x[0] - 0.65).abs() < 1e-12 && (x[1] - 0.70).abs() < 1e-12);
        assert!((euclidean(&[0.5, 0.5], &x) - 0.25).abs() < 1e-12);
        assert_eq!(truncate_step(&[0.2, 0.2], &[0.2, 0.2], 0.1), vec![0.2, 0.2]);
    }

    #[test]
    fn ell_deletion_examples() {
        assert!(ell_point_deletion(&[], &[0.5], &[0.1]).is_empty());
        assert!(ell_point_deletion(&[vec![0.5, 0.5]], &[0.5, 0.5], &[0.1, 0.1]).is_empty());
        let path = vec![vec![0.55, 0.5], vec![0.7, 0.5]];
        let kept = ell_point_deletion(&path, &[0.5, 0.5], &[0.1, 0.1]);
        assert_eq!(kept, vec![vec![0.7, 0.5]]);
        // brute-force cross-check of the scaled distances
        assert!((0.55f64 - 0.5).abs() / 0.1 < 1.0 && (0.7f64 - 0.5).abs() / 0.1 >= 1.0);
    }

    struct Table(Vec<(Point, f64, f64)>);

    impl Predictor for Table {
        fn predict(&self, x: &[f64]) -> Result<(f64, f64)> {
            Ok(self
                .0
                .iter()
                .find(|(p, _, _)| p.as_slice() == x)
                .map(|(_, m, v)| (*m, *v))
                .unwrap())
        }
    }

    fn batch(n: usize) -> ProposedBatch {
        ProposedBatch {
            points: (0..n).map(|i| vec![i as f64 / 10.0]).collect(),
            created_at: 0,
        }
    }

    #[test]
    fn ei_deletion_is_an_and_gate() {
        let cfg = StoppingConfig::new(1e-3, 0.1).unwrap();
        let b = batch(4);
        // far below best but uncertain: kept
        let uncertain = Table(b.points.iter().map(|p| (p.clone(), -10.0, 0.5)).collect());
        let (out, stop) = ei_point_deletion(&b, &uncertain, 0.0, |_| 1.0, &cfg).unwrap();
        assert_eq!((out.len(), stop), (4, false));
        let settled = Table(b.points.iter().map(|p| (p.clone(), -10.0, 1e-4)).collect());
        let (out, stop) = ei_point_deletion(&b, &settled, 0.0, |_| 1.0, &cfg).unwrap();
        assert_eq!((out.len(), stop), (0, true));
        assert!(ei_point_deletion(&b, &settled, 0.0, |_| 0.0, &cfg).is_err());
    }

    #[test]
    fn mixed_batch_with_fitted_model() {
        let data = Dataset::from_parts(
            1,
            vec![vec![0.0], vec![0.1], vec![0.2], vec![0.3], vec![0.9]],
            vec![0.0, 0.2, 0.1, 0.0, 1.0],
        )
        .unwrap();
        let k =
            KernelConfig::isotropic(KernelFamily::SquaredExponential, 1, 0.1, 1.0, 1e-6).unwrap();
        let m = GaussianProcessModel::fit(k, data).unwrap();
        let cfg = StoppingConfig::new(1e-3, 0.05).unwrap();
        let b = ProposedBatch {
            points: vec![vec![0.05], vec![0.15], vec![0.6], vec![0.4], vec![0.95]],
            created_at: 3,
        };
        // oracle: the rule applied point by point
        let expected: Vec<Point> = b
            .points
            .iter()
            .filter(|p| !crate::acquisition::should_delete(&m, p, 1.0, |_| 1.0, &cfg).unwrap())
            .cloned()
            .collect();
        let (out, stop) = ei_point_deletion(&b, &m, 1.0, |_| 1.0, &cfg).unwrap();
        assert_eq!(out.points, expected);
        assert_eq!(out.len(), 3, "{:?}", out.points);
        assert!(!stop);
        assert_eq!(out.created_at, 3);
    }

    fn bump_model() -> GaussianProcessModel {
        let k =
            KernelConfig::isotropic(KernelFamily::SquaredExponential, 2, 0.15, 1.0, 1e-6).unwrap();
        GaussianProcessModel::fit(k, Dataset::new(2)).unwrap()
    }

    #[test]
    fn batch_size_and_determinism() {
        let m = bump_model();
        let a = create_batch(&m, 1, 9).unwrap();
        assert_eq!(a.len(), 1);
        let cfg = SamplingConfig {
            features: 128,
            candidates: 64,
            refine_steps: 5,
            ..SamplingConfig::default()
        };
        let a = create_batch_with(&m, 7, &cfg, 3, 2).unwrap();
        let b = create_batch_with(&m, 7, &cfg, 3, 2).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 7);
        assert!(a
            .points
            .iter()
            .all(|p| p.iter().all(|v| (0.0..=1.0).contains(v))));
    }

    #[test]
    fn batch_concentrates_on_dominant_mode() {
        // One dominant mode at c: a sharp, well-determined peak of height 3
        // over a flat floor of 0 from a handful of noiseless observations.
        let c = [0.7, 0.3];
        let f = |x: &[f64]| 3.0 * (-((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)) / 0.02).exp();
        // grid oracle for the mode location
        let mut grid_best = (vec![0.0, 0.0], f64::MIN);
        for i in 0..=200 {
            for j in 0..=200 {
                let x = [i as f64 / 200.0, j as f64 / 200.0];
                if f(&x) > grid_best.1 {
                    grid_best = (x.to_vec(), f(&x));
                }
            }
        }
        let mut pts = vec![c.to_vec()];
        for i in 0..4 {
            for j in 0..4 {
                pts.push(vec![0.125 + 0.25 * i as f64, 0.125 + 0.25 * j as f64]);
            }
        }
        let ys: Vec<f64> = pts.iter().map(|p| f(p)).collect();
        let k =
            KernelConfig::isotropic(KernelFamily::SquaredExponential, 2, 0.12, 1.0, 1e-6).unwrap();
        let m = GaussianProcessModel::fit(k, Dataset::from_parts(2, pts, ys).unwrap()).unwrap();
        for seed in 0..5 {
            let b = create_batch(&m, 50, seed).unwrap();
            let near = b
                .points
                .iter()
                .filter(|p| euclidean(p, &grid_best.0) < 0.2)
                .count();
            assert!(near >= 15, "seed {seed}: {near}/50 near the mode");
        }
    }

    #[test]
    fn scalarized_batch_basics() {
        let m = bump_model();
        let models = vec![m.clone(), m];
        let cfg = SamplingConfig {
            features: 128,
            candidates: 64,
            refine_steps: 5,
            ..SamplingConfig::default()
        };
        let dist = WeightDistribution::UniformSimplex;
        let a = create_scalarized_batch(
            &models,
            5,
            &dist,
            ScalarizationKind::Linear,
            None,
            &cfg,
            4,
            0,
        )
        .unwrap();
        let b = create_scalarized_batch(
            &models,
            5,
            &dist,
            ScalarizationKind::Linear,
            None,
            &cfg,
            4,
            0,
        )
        .unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 5);
        assert!(create_scalarized_batch(
            &models[..1],
            5,
            &dist,
            ScalarizationKind::Linear,
            None,
            &cfg,
            4,
            0
        )
        .is_err());
    }

    proptest! {
        #[test]
        fn truncated_step_respects_bound(
            c in proptest::collection::vec(0.0f64..1.0, 3),
            p in proptest::collection::vec(0.0f64..1.0, 3),
            delta in 0.001f64..0.5,
        ) {
            let x = truncate_step(&c, &p, delta);
            let d = euclidean(&c, &x);
            prop_assert!(d <= delta);
            prop_assert!(x.iter().all(|v| (0.0..=1.0).contains(v)));
            prop_assert!((d - euclidean(&c, &p).min(delta)).abs() < 1e-9);
        }

        #[test]
        fn ell_deletion_only_removes_neighbours(
            path in proptest::collection::vec(proptest::collection::vec(0.0f64..1.0, 2), 0..20),
            q in proptest::collection::vec(0.0f64..1.0, 2),
            l in 0.01f64..0.5,
        ) {
            let kept = ell_point_deletion(&path, &q, &[l, l]);
            prop_assert!(kept.len() <= path.len());
            for p in &path {
                let far = (p[0] - q[0]).abs() / l >= 1.0 || (p[1] - q[1]).abs() / l >= 1.0;
                prop_assert_eq!(kept.contains(p), far);
            }
        }
    }
}
