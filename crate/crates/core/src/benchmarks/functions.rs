use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::{check_dim, check_unit_cube, rng, Error, Result};

pub type Objective = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

pub const BENCHMARK_NAMES: [&str; 6] = [
    "branin",
    "hartmann3",
    "hartmann6",
    "shekel",
    "mo-shekel",
    "synthetic-snar",
];

/// One or more objectives on `[0,1]^dim`, all to be maximized.
#[derive(Clone)]
pub struct Benchmark {
    name: String,
    dim: usize,
    objectives: Vec<Objective>,
    known_optimum: Option<Vec<f64>>,
}

impl fmt::Debug for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Benchmark")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("objectives", &self.objectives.len())
            .field("known_optimum", &self.known_optimum)
            .finish()
    }
}

impl Benchmark {
    pub fn new(name: impl Into<String>, dim: usize, objectives: Vec<Objective>) -> Result<Self> {
        if dim == 0 || objectives.is_empty() {
            return Err(Error::Config(
                "benchmark needs dim >= 1 and an objective".into(),
            ));
        }
        Ok(Self {
            name: name.into(),
            dim,
            objectives,
            known_optimum: None,
        })
    }

    pub fn with_optimum(mut self, optimum: Vec<f64>) -> Self {
        self.known_optimum = Some(optimum);
        self
    }

    /// Looks a benchmark up by name. `mo-shekel` accepts an optional
    /// dimension suffix, e.g. `mo-shekel:4`.
    pub fn by_name(name: &str) -> Result<Self> {
        let (base, arg) = match name.split_once(':') {
            Some((b, a)) => (b, Some(a)),
            None => (name, None),
        };
        let dim_arg = || -> Result<Option<usize>> {
            arg.map(|a| {
                a.parse::<usize>()
                    .map_err(|_| Error::Config(format!("bad dimension suffix in {name:?}")))
            })
            .transpose()
        };
        match base {
            "branin" => Ok(branin()),
            "hartmann3" => Ok(hartmann3()),
            "hartmann6" => Ok(hartmann6()),
            "shekel" => Ok(shekel()),
            "mo-shekel" => mo_shekel(dim_arg()?.unwrap_or(2)),
            "synthetic-snar" => Ok(synthetic_snar()),
            _ => Err(Error::Config(format!(
                "unknown benchmark {name:?}; available: {}",
                BENCHMARK_NAMES.join(", ")
            ))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn objective_count(&self) -> usize {
        self.objectives.len()
    }

    pub fn known_optimum(&self) -> Option<&[f64]> {
        self.known_optimum.as_deref()
    }

    /// Noiseless objective values.
    pub fn evaluate_clean(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, x.len())?;
        check_unit_cube(x)?;
        Ok(self.objectives.iter().map(|f| f(x)).collect())
    }

    /// Objective values plus independent Gaussian noise with standard
    /// deviation `noise_sd`, drawn from `seed`.
    pub fn evaluate(&self, x: &[f64], noise_sd: f64, seed: u64) -> Result<Vec<f64>> {
        if !(noise_sd >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "noise sd must be >= 0, got {noise_sd}"
            )));
        }
        let mut values = self.evaluate_clean(x)?;
        if noise_sd > 0.0 {
            let mut r = rng::rng_from_seed(seed);
            for v in &mut values {
                *v += noise_sd * r.sample::<f64, _>(StandardNormal);
            }
        }
        Ok(values)
    }
}

fn objective(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Objective {
    Arc::new(f)
}

/// Negated Branin on `[-5,10] x [0,15]`.
pub fn branin() -> Benchmark {
    let f = |x: &[f64]| {
        let x1 = -5.0 + 15.0 * x[0];
        let x2 = 15.0 * x[1];
        let b = 5.1 / (4.0 * PI * PI);
        let c = 5.0 / PI;
        let t = 1.0 / (8.0 * PI);
        let v = (x2 - b * x1 * x1 + c * x1 - 6.0).powi(2) + 10.0 * (1.0 - t) * x1.cos() + 10.0;
        -v
    };
    Benchmark::new("branin", 2, vec![objective(f)])
        .expect("valid")
        .with_optimum(vec![-0.397_887_357_729_738])
}

fn hartmann(x: &[f64], a: &[&[f64]], p: &[&[f64]]) -> f64 {
    const ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];
    ALPHA
        .iter()
        .zip(a.iter().zip(p))
        .map(|(al, (ai, pi))| {
            let inner: f64 = ai
                .iter()
                .zip(pi.iter())
                .zip(x)
                .map(|((aij, pij), xj)| aij * (xj - pij).powi(2))
                .sum();
            al * (-inner).exp()
        })
        .sum()
}

/// Negated Hartmann-3 on `[0,1]^3`.
pub fn hartmann3() -> Benchmark {
    const A: [[f64; 3]; 4] = [
        [3.0, 10.0, 30.0],
        [0.1, 10.0, 35.0],
        [3.0, 10.0, 30.0],
        [0.1, 10.0, 35.0],
    ];
    const P: [[f64; 3]; 4] = [
        [0.3689, 0.1170, 0.2673],
        [0.4699, 0.4387, 0.7470],
        [0.1091, 0.8732, 0.5547],
        [0.0381, 0.5743, 0.8828],
    ];
    let f = |x: &[f64]| {
        let a: Vec<&[f64]> = A.iter().map(|r| r.as_slice()).collect();
        let p: Vec<&[f64]> = P.iter().map(|r| r.as_slice()).collect();
        hartmann(x, &a, &p)
    };
    Benchmark::new("hartmann3", 3, vec![objective(f)])
        .expect("valid")
        .with_optimum(vec![3.862_782_147_820_756])
}

/// Negated Hartmann-6 on `[0,1]^6`.
pub fn hartmann6() -> Benchmark {
    const A: [[f64; 6]; 4] = [
        [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
        [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
        [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
        [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
    ];
    const P: [[f64; 6]; 4] = [
        [0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886],
        [0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991],
        [0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650],
        [0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381],
    ];
    let f = |x: &[f64]| {
        let a: Vec<&[f64]> = A.iter().map(|r| r.as_slice()).collect();
        let p: Vec<&[f64]> = P.iter().map(|r| r.as_slice()).collect();
        hartmann(x, &a, &p)
    };
    Benchmark::new("hartmann6", 6, vec![objective(f)])
        .expect("valid")
        .with_optimum(vec![3.322_368_011_415_515])
}

const SHEKEL_C: [[f64; 4]; 10] = [
    [4.0, 4.0, 4.0, 4.0],
    [1.0, 1.0, 1.0, 1.0],
    [8.0, 8.0, 8.0, 8.0],
    [6.0, 6.0, 6.0, 6.0],
    [3.0, 7.0, 3.0, 7.0],
    [2.0, 9.0, 2.0, 9.0],
    [5.0, 5.0, 3.0, 3.0],
    [8.0, 1.0, 8.0, 1.0],
    [6.0, 2.0, 6.0, 2.0],
    [7.0, 3.6, 7.0, 3.6],
];
const SHEKEL_BETA: [f64; 10] = [0.1, 0.2, 0.2, 0.4, 0.4, 0.6, 0.3, 0.7, 0.5, 0.5];

/// `sum_i 1 / (||10 x - c_i||^2 + beta_i)` over the given rows, using the
/// first `x.len()` coordinates of each center.
fn shekel_mixture(x: &[f64], rows: std::ops::Range<usize>) -> f64 {
    rows.map(|i| {
        let d2: f64 = x
            .iter()
            .zip(&SHEKEL_C[i])
            .map(|(xj, cj)| (10.0 * xj - cj).powi(2))
            .sum();
        1.0 / (d2 + SHEKEL_BETA[i])
    })
    .sum()
}

/// Negated Shekel-10 on `[0,10]^4`.
pub fn shekel() -> Benchmark {
    Benchmark::new("shekel", 4, vec![objective(|x| shekel_mixture(x, 0..10))])
        .expect("valid")
        .with_optimum(vec![10.536_409_816_692_05])
}

/// Two Shekel mixtures with disjoint centre sets (rows 0-4 and 5-9 of the
/// standard table) on `[0,10]^dim`, `dim` in 1..=4.
pub fn mo_shekel(dim: usize) -> Result<Benchmark> {
    if !(1..=4).contains(&dim) {
        return Err(Error::Config(format!(
            "mo-shekel supports 1..=4 dimensions, got {dim}"
        )));
    }
    Benchmark::new(
        "mo-shekel",
        dim,
        vec![
            objective(|x| shekel_mixture(x, 0..5)),
            objective(|x| shekel_mixture(x, 5..10)),
        ],
    )
}

/// Smooth 4-input, 2-objective surrogate whose Pareto front is nearly flat in
/// the second objective (a spread of about 0.055 against about 1.2 in the first).
pub fn synthetic_snar() -> Benchmark {
    let f1 =
        |x: &[f64]| x[0] * (0.6 + 0.4 * x[1]) * (-2.0 * (x[2] - 0.6).powi(2)).exp() + 0.2 * x[3];
    let f2 = |x: &[f64]| {
        -0.02 * x[0] - 0.05 * (x[1] - 0.3).powi(2) - 0.5 * (x[2] - 0.6).powi(2) - 0.01 * x[3]
    };
    Benchmark::new("synthetic-snar", 4, vec![objective(f1), objective(f2)]).expect("valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::fit::minimize_box;

    #[test]
    fn branin_grid_oracle() {
        let b = branin();
        let mut best = f64::MIN;
        let n = 2000;
        for i in 0..=n {
            for j in 0..=n {
                let v = b
                    .evaluate_clean(&[i as f64 / n as f64, j as f64 / n as f64])
                    .unwrap()[0];
                best = best.max(v);
            }
        }
        assert!((best - (-0.397887)).abs() < 1e-4, "{best}");
        let at_pi = b
            .evaluate_clean(&[(PI + 5.0) / 15.0, 2.275 / 15.0])
            .unwrap()[0];
        assert!((at_pi - b.known_optimum().unwrap()[0]).abs() < 1e-4);
    }

    /// Multi-start local optimization oracle over the raw formula.
    fn local_max(b: &Benchmark, starts: usize) -> f64 {
        let d = b.dim();
        let mut r = rng::rng_from_seed(17);
        let lo = vec![0.0; d];
        let hi = vec![1.0; d];
        let mut best = f64::MIN;
        for _ in 0..starts {
            let x0: Vec<f64> = (0..d).map(|_| r.random()).collect();
            let f = |x: &[f64]| {
                let v = b.evaluate_clean(x).ok()?[0];
                let g = (0..d)
                    .map(|i| {
                        let mut xp = x.to_vec();
                        let mut xm = x.to_vec();
                        xp[i] = (xp[i] + 1e-7).min(1.0);
                        xm[i] = (xm[i] - 1e-7).max(0.0);
                        let fp = b.evaluate_clean(&xp).unwrap()[0];
                        let fm = b.evaluate_clean(&xm).unwrap()[0];
                        -(fp - fm) / (xp[i] - xm[i])
                    })
                    .collect();
                Some((-v, g))
            };
            if let Some((_, v)) = minimize_box(f, &x0, &lo, &hi, 500) {
                best = best.max(-v);
            }
        }
        best
    }

    #[test]
    fn hartmann_optima() {
        let h6 = local_max(&hartmann6(), 30);
        assert!((h6 - 3.32237).abs() < 1e-3, "{h6}");
        assert!((hartmann6().known_optimum().unwrap()[0] - 3.32237).abs() < 1e-3);
        let h3 = local_max(&hartmann3(), 30);
        assert!((h3 - 3.86278).abs() < 1e-3, "{h3}");
    }

    #[test]
    fn shekel_optimum_near_centre() {
        let s = shekel();
        let v = s.evaluate_clean(&[0.4, 0.4, 0.4, 0.4]).unwrap()[0];
        assert!((v - s.known_optimum().unwrap()[0]).abs() < 1e-2);
        assert!(local_max(&s, 20) <= s.known_optimum().unwrap()[0] + 1e-6);
    }

    #[test]
    fn noiseless_evaluation_is_deterministic() {
        let b = hartmann3();
        let x = [0.1, 0.5, 0.9];
        assert_eq!(
            b.evaluate(&x, 0.0, 1).unwrap(),
            b.evaluate(&x, 0.0, 2).unwrap()
        );
        assert_eq!(
            b.evaluate(&x, 0.1, 3).unwrap(),
            b.evaluate(&x, 0.1, 3).unwrap()
        );
        assert_ne!(
            b.evaluate(&x, 0.1, 3).unwrap(),
            b.evaluate(&x, 0.1, 4).unwrap()
        );
    }

    #[test]
    fn boundary_points_evaluate_and_outside_points_fail() {
        for name in BENCHMARK_NAMES {
            let b = Benchmark::by_name(name).unwrap();
            assert!(b.evaluate_clean(&vec![0.0; b.dim()]).is_ok());
            assert!(b.evaluate_clean(&vec![1.0; b.dim()]).is_ok());
            assert!(matches!(
                b.evaluate_clean(&vec![1.5; b.dim()]),
                Err(Error::OutOfDomain(_))
            ));
        }
        assert!(Benchmark::by_name("nope").is_err());
        assert_eq!(Benchmark::by_name("mo-shekel:4").unwrap().dim(), 4);
        assert!(Benchmark::by_name("mo-shekel:9").is_err());
    }
}
