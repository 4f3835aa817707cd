use serde::{Deserialize, Serialize};

use crate::acquisition::StoppingConfig;
use crate::benchmarks::{Benchmark, CostModel};
use crate::gp::{GammaPrior, KernelFamily};
use crate::multi::ScalarizationKind;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Thompson batch, TSP ordering, first step of the tour.
    Snake,
    /// `Snake` with EI point deletion; stops when the whole batch is deleted.
    SsSnake,
    /// `Snake` with every step truncated to `delta_max`.
    TrSnake,
    /// `Snake` with random-scalarization Thompson batches.
    MoSnake,
    Ei,
    /// EI per unit cost; stops once the argmax falls below `stopping.delta`.
    Eipu,
    /// EI per unit cost, stopping only when the argmax also has variance below `stopping.nu`.
    EipuStd,
    /// EI argmax truncated to `delta_max`.
    TrEi,
    /// Uniform points ordered once by the TSP solver.
    Random,
    /// One (scalarized) Thompson-sample maximizer per step.
    Ts,
}

impl Strategy {
    pub const ALL: [Strategy; 10] = [
        Strategy::Snake,
        Strategy::SsSnake,
        Strategy::TrSnake,
        Strategy::MoSnake,
        Strategy::Ei,
        Strategy::Eipu,
        Strategy::EipuStd,
        Strategy::TrEi,
        Strategy::Random,
        Strategy::Ts,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Snake => "snake",
            Strategy::SsSnake => "ss_snake",
            Strategy::TrSnake => "tr_snake",
            Strategy::MoSnake => "mo_snake",
            Strategy::Ei => "ei",
            Strategy::Eipu => "eipu",
            Strategy::EipuStd => "eipu_std",
            Strategy::TrEi => "tr_ei",
            Strategy::Random => "random",
            Strategy::Ts => "ts",
        }
    }

    /// Builds a batch, orders it and steps along the tour.
    pub fn is_snake(self) -> bool {
        matches!(
            self,
            Strategy::Snake | Strategy::SsSnake | Strategy::TrSnake | Strategy::MoSnake
        )
    }

    pub fn truncates(self) -> bool {
        matches!(self, Strategy::TrSnake | Strategy::TrEi)
    }

    pub fn can_self_stop(self) -> bool {
        matches!(self, Strategy::SsSnake | Strategy::Eipu | Strategy::EipuStd)
    }

    fn objectives_ok(self, k: usize) -> bool {
        match self {
            Strategy::MoSnake => k >= 2,
            Strategy::Random | Strategy::Ts => k >= 1,
            _ => k == 1,
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown strategy {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Deletion {
    #[default]
    None,
    /// Drop batch points within one lengthscale (scaled sup-norm) of the
    /// point just queried.
    Ell,
}

/// Denominator of EI per unit cost.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EipuCost {
    /// The fixed per-experiment cost only.
    #[default]
    Fixed,
    /// Fixed cost plus the movement cost from the current input (penalties
    /// excluded), floored at `PlannerConfig::eipu_cost_floor`.
    FixedPlusMovement,
}

/// Simulated-annealing schedule for ordering a batch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TspConfig {
    /// Proposal count; `None` means `100 n^2`, capped at `max_iterations`.
    pub iterations: Option<usize>,
    pub max_iterations: usize,
    /// Final temperature as a fraction of the initial one (geometric cooling).
    pub final_temperature_ratio: f64,
    pub seed: u64,
}

impl Default for TspConfig {
    fn default() -> Self {
        Self {
            iterations: None,
            max_iterations: 20_000,
            final_temperature_ratio: 1e-3,
            seed: 0,
        }
    }
}

impl TspConfig {
    pub fn proposals(&self, n: usize) -> usize {
        self.iterations
            .unwrap_or_else(|| (100 * n * n).min(self.max_iterations))
    }
}

/// Budget for turning posterior samples into batch points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingConfig {
    /// Random Fourier features per sample.
    pub features: usize,
    /// Uniform candidates screened per iteration (observed inputs are added).
    pub candidates: usize,
    /// Adam steps from each sample's best candidate.
    pub refine_steps: usize,
    pub learning_rate: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            features: 256,
            candidates: 256,
            refine_steps: 10,
            learning_rate: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub kernel: KernelFamily,
    /// Starting lengthscale before the first fit.
    pub initial_lengthscale: f64,
    pub fit_restarts: usize,
    pub fit_iterations: usize,
    /// No hyperparameter fit below this many observations.
    pub min_fit_points: usize,
    /// Fit box for lengthscales on the unit cube.
    pub lengthscale_bounds: (f64, f64),
    /// Fit box for the signal variance of standardized outputs.
    pub signal_variance_bounds: (f64, f64),
    /// Fit box for the noise variance of standardized outputs. The upper end
    /// keeps a few scattered points from being read as pure noise.
    pub noise_variance_bounds: (f64, f64),
    /// `None` fits by plain marginal likelihood.
    pub lengthscale_prior: Option<GammaPrior>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            kernel: KernelFamily::Matern52,
            initial_lengthscale: 0.2,
            fit_restarts: 2,
            fit_iterations: 60,
            min_fit_points: 4,
            lengthscale_bounds: (0.01, 2.0),
            signal_variance_bounds: (0.01, 10.0),
            noise_variance_bounds: (1e-8, 0.1),
            lengthscale_prior: Some(GammaPrior {
                shape: 3.0,
                rate: 6.0,
            }),
        }
    }
}

fn default_refit_every() -> usize {
    25
}

fn default_initial_design() -> usize {
    1
}

fn default_eipu_cost_floor() -> f64 {
    0.01
}

fn default_scalarization() -> ScalarizationKind {
    ScalarizationKind::Tchebyshev
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub strategy: Strategy,
    /// Total number of queries, initial design included.
    pub budget: usize,
    /// Deletion thresholds, in standardized output units.
    #[serde(default)]
    pub stopping: Option<StoppingConfig>,
    #[serde(default)]
    pub delta_max: Option<f64>,
    #[serde(default = "default_refit_every")]
    pub refit_every: usize,
    #[serde(default)]
    pub tsp: TspConfig,
    #[serde(default)]
    pub deletion: Deletion,
    #[serde(default = "default_initial_design")]
    pub initial_design: usize,
    #[serde(default)]
    pub eipu_cost: EipuCost,
    /// Without a floor the movement-cost denominator vanishes at the current
    /// input and EI per unit cost never moves.
    #[serde(default = "default_eipu_cost_floor")]
    pub eipu_cost_floor: f64,
    #[serde(default = "default_scalarization")]
    pub scalarization: ScalarizationKind,
    #[serde(default)]
    pub noise_sd: f64,
    #[serde(default)]
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub model: ModelConfig,
}

impl PlannerConfig {
    pub fn new(strategy: Strategy, budget: usize) -> Self {
        Self {
            strategy,
            budget,
            stopping: None,
            delta_max: None,
            refit_every: default_refit_every(),
            tsp: TspConfig::default(),
            deletion: Deletion::None,
            initial_design: default_initial_design(),
            eipu_cost: EipuCost::Fixed,
            eipu_cost_floor: default_eipu_cost_floor(),
            scalarization: default_scalarization(),
            noise_sd: 0.0,
            sampling: SamplingConfig::default(),
            model: ModelConfig::default(),
        }
    }

    pub fn with_stopping(mut self, stopping: StoppingConfig) -> Self {
        self.stopping = Some(stopping);
        self
    }

    pub fn with_delta_max(mut self, delta_max: f64) -> Self {
        self.delta_max = Some(delta_max);
        self
    }

    pub fn with_deletion(mut self, deletion: Deletion) -> Self {
        self.deletion = deletion;
        self
    }

    /// Checks the configuration on its own and against the benchmark and cost model.
    pub fn validate(&self, benchmark: &Benchmark, cm: &CostModel) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        let s = self.strategy;
        if self.budget == 0 {
            return fail("budget must be at least 1".into());
        }
        if self.initial_design == 0 {
            return fail("initial_design must be at least 1".into());
        }
        if self.refit_every == 0 {
            return fail("refit_every must be at least 1".into());
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return fail(format!(
                "noise_sd must be finite and >= 0, got {}",
                self.noise_sd
            ));
        }
        cm.validate()?;
        if !s.objectives_ok(benchmark.objective_count()) {
            return fail(format!(
                "strategy {s} cannot run on {} with {} objective(s)",
                benchmark.name(),
                benchmark.objective_count()
            ));
        }
        match self.delta_max {
            Some(d) if !(d > 0.0 && d.is_finite()) => {
                return fail(format!("delta_max must be positive, got {d}"));
            }
            None if s.truncates() => return fail(format!("strategy {s} requires delta_max")),
            _ => {}
        }
        if let Some(st) = &self.stopping {
            st.validate()?;
        } else if matches!(s, Strategy::SsSnake | Strategy::EipuStd) {
            return fail(format!("strategy {s} requires stopping thresholds"));
        }
        let uses_eipu = matches!(s, Strategy::SsSnake | Strategy::Eipu | Strategy::EipuStd);
        if uses_eipu && self.eipu_cost == EipuCost::Fixed && !(cm.fixed > 0.0) {
            return fail(format!(
                "strategy {s} divides by the fixed cost, which is {}; use eipu_cost = \"fixed_plus_movement\"",
                cm.fixed
            ));
        }
        if !(self.eipu_cost_floor > 0.0) {
            return fail(format!(
                "eipu_cost_floor must be positive, got {}",
                self.eipu_cost_floor
            ));
        }
        let sc = &self.sampling;
        if sc.features == 0 || sc.candidates == 0 || !(sc.learning_rate > 0.0) {
            return fail(format!("invalid sampling config {sc:?}"));
        }
        let mc = &self.model;
        let valid_box = |(lo, hi): (f64, f64)| lo > 0.0 && lo <= hi && hi.is_finite();
        if !(mc.initial_lengthscale > 0.0)
            || mc.fit_restarts == 0
            || !valid_box(mc.lengthscale_bounds)
            || !valid_box(mc.signal_variance_bounds)
            || !valid_box(mc.noise_variance_bounds)
            || mc
                .lengthscale_prior
                .is_some_and(|p| !(p.shape >= 1.0 && p.rate >= 0.0 && p.rate.is_finite()))
        {
            return fail(format!("invalid model config {mc:?}"));
        }
        if !(self.tsp.final_temperature_ratio > 0.0 && self.tsp.final_temperature_ratio <= 1.0) {
            return fail("tsp.final_temperature_ratio must be in (0, 1]".into());
        }
        Ok(())
    }
}
