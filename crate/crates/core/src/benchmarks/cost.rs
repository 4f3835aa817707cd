use serde::{Deserialize, Serialize};

use crate::{check_dim, euclidean, Result};

/// Penalty charged when a step is longer than `delta_max` (Euclidean).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub delta_max: f64,
    pub penalty: f64,
}

/// Cost of moving from `x_t` to `x_{t+1}` and running the experiment there:
/// `fixed + movement_scale * ||x_{t+1} - x_t||_2`, plus `violation.penalty`
/// when the step exceeds `violation.delta_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub fixed: f64,
    pub movement_scale: f64,
    #[serde(default)]
    pub violation: Option<Violation>,
}

/// A step's cost split into its parts.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepCost {
    pub fixed: f64,
    pub movement: f64,
    pub penalty: f64,
}

impl StepCost {
    pub fn total(&self) -> f64 {
        self.fixed + self.movement + self.penalty
    }
}

impl CostModel {
    /// `alpha + ||dx||_2`.
    pub fn self_stopping(alpha: f64) -> Self {
        Self {
            fixed: alpha,
            movement_scale: 1.0,
            violation: None,
        }
    }

    /// `0.2 ||dx||_2 + 1(||dx||_2 > delta_max)`.
    pub fn truncated(delta_max: f64) -> Self {
        Self {
            fixed: 0.0,
            movement_scale: 0.2,
            violation: Some(Violation {
                delta_max,
                penalty: 1.0,
            }),
        }
    }

    /// `||dx||_2` only.
    pub fn movement_only() -> Self {
        Self {
            fixed: 0.0,
            movement_scale: 1.0,
            violation: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.fixed >= 0.0
            && self.movement_scale >= 0.0
            && self.fixed.is_finite()
            && self.movement_scale.is_finite()
            && self
                .violation
                .is_none_or(|v| v.delta_max > 0.0 && v.penalty > 0.0);
        if ok {
            Ok(())
        } else {
            Err(crate::Error::Config(format!("invalid cost model {self:?}")))
        }
    }

    pub fn fixed_cost(&self, _x: &[f64]) -> f64 {
        self.fixed
    }

    pub fn movement_cost(&self, from: &[f64], to: &[f64]) -> f64 {
        self.movement_scale * euclidean(from, to)
    }

    pub fn penalty(&self, from: &[f64], to: &[f64]) -> f64 {
        match self.violation {
            Some(v) if euclidean(from, to) > v.delta_max => v.penalty,
            _ => 0.0,
        }
    }

    /// Movement plus penalty: the part of the cost that depends on the path.
    pub fn path_cost(&self, from: &[f64], to: &[f64]) -> f64 {
        self.movement_cost(from, to) + self.penalty(from, to)
    }

    pub fn breakdown(&self, from: &[f64], to: &[f64]) -> Result<StepCost> {
        check_dim(from.len(), to.len())?;
        Ok(StepCost {
            fixed: self.fixed_cost(to),
            movement: self.movement_cost(from, to),
            penalty: self.penalty(from, to),
        })
    }

    pub fn step_cost(&self, from: &[f64], to: &[f64]) -> Result<f64> {
        Ok(self.breakdown(from, to)?.total())
    }
}
