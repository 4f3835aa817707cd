use serde::{Deserialize, Serialize};

use crate::{check_dim, check_unit_cube, Error, Point, Result};

/// Observed inputs in `[0,1]^d` paired with real outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    dim: usize,
    inputs: Vec<Point>,
    outputs: Vec<f64>,
}

impl Dataset {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn from_parts(dim: usize, inputs: Vec<Point>, outputs: Vec<f64>) -> Result<Self> {
        if inputs.len() != outputs.len() {
            return Err(Error::InvalidInput(format!(
                "{} inputs but {} outputs",
                inputs.len(),
                outputs.len()
            )));
        }
        let mut ds = Self::new(dim);
        for (x, y) in inputs.into_iter().zip(outputs) {
            ds.push(x, y)?;
        }
        Ok(ds)
    }

    pub fn push(&mut self, x: Point, y: f64) -> Result<()> {
        check_dim(self.dim, x.len())?;
        check_unit_cube(&x)?;
        if !y.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite output {y}")));
        }
        self.inputs.push(x);
        self.outputs.push(y);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    pub fn inputs(&self) -> &[Point] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }

    /// Same inputs, outputs mapped through `f`.
    pub fn map_outputs(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            dim: self.dim,
            inputs: self.inputs.clone(),
            outputs: self.outputs.iter().map(|&y| f(y)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_points() {
        let mut ds = Dataset::new(2);
        assert!(ds.push(vec![0.0, 1.0], 1.0).is_ok());
        assert!(matches!(
            ds.push(vec![0.5], 1.0),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            ds.push(vec![0.5, 1.01], 1.0),
            Err(Error::OutOfDomain(_))
        ));
        assert!(ds.push(vec![0.5, 0.5], f64::NAN).is_err());
        assert_eq!(ds.len(), 1);
    }

    #[test]
    fn from_parts_length_mismatch() {
        assert!(Dataset::from_parts(1, vec![vec![0.1]], vec![]).is_err());
    }
}
