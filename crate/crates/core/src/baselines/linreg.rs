use nalgebra::{DMatrix, DVector};

use super::{prediction_report, stack_rows};
use crate::error::{ForecastError, Result};
use crate::trainers::{Forecaster, StepReport};

/// Least-squares linear map `y = W u`, minimum-norm when underdetermined.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRegression {
    weights: DMatrix<f64>,
}

impl LinearRegression {
    pub fn fit(inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<Self> {
        if inputs.is_empty() {
            return Err(ForecastError::InvalidArgument(
                "linear regression needs at least one example".into(),
            ));
        }
        if inputs.len() != targets.len() {
            return Err(ForecastError::dim("regression targets", inputs.len(), targets.len()));
        }
        let u = stack_rows(inputs, "regression input")?;
        let y = stack_rows(targets, "regression target")?;
        let size = u.nrows().max(u.ncols()) as f64;
        let svd = u.svd(true, true);
        let cutoff = svd.singular_values.max() * f64::EPSILON * size;
        let wt = svd
            .solve(&y, cutoff)
            .map_err(|e| ForecastError::Numeric(format!("least squares: {e}")))?;
        Ok(Self {
            weights: wt.transpose(),
        })
    }

    pub fn from_weights(weights: DMatrix<f64>) -> Self {
        Self { weights }
    }

    /// p × (m + 1).
    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.weights.ncols() {
            return Err(ForecastError::dim("regression input", self.weights.ncols(), input.len()));
        }
        Ok((&self.weights * DVector::from_column_slice(input)).as_slice().to_vec())
    }
}

impl Forecaster for LinearRegression {
    fn step(&mut self, input: &[f64], target: &[f64]) -> Result<StepReport> {
        prediction_report(self.predict(input)?, target)
    }
}
