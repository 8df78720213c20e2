use super::prediction_report;
use crate::error::{ForecastError, Result};
use crate::trainers::{Forecaster, StepReport};

/// Repeats the most recent observed positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoPrediction {
    width: usize,
}

impl NoPrediction {
    /// `width` is the number of coordinates per time step.
    pub fn new(width: usize) -> Self {
        Self { width }
    }

    /// The last `width` entries of a bias-prefixed window.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() < self.width + 1 || !(input.len() - 1).is_multiple_of(self.width) {
            return Err(ForecastError::InvalidArgument(format!(
                "window of length {} does not hold whole rows of width {}",
                input.len(),
                self.width
            )));
        }
        Ok(input[input.len() - self.width..].to_vec())
    }
}

impl Forecaster for NoPrediction {
    fn step(&mut self, input: &[f64], target: &[f64]) -> Result<StepReport> {
        prediction_report(self.predict(input)?, target)
    }
}
