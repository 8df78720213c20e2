//! Batch-fitted reference models. They are trained once and then only predict.

mod linreg;
mod no_prediction;
mod svr;

pub use linreg::LinearRegression;
pub use no_prediction::NoPrediction;
pub use svr::{gaussian_kernel_matrix, solve_dual, DualSolution, SmoOptions, SvrModel, SvrParams};

use crate::error::{ForecastError, Result};
use crate::trainers::StepReport;

pub(crate) fn prediction_report(prediction: Vec<f64>, target: &[f64]) -> Result<StepReport> {
    if prediction.len() != target.len() {
        return Err(ForecastError::dim("target", prediction.len(), target.len()));
    }
    let loss = 0.5
        * prediction
            .iter()
            .zip(target)
            .map(|(y, t)| (t - y) * (t - y))
            .sum::<f64>();
    Ok(StepReport {
        prediction,
        loss,
        grad_norm: 0.0,
        applied_norm: 0.0,
    })
}

/// Stacks equally long rows into an N × width matrix.
pub(crate) fn stack_rows(rows: &[Vec<f64>], what: &'static str) -> Result<nalgebra::DMatrix<f64>> {
    let width = rows.first().map(Vec::len).unwrap_or(0);
    if let Some(bad) = rows.iter().find(|r| r.len() != width) {
        return Err(ForecastError::dim(what, width, bad.len()));
    }
    Ok(nalgebra::DMatrix::from_fn(rows.len(), width, |i, j| rows[i][j]))
}
