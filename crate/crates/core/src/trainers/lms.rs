use nalgebra::{DMatrix, DVector};

use super::{Forecaster, StepReport, UpdateRule};
use crate::error::{ForecastError, Result};
use crate::rnn::clip_gradient;

/// Linear predictor `y = W u` adapted by clipped stochastic gradient steps.
#[derive(Debug, Clone, PartialEq)]
pub struct Lms {
    weights: DMatrix<f64>,
    rule: UpdateRule,
}

impl Lms {
    /// Starts from the zero matrix.
    pub fn new(input: usize, output: usize, rule: UpdateRule) -> Self {
        Self {
            weights: DMatrix::zeros(output, input),
            rule,
        }
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    /// Error `target - W u` and the loss gradient `-e uᵀ`.
    pub fn gradient(&self, input: &[f64], target: &[f64]) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let (p, m) = self.weights.shape();
        if input.len() != m {
            return Err(ForecastError::dim("linear input", m, input.len()));
        }
        if target.len() != p {
            return Err(ForecastError::dim("linear target", p, target.len()));
        }
        let u = DVector::from_column_slice(input);
        let e = DVector::from_column_slice(target) - &self.weights * &u;
        let g = -(&e * u.transpose());
        Ok((e, g))
    }
}

impl Forecaster for Lms {
    fn step(&mut self, input: &[f64], target: &[f64]) -> Result<StepReport> {
        let (e, mut g) = self.gradient(input, target)?;
        let prediction: Vec<f64> = target.iter().zip(e.iter()).map(|(t, e)| t - e).collect();
        let grad_norm = clip_gradient(g.as_mut_slice(), self.rule.tau);
        if !grad_norm.is_finite() {
            return Err(ForecastError::Numeric(format!("gradient norm is {grad_norm}")));
        }
        let eta = self.rule.eta;
        self.weights.zip_apply(&g, |w, d| *w -= eta * d);
        Ok(StepReport {
            prediction,
            loss: 0.5 * e.norm_squared(),
            grad_norm,
            applied_norm: g.norm(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_step() {
        let mut lms = Lms::new(1, 1, UpdateRule::new(0.1, 100.0).unwrap());
        let r = lms.step(&[1.0], &[1.0]).unwrap();
        assert_eq!(r.prediction, vec![0.0]);
        assert!((lms.weights()[(0, 0)] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn zero_error_keeps_weights() {
        let mut lms = Lms::new(3, 2, UpdateRule::new(0.1, 100.0).unwrap());
        lms.step(&[1.0, 0.5, 2.0], &[0.0, 0.0]).unwrap();
        assert!(lms.weights().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut lms = Lms::new(3, 2, UpdateRule::new(0.1, 100.0).unwrap());
        lms.weights = DMatrix::from_row_slice(2, 3, &[0.3, -0.2, 0.7, 1.1, 0.4, -0.5]);
        let u = [1.0, 0.8, -1.3];
        let t = [0.25, -0.75];
        let (_, g) = lms.gradient(&u, &t).unwrap();
        let loss = |w: &DMatrix<f64>| {
            let y = w * DVector::from_column_slice(&u);
            0.5 * (DVector::from_column_slice(&t) - y).norm_squared()
        };
        let h = 1e-6;
        for idx in 0..6 {
            let mut plus = lms.weights.clone();
            let mut minus = lms.weights.clone();
            plus.as_mut_slice()[idx] += h;
            minus.as_mut_slice()[idx] -= h;
            let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
            assert!((fd - g.as_slice()[idx]).abs() < 1e-7, "entry {idx}");
        }
    }
}
