use nalgebra::DMatrix;

use super::{readout_gradient, stacked_input, RecurrentTrainer, UpdateRule};
use crate::error::Result;
use crate::rnn::{GradientVector, RnnModel, StepOutput};

/// Sparse one-step approximation: keeps only the sensitivities that are
/// nonzero after a single step, so unit i's state depends only on row i of
/// the weights. Those entries fit in a q × (q + input) matrix.
#[derive(Debug, Clone)]
pub struct Snap1 {
    model: RnnModel,
    rule: UpdateRule,
    /// Entry (i, k) is the tracked derivative of x_i with respect to weight (i, k).
    compressed: DMatrix<f64>,
}

impl Snap1 {
    pub fn new(model: RnnModel, rule: UpdateRule) -> Self {
        let d = model.dims();
        Self {
            compressed: DMatrix::zeros(d.hidden, d.hidden + d.input),
            model,
            rule,
        }
    }

    pub fn compressed_influence(&self) -> &DMatrix<f64> {
        &self.compressed
    }
}

impl RecurrentTrainer for Snap1 {
    fn model(&self) -> &RnnModel {
        &self.model
    }

    fn model_mut(&mut self) -> &mut RnnModel {
        &mut self.model
    }

    fn rule(&self) -> UpdateRule {
        self.rule
    }

    fn estimate(&mut self, input: &[f64], target: &[f64]) -> Result<(StepOutput, GradientVector)> {
        let model = &self.model;
        let out = model.forward_step(input, target)?;
        let slope = out.activation_slope();
        let q = slope.len();
        let diag: Vec<f64> = (0..q).map(|i| slope[i] * model.wa[(i, i)]).collect();
        let w = stacked_input(&model.state, input);

        for (k, mut col) in self.compressed.column_iter_mut().enumerate() {
            for i in 0..q {
                col[i] = diag[i] * col[i] + slope[i] * w[k];
            }
        }

        let dx = model.state_loss_gradient(&out.e);
        let mut grad = readout_gradient(&out, model);
        for (g, (idx, j)) in grad
            .recurrent_mut()
            .iter_mut()
            .zip(self.compressed.as_slice().iter().enumerate())
        {
            *g = dx[idx % q] * j;
        }
        Ok((out, grad))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rnn::{init_weights, RnnDims};

    #[test]
    fn first_step_equals_immediate_term() {
        let d = RnnDims::new(2, 4, 1).unwrap();
        let model = init_weights(d, 0.4, 5).unwrap();
        let mut t = Snap1::new(model.clone(), UpdateRule::new(0.1, 100.0).unwrap());
        let u = [1.0, 0.5, 0.25, -1.0];
        let (out, _) = t.estimate(&u, &[0.2]).unwrap();
        let slope = out.activation_slope();
        let w = stacked_input(&model.state, &u);
        let expected = DMatrix::from_fn(2, 6, |i, k| slope[i] * w[k]);
        assert_eq!(t.compressed_influence(), &expected);
    }
}
