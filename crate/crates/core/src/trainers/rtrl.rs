use nalgebra::DMatrix;

use super::{readout_gradient, stacked_input, RecurrentTrainer, UpdateRule};
use crate::error::Result;
use crate::rnn::{GradientVector, RnnModel, StepOutput};

/// Exact forward-mode gradient: propagates the full sensitivity of the hidden
/// state to the state and input weights. The readout block is omitted because
/// the state does not depend on it.
#[derive(Debug, Clone)]
pub struct Rtrl {
    model: RnnModel,
    rule: UpdateRule,
    /// q × q(q + input), column `k q + i` is the derivative w.r.t. weight (i, k).
    influence: DMatrix<f64>,
}

impl Rtrl {
    pub fn new(model: RnnModel, rule: UpdateRule) -> Self {
        let d = model.dims();
        Self {
            influence: DMatrix::zeros(d.hidden, d.recurrent_len()),
            model,
            rule,
        }
    }

    pub fn influence(&self) -> &DMatrix<f64> {
        &self.influence
    }
}

impl RecurrentTrainer for Rtrl {
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

        // diag(slope) Wa M, then the immediate term on the block diagonal.
        let mut dynamics = model.wa.clone();
        for (i, s) in slope.iter().enumerate() {
            dynamics.row_mut(i).scale_mut(*s);
        }
        let mut next = dynamics * &self.influence;
        let w = stacked_input(&model.state, input);
        for (k, wk) in w.iter().enumerate() {
            for i in 0..q {
                next[(i, k * q + i)] += slope[i] * wk;
            }
        }
        self.influence = next;

        let dx = model.state_loss_gradient(&out.e);
        let mut grad = readout_gradient(&out, model);
        let rec = self.influence.tr_mul(&dx);
        grad.recurrent_mut().copy_from_slice(rec.as_slice());
        Ok((out, grad))
    }
}
