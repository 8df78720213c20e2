use super::{readout_gradient, RecurrentTrainer, UpdateRule};
use crate::error::Result;
use crate::rnn::{GradientVector, RnnModel, StepOutput};

/// Random fixed recurrent layer; only the readout learns.
#[derive(Debug, Clone)]
pub struct Frozen {
    model: RnnModel,
    rule: UpdateRule,
}

impl Frozen {
    pub fn new(model: RnnModel, rule: UpdateRule) -> Self {
        Self { model, rule }
    }
}

impl RecurrentTrainer for Frozen {
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
        let out = self.model.forward_step(input, target)?;
        let grad = readout_gradient(&out, &self.model);
        Ok((out, grad))
    }
}
