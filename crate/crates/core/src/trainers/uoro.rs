use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{outer_unrolled, readout_gradient, stacked_input, RecurrentTrainer, UpdateRule};
use crate::error::Result;
use crate::rnn::{l2_norm, GradientVector, RnnModel, StepOutput};

/// Stabilizer added to the norms in the rescaling factors.
pub const UORO_EPSILON: f64 = 1e-7;

/// Rank-one unbiased estimate of the influence matrix, `x̃ θ̃ᵀ`, refreshed each
/// step with a random sign vector.
#[derive(Debug, Clone)]
pub struct Uoro {
    model: RnnModel,
    rule: UpdateRule,
    x_tilde: DVector<f64>,
    theta_tilde: Vec<f64>,
    rng: ChaCha8Rng,
}

impl Uoro {
    pub fn new(model: RnnModel, rule: UpdateRule, seed: u64) -> Self {
        let d = model.dims();
        Self {
            x_tilde: DVector::zeros(d.hidden),
            theta_tilde: vec![0.0; d.recurrent_len()],
            model,
            rule,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Same model and factors, fresh sign stream.
    pub fn reseeded(&self, seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            ..self.clone()
        }
    }

    pub fn factors(&self) -> (&DVector<f64>, &[f64]) {
        (&self.x_tilde, &self.theta_tilde)
    }

    /// Dense `x̃ θ̃ᵀ`, comparable to the exact influence matrix.
    pub fn influence_estimate(&self) -> DMatrix<f64> {
        let t = DVector::from_column_slice(&self.theta_tilde);
        &self.x_tilde * t.transpose()
    }
}

impl RecurrentTrainer for Uoro {
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

        let propagated = (&model.wa * &self.x_tilde).component_mul(&slope);
        let signs: Vec<f64> = (0..q)
            .map(|_| if self.rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        let signed_slope: Vec<f64> = signs.iter().zip(slope.iter()).map(|(s, d)| s * d).collect();
        let w = stacked_input(&model.state, input);
        let mut fresh = vec![0.0; self.theta_tilde.len()];
        outer_unrolled(&signed_slope, &w, &mut fresh);

        let rho0 = (l2_norm(&self.theta_tilde) / (propagated.norm() + UORO_EPSILON)).sqrt()
            + UORO_EPSILON;
        let rho1 = (l2_norm(&fresh) / ((q as f64).sqrt() + UORO_EPSILON)).sqrt() + UORO_EPSILON;

        self.x_tilde = propagated * rho0 + DVector::from_vec(signs) * rho1;
        for (t, f) in self.theta_tilde.iter_mut().zip(&fresh) {
            *t = *t / rho0 + f / rho1;
        }

        let dx = model.state_loss_gradient(&out.e);
        let scale = dx.dot(&self.x_tilde);
        let mut grad = readout_gradient(&out, model);
        for (g, t) in grad.recurrent_mut().iter_mut().zip(&self.theta_tilde) {
            *g = scale * t;
        }
        Ok((out, grad))
    }
}
