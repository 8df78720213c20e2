use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{outer_unrolled, readout_gradient, stacked_input, RecurrentTrainer, UpdateRule};
use crate::error::Result;
use crate::rnn::{GradientVector, RnnModel, StepOutput};

/// Default learning rate of the credit-assignment coefficients.
pub const DEFAULT_COEFFICIENT_RATE: f64 = 0.002;

/// Which gradient the coefficient matrix follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DniUpdate {
    /// Gradient of the squared bootstrap residual through both feature vectors.
    Full,
    /// Treats the bootstrapped target as a constant.
    Simplified,
}

/// Synthetic-gradient learner: the credit assigned to the hidden state is
/// predicted linearly from `[x; target; 1]` by a coefficient matrix trained
/// to satisfy a one-step bootstrap relation.
#[derive(Debug, Clone)]
pub struct Dni {
    model: RnnModel,
    rule: UpdateRule,
    /// (q + p + 1) × q.
    coefficients: DMatrix<f64>,
    features_prev: DVector<f64>,
    coefficient_rate: f64,
    update: DniUpdate,
}

impl Dni {
    pub fn new(
        model: RnnModel,
        rule: UpdateRule,
        coefficient_rate: f64,
        update: DniUpdate,
        seed: u64,
    ) -> Self {
        let d = model.dims();
        let rows = d.hidden + d.output + 1;
        let normal = Normal::new(0.0, (1.0 / d.hidden as f64).sqrt()).expect("finite std");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coefficients = DMatrix::from_fn(rows, d.hidden, |_, _| normal.sample(&mut rng));
        let mut features_prev = DVector::zeros(rows);
        features_prev[rows - 1] = 1.0;
        Self {
            model,
            rule,
            coefficients,
            features_prev,
            coefficient_rate,
            update,
        }
    }

    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.coefficients
    }

    pub fn features(&self) -> &DVector<f64> {
        &self.features_prev
    }
}

/// Bootstrap residual `f(A) = Aᵀx̃ₙ − ∇ₓL − Dᵀ Aᵀ x̃ₙ₊₁`, where `dynamics` is
/// the state Jacobian `diag(slope) Wa`.
pub fn synthetic_residual(
    coefficients: &DMatrix<f64>,
    features_prev: &DVector<f64>,
    features_next: &DVector<f64>,
    dynamics: &DMatrix<f64>,
    state_grad: &DVector<f64>,
) -> DVector<f64> {
    let now = coefficients.tr_mul(features_prev);
    let ahead = coefficients.tr_mul(features_next);
    now - state_grad - dynamics.tr_mul(&ahead)
}

/// Step direction for the coefficient matrix given the residual `f`.
/// The full rule is the exact gradient of `½‖f‖²`.
pub fn coefficient_gradient(
    residual: &DVector<f64>,
    features_prev: &DVector<f64>,
    features_next: &DVector<f64>,
    dynamics: &DMatrix<f64>,
    update: DniUpdate,
) -> DMatrix<f64> {
    let mut grad = features_prev * residual.transpose();
    if update == DniUpdate::Full {
        let pushed = dynamics * residual;
        grad.ger(-1.0, features_next, &pushed, 1.0);
    }
    grad
}

impl RecurrentTrainer for Dni {
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

        let mut dynamics = model.wa.clone();
        for (i, s) in slope.iter().enumerate() {
            dynamics.row_mut(i).scale_mut(*s);
        }
        let mut features_next = DVector::zeros(self.features_prev.len());
        features_next.rows_mut(0, q).copy_from(&out.x_next);
        features_next.rows_mut(q, target.len()).copy_from_slice(target);
        features_next[q + target.len()] = 1.0;

        let dx = model.state_loss_gradient(&out.e);
        let residual = synthetic_residual(
            &self.coefficients,
            &self.features_prev,
            &features_next,
            &dynamics,
            &dx,
        );
        let step = coefficient_gradient(
            &residual,
            &self.features_prev,
            &features_next,
            &dynamics,
            self.update,
        );
        let rate = self.coefficient_rate;
        self.coefficients.zip_apply(&step, |a, s| *a -= rate * s);

        let credit = self.coefficients.tr_mul(&self.features_prev);
        let scaled = credit.component_mul(&slope);
        let w = stacked_input(&model.state, input);
        let mut grad = readout_gradient(&out, model);
        outer_unrolled(scaled.as_slice(), &w, grad.recurrent_mut());
        self.features_prev = features_next;
        Ok((out, grad))
    }
}
