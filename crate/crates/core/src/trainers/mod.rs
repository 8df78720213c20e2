//! Online learners: each call to [`Forecaster::step`] predicts the target of
//! one window, then learns from it.

mod dni;
mod frozen;
mod lms;
mod rtrl;
mod snap1;
mod uoro;

pub use dni::{coefficient_gradient, synthetic_residual, Dni, DniUpdate, DEFAULT_COEFFICIENT_RATE};
pub use frozen::Frozen;
pub use lms::Lms;
pub use rtrl::Rtrl;
pub use snap1::Snap1;
pub use uoro::{Uoro, UORO_EPSILON};

use nalgebra::DVector;

use crate::error::{ForecastError, Result};
use crate::rnn::{clip_gradient, GradientVector, RnnModel, StepOutput};

/// Default gradient-norm ceiling.
pub const DEFAULT_CLIP: f64 = 100.0;

/// Plain gradient step with norm clipping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateRule {
    pub eta: f64,
    pub tau: f64,
}

impl UpdateRule {
    pub fn new(eta: f64, tau: f64) -> Result<Self> {
        if !(eta >= 0.0 && eta.is_finite()) || !(tau > 0.0) {
            return Err(ForecastError::InvalidArgument(format!(
                "learning rate {eta} must be finite and non-negative, clip threshold {tau} positive"
            )));
        }
        Ok(Self { eta, tau })
    }
}

/// What a single online step produced.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    /// Prediction made before the weights moved.
    pub prediction: Vec<f64>,
    pub loss: f64,
    /// Gradient norm before clipping.
    pub grad_norm: f64,
    /// Norm of the step direction actually applied.
    pub applied_norm: f64,
}

/// Uniform interface over every forecasting model.
pub trait Forecaster: Send {
    /// Predicts the target of `input`, then learns from `target` if the model
    /// adapts online. The returned prediction never depends on `target`.
    fn step(&mut self, input: &[f64], target: &[f64]) -> Result<StepReport>;
}

/// A recurrent network trained by some gradient estimator.
pub trait RecurrentTrainer: Send {
    fn model(&self) -> &RnnModel;

    fn model_mut(&mut self) -> &mut RnnModel;

    fn rule(&self) -> UpdateRule;

    /// Advances the estimator's internal state by one sample and returns the
    /// forward pass with the raw (unclipped) gradient. Weights and the hidden
    /// state are left as they were.
    fn estimate(&mut self, input: &[f64], target: &[f64]) -> Result<(StepOutput, GradientVector)>;
}

impl<T: RecurrentTrainer> Forecaster for T {
    fn step(&mut self, input: &[f64], target: &[f64]) -> Result<StepReport> {
        let (out, grad) = self.estimate(input, target)?;
        let rule = self.rule();
        apply_step(self.model_mut(), out, grad, rule)
    }
}

/// Clips, updates the weights and commits the new state.
pub(crate) fn apply_step(
    model: &mut RnnModel,
    out: StepOutput,
    mut grad: GradientVector,
    rule: UpdateRule,
) -> Result<StepReport> {
    let grad_norm = clip_gradient(grad.as_mut_slice(), rule.tau);
    if !grad_norm.is_finite() {
        return Err(ForecastError::Numeric(format!(
            "gradient norm is {grad_norm}"
        )));
    }
    let applied_norm = grad.norm();
    model.apply_update(&grad, rule.eta)?;
    model.commit(out.x_next);
    Ok(StepReport {
        prediction: out.y.as_slice().to_vec(),
        loss: out.loss,
        grad_norm,
        applied_norm,
    })
}

/// Gradient with the readout block filled in and the recurrent block zero.
pub(crate) fn readout_gradient(out: &StepOutput, model: &RnnModel) -> GradientVector {
    let mut g = GradientVector::zeros(model.dims());
    let wc = RnnModel::output_layer_gradient(out);
    g.readout_mut().copy_from_slice(wc.as_slice());
    g
}

/// `[x; u]`, the vector multiplying the state and input matrices.
pub(crate) fn stacked_input(state: &DVector<f64>, u: &[f64]) -> Vec<f64> {
    let mut w = Vec::with_capacity(state.len() + u.len());
    w.extend_from_slice(state.as_slice());
    w.extend_from_slice(u);
    w
}

/// Writes `rows_i * w_k` at flat index `k q + i`: the column-major unroll of
/// the outer product `rows wᵀ`.
pub(crate) fn outer_unrolled(rows: &[f64], w: &[f64], out: &mut [f64]) {
    let q = rows.len();
    for (k, &wk) in w.iter().enumerate() {
        for (o, r) in out[k * q..(k + 1) * q].iter_mut().zip(rows) {
            *o = r * wk;
        }
    }
}
