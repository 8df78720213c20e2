//! Reference computations shared by the integration tests and the acceptance
//! report. Everything here is written from first principles, independent of
//! the library's own gradient code.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use respcast::data::{MarkerSequence, Regularity};
use respcast::rnn::{init_weights, GradientVector, RnnDims, RnnModel, StepOutput};
use respcast::trainers::{
    coefficient_gradient, synthetic_residual, Dni, DniUpdate, Forecaster, Frozen,
    RecurrentTrainer, Rtrl, Snap1, Uoro, UpdateRule,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random network with `m` external inputs plus a bias, and a matching
/// stream of `steps` inputs and targets.
pub struct Instance {
    pub model: RnnModel,
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
}

pub fn instance(q: usize, m: usize, p: usize, steps: usize, seed: u64) -> Instance {
    let dims = RnnDims::new(q, m + 1, p).unwrap();
    let model = init_weights(dims, 0.6, seed).unwrap();
    let mut r = rng(seed ^ 0x5eed);
    let inputs = (0..steps)
        .map(|_| {
            let mut u: Vec<f64> = (0..m).map(|_| r.random_range(-1.0..1.0)).collect();
            u.push(1.0);
            u
        })
        .collect();
    let targets = (0..steps)
        .map(|_| (0..p).map(|_| r.random_range(-1.0..1.0)).collect())
        .collect();
    Instance {
        model,
        inputs,
        targets,
    }
}

/// Loss at the last step of a run from the zero state with fixed weights.
pub fn final_loss(dims: RnnDims, theta: &[f64], inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> f64 {
    let q = dims.hidden;
    let wa = DMatrix::from_column_slice(q, q, &theta[..q * q]);
    let wb = DMatrix::from_column_slice(q, dims.input, &theta[q * q..q * (q + dims.input)]);
    let wc = DMatrix::from_column_slice(dims.output, q, &theta[q * (q + dims.input)..]);
    let mut x = DVector::zeros(q);
    let mut loss = 0.0;
    for (u, t) in inputs.iter().zip(targets) {
        x = (&wa * &x + &wb * DVector::from_column_slice(u)).map(f64::tanh);
        let e = DVector::from_column_slice(t) - &wc * &x;
        loss = 0.5 * e.norm_squared();
    }
    loss
}

fn rel_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let scale: f64 = a.iter().chain(b).map(|v| v * v).sum::<f64>().sqrt() / 2.0;
    diff / scale.max(1e-300)
}

/// Relative error between the exact forward-mode gradient at the last step
/// and central differences of the unrolled loss.
pub fn rtrl_fd_error(q: usize, m: usize, steps: usize, seed: u64) -> f64 {
    let inst = instance(q, m, 2, steps, seed);
    let dims = inst.model.dims();
    let mut rtrl = Rtrl::new(inst.model.clone(), UpdateRule::new(0.0, 100.0).unwrap());
    let mut grad = None;
    for (u, t) in inst.inputs.iter().zip(&inst.targets) {
        let (out, g) = rtrl.estimate(u, t).unwrap();
        rtrl.model_mut().commit(out.x_next);
        grad = Some(g);
    }
    let grad = grad.unwrap().into_vec();
    let theta = inst.model.unroll();
    let h = 1e-6;
    let fd: Vec<f64> = (0..theta.len())
        .map(|k| {
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            tp[k] += h;
            tm[k] -= h;
            (final_loss(dims, &tp, &inst.inputs, &inst.targets)
                - final_loss(dims, &tm, &inst.inputs, &inst.targets))
                / (2.0 * h)
        })
        .collect();
    rel_error(&grad, &fd)
}

/// Largest weight difference between SnAp-1 and RTRL trained side by side
/// with a single hidden unit.
pub fn snap1_vs_rtrl_q1(steps: usize, seed: u64) -> f64 {
    let inst = instance(1, 3, 2, steps, seed);
    let rule = UpdateRule::new(0.05, 100.0).unwrap();
    let mut a = Rtrl::new(inst.model.clone(), rule);
    let mut b = Snap1::new(inst.model, rule);
    let mut worst = 0.0f64;
    for (u, t) in inst.inputs.iter().zip(&inst.targets) {
        a.step(u, t).unwrap();
        b.step(u, t).unwrap();
        for (x, y) in a.model().unroll().iter().zip(b.model().unroll()) {
            worst = worst.max((x - y).abs());
        }
    }
    worst
}

/// Dense influence recursion with the state Jacobian cut down to its
/// diagonal and the result masked to the immediate-Jacobian pattern.
pub struct SparseOracle {
    model: RnnModel,
    rule: UpdateRule,
    influence: DMatrix<f64>,
}

impl SparseOracle {
    pub fn new(model: RnnModel, rule: UpdateRule) -> Self {
        let d = model.dims();
        Self {
            influence: DMatrix::zeros(d.hidden, d.recurrent_len()),
            model,
            rule,
        }
    }
}

impl RecurrentTrainer for SparseOracle {
    fn model(&self) -> &RnnModel {
        &self.model
    }

    fn model_mut(&mut self) -> &mut RnnModel {
        &mut self.model
    }

    fn rule(&self) -> UpdateRule {
        self.rule
    }

    fn estimate(&mut self, input: &[f64], target: &[f64]) -> respcast::Result<(StepOutput, GradientVector)> {
        let out = self.model.forward_step(input, target)?;
        let q = self.model.dims().hidden;
        let slope = out.x_next.map(|x| 1.0 - x * x);
        let w: Vec<f64> = self.model.state.iter().chain(input).copied().collect();
        let mut dyn_diag = DMatrix::zeros(q, q);
        for i in 0..q {
            dyn_diag[(i, i)] = slope[i] * self.model.wa[(i, i)];
        }
        let mut immediate = DMatrix::zeros(q, q * w.len());
        for (k, wk) in w.iter().enumerate() {
            for i in 0..q {
                immediate[(i, k * q + i)] = slope[i] * wk;
            }
        }
        let mut next = dyn_diag * &self.influence + immediate;
        for c in 0..next.ncols() {
            for r in 0..q {
                if c % q != r {
                    next[(r, c)] = 0.0;
                }
            }
        }
        self.influence = next;
        let dx = -self.model.wc.tr_mul(&out.e);
        let rec = self.influence.tr_mul(&dx);
        let wc_grad = -(&out.e * out.x_next.transpose());
        let mut values = rec.as_slice().to_vec();
        values.extend_from_slice(wc_grad.as_slice());
        Ok((out, GradientVector::from_vec(self.model.dims(), values)?))
    }
}

/// Largest weight difference between SnAp-1 and the sparse oracle.
pub fn snap1_vs_sparse_oracle(q: usize, steps: usize, seed: u64) -> f64 {
    let inst = instance(q, 3, 2, steps, seed);
    let rule = UpdateRule::new(0.05, 100.0).unwrap();
    let mut a = SparseOracle::new(inst.model.clone(), rule);
    let mut b = Snap1::new(inst.model, rule);
    let mut worst = 0.0f64;
    for (u, t) in inst.inputs.iter().zip(&inst.targets) {
        a.step(u, t).unwrap();
        b.step(u, t).unwrap();
        for (x, y) in a.model().unroll().iter().zip(b.model().unroll()) {
            worst = worst.max((x - y).abs());
        }
    }
    worst
}

/// Monte Carlo check of the rank-one influence estimate against the exact
/// influence after `steps` steps with frozen weights. Returns the number of
/// entries farther than three standard errors from the exact value, and the
/// number of entries compared.
pub fn uoro_bias_violations(q: usize, m: usize, steps: usize, draws: usize, seed: u64) -> (usize, usize) {
    let inst = instance(q, m, 2, steps, seed);
    let rule = UpdateRule::new(0.0, 100.0).unwrap();
    let mut exact = Rtrl::new(inst.model.clone(), rule);
    for (u, t) in inst.inputs.iter().zip(&inst.targets) {
        let (out, _) = exact.estimate(u, t).unwrap();
        exact.model_mut().commit(out.x_next);
    }
    let target = exact.influence();
    let template = Uoro::new(inst.model, rule, 0);
    let n = target.len();
    let (mut sum, mut sq) = (vec![0.0; n], vec![0.0; n]);
    for d in 0..draws {
        let mut u = template.reseeded(seed.wrapping_mul(1_000_003).wrapping_add(d as u64));
        for (x, t) in inst.inputs.iter().zip(&inst.targets) {
            let (out, _) = u.estimate(x, t).unwrap();
            u.model_mut().commit(out.x_next);
        }
        for (k, v) in u.influence_estimate().iter().enumerate() {
            sum[k] += v;
            sq[k] += v * v;
        }
    }
    let nd = draws as f64;
    let violations = (0..n)
        .filter(|&k| {
            let mean = sum[k] / nd;
            let var = ((sq[k] - nd * mean * mean) / (nd - 1.0)).max(0.0);
            let se = (var / nd).sqrt();
            (mean - target.as_slice()[k]).abs() > 3.0 * se + 1e-12
        })
        .count();
    (violations, n)
}

pub struct DniCase {
    pub coefficients: DMatrix<f64>,
    pub prev: DVector<f64>,
    pub next: DVector<f64>,
    pub dynamics: DMatrix<f64>,
    pub state_grad: DVector<f64>,
}

pub fn dni_case(q: usize, p: usize, seed: u64) -> DniCase {
    let mut r = rng(seed);
    let rows = q + p + 1;
    let mut g = |rows: usize, cols: usize| DMatrix::from_fn(rows, cols, |_, _| r.random_range(-1.0..1.0));
    DniCase {
        coefficients: g(rows, q),
        prev: DVector::from_column_slice(g(rows, 1).as_slice()),
        next: DVector::from_column_slice(g(rows, 1).as_slice()),
        dynamics: g(q, q),
        state_grad: DVector::from_column_slice(g(q, 1).as_slice()),
    }
}

fn half_sq_residual(c: &DniCase, a: &DMatrix<f64>) -> f64 {
    0.5 * synthetic_residual(a, &c.prev, &c.next, &c.dynamics, &c.state_grad).norm_squared()
}

/// Relative error of the full coefficient rule against central differences
/// of half the squared bootstrap residual.
pub fn dni_fd_error(q: usize, p: usize, seed: u64) -> f64 {
    let c = dni_case(q, p, seed);
    let f = synthetic_residual(&c.coefficients, &c.prev, &c.next, &c.dynamics, &c.state_grad);
    let grad = coefficient_gradient(&f, &c.prev, &c.next, &c.dynamics, DniUpdate::Full);
    let h = 1e-5;
    let fd = DMatrix::from_fn(c.coefficients.nrows(), c.coefficients.ncols(), |i, j| {
        let mut ap = c.coefficients.clone();
        let mut am = c.coefficients.clone();
        ap[(i, j)] += h;
        am[(i, j)] -= h;
        (half_sq_residual(&c, &ap) - half_sq_residual(&c, &am)) / (2.0 * h)
    });
    rel_error(grad.as_slice(), fd.as_slice())
}

/// Largest difference between the two coefficient rules with zero dynamics.
pub fn dni_rules_agree_without_dynamics(q: usize, p: usize, seed: u64) -> f64 {
    let mut c = dni_case(q, p, seed);
    c.dynamics = DMatrix::zeros(q, q);
    let f = synthetic_residual(&c.coefficients, &c.prev, &c.next, &c.dynamics, &c.state_grad);
    let full = coefficient_gradient(&f, &c.prev, &c.next, &c.dynamics, DniUpdate::Full);
    let simple = coefficient_gradient(&f, &c.prev, &c.next, &c.dynamics, DniUpdate::Simplified);
    (full - simple).amax()
}

/// Largest committed step norm divided by the clip threshold, over every
/// online learner driven hard with a small threshold.
pub fn worst_clip_ratio(seed: u64) -> f64 {
    let tau = 0.05;
    let inst = instance(6, 5, 3, 150, seed);
    let rule = UpdateRule::new(0.5, tau).unwrap();
    let m = inst.model.clone();
    let mut learners: Vec<Box<dyn Forecaster>> = vec![
        Box::new(Rtrl::new(m.clone(), rule)),
        Box::new(Uoro::new(m.clone(), rule, seed)),
        Box::new(Snap1::new(m.clone(), rule)),
        Box::new(Dni::new(m.clone(), rule, 0.002, DniUpdate::Full, seed)),
        Box::new(Dni::new(m.clone(), rule, 0.002, DniUpdate::Simplified, seed)),
        Box::new(Frozen::new(m, rule)),
        Box::new(respcast::trainers::Lms::new(6, 3, rule)),
    ];
    let mut worst = 0.0f64;
    for l in &mut learners {
        for (u, t) in inst.inputs.iter().zip(&inst.targets) {
            let scaled: Vec<f64> = t.iter().map(|v| v * 50.0).collect();
            let r = l.step(u, &scaled).unwrap();
            worst = worst.max(r.applied_norm / tau);
        }
    }
    worst
}

/// Noiseless mixture of two sinusoids per coordinate, in millimeters.
pub fn sinusoid_mixture(n_markers: usize, seconds: f64, rate: f64) -> MarkerSequence {
    let n = (seconds * rate).round() as usize;
    let tau = std::f64::consts::TAU;
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|k| {
            let t = k as f64 / rate;
            (0..3 * n_markers)
                .map(|c| {
                    let c = c as f64;
                    (3.0 + c) * (tau * t / 4.0 + 0.4 * c).sin()
                        + (1.0 + 0.2 * c) * (tau * t / 2.5 + 1.1 * c).sin()
                        + 10.0 * c
                })
                .collect()
        })
        .collect();
    MarkerSequence::from_rows(rate, n_markers, &rows, Regularity::Regular).unwrap()
}
