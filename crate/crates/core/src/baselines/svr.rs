//! ε-insensitive support vector regression with a Gaussian kernel, solved in
//! the dual by sequential minimal optimization with second-order working-set
//! selection.
//!
//! The dual is written over 2N variables `β = [α⁺; α⁻]` with labels
//! `s = [+1; −1]`:
//!
//! ```text
//! min ½ βᵀQβ + cᵀβ   s.t. sᵀβ = 0, 0 ≤ β ≤ C
//! Q_tu = s_t s_u K(i_t, i_u),  c = [ε − z; ε + z]
//! ```
//!
//! and the regression function is `Σ (α⁺ᵢ − α⁻ᵢ) K(xᵢ, x) + b`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::{prediction_report, stack_rows};
use crate::error::{ForecastError, Result};
use crate::trainers::{Forecaster, StepReport};

const MIN_CURVATURE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvrParams {
    /// Kernel width σ in `exp(−‖x − x'‖² / (2σ²))`.
    pub sigma: f64,
    /// Half-width of the insensitive tube.
    pub epsilon: f64,
    /// Box constraint on each dual coefficient.
    pub c: f64,
}

impl SvrParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("sigma", self.sigma), ("epsilon", self.epsilon), ("C", self.c)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ForecastError::InvalidArgument(format!(
                    "SVR {name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoOptions {
    /// Stop once the maximal KKT violation falls below this.
    pub tolerance: f64,
    /// Iteration cap; `None` means 10⁵ per training example.
    pub max_iterations: Option<usize>,
    /// Keep the dual objective after every iteration.
    pub record_objective: bool,
}

impl Default for SmoOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-3,
            max_iterations: None,
            record_objective: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alpha_plus: Vec<f64>,
    pub alpha_minus: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    /// Maximal KKT violation at exit.
    pub violation: f64,
    /// Dual objective to be maximized, `−(½ βᵀQβ + cᵀβ)`.
    pub objective: f64,
    pub objective_trace: Vec<f64>,
}

impl DualSolution {
    /// `α⁺ᵢ − α⁻ᵢ`.
    pub fn coefficients(&self) -> Vec<f64> {
        self.alpha_plus
            .iter()
            .zip(&self.alpha_minus)
            .map(|(a, b)| a - b)
            .collect()
    }
}

/// Gram matrix of `exp(−‖xᵢ − xⱼ‖² / (2σ²))` between the rows of `a` and `b`.
pub fn gaussian_kernel_matrix(a: &DMatrix<f64>, b: &DMatrix<f64>, sigma: f64) -> DMatrix<f64> {
    let gamma = 1.0 / (2.0 * sigma * sigma);
    let an: Vec<f64> = a.row_iter().map(|r| r.norm_squared()).collect();
    let bn: Vec<f64> = b.row_iter().map(|r| r.norm_squared()).collect();
    let mut k = a * b.transpose();
    for j in 0..k.ncols() {
        for i in 0..k.nrows() {
            let d2 = (an[i] + bn[j] - 2.0 * k[(i, j)]).max(0.0);
            k[(i, j)] = (-gamma * d2).exp();
        }
    }
    k
}

/// Solves the dual for a single output given the training Gram matrix.
pub fn solve_dual(
    kernel: &DMatrix<f64>,
    targets: &[f64],
    epsilon: f64,
    c: f64,
    options: SmoOptions,
) -> Result<DualSolution> {
    let n = targets.len();
    if kernel.shape() != (n, n) {
        return Err(ForecastError::dim("kernel matrix", n, kernel.nrows()));
    }
    if n == 0 {
        return Err(ForecastError::InvalidArgument("SVR needs at least one example".into()));
    }
    let l = 2 * n;
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
    let base = |t: usize| t % n;
    let linear: Vec<f64> = (0..l)
        .map(|t| if t < n { epsilon - targets[t] } else { epsilon + targets[t - n] })
        .collect();
    let diag: Vec<f64> = (0..l).map(|t| kernel[(base(t), base(t))]).collect();
    // The kernel is symmetric, so columns stand in for rows and stay contiguous.
    let column = |t: usize| &kernel.as_slice()[base(t) * n..(base(t) + 1) * n];

    let mut beta = vec![0.0; l];
    let mut grad = linear.clone();
    let objective = |beta: &[f64], grad: &[f64]| {
        -0.5 * beta
            .iter()
            .zip(grad.iter().zip(&linear))
            .map(|(b, (g, p))| b * (g + p))
            .sum::<f64>()
    };
    let max_iterations = options.max_iterations.unwrap_or(100_000usize.saturating_mul(n));
    let mut trace = Vec::new();
    let mut iterations = 0;
    let violation = loop {
        // First index: steepest feasible ascent direction.
        let mut g_max = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..l {
            let v = if sign(t) > 0.0 {
                (beta[t] < c).then(|| -grad[t])
            } else {
                (beta[t] > 0.0).then_some(grad[t])
            };
            if let Some(v) = v {
                if v >= g_max {
                    g_max = v;
                    i_sel = Some(t);
                }
            }
        }
        // Second index: largest guaranteed objective decrease.
        let mut g_max2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        let mut best = f64::INFINITY;
        if let Some(i) = i_sel {
            let k_i = column(i);
            for t in 0..l {
                let (eligible, v) = if sign(t) > 0.0 {
                    (beta[t] > 0.0, grad[t])
                } else {
                    (beta[t] < c, -grad[t])
                };
                if !eligible {
                    continue;
                }
                g_max2 = g_max2.max(v);
                let diff = g_max + v;
                if diff > 0.0 {
                    let curvature = diag[i] + diag[t] - 2.0 * k_i[base(t)];
                    let gain = -(diff * diff) / curvature.max(MIN_CURVATURE);
                    if gain <= best {
                        best = gain;
                        j_sel = Some(t);
                    }
                }
            }
        }
        let gap = g_max + g_max2;
        let (Some(i), Some(j)) = (i_sel, j_sel) else {
            break gap.max(0.0);
        };
        if gap < options.tolerance {
            break gap;
        }
        if iterations >= max_iterations {
            return Err(ForecastError::NotConverged {
                iterations,
                residual: gap,
            });
        }
        iterations += 1;

        let (old_i, old_j) = (beta[i], beta[j]);
        let (k_i, k_j) = (column(i), column(j));
        let q_ij = sign(i) * sign(j) * k_i[base(j)];
        let (mut ai, mut aj) = (old_i, old_j);
        if sign(i) != sign(j) {
            let quad = (diag[i] + diag[j] + 2.0 * q_ij).max(MIN_CURVATURE);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let quad = (diag[i] + diag[j] - 2.0 * q_ij).max(MIN_CURVATURE);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        beta[i] = ai;
        beta[j] = aj;
        let (di, dj) = (sign(i) * (ai - old_i), sign(j) * (aj - old_j));
        let (plus, minus) = grad.split_at_mut(n);
        for (t, (gp, gm)) in plus.iter_mut().zip(minus.iter_mut()).enumerate() {
            let delta = k_i[t] * di + k_j[t] * dj;
            *gp += delta;
            *gm -= delta;
        }
        if options.record_objective {
            trace.push(objective(&beta, &grad));
        }
    };

    // Offset from the free variables, or the middle of the feasible interval.
    let (mut upper, mut lower) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free_sum, mut free_count) = (0.0, 0usize);
    for t in 0..l {
        let yg = sign(t) * grad[t];
        let at_upper = beta[t] >= c;
        let at_lower = beta[t] <= 0.0;
        if at_upper {
            if sign(t) < 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else if at_lower {
            if sign(t) > 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else {
            free_sum += yg;
            free_count += 1;
        }
    }
    let rho = if free_count > 0 {
        free_sum / free_count as f64
    } else {
        0.5 * (upper + lower)
    };

    Ok(DualSolution {
        objective: objective(&beta, &grad),
        alpha_minus: beta.split_off(n),
        alpha_plus: beta,
        bias: -rho,
        iterations,
        violation,
        objective_trace: trace,
    })
}

/// One scalar regressor per output coordinate, all sharing the same kernel
/// and hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SvrModel {
    params: SvrParams,
    /// Training inputs that carry a nonzero coefficient for some output.
    support: DMatrix<f64>,
    /// outputs × support.
    coefficients: DMatrix<f64>,
    biases: DVector<f64>,
    iterations: Vec<usize>,
}

impl SvrModel {
    pub fn fit(inputs: &[Vec<f64>], targets: &[Vec<f64>], params: SvrParams) -> Result<Self> {
        Self::fit_with(inputs, targets, params, SmoOptions::default())
    }

    pub fn fit_with(
        inputs: &[Vec<f64>],
        targets: &[Vec<f64>],
        params: SvrParams,
        options: SmoOptions,
    ) -> Result<Self> {
        params.validate()?;
        if inputs.is_empty() {
            return Err(ForecastError::InvalidArgument("SVR needs at least one example".into()));
        }
        if inputs.len() != targets.len() {
            return Err(ForecastError::dim("SVR targets", inputs.len(), targets.len()));
        }
        let x = stack_rows(inputs, "SVR input")?;
        let y = stack_rows(targets, "SVR target")?;
        let kernel = gaussian_kernel_matrix(&x, &x, params.sigma);
        let solutions: Vec<DualSolution> = (0..y.ncols())
            .into_par_iter()
            .map(|k| {
                let column: Vec<f64> = y.column(k).iter().copied().collect();
                solve_dual(&kernel, &column, params.epsilon, params.c, options)
            })
            .collect::<Result<_>>()?;
        let coefs: Vec<Vec<f64>> = solutions.iter().map(DualSolution::coefficients).collect();
        let keep: Vec<usize> = (0..x.nrows())
            .filter(|&i| coefs.iter().any(|c| c[i] != 0.0))
            .collect();
        let support = x.select_rows(&keep);
        let coefficients = DMatrix::from_fn(coefs.len(), keep.len(), |k, s| coefs[k][keep[s]]);
        let biases = DVector::from_iterator(solutions.len(), solutions.iter().map(|s| s.bias));
        Ok(Self {
            params,
            support,
            coefficients,
            biases,
            iterations: solutions.iter().map(|s| s.iterations).collect(),
        })
    }

    pub fn params(&self) -> SvrParams {
        self.params
    }

    pub fn support_count(&self) -> usize {
        self.support.nrows()
    }

    pub fn biases(&self) -> &[f64] {
        self.biases.as_slice()
    }

    pub fn iterations(&self) -> &[usize] {
        &self.iterations
    }

    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        if self.support.nrows() > 0 && input.len() != self.support.ncols() {
            return Err(ForecastError::dim("SVR input", self.support.ncols(), input.len()));
        }
        if self.support.nrows() == 0 {
            return Ok(self.biases.as_slice().to_vec());
        }
        let query = DMatrix::from_row_slice(1, input.len(), input);
        let k = gaussian_kernel_matrix(&self.support, &query, self.params.sigma);
        let y = &self.coefficients * k + &self.biases;
        Ok(y.as_slice().to_vec())
    }
}

impl Forecaster for SvrModel {
    fn step(&mut self, input: &[f64], target: &[f64]) -> Result<StepReport> {
        prediction_report(self.predict(input)?, target)
    }
}
