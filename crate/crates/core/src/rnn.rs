//! Single-hidden-layer tanh network shared by every recurrent trainer.
//!
//! The parameter vector concatenates the state-to-state matrix, the
//! input-to-state matrix and the readout matrix, each unrolled column by
//! column. nalgebra stores matrices column-major, so every block is the raw
//! slice of its matrix.

use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{ForecastError, Result};

/// Network shape. `input` counts the leading bias entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RnnDims {
    pub hidden: usize,
    pub input: usize,
    pub output: usize,
}

impl RnnDims {
    pub fn new(hidden: usize, input: usize, output: usize) -> Result<Self> {
        if hidden == 0 || input == 0 || output == 0 {
            return Err(ForecastError::InvalidArgument(format!(
                "network dimensions must be positive (hidden {hidden}, input {input}, output {output})"
            )));
        }
        Ok(Self {
            hidden,
            input,
            output,
        })
    }

    /// Entries of the state-to-state and input-to-state blocks together.
    pub fn recurrent_len(&self) -> usize {
        self.hidden * (self.hidden + self.input)
    }

    pub fn readout_len(&self) -> usize {
        self.output * self.hidden
    }

    pub fn param_len(&self) -> usize {
        self.recurrent_len() + self.readout_len()
    }
}

/// Result of one forward evaluation; the model itself is left untouched.
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub z: DVector<f64>,
    pub x_next: DVector<f64>,
    pub y: DVector<f64>,
    pub e: DVector<f64>,
    pub loss: f64,
}

impl StepOutput {
    /// Elementwise activation derivative `1 - x_next²`.
    pub fn activation_slope(&self) -> DVector<f64> {
        self.x_next.map(|v| 1.0 - v * v)
    }
}

/// Flat gradient in parameter order: state block, input block, readout block.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector {
    dims: RnnDims,
    values: Vec<f64>,
}

impl GradientVector {
    pub fn zeros(dims: RnnDims) -> Self {
        Self {
            dims,
            values: vec![0.0; dims.param_len()],
        }
    }

    pub fn from_vec(dims: RnnDims, values: Vec<f64>) -> Result<Self> {
        if values.len() != dims.param_len() {
            return Err(ForecastError::dim("gradient", dims.param_len(), values.len()));
        }
        Ok(Self { dims, values })
    }

    pub fn dims(&self) -> RnnDims {
        self.dims
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    /// State and input blocks, the part tracked by the recurrent learners.
    pub fn recurrent(&self) -> &[f64] {
        &self.values[..self.dims.recurrent_len()]
    }

    pub fn recurrent_mut(&mut self) -> &mut [f64] {
        let n = self.dims.recurrent_len();
        &mut self.values[..n]
    }

    pub fn readout(&self) -> &[f64] {
        &self.values[self.dims.recurrent_len()..]
    }

    pub fn readout_mut(&mut self) -> &mut [f64] {
        let n = self.dims.recurrent_len();
        &mut self.values[n..]
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.values)
    }
}

pub(crate) fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Rescales `g` onto the sphere of radius `tau` when it lies outside it.
/// Returns the norm before clipping.
pub fn clip_gradient(g: &mut [f64], tau: f64) -> f64 {
    let norm = l2_norm(g);
    if norm > tau {
        let scale = tau / norm;
        g.iter_mut().for_each(|v| *v *= scale);
    }
    norm
}

#[derive(Debug, Clone, PartialEq)]
pub struct RnnModel {
    pub wa: DMatrix<f64>,
    pub wb: DMatrix<f64>,
    pub wc: DMatrix<f64>,
    pub state: DVector<f64>,
}

/// Gaussian weights with standard deviation `sigma_init` and a zero state.
pub fn init_weights(dims: RnnDims, sigma_init: f64, seed: u64) -> Result<RnnModel> {
    let normal = Normal::new(0.0, sigma_init)
        .ok()
        .filter(|_| sigma_init > 0.0)
        .ok_or_else(|| {
            ForecastError::InvalidArgument(format!("sigma_init must be positive, got {sigma_init}"))
        })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = dims.hidden;
    let mut draw = |r, c| DMatrix::from_fn(r, c, |_, _| normal.sample(&mut rng));
    let wa = draw(q, q);
    let wb = draw(q, dims.input);
    let wc = draw(dims.output, q);
    Ok(RnnModel {
        wa,
        wb,
        wc,
        state: DVector::zeros(q),
    })
}

impl RnnModel {
    pub fn zeros(dims: RnnDims) -> Self {
        Self {
            wa: DMatrix::zeros(dims.hidden, dims.hidden),
            wb: DMatrix::zeros(dims.hidden, dims.input),
            wc: DMatrix::zeros(dims.output, dims.hidden),
            state: DVector::zeros(dims.hidden),
        }
    }

    pub fn dims(&self) -> RnnDims {
        RnnDims {
            hidden: self.wa.nrows(),
            input: self.wb.ncols(),
            output: self.wc.nrows(),
        }
    }

    /// `z = Wa x + Wb u`, `x' = tanh z`, `y = Wc x'`, `e = target - y`.
    pub fn forward_step(&self, u: &[f64], target: &[f64]) -> Result<StepOutput> {
        let dims = self.dims();
        if u.len() != dims.input {
            return Err(ForecastError::dim("network input", dims.input, u.len()));
        }
        if target.len() != dims.output {
            return Err(ForecastError::dim("network target", dims.output, target.len()));
        }
        let mut z = &self.wa * &self.state;
        z.gemv(1.0, &self.wb, &DVector::from_column_slice(u), 1.0);
        let x_next = z.map(f64::tanh);
        let y = &self.wc * &x_next;
        let e = DVector::from_column_slice(target) - &y;
        let loss = 0.5 * e.norm_squared();
        Ok(StepOutput {
            z,
            x_next,
            y,
            e,
            loss,
        })
    }

    /// Readout gradient `-e x'ᵀ` of the squared loss.
    pub fn output_layer_gradient(step: &StepOutput) -> DMatrix<f64> {
        -(&step.e * step.x_next.transpose())
    }

    /// Loss gradient with respect to the new state, `-Wcᵀ e`.
    pub fn state_loss_gradient(&self, e: &DVector<f64>) -> DVector<f64> {
        -self.wc.tr_mul(e)
    }

    /// Moves every weight by `-eta` times its gradient entry.
    pub fn apply_update(&mut self, g: &GradientVector, eta: f64) -> Result<()> {
        if g.dims() != self.dims() {
            return Err(ForecastError::dim("gradient", self.dims().param_len(), g.as_slice().len()));
        }
        if let Some(i) = g.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(ForecastError::Numeric(format!(
                "non-finite gradient entry {} at parameter {i}",
                g.as_slice()[i]
            )));
        }
        let mut rest = g.as_slice();
        for block in [&mut self.wa, &mut self.wb, &mut self.wc] {
            let (head, tail) = rest.split_at(block.len());
            for (w, d) in block.as_mut_slice().iter_mut().zip(head) {
                *w -= eta * d;
            }
            rest = tail;
        }
        Ok(())
    }

    /// Accepts the state produced by a forward step.
    pub fn commit(&mut self, x_next: DVector<f64>) {
        self.state = x_next;
    }

    /// All weights as one flat vector in gradient order.
    pub fn unroll(&self) -> Vec<f64> {
        let mut theta = Vec::with_capacity(self.dims().param_len());
        theta.extend_from_slice(self.wa.as_slice());
        theta.extend_from_slice(self.wb.as_slice());
        theta.extend_from_slice(self.wc.as_slice());
        theta
    }

    /// Inverse of [`unroll`](Self::unroll); the state starts at zero.
    pub fn reroll(dims: RnnDims, theta: &[f64]) -> Result<Self> {
        if theta.len() != dims.param_len() {
            return Err(ForecastError::dim("parameter vector", dims.param_len(), theta.len()));
        }
        let q = dims.hidden;
        let (a, rest) = theta.split_at(q * q);
        let (b, c) = rest.split_at(q * dims.input);
        Ok(Self {
            wa: DMatrix::from_column_slice(q, q, a),
            wb: DMatrix::from_column_slice(q, dims.input, b),
            wc: DMatrix::from_column_slice(dims.output, q, c),
            state: DVector::zeros(q),
        })
    }

    pub fn is_finite(&self) -> bool {
        [&self.wa, &self.wb, &self.wc]
            .iter()
            .all(|m| m.iter().all(|v| v.is_finite()))
    }

    /// Writes `q m p` on the first line, then one weight per line.
    /// `m` excludes the bias input.
    pub fn write_snapshot(&self, mut out: impl Write) -> std::io::Result<()> {
        let d = self.dims();
        writeln!(out, "{} {} {}", d.hidden, d.input - 1, d.output)?;
        for v in self.unroll() {
            writeln!(out, "{v:e}")?;
        }
        Ok(())
    }

    pub fn read_snapshot(input: impl BufRead) -> Result<Self> {
        let bad = |msg: String| ForecastError::Config(format!("model snapshot: {msg}"));
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| bad("empty".into()))?
            .map_err(|e| bad(e.to_string()))?;
        let sizes: Vec<usize> = header
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|e| bad(format!("header: {e}")))?;
        let [q, m, p] = sizes[..] else {
            return Err(bad(format!("header needs 3 sizes, found {}", sizes.len())));
        };
        let dims = RnnDims::new(q, m + 1, p)?;
        let theta = lines
            .map(|l| {
                let l = l.map_err(|e| bad(e.to_string()))?;
                l.trim().parse::<f64>().map_err(|e| bad(format!("{l:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::reroll(dims, &theta)
    }
}
