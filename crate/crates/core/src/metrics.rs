//! Accuracy and smoothness measures on millimeter trajectories, computed from
//! per-marker 3D distances, and their aggregation over repeated runs.

use serde::{Deserialize, Serialize};

use crate::data::COORDS_PER_MARKER;
use crate::error::{ForecastError, Result};

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.96;

/// Errors of one run over the test interval, in millimeters except `nrmse`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub mae: f64,
    pub rmse: f64,
    pub nrmse: f64,
    pub max_error: f64,
    pub jitter: f64,
}

impl RunMetrics {
    pub const NAMES: [&'static str; 5] = ["mae", "rmse", "nrmse", "max_error", "jitter"];

    pub fn values(&self) -> [f64; 5] {
        [self.mae, self.rmse, self.nrmse, self.max_error, self.jitter]
    }
}

/// Mean over runs and half-width of its 95% confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub ci95: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mae: Estimate,
    pub rmse: Estimate,
    pub nrmse: Estimate,
    pub max_error: Estimate,
    pub jitter: Estimate,
    pub n_runs: usize,
}

impl MetricsReport {
    pub fn estimates(&self) -> [Estimate; 5] {
        [self.mae, self.rmse, self.nrmse, self.max_error, self.jitter]
    }
}

fn marker_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Metrics of predicted against true positions, one row per time step.
///
/// The normalizer of `nrmse` is the root mean squared 3D distance of the true
/// positions from each marker's temporal mean. A constant ground truth has a
/// zero normalizer: `nrmse` is then 0 for an exact prediction and infinite
/// otherwise.
pub fn compute_metrics(pred: &[Vec<f64>], truth: &[Vec<f64>]) -> Result<RunMetrics> {
    if pred.len() != truth.len() {
        return Err(ForecastError::dim("prediction rows", truth.len(), pred.len()));
    }
    if truth.len() < 2 {
        return Err(ForecastError::InvalidArgument(format!(
            "metrics need at least 2 time steps, got {}",
            truth.len()
        )));
    }
    let width = truth[0].len();
    if width == 0 || !width.is_multiple_of(COORDS_PER_MARKER) {
        return Err(ForecastError::InvalidArgument(format!(
            "row width {width} is not a whole number of 3D markers"
        )));
    }
    for (p, t) in pred.iter().zip(truth) {
        if p.len() != width || t.len() != width {
            return Err(ForecastError::dim("position row", width, p.len().max(t.len())));
        }
    }
    let steps = truth.len();
    let markers = width / COORDS_PER_MARKER;
    let count = (steps * markers) as f64;

    let (mut abs_sum, mut sq_sum, mut max_error) = (0.0, 0.0, 0.0f64);
    for (p, t) in pred.iter().zip(truth) {
        for (pm, tm) in p.chunks(COORDS_PER_MARKER).zip(t.chunks(COORDS_PER_MARKER)) {
            let d = marker_distance(pm, tm);
            abs_sum += d;
            sq_sum += d * d;
            max_error = max_error.max(d);
        }
    }
    let mae = abs_sum / count;
    let rmse = (sq_sum / count).sqrt();

    let jumps: f64 = pred
        .windows(2)
        .flat_map(|w| {
            w[0].chunks(COORDS_PER_MARKER)
                .zip(w[1].chunks(COORDS_PER_MARKER))
                .map(|(a, b)| marker_distance(a, b))
        })
        .sum();
    let jitter = jumps / ((steps - 1) * markers) as f64;

    let mut centre = vec![0.0; width];
    for t in truth {
        for (c, v) in centre.iter_mut().zip(t) {
            *c += v / steps as f64;
        }
    }
    let spread = (truth
        .iter()
        .map(|t| {
            t.iter()
                .zip(&centre)
                .map(|(v, c)| (v - c) * (v - c))
                .sum::<f64>()
        })
        .sum::<f64>()
        / count)
        .sqrt();
    let nrmse = if spread > 0.0 {
        rmse / spread
    } else if rmse == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };

    Ok(RunMetrics {
        mae,
        rmse,
        nrmse,
        max_error,
        jitter,
    })
}

/// Mean and `1.96 · s / √n`, with `s` the sample standard deviation.
pub fn mean_ci(values: &[f64]) -> Estimate {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ci95 = if values.len() < 2 {
        0.0
    } else {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        Z95 * var.sqrt() / n.sqrt()
    };
    Estimate { mean, ci95 }
}

pub fn aggregate_runs(runs: &[RunMetrics]) -> Result<MetricsReport> {
    if runs.is_empty() {
        return Err(ForecastError::InvalidArgument("no runs to aggregate".into()));
    }
    let col = |f: fn(&RunMetrics) -> f64| mean_ci(&runs.iter().map(f).collect::<Vec<_>>());
    Ok(MetricsReport {
        mae: col(|r| r.mae),
        rmse: col(|r| r.rmse),
        nrmse: col(|r| r.nrmse),
        max_error: col(|r| r.max_error),
        jitter: col(|r| r.jitter),
        n_runs: runs.len(),
    })
}
