use super::{MarkerSequence, SequencePartition};
use crate::error::{ForecastError, Result};
use std::ops::Range;

/// Per-coordinate mean and standard deviation of the training interval.
#[derive(Debug, Clone, PartialEq)]
pub struct NormStats {
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl NormStats {
    pub fn new(mean: Vec<f64>, std: Vec<f64>) -> Result<Self> {
        if mean.len() != std.len() {
            return Err(ForecastError::dim("normalization std", mean.len(), std.len()));
        }
        if let Some(c) = std.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(ForecastError::Degenerate(format!(
                "coordinate {c} has non-positive standard deviation {}",
                std[c]
            )));
        }
        Ok(Self { mean, std })
    }

    /// Leaves values unchanged.
    pub fn identity(width: usize) -> Self {
        Self {
            mean: vec![0.0; width],
            std: vec![1.0; width],
        }
    }

    /// Statistics of rows `range` only; nothing outside it is read.
    pub fn fit_range(seq: &MarkerSequence, range: Range<usize>) -> Result<Self> {
        if range.is_empty() || range.end > seq.len() {
            return Err(ForecastError::InvalidArgument(format!(
                "training range {range:?} is empty or exceeds {} samples",
                seq.len()
            )));
        }
        let w = seq.width();
        let n = range.len() as f64;
        let mut mean = vec![0.0; w];
        for k in range.clone() {
            for (m, v) in mean.iter_mut().zip(seq.row(k)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; w];
        for k in range {
            for ((s, v), m) in var.iter_mut().zip(seq.row(k)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std: Vec<f64> = var.into_iter().map(|s| (s / n).sqrt()).collect();
        if let Some(c) = std.iter().position(|&s| s == 0.0) {
            return Err(ForecastError::Degenerate(format!(
                "coordinate {c} is constant over the training interval"
            )));
        }
        Self::new(mean, std)
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }

    pub fn width(&self) -> usize {
        self.mean.len()
    }

    pub fn normalize(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check(v)?;
        Ok(v.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(x, (m, s))| (x - m) / s)
            .collect())
    }

    pub(crate) fn normalize_into(&self, v: &[f64], out: &mut Vec<f64>) {
        out.extend(
            v.iter()
                .zip(self.mean.iter().zip(&self.std))
                .map(|(x, (m, s))| (x - m) / s),
        );
    }

    /// Maps a normalized vector back to millimeters: `std * y + mean`.
    pub fn denormalize(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check(y)?;
        Ok(y.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| s * v + m)
            .collect())
    }

    fn check(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.width() {
            return Err(ForecastError::dim("normalization", self.width(), v.len()));
        }
        Ok(())
    }
}

/// Fits statistics on the training interval of `part`.
pub fn fit_norm_stats(seq: &MarkerSequence, part: &SequencePartition) -> Result<NormStats> {
    NormStats::fit_range(seq, part.train.clone())
}
