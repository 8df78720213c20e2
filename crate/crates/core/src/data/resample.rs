use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{MarkerSequence, NaturalCubicSpline};
use crate::error::{ForecastError, Result};

/// Noise standard deviation per coordinate, as a fraction of that coordinate's range.
pub const DEFAULT_NOISE_GAMMA: f64 = 1.0 / 150.0;

/// Sidecar record written next to every resampled sequence file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResampleMetadata {
    pub source_rate_hz: f64,
    pub target_rate_hz: f64,
    pub gamma: f64,
    pub seed: u64,
}

impl ResampleMetadata {
    /// Writes the record as JSON to `<path>.meta.json`.
    pub fn write_sidecar(&self, sequence_path: impl AsRef<Path>) -> Result<std::path::PathBuf> {
        let mut name = sequence_path.as_ref().as_os_str().to_owned();
        name.push(".meta.json");
        let path = std::path::PathBuf::from(name);
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| ForecastError::InvalidArgument(e.to_string()))?;
        fs::write(&path, json).map_err(|e| ForecastError::io(&path, e))?;
        Ok(path)
    }
}

/// Keeps one sample every `factor` steps, starting with the first.
pub fn downsample(seq: &MarkerSequence, factor: usize) -> Result<MarkerSequence> {
    if factor == 0 {
        return Err(ForecastError::InvalidArgument(
            "downsampling factor must be at least 1".into(),
        ));
    }
    let positions: Vec<f64> = seq
        .rows()
        .step_by(factor)
        .flat_map(|r| r.iter().copied())
        .collect();
    MarkerSequence::new(
        seq.sample_rate_hz() / factor as f64,
        seq.start_time(),
        seq.n_markers(),
        positions,
        seq.label(),
    )
}

/// Truncates toward zero to one decimal place.
///
/// Values that already carry a single decimal (up to floating-point noise in
/// the scaled representation) are returned unchanged.
pub(crate) fn truncate_one_decimal(v: f64) -> f64 {
    let scaled = v * 10.0;
    let nearest = scaled.round();
    if (scaled - nearest).abs() <= 1e-9 * nearest.abs().max(1.0) {
        nearest / 10.0
    } else {
        scaled.trunc() / 10.0
    }
}

/// Upsamples by an integer factor with per-coordinate natural cubic splines.
///
/// Points that fall between original samples receive zero-mean Gaussian noise
/// whose standard deviation is `gamma` times the range of that coordinate over
/// the input. Every output value is then truncated to one decimal place, so
/// samples on the original grid equal the truncated originals.
pub fn upsample_with_noise(
    seq: &MarkerSequence,
    target_hz: f64,
    gamma: f64,
    rng_seed: u64,
) -> Result<MarkerSequence> {
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(ForecastError::InvalidArgument(format!(
            "noise proportionality constant must be non-negative, got {gamma}"
        )));
    }
    let ratio = target_hz / seq.sample_rate_hz();
    let factor = ratio.round();
    if !(target_hz.is_finite() && factor >= 1.0 && (ratio - factor).abs() <= 1e-9 * factor) {
        return Err(ForecastError::InvalidArgument(format!(
            "target rate {target_hz} Hz is not an integer multiple of {} Hz",
            seq.sample_rate_hz()
        )));
    }
    let factor = factor as usize;
    let n = seq.len();
    if n == 0 {
        return Err(ForecastError::InvalidArgument("cannot upsample an empty sequence".into()));
    }
    let width = seq.width();
    let out_len = (n - 1) * factor + 1;
    let knots: Vec<f64> = (0..n).map(|k| k as f64).collect();

    let mut splines = Vec::with_capacity(width);
    let mut sigmas = Vec::with_capacity(width);
    for c in 0..width {
        let values: Vec<f64> = seq.column(c).collect();
        let (lo, hi) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        sigmas.push(gamma * (hi - lo));
        splines.push(NaturalCubicSpline::new(&knots, &values)?);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut positions = Vec::with_capacity(out_len * width);
    for k in 0..out_len {
        if k % factor == 0 {
            positions.extend(seq.row(k / factor).iter().map(|&v| truncate_one_decimal(v)));
            continue;
        }
        let s = k as f64 / factor as f64;
        for c in 0..width {
            let mut v = splines[c].eval(s);
            if sigmas[c] > 0.0 {
                let noise = Normal::new(0.0, sigmas[c])
                    .map_err(|e| ForecastError::InvalidArgument(e.to_string()))?;
                v += noise.sample(&mut rng);
            }
            positions.push(truncate_one_decimal(v));
        }
    }
    MarkerSequence::new(
        seq.sample_rate_hz() * factor as f64,
        seq.start_time(),
        seq.n_markers(),
        positions,
        seq.label(),
    )
}
