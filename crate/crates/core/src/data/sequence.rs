use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::COORDS_PER_MARKER;
use crate::error::{ForecastError, Result};

/// Breathing-pattern group a record belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regularity {
    #[default]
    Regular,
    Irregular,
    /// Slow, high-amplitude breathing; kept out of the irregular group means.
    Slow,
}

impl fmt::Display for Regularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regularity::Regular => "regular",
            Regularity::Irregular => "irregular",
            Regularity::Slow => "slow",
        })
    }
}

impl FromStr for Regularity {
    type Err = ForecastError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "regular" => Ok(Regularity::Regular),
            "irregular" => Ok(Regularity::Irregular),
            "slow" => Ok(Regularity::Slow),
            other => Err(ForecastError::InvalidArgument(format!(
                "unknown regularity label {other:?}"
            ))),
        }
    }
}

/// Uniformly sampled 3D positions of `n_markers` markers, in millimeters.
///
/// Positions are stored time-major: row `k` holds `x, y, z` of marker 1, then
/// marker 2, and so on. Sample `k` is taken at `start_time + k / sample_rate_hz`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkerSequence {
    sample_rate_hz: f64,
    start_time: f64,
    n_markers: usize,
    positions: Vec<f64>,
    label: Regularity,
}

impl MarkerSequence {
    pub fn new(
        sample_rate_hz: f64,
        start_time: f64,
        n_markers: usize,
        positions: Vec<f64>,
        label: Regularity,
    ) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(ForecastError::InvalidArgument(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if !start_time.is_finite() {
            return Err(ForecastError::InvalidArgument("start time must be finite".into()));
        }
        if n_markers == 0 {
            return Err(ForecastError::InvalidArgument("at least one marker is required".into()));
        }
        let width = n_markers * COORDS_PER_MARKER;
        if !positions.len().is_multiple_of(width) {
            return Err(ForecastError::InvalidArgument(format!(
                "{} values do not form whole rows of {width} coordinates",
                positions.len()
            )));
        }
        if let Some(i) = positions.iter().position(|v| !v.is_finite()) {
            return Err(ForecastError::InvalidArgument(format!(
                "non-finite coordinate at row {}",
                i / width
            )));
        }
        Ok(Self {
            sample_rate_hz,
            start_time,
            n_markers,
            positions,
            label,
        })
    }

    /// Builds a sequence from per-step rows of `3 * n_markers` coordinates.
    pub fn from_rows(
        sample_rate_hz: f64,
        n_markers: usize,
        rows: &[Vec<f64>],
        label: Regularity,
    ) -> Result<Self> {
        let width = n_markers * COORDS_PER_MARKER;
        let mut positions = Vec::with_capacity(rows.len() * width);
        for (k, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(ForecastError::InvalidArgument(format!(
                    "row {k}: expected {width} coordinates, found {}",
                    row.len()
                )));
            }
            positions.extend_from_slice(row);
        }
        Self::new(sample_rate_hz, 0.0, n_markers, positions, label)
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn start_time(&self) -> f64 {
        self.start_time
    }

    pub fn n_markers(&self) -> usize {
        self.n_markers
    }

    /// Coordinates per row, `3 * n_markers`.
    pub fn width(&self) -> usize {
        self.n_markers * COORDS_PER_MARKER
    }

    pub fn len(&self) -> usize {
        self.positions.len() / self.width()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn label(&self) -> Regularity {
        self.label
    }

    pub fn with_label(mut self, label: Regularity) -> Self {
        self.label = label;
        self
    }

    pub fn time(&self, k: usize) -> f64 {
        self.start_time + k as f64 / self.sample_rate_hz
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|k| self.time(k))
    }

    /// Time span between the first and last sample, in seconds.
    pub fn duration(&self) -> f64 {
        self.len().saturating_sub(1) as f64 / self.sample_rate_hz
    }

    pub fn row(&self, k: usize) -> &[f64] {
        let w = self.width();
        &self.positions[k * w..(k + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.positions.chunks_exact(self.width())
    }

    /// Time-major flat view of all coordinates.
    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    /// Values of coordinate `c` over time.
    pub fn column(&self, c: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows().map(move |r| r[c])
    }

    /// The first `len` samples (all of them if the sequence is shorter).
    pub fn prefix(&self, len: usize) -> MarkerSequence {
        let len = len.min(self.len());
        Self {
            positions: self.positions[..len * self.width()].to_vec(),
            ..self.clone_header()
        }
    }

    fn clone_header(&self) -> Self {
        Self {
            sample_rate_hz: self.sample_rate_hz,
            start_time: self.start_time,
            n_markers: self.n_markers,
            positions: Vec::new(),
            label: self.label,
        }
    }

    #[cfg(test)]
    pub(crate) fn positions_mut(&mut self) -> &mut [f64] {
        &mut self.positions
    }
}

const KNOWN_RATES: [f64; 3] = [10.0 / 3.0, 10.0, 30.0];

/// Reads a delimiter-separated marker record: one row per time step, the
/// timestamp in seconds first, then `3 * n_markers` coordinates in millimeters.
///
/// Commas, semicolons, tabs and runs of spaces are all accepted as delimiters.
/// A non-numeric first row is treated as a header. Blank lines and lines
/// starting with `#` are ignored. The sampling rate is inferred from the time
/// span; records with a single row are assumed to be sampled at 10 Hz.
pub fn load_sequence(path: impl AsRef<Path>, n_markers: usize) -> Result<MarkerSequence> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| ForecastError::io(path, e))?;
    let width = n_markers * COORDS_PER_MARKER;
    let parse_err = |row: usize, message: String| ForecastError::Parse {
        path: path.to_path_buf(),
        row,
        message,
    };

    let mut times: Vec<(usize, f64)> = Vec::new();
    let mut positions = Vec::new();
    let mut seen_content = false;
    for (idx, line) in text.lines().enumerate() {
        let row = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line
            .split([',', ';', '\t', ' '])
            .map(str::trim)
            .filter(|f| !f.is_empty())
            .collect();
        let first_content = !seen_content;
        seen_content = true;
        let parsed: std::result::Result<Vec<f64>, _> =
            fields.iter().map(|f| f.parse::<f64>()).collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if first_content => continue,
            Err(e) => return Err(parse_err(row, format!("unparseable value: {e}"))),
        };
        if values.len() != width + 1 {
            return Err(parse_err(
                row,
                format!(
                    "expected {width} coordinates, found {}",
                    values.len().saturating_sub(1)
                ),
            ));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(parse_err(row, format!("non-finite value in column {}", j + 1)));
        }
        let t = values[0];
        if let Some(&(_, prev)) = times.last() {
            if t <= prev {
                return Err(parse_err(
                    row,
                    format!("non-monotone time {t} after {prev}"),
                ));
            }
        }
        times.push((row, t));
        positions.extend_from_slice(&values[1..]);
    }
    if times.is_empty() {
        return Err(parse_err(0, "no data rows".into()));
    }

    let start = times[0].1;
    let rate = if times.len() < 2 {
        10.0
    } else {
        let n = times.len();
        let dt = (times[n - 1].1 - start) / (n - 1) as f64;
        for (k, &(row, t)) in times.iter().enumerate() {
            let expected = start + k as f64 * dt;
            if (t - expected).abs() > 0.01 * dt {
                return Err(parse_err(
                    row,
                    format!("irregular sampling: time {t} deviates from uniform grid value {expected}"),
                ));
            }
        }
        let inferred = 1.0 / dt;
        KNOWN_RATES
            .iter()
            .copied()
            .find(|r| ((inferred - r) / r).abs() < 1e-3)
            .unwrap_or(inferred)
    };
    MarkerSequence::new(rate, start, n_markers, positions, Regularity::default())
}

/// Writes a sequence in the format accepted by [`load_sequence`], with a header.
pub fn save_sequence(seq: &MarkerSequence, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| ForecastError::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io = |e| ForecastError::io(path, e);
    let mut header = String::from("t");
    for m in 1..=seq.n_markers() {
        for axis in ["x", "y", "z"] {
            header.push_str(&format!(",m{m}{axis}"));
        }
    }
    writeln!(out, "{header}").map_err(io)?;
    for (k, row) in seq.rows().enumerate() {
        write!(out, "{}", seq.time(k)).map_err(io)?;
        for v in row {
            write!(out, ",{v}").map_err(io)?;
        }
        writeln!(out).map_err(io)?;
    }
    out.flush().map_err(io)
}
