use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    cross_validate, derive_seed, evaluate, Algorithm, CellKey, FixedParams, GridSpec, Preset,
    SamplingRate,
};
use crate::data::{MarkerSequence, Regularity, DEFAULT_NOISE_GAMMA};
use crate::error::{ForecastError, Result};
use crate::metrics::{MetricsReport, RunMetrics};

/// Seed-path tag for the off-grid noise of upsampled sequences.
const NOISE_STREAM: u64 = 0x006e_6f69_7365;

/// Seed of the upsampling noise for the `index`-th sequence of a sweep.
pub fn noise_seed(master: u64, index: usize) -> u64 {
    derive_seed(master, &[NOISE_STREAM, index as u64])
}

/// A 10 Hz record taking part in a sweep.
#[derive(Debug, Clone)]
pub struct SequenceEntry {
    pub name: String,
    pub label: Regularity,
    pub base: MarkerSequence,
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub sequences: Vec<SequenceEntry>,
    pub rates: Vec<SamplingRate>,
    /// Horizons in seconds; `None` uses each rate's default set. Horizons that
    /// are not a whole number of samples at a rate are skipped for it.
    pub horizons: Option<Vec<f64>>,
    pub algorithms: Vec<Algorithm>,
    pub preset: Preset,
    pub fixed: FixedParams,
    /// Replace the preset grid of an algorithm (at every rate).
    pub grids: Vec<GridSpec>,
    pub master_seed: u64,
    pub noise_gamma: f64,
}

impl SweepSpec {
    pub fn new(sequences: Vec<SequenceEntry>, algorithms: Vec<Algorithm>, preset: Preset) -> Self {
        Self {
            sequences,
            rates: SamplingRate::ALL.to_vec(),
            horizons: None,
            algorithms,
            preset,
            fixed: preset.fixed(),
            grids: Vec::new(),
            master_seed: 0,
            noise_gamma: DEFAULT_NOISE_GAMMA,
        }
    }

    pub fn grid(&self, algo: Algorithm, rate: SamplingRate) -> GridSpec {
        self.grids
            .iter()
            .find(|g| g.algorithm == algo)
            .cloned()
            .unwrap_or_else(|| self.preset.grid(algo, rate))
    }

    /// (seconds, samples) pairs evaluated at `rate`.
    pub fn horizons_at(&self, rate: SamplingRate) -> Vec<(f64, usize)> {
        let hs = self.horizons.clone().unwrap_or_else(|| rate.default_horizons());
        hs.into_iter()
            .filter_map(|h| match rate.steps(h) {
                Ok(s) => Some((h, s)),
                Err(_) => {
                    log::warn!("horizon {h} s skipped at {rate} Hz");
                    None
                }
            })
            .collect()
    }
}

/// One line of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub sequence: String,
    pub label: Regularity,
    pub rate_hz: String,
    pub horizon_s: f64,
    pub horizon_steps: usize,
    pub algorithm: String,
    pub params: String,
    pub cv_rmse: Option<f64>,
    pub n_runs: Option<usize>,
    pub mae: Option<f64>,
    pub mae_ci: Option<f64>,
    pub rmse: Option<f64>,
    pub rmse_ci: Option<f64>,
    pub nrmse: Option<f64>,
    pub nrmse_ci: Option<f64>,
    pub max_error: Option<f64>,
    pub max_error_ci: Option<f64>,
    pub jitter: Option<f64>,
    pub jitter_ci: Option<f64>,
    pub error: String,
}

impl ResultRow {
    fn blank(entry: &SequenceEntry, rate: SamplingRate, h: (f64, usize), algo: Algorithm) -> Self {
        Self {
            sequence: entry.name.clone(),
            label: entry.label,
            rate_hz: rate.label().to_string(),
            horizon_s: h.0,
            horizon_steps: h.1,
            algorithm: algo.name().to_string(),
            params: String::new(),
            cv_rmse: None,
            n_runs: None,
            mae: None,
            mae_ci: None,
            rmse: None,
            rmse_ci: None,
            nrmse: None,
            nrmse_ci: None,
            max_error: None,
            max_error_ci: None,
            jitter: None,
            jitter_ci: None,
            error: String::new(),
        }
    }

    fn fill(&mut self, report: &MetricsReport) {
        self.n_runs = Some(report.n_runs);
        self.mae = Some(report.mae.mean);
        self.mae_ci = Some(report.mae.ci95);
        self.rmse = Some(report.rmse.mean);
        self.rmse_ci = Some(report.rmse.ci95);
        self.nrmse = Some(report.nrmse.mean);
        self.nrmse_ci = Some(report.nrmse.ci95);
        self.max_error = Some(report.max_error.mean);
        self.max_error_ci = Some(report.max_error.ci95);
        self.jitter = Some(report.jitter.mean);
        self.jitter_ci = Some(report.jitter.ci95);
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_empty() && self.rmse.is_some()
    }

    /// Mean metrics, when the cell succeeded.
    pub fn metrics(&self) -> Option<RunMetrics> {
        Some(RunMetrics {
            mae: self.mae?,
            rmse: self.rmse?,
            nrmse: self.nrmse?,
            max_error: self.max_error?,
            jitter: self.jitter?,
        })
    }

    pub fn intervals(&self) -> Option<RunMetrics> {
        Some(RunMetrics {
            mae: self.mae_ci?,
            rmse: self.rmse_ci?,
            nrmse: self.nrmse_ci?,
            max_error: self.max_error_ci?,
            jitter: self.jitter_ci?,
        })
    }
}

/// Grid search then test evaluation for every (sequence, rate, horizon,
/// algorithm) cell. A failing cell is recorded with its error and the sweep
/// carries on. Rows come back in specification order regardless of how the
/// work was scheduled.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<ResultRow>> {
    let mut prepared = Vec::new();
    for (s, entry) in spec.sequences.iter().enumerate() {
        for &rate in &spec.rates {
            let seq = rate
                .resample(&entry.base, spec.noise_gamma, noise_seed(spec.master_seed, s))
                .map_err(|e| ForecastError::InvalidArgument(format!("{}: {e}", entry.name)))?;
            prepared.push((s, rate, seq));
        }
    }
    let mut cells = Vec::new();
    for (p, (s, rate, _)) in prepared.iter().enumerate() {
        for h in spec.horizons_at(*rate) {
            for &algo in &spec.algorithms {
                cells.push((p, *s, *rate, h, algo));
            }
        }
    }
    let rows = cells
        .par_iter()
        .map(|&(p, s, rate, h, algo)| {
            let entry = &spec.sequences[s];
            let seq = &prepared[p].2;
            let mut row = ResultRow::blank(entry, rate, h, algo);
            let key = CellKey::new(spec.master_seed, algo, rate, h.1).with_sequence(s as u64);
            let outcome = cross_validate(seq, &spec.grid(algo, rate), &spec.fixed, rate, key)
                .and_then(|cv| {
                    row.params = cv.best.to_string();
                    row.cv_rmse = Some(cv.best_rmse);
                    evaluate(seq, algo, &cv.best, &spec.fixed, rate, key)
                });
            match outcome {
                Ok(report) => row.fill(&report),
                Err(e) => {
                    log::error!("{} {rate} Hz h={} s {algo}: {e}", entry.name, h.0);
                    row.error = e.to_string();
                }
            }
            row
        })
        .collect();
    Ok(rows)
}

pub fn write_results(rows: &[ResultRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| ForecastError::io(path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    w.write_record(RESULT_COLUMNS)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| ForecastError::io(path, e))
}

/// Column names of the results table, in order.
pub const RESULT_COLUMNS: [&str; 20] = [
    "sequence",
    "label",
    "rate_hz",
    "horizon_s",
    "horizon_steps",
    "algorithm",
    "params",
    "cv_rmse",
    "n_runs",
    "mae",
    "mae_ci",
    "rmse",
    "rmse_ci",
    "nrmse",
    "nrmse_ci",
    "max_error",
    "max_error_ci",
    "jitter",
    "jitter_ci",
    "error",
];

pub fn read_results(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| ForecastError::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    r.deserialize().map(|row| row.map_err(ForecastError::from)).collect()
}

/// Mean of successful cells over some grouping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalRow {
    /// `all`, `horizon`, `sequence`, `regular` or `irregular`.
    pub scope: String,
    /// Horizon in seconds or sequence name, empty for the other scopes.
    pub key: String,
    pub rate_hz: String,
    pub algorithm: String,
    pub n_cells: usize,
    pub mae: f64,
    pub rmse: f64,
    pub nrmse: f64,
    pub max_error: f64,
    pub jitter: f64,
}

fn mean_row(scope: &str, key: String, rate: &str, algo: &str, rows: &[&ResultRow]) -> MarginalRow {
    let n = rows.len() as f64;
    let mut sums = [0.0; 5];
    for r in rows {
        let m = r.metrics().expect("only successful rows are grouped");
        for (s, v) in sums.iter_mut().zip(m.values()) {
            *s += v;
        }
    }
    MarginalRow {
        scope: scope.to_string(),
        key,
        rate_hz: rate.to_string(),
        algorithm: algo.to_string(),
        n_cells: rows.len(),
        mae: sums[0] / n,
        rmse: sums[1] / n,
        nrmse: sums[2] / n,
        max_error: sums[3] / n,
        jitter: sums[4] / n,
    }
}

/// Marginal means over horizons and sequences, plus breathing-pattern group
/// means. Slow-breathing records count toward neither group.
pub fn marginals(rows: &[ResultRow]) -> Vec<MarginalRow> {
    let mut by_cell: BTreeMap<(String, String), Vec<&ResultRow>> = BTreeMap::new();
    let mut order = Vec::new();
    for r in rows.iter().filter(|r| r.is_ok()) {
        let k = (r.rate_hz.clone(), r.algorithm.clone());
        if !by_cell.contains_key(&k) {
            order.push(k.clone());
        }
        by_cell.entry(k).or_default().push(r);
    }
    let mut out = Vec::new();
    for k in order {
        let group = &by_cell[&k];
        let (rate, algo) = (&k.0, &k.1);
        out.push(mean_row("all", String::new(), rate, algo, group));

        let mut horizons: Vec<f64> = group.iter().map(|r| r.horizon_s).collect();
        horizons.sort_by(f64::total_cmp);
        horizons.dedup();
        for h in horizons {
            let sel: Vec<&ResultRow> = group.iter().copied().filter(|r| r.horizon_s == h).collect();
            out.push(mean_row("horizon", h.to_string(), rate, algo, &sel));
        }
        let mut names: Vec<&str> = Vec::new();
        for r in group {
            if !names.contains(&r.sequence.as_str()) {
                names.push(&r.sequence);
            }
        }
        for name in names {
            let sel: Vec<&ResultRow> = group.iter().copied().filter(|r| r.sequence == name).collect();
            out.push(mean_row("sequence", name.to_string(), rate, algo, &sel));
        }
        for (label, scope) in [(Regularity::Regular, "regular"), (Regularity::Irregular, "irregular")] {
            let sel: Vec<&ResultRow> = group.iter().copied().filter(|r| r.label == label).collect();
            if !sel.is_empty() {
                out.push(mean_row(scope, String::new(), rate, algo, &sel));
            }
        }
    }
    out
}

/// Writes `marginals.csv` and `summary.csv`; the latter has one row per
/// (algorithm, metric) and one column per sampling rate.
pub fn write_summary(rows: &[ResultRow], dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    let margins = marginals(rows);
    let path = dir.join("marginals.csv");
    let file = std::fs::File::create(&path).map_err(|e| ForecastError::io(&path, e))?;
    let mut w = csv::Writer::from_writer(file);
    for m in &margins {
        w.serialize(m)?;
    }
    w.flush().map_err(|e| ForecastError::io(&path, e))?;

    let mut rates: Vec<&str> = Vec::new();
    let mut algos: Vec<&str> = Vec::new();
    for m in margins.iter().filter(|m| m.scope == "all") {
        if !rates.contains(&m.rate_hz.as_str()) {
            rates.push(&m.rate_hz);
        }
        if !algos.contains(&m.algorithm.as_str()) {
            algos.push(&m.algorithm);
        }
    }
    rates.sort_by(|a, b| {
        let (x, y): (f64, f64) = (a.parse().unwrap_or(0.0), b.parse().unwrap_or(0.0));
        x.total_cmp(&y)
    });
    let path = dir.join("summary.csv");
    let file = std::fs::File::create(&path).map_err(|e| ForecastError::io(&path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let mut header = vec!["algorithm".to_string(), "metric".to_string()];
    header.extend(rates.iter().map(|r| format!("{r}Hz")));
    w.write_record(&header)?;
    for algo in &algos {
        for (mi, metric) in RunMetrics::NAMES.iter().enumerate() {
            let mut record = vec![algo.to_string(), metric.to_string()];
            for rate in &rates {
                let cell = margins
                    .iter()
                    .find(|m| m.scope == "all" && m.algorithm == *algo && m.rate_hz == *rate)
                    .map(|m| {
                        let v = [m.mae, m.rmse, m.nrmse, m.max_error, m.jitter][mi];
                        format!("{v}")
                    })
                    .unwrap_or_default();
                record.push(cell);
            }
            w.write_record(&record)?;
        }
    }
    w.flush().map_err(|e| ForecastError::io(&path, e))
}

/// Long-format view of the results: one line per (cell, metric), failed
/// cells omitted. Always starts with a header line, even with no rows.
pub fn write_long_table(rows: &[ResultRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| ForecastError::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record([
        "sequence", "label", "rate_hz", "horizon_s", "algorithm", "params", "metric", "mean", "ci95",
    ])?;
    for r in rows {
        let (Some(m), Some(ci)) = (r.metrics(), r.intervals()) else {
            continue;
        };
        for ((name, v), c) in RunMetrics::NAMES.iter().zip(m.values()).zip(ci.values()) {
            w.write_record([
                r.sequence.clone(),
                r.label.to_string(),
                r.rate_hz.clone(),
                r.horizon_s.to_string(),
                r.algorithm.clone(),
                r.params.clone(),
                name.to_string(),
                v.to_string(),
                c.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| ForecastError::io(path, e))
}
