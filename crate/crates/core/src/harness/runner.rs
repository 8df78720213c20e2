use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{derive_seed, Algorithm, FixedParams, GridSpec, HyperParams, SamplingRate};
use crate::baselines::{LinearRegression, NoPrediction, SvrModel, SvrParams};
use crate::data::{make_windows, MarkerSequence, NormStats, SequencePartition};
use crate::error::{ForecastError, Result};
use crate::metrics::{aggregate_runs, compute_metrics, MetricsReport, RunMetrics};
use crate::rnn::{init_weights, RnnDims};
use crate::trainers::{Dni, DniUpdate, Forecaster, Frozen, Lms, Rtrl, Snap1, Uoro, UpdateRule};

/// Which interval a run is scored on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Data up to the end of the cross-validation interval only.
    CrossValidation,
    Test,
}

impl Phase {
    fn code(self) -> u64 {
        match self {
            Phase::CrossValidation => 1,
            Phase::Test => 2,
        }
    }
}

/// Identifies one (sequence, rate, horizon, algorithm) cell for seeding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellKey {
    pub master_seed: u64,
    pub sequence: u64,
    pub rate: SamplingRate,
    pub horizon_steps: usize,
    pub algorithm: Algorithm,
}

impl CellKey {
    pub fn new(master_seed: u64, algorithm: Algorithm, rate: SamplingRate, horizon_steps: usize) -> Self {
        Self {
            master_seed,
            sequence: 0,
            rate,
            horizon_steps,
            algorithm,
        }
    }

    pub fn with_sequence(mut self, sequence: u64) -> Self {
        self.sequence = sequence;
        self
    }

    fn run_seed(&self, phase: Phase, point: u64, run: u64) -> u64 {
        derive_seed(
            self.master_seed,
            &[
                self.sequence,
                self.rate.code(),
                self.horizon_steps as u64,
                self.algorithm.code(),
                phase.code(),
                point,
                run,
            ],
        )
    }
}

/// Everything that defines a run apart from its data and seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSpec {
    pub algorithm: Algorithm,
    pub params: HyperParams,
    pub fixed: FixedParams,
    pub rate: SamplingRate,
    pub horizon_steps: usize,
}

/// Predictions of one run, in millimeters, aligned with the true positions.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub target_index: Vec<usize>,
    pub predictions: Vec<Vec<f64>>,
    pub truth: Vec<Vec<f64>>,
}

impl RunTrace {
    pub fn metrics(&self) -> Result<RunMetrics> {
        compute_metrics(&self.predictions, &self.truth)
    }
}

pub(crate) fn online_model(
    algo: Algorithm,
    params: &HyperParams,
    fixed: &FixedParams,
    input: usize,
    output: usize,
    seed: u64,
) -> Result<Box<dyn Forecaster>> {
    params.validate(algo)?;
    let rule = UpdateRule::new(params.eta.unwrap_or(0.0), fixed.tau)?;
    if algo == Algorithm::Lms {
        return Ok(Box::new(Lms::new(input, output, rule)));
    }
    if algo == Algorithm::NoPrediction {
        return Ok(Box::new(NoPrediction::new(output)));
    }
    let hidden = params.hidden.unwrap_or(0);
    let dims = RnnDims::new(hidden, input, output)?;
    let model = init_weights(dims, fixed.sigma_init, derive_seed(seed, &[0]))?;
    let aux = derive_seed(seed, &[1]);
    Ok(match algo {
        Algorithm::Rtrl => Box::new(Rtrl::new(model, rule)),
        Algorithm::Uoro => Box::new(Uoro::new(model, rule, aux)),
        Algorithm::Snap1 => Box::new(Snap1::new(model, rule)),
        Algorithm::Dni => Box::new(Dni::new(model, rule, fixed.coefficient_rate, DniUpdate::Full, aux)),
        Algorithm::DniSimplified => Box::new(Dni::new(
            model,
            rule,
            fixed.coefficient_rate,
            DniUpdate::Simplified,
            aux,
        )),
        Algorithm::Frozen => Box::new(Frozen::new(model, rule)),
        other => {
            return Err(ForecastError::InvalidArgument(format!(
                "{other} is not an online learner"
            )))
        }
    })
}

pub(crate) fn offline_model(
    algo: Algorithm,
    params: &HyperParams,
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
) -> Result<Box<dyn Forecaster>> {
    params.validate(algo)?;
    match algo {
        Algorithm::LinearRegression => Ok(Box::new(LinearRegression::fit(inputs, targets)?)),
        Algorithm::Svr => {
            let s = params.svr.expect("validated");
            let svr = SvrParams {
                sigma: s.sigma(),
                epsilon: s.epsilon,
                c: s.c,
            };
            Ok(Box::new(SvrModel::fit(inputs, targets, svr)?))
        }
        other => Err(ForecastError::InvalidArgument(format!("{other} is not fitted offline"))),
    }
}

/// Runs one model over `seq` and returns its predictions for targets inside
/// the scored interval of `phase`.
///
/// Online learners see every window in order and keep learning throughout;
/// offline models are fitted on windows whose target lies in the training
/// interval. In the cross-validation phase nothing past the cross-validation
/// interval is read.
pub fn run_trace(seq: &MarkerSequence, spec: &RunSpec, phase: Phase, seed: u64) -> Result<RunTrace> {
    let RunSpec {
        algorithm: algo,
        ref params,
        ref fixed,
        rate,
        horizon_steps,
    } = *spec;
    let part = SequencePartition::new(seq, algo.partition_kind())?;
    let (visible, scored): (usize, Range<usize>) = match phase {
        Phase::CrossValidation => (part.cross_validation.end, part.cross_validation.clone()),
        Phase::Test => (seq.len(), part.test.clone()),
    };
    let data = seq.prefix(visible);
    let stats = NormStats::fit_range(&data, part.train.clone())?;
    let shl = rate.shl_steps(params.shl_s);
    let windows = make_windows(&data, &stats, shl, horizon_steps);
    let input = windows.input_len();
    let output = windows.target_len();

    let mut trace = RunTrace {
        target_index: Vec::new(),
        predictions: Vec::new(),
        truth: Vec::new(),
    };
    let mut record = |idx: usize, pred: Vec<f64>| -> Result<()> {
        trace.predictions.push(stats.denormalize(&pred)?);
        trace.truth.push(data.row(idx).to_vec());
        trace.target_index.push(idx);
        Ok(())
    };

    if algo.is_offline() {
        let (mut fit_in, mut fit_out) = (Vec::new(), Vec::new());
        let mut queries = Vec::new();
        for ex in windows {
            if ex.target_index < part.train.end {
                fit_in.push(ex.input);
                fit_out.push(ex.target);
            } else if scored.contains(&ex.target_index) {
                queries.push(ex);
            }
        }
        if fit_in.is_empty() || queries.is_empty() {
            return Err(infeasible(shl, horizon_steps, data.len()));
        }
        let mut model = offline_model(algo, params, &fit_in, &fit_out)?;
        for ex in queries {
            let report = model.step(&ex.input, &ex.target)?;
            record(ex.target_index, report.prediction)?;
        }
    } else {
        let mut model = online_model(algo, params, fixed, input, output, seed)?;
        for ex in windows {
            let report = model.step(&ex.input, &ex.target)?;
            if scored.contains(&ex.target_index) {
                record(ex.target_index, report.prediction)?;
            }
        }
    }
    if trace.predictions.len() < 2 {
        return Err(infeasible(shl, horizon_steps, data.len()));
    }
    Ok(trace)
}

fn infeasible(shl: usize, horizon: usize, len: usize) -> ForecastError {
    ForecastError::InvalidArgument(format!(
        "history {shl} + horizon {horizon} leaves too few scored windows in {len} samples"
    ))
}

/// Outcome of a grid search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOutcome {
    pub best: HyperParams,
    pub best_rmse: f64,
    /// Every grid point in search order with its mean CV RMSE (`None` if skipped).
    pub scores: Vec<(HyperParams, Option<f64>)>,
}

fn runs_for(algo: Algorithm, n: usize) -> usize {
    if algo.is_stochastic() {
        n.max(1)
    } else {
        1
    }
}

/// Grid search: mean cross-validation RMSE over `n_cv` runs per point, lowest
/// wins, earliest point in grid order on ties. Points that are infeasible for
/// the sequence length or fail numerically are skipped.
pub fn cross_validate(
    seq: &MarkerSequence,
    grid: &GridSpec,
    fixed: &FixedParams,
    rate: SamplingRate,
    key: CellKey,
) -> Result<CvOutcome> {
    let algo = grid.algorithm;
    let points = grid.points();
    let runs = runs_for(algo, fixed.n_cv);
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..runs).map(move |r| (p, r)))
        .collect();
    let results: Vec<Result<f64>> = jobs
        .par_iter()
        .map(|&(p, r)| {
            let seed = key.run_seed(Phase::CrossValidation, p as u64, r as u64);
            let spec = RunSpec {
                algorithm: algo,
                params: points[p],
                fixed: *fixed,
                rate,
                horizon_steps: key.horizon_steps,
            };
            run_trace(seq, &spec, Phase::CrossValidation, seed)
                .and_then(|t| t.metrics())
                .map(|m| m.rmse)
        })
        .collect();

    let mut scores = Vec::with_capacity(points.len());
    let mut best: Option<(usize, f64)> = None;
    let mut last_error = None;
    for (p, chunk) in results.chunks(runs).enumerate() {
        let mut total = 0.0;
        let mut failed = None;
        for r in chunk {
            match r {
                Ok(v) if v.is_finite() => total += v,
                Ok(v) => failed = Some(format!("non-finite RMSE {v}")),
                Err(e) => failed = Some(e.to_string()),
            }
        }
        let score = match failed {
            Some(msg) => {
                log::debug!("{algo} {}: skipped ({msg})", points[p]);
                last_error = Some(msg);
                None
            }
            None => Some(total / runs as f64),
        };
        if let Some(s) = score {
            if best.is_none_or(|(_, b)| s < b) {
                best = Some((p, s));
            }
        }
        scores.push((points[p], score));
    }
    let (p, best_rmse) = best.ok_or_else(|| {
        ForecastError::InvalidArgument(format!(
            "every grid point was skipped for {algo}: {}",
            last_error.unwrap_or_else(|| "empty grid".into())
        ))
    })?;
    Ok(CvOutcome {
        best: points[p],
        best_rmse,
        scores,
    })
}

/// Test-interval metrics averaged over `n_test` runs (one run for
/// deterministic models).
pub fn evaluate(
    seq: &MarkerSequence,
    algo: Algorithm,
    params: &HyperParams,
    fixed: &FixedParams,
    rate: SamplingRate,
    key: CellKey,
) -> Result<MetricsReport> {
    let runs = runs_for(algo, fixed.n_test);
    let spec = RunSpec {
        algorithm: algo,
        params: *params,
        fixed: *fixed,
        rate,
        horizon_steps: key.horizon_steps,
    };
    let metrics: Vec<RunMetrics> = (0..runs)
        .into_par_iter()
        .map(|r| {
            let seed = key.run_seed(Phase::Test, 0, r as u64);
            run_trace(seq, &spec, Phase::Test, seed)
                .and_then(|t| t.metrics())
                .map_err(|e| ForecastError::Run {
                    run: r,
                    source: Box::new(e),
                })
        })
        .collect::<Result<_>>()?;
    aggregate_runs(&metrics)
}
