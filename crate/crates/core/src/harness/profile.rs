use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::runner::{offline_model, online_model};
use super::{Algorithm, FixedParams, HyperParams, SamplingRate, SvrHyper};
use crate::data::COORDS_PER_MARKER;
use crate::error::{ForecastError, Result};

const WARMUP_STEPS: usize = 20;
/// Distinct random windows cycled through while timing.
const POOL: usize = 64;
/// Training windows for offline models before their predictions are timed.
const OFFLINE_FIT: usize = 200;

/// Median wall time of one predict-and-learn step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileCell {
    pub algorithm: Algorithm,
    pub rate: SamplingRate,
    /// Hidden units, `None` for models without a recurrent layer.
    pub hidden: Option<usize>,
    pub shl_s: f64,
    pub input_len: usize,
    pub steps: usize,
    pub median_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSpec {
    pub algorithm: Algorithm,
    pub hidden: Vec<usize>,
    pub shls: Vec<f64>,
    pub rate: SamplingRate,
    pub steps: usize,
    pub n_markers: usize,
    pub seed: u64,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Times every (hidden size, history length) combination on random data,
/// one cell after another. Zero steps yields no cells.
pub fn time_profile(spec: &ProfileSpec) -> Result<Vec<ProfileCell>> {
    if spec.steps == 0 {
        return Ok(Vec::new());
    }
    if spec.n_markers == 0 {
        return Err(ForecastError::InvalidArgument("profiling needs at least one marker".into()));
    }
    let algo = spec.algorithm;
    let recurrent = algo.is_stochastic();
    let hidden: Vec<Option<usize>> = if recurrent {
        spec.hidden.iter().copied().map(Some).collect()
    } else {
        vec![None]
    };
    let output = COORDS_PER_MARKER * spec.n_markers;
    let fixed = FixedParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut cells = Vec::new();
    for &q in &hidden {
        for &shl_s in &spec.shls {
            let shl = spec.rate.shl_steps(shl_s);
            let input = output * shl + 1;
            let mut window = || -> Vec<f64> {
                let mut v: Vec<f64> = (0..input).map(|_| rng.random_range(-1.0..1.0)).collect();
                v[input - 1] = 1.0;
                v
            };
            let inputs: Vec<Vec<f64>> = (0..POOL.max(OFFLINE_FIT)).map(|_| window()).collect();
            let targets: Vec<Vec<f64>> = inputs.iter().map(|u| u[..output].to_vec()).collect();
            let params = HyperParams {
                eta: Some(1e-3),
                hidden: q,
                svr: (algo == Algorithm::Svr).then_some(SvrHyper {
                    scaled_width: 10.0,
                    epsilon: 0.01,
                    c: 10.0,
                }),
                ..HyperParams::with_shl(shl_s)
            };
            let mut model = if algo.is_offline() {
                offline_model(algo, &params, &inputs[..OFFLINE_FIT], &targets[..OFFLINE_FIT])?
            } else {
                online_model(algo, &params, &fixed, input, output, spec.seed)?
            };
            let mut times = Vec::with_capacity(spec.steps);
            for k in 0..WARMUP_STEPS + spec.steps {
                let (u, t) = (&inputs[k % POOL], &targets[(k + 1) % POOL]);
                let start = Instant::now();
                std::hint::black_box(model.step(u, t)?);
                if k >= WARMUP_STEPS {
                    times.push(start.elapsed().as_secs_f64() * 1e3);
                }
            }
            cells.push(ProfileCell {
                algorithm: algo,
                rate: spec.rate,
                hidden: q,
                shl_s,
                input_len: input,
                steps: spec.steps,
                median_ms: median(times),
            });
        }
    }
    Ok(cells)
}

/// Writes `profile.csv` with every cell and `profile_table.csv` with one row
/// per algorithm and one column per sampling rate, holding the mean of the
/// cell medians in milliseconds.
pub fn write_profile(cells: &[ProfileCell], dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    let path = dir.join("profile.csv");
    let file = std::fs::File::create(&path).map_err(|e| ForecastError::io(&path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    w.write_record(["algorithm", "rate_hz", "hidden", "shl_s", "input_len", "steps", "median_ms"])?;
    for c in cells {
        w.write_record([
            c.algorithm.to_string(),
            c.rate.label().to_string(),
            c.hidden.map(|q| q.to_string()).unwrap_or_default(),
            c.shl_s.to_string(),
            c.input_len.to_string(),
            c.steps.to_string(),
            c.median_ms.to_string(),
        ])?;
    }
    w.flush().map_err(|e| ForecastError::io(&path, e))?;

    let mut algos: Vec<Algorithm> = cells.iter().map(|c| c.algorithm).collect();
    algos.dedup();
    let mut rates: Vec<SamplingRate> = cells.iter().map(|c| c.rate).collect();
    rates.sort();
    rates.dedup();
    let path = dir.join("profile_table.csv");
    let file = std::fs::File::create(&path).map_err(|e| ForecastError::io(&path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let mut header = vec!["algorithm".to_string()];
    header.extend(rates.iter().map(|r| format!("{r}Hz")));
    w.write_record(&header)?;
    let mut seen = Vec::new();
    for algo in algos {
        if seen.contains(&algo) {
            continue;
        }
        seen.push(algo);
        let mut record = vec![algo.to_string()];
        for &rate in &rates {
            let times: Vec<f64> = cells
                .iter()
                .filter(|c| c.algorithm == algo && c.rate == rate)
                .map(|c| c.median_ms)
                .collect();
            record.push(if times.is_empty() {
                String::new()
            } else {
                (times.iter().sum::<f64>() / times.len() as f64).to_string()
            });
        }
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| ForecastError::io(&path, e))
}
