use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use respcast::data::{load_sequence, save_sequence, Regularity, ResampleMetadata, DEFAULT_NOISE_GAMMA};
use respcast::harness::{
    cross_validate, evaluate, noise_seed, sweep, time_profile, write_long_table, write_profile,
    write_results, write_summary, Algorithm, CellKey, ExperimentConfig, HyperParams, Preset,
    ProfileSpec, ResultRow, SamplingRate, SequenceConfig, SvrHyper, SweepSpec, read_results,
};

/// Respiratory motion forecasting with online recurrent learners and
/// offline baselines.
#[derive(Debug, Parser)]
#[command(name = "respcast", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Experiment description in TOML.
    #[arg(long, global = true, env = "RESPCAST_CONFIG")]
    config: Option<PathBuf>,
    /// Master seed every random stream is derived from.
    #[arg(long, global = true, env = "RESPCAST_SEED")]
    seed: Option<u64>,
    /// Hyperparameter grids and run counts: paper or desk.
    #[arg(long, global = true, env = "RESPCAST_PRESET")]
    preset: Option<Preset>,
    /// Comma-separated algorithm names.
    #[arg(long, global = true, env = "RESPCAST_ALGOS", value_delimiter = ',')]
    algos: Option<Vec<Algorithm>>,
    /// Comma-separated sampling rates in Hz (3.33, 10, 30).
    #[arg(long, global = true, env = "RESPCAST_FREQS", value_delimiter = ',')]
    freqs: Option<Vec<SamplingRate>>,
    /// Comma-separated horizons in seconds.
    #[arg(long, global = true, env = "RESPCAST_HORIZONS", value_delimiter = ',')]
    horizons: Option<Vec<f64>>,
    /// Output directory.
    #[arg(long, global = true, env = "RESPCAST_OUT")]
    out: Option<PathBuf>,
    /// Worker threads (default: logical cores).
    #[arg(long, global = true, env = "RESPCAST_WORKERS")]
    workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Derive 3.33, 10 and 30 Hz versions of 10 Hz recordings.
    Resample(ResampleArgs),
    /// Evaluate one algorithm on one sequence at one rate and horizon.
    RunOne(RunOneArgs),
    /// Grid search and evaluation over every configured cell.
    Sweep(CountArgs),
    /// Per-step timing over hidden sizes and history lengths.
    Profile(ProfileArgs),
    /// Long-format table of a results file, for plotting.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
struct ResampleArgs {
    /// 10 Hz marker files.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Noise level of interpolated samples, relative to each coordinate's range.
    #[arg(long, default_value_t = DEFAULT_NOISE_GAMMA)]
    gamma: f64,
    #[arg(long, default_value_t = 3)]
    markers: usize,
}

#[derive(Debug, Args)]
struct CountArgs {
    /// Runs per grid point during the search.
    #[arg(long)]
    n_cv: Option<usize>,
    /// Runs during evaluation.
    #[arg(long)]
    n_test: Option<usize>,
}

#[derive(Debug, Args)]
struct RunOneArgs {
    /// Marker file; alternatively name a sequence from the config.
    #[arg(long, conflicts_with = "name")]
    sequence: Option<PathBuf>,
    #[arg(long)]
    name: Option<String>,
    #[arg(long, default_value = "regular")]
    label: Regularity,
    #[arg(long, default_value_t = 3)]
    markers: usize,
    /// History length in seconds. Without it the preset grid is searched.
    #[arg(long)]
    shl: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    svr_width: Option<f64>,
    #[arg(long)]
    svr_epsilon: Option<f64>,
    #[arg(long)]
    svr_c: Option<f64>,
    #[command(flatten)]
    counts: CountArgs,
}

#[derive(Debug, Args)]
struct ProfileArgs {
    /// Comma-separated hidden sizes (default: the preset grid).
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    /// Comma-separated history lengths in seconds.
    #[arg(long, value_delimiter = ',', default_value = "1.2")]
    shl: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    #[arg(long, default_value_t = 3)]
    markers: usize,
}

#[derive(Debug, Args)]
struct ExportArgs {
    /// Results file written by `sweep` or `run-one`.
    #[arg(long)]
    results: Option<PathBuf>,
    /// Destination (default: <out>/export.csv).
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Why a command did not succeed.
enum Failure {
    /// Some cells failed; their results were still written.
    Cells(usize),
    /// Nothing useful was produced.
    Fatal(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Fatal(e)
    }
}

impl From<respcast::ForecastError> for Failure {
    fn from(e: respcast::ForecastError) -> Self {
        Failure::Fatal(e.into())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Cells(n)) => {
            eprintln!("error: {n} cell(s) failed");
            ExitCode::from(1)
        }
        Err(Failure::Fatal(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = merged_config(&cli.global)?;
    if let Some(n) = cfg.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("starting worker pool")?;
    }
    let out = cfg.resolve(&cfg.output_dir);
    std::fs::create_dir_all(&out)
        .with_context(|| format!("creating output directory {}", out.display()))?;
    match cli.command {
        Command::Resample(a) => resample(&cfg, &a, &out),
        Command::RunOne(a) => run_one(cfg, &a, &out),
        Command::Sweep(a) => run_sweep(cfg, &a, &out),
        Command::Profile(a) => profile(&cfg, &a, &out),
        Command::Export(a) => export(&a, &out),
    }
}

/// Config file (if any) with command-line flags taking precedence.
fn merged_config(g: &GlobalArgs) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &g.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(p) = g.preset {
        cfg.preset = p;
    }
    if let Some(a) = &g.algos {
        cfg.algorithms = a.clone();
    }
    if let Some(f) = &g.freqs {
        cfg.rates = f.clone();
    }
    if let Some(h) = &g.horizons {
        cfg.horizons = Some(h.clone());
    }
    if let Some(o) = &g.out {
        cfg.output_dir = if o.is_absolute() {
            o.clone()
        } else {
            std::env::current_dir()?.join(o)
        };
    }
    if g.workers == Some(0) {
        bail!("--workers must be at least 1");
    }
    if g.workers.is_some() {
        cfg.workers = g.workers;
    }
    Ok(cfg)
}

fn apply_counts(cfg: &mut ExperimentConfig, c: &CountArgs) {
    if c.n_cv.is_some() {
        cfg.fixed.n_cv = c.n_cv;
    }
    if c.n_test.is_some() {
        cfg.fixed.n_test = c.n_test;
    }
}

fn resample(cfg: &ExperimentConfig, a: &ResampleArgs, out: &Path) -> Result<(), Failure> {
    if !(a.gamma >= 0.0 && a.gamma.is_finite()) {
        return Err(anyhow::anyhow!("--gamma must be non-negative, got {}", a.gamma).into());
    }
    for (i, input) in a.inputs.iter().enumerate() {
        let base = load_sequence(input, a.markers)?;
        let stem = input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| format!("sequence{i}"));
        let seed = noise_seed(cfg.seed, i);
        for &rate in &cfg.rates {
            let seq = rate.resample(&base, a.gamma, seed)?;
            let path = out.join(format!("{stem}_{}hz.csv", rate.label()));
            save_sequence(&seq, &path)?;
            let (gamma, seed) = if rate == SamplingRate::Hz30 { (a.gamma, seed) } else { (0.0, 0) };
            ResampleMetadata {
                source_rate_hz: base.sample_rate_hz(),
                target_rate_hz: rate.hz(),
                gamma,
                seed,
            }
            .write_sidecar(&path)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn explicit_params(a: &RunOneArgs) -> Option<HyperParams> {
    let shl_s = a.shl?;
    let svr = match (a.svr_width, a.svr_epsilon, a.svr_c) {
        (None, None, None) => None,
        (w, e, c) => Some(SvrHyper {
            scaled_width: w.unwrap_or(f64::NAN),
            epsilon: e.unwrap_or(f64::NAN),
            c: c.unwrap_or(f64::NAN),
        }),
    };
    Some(HyperParams {
        shl_s,
        eta: a.eta,
        hidden: a.hidden,
        svr,
    })
}

fn run_one(mut cfg: ExperimentConfig, a: &RunOneArgs, out: &Path) -> Result<(), Failure> {
    apply_counts(&mut cfg, &a.counts);
    let [algo] = cfg.algorithms[..] else {
        return Err(anyhow::anyhow!("run-one needs exactly one algorithm (--algos)").into());
    };
    let [rate] = cfg.rates[..] else {
        return Err(anyhow::anyhow!("run-one needs exactly one sampling rate (--freqs)").into());
    };
    let horizon_s = match cfg.horizons.as_deref() {
        Some([h]) => *h,
        _ => return Err(anyhow::anyhow!("run-one needs exactly one horizon (--horizons)").into()),
    };
    let steps = rate.steps(horizon_s)?;
    let seq_cfg = match (&a.sequence, &a.name) {
        (Some(p), _) => SequenceConfig {
            name: p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
            path: std::env::current_dir().context("current directory")?.join(p),
            label: a.label,
        },
        (None, Some(n)) => cfg
            .sequences
            .iter()
            .find(|s| &s.name == n)
            .cloned()
            .with_context(|| format!("no sequence named {n:?} in the config"))?,
        (None, None) => {
            return Err(anyhow::anyhow!("run-one needs --sequence or --name").into());
        }
    };
    cfg.sequences = vec![seq_cfg];
    cfg.n_markers = a.markers;
    let params = explicit_params(a);
    let mut problems = Vec::new();
    if let Some(p) = &params {
        if let Err(e) = p.validate(algo) {
            problems.push(e.to_string());
        }
    }
    if let Err(e) = cfg.validate() {
        problems.push(e.to_string());
    }
    if !problems.is_empty() {
        return Err(anyhow::anyhow!(problems.join("; ")).into());
    }
    let spec = cfg.to_sweep_spec()?;
    let entry = &spec.sequences[0];
    let seq = rate.resample(&entry.base, spec.noise_gamma, noise_seed(spec.master_seed, 0))?;
    let key = CellKey::new(spec.master_seed, algo, rate, steps);

    let mut row = ResultRow {
        sequence: entry.name.clone(),
        label: entry.label,
        rate_hz: rate.label().to_string(),
        horizon_s,
        horizon_steps: steps,
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
    };
    let chosen = match params {
        Some(p) => Ok(p),
        None => cross_validate(&seq, &spec.grid(algo, rate), &spec.fixed, rate, key).map(|cv| {
            row.cv_rmse = Some(cv.best_rmse);
            cv.best
        }),
    };
    let outcome = chosen.and_then(|p| {
        row.params = p.to_string();
        evaluate(&seq, algo, &p, &spec.fixed, rate, key)
    });
    let failed = match outcome {
        Ok(r) => {
            row.n_runs = Some(r.n_runs);
            let est = r.estimates();
            (row.mae, row.mae_ci) = (Some(est[0].mean), Some(est[0].ci95));
            (row.rmse, row.rmse_ci) = (Some(est[1].mean), Some(est[1].ci95));
            (row.nrmse, row.nrmse_ci) = (Some(est[2].mean), Some(est[2].ci95));
            (row.max_error, row.max_error_ci) = (Some(est[3].mean), Some(est[3].ci95));
            (row.jitter, row.jitter_ci) = (Some(est[4].mean), Some(est[4].ci95));
            false
        }
        Err(e) => {
            row.error = e.to_string();
            true
        }
    };
    print_row(&row);
    let path = out.join("run_one.csv");
    write_results(std::slice::from_ref(&row), &path)?;
    println!("{}", path.display());
    if failed {
        eprintln!("{}: {}", row.sequence, row.error);
        return Err(Failure::Cells(1));
    }
    Ok(())
}

fn print_row(row: &ResultRow) {
    println!(
        "{} @ {} Hz, h = {} s, {} [{}]",
        row.sequence, row.rate_hz, row.horizon_s, row.algorithm, row.params
    );
    if let (Some(m), Some(ci)) = (row.metrics(), row.intervals()) {
        println!("{:<10} {:>14} {:>12}", "metric", "mean", "ci95");
        for ((name, v), c) in respcast::metrics::RunMetrics::NAMES
            .iter()
            .zip(m.values())
            .zip(ci.values())
        {
            println!("{name:<10} {v:>14.6} {c:>12.6}");
        }
    }
}

fn run_sweep(mut cfg: ExperimentConfig, a: &CountArgs, out: &Path) -> Result<(), Failure> {
    apply_counts(&mut cfg, a);
    let spec: SweepSpec = cfg.to_sweep_spec()?;
    let rows = sweep(&spec)?;
    write_results(&rows, out.join("results.csv"))?;
    write_summary(&rows, out)?;
    let failures: Vec<&ResultRow> = rows.iter().filter(|r| !r.is_ok()).collect();
    println!("{} cells, {} failed", rows.len(), failures.len());
    for r in &failures {
        eprintln!(
            "failed: {} {} Hz h={} s {}: {}",
            r.sequence, r.rate_hz, r.horizon_s, r.algorithm, r.error
        );
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Cells(failures.len()))
    }
}

fn profile(cfg: &ExperimentConfig, a: &ProfileArgs, out: &Path) -> Result<(), Failure> {
    let mut cells = Vec::new();
    for &algo in &cfg.algorithms {
        for &rate in &cfg.rates {
            let hidden = a
                .hidden
                .clone()
                .unwrap_or_else(|| cfg.preset.grid(algo, rate).hidden);
            let spec = ProfileSpec {
                algorithm: algo,
                hidden,
                shls: a.shl.clone(),
                rate,
                steps: a.steps,
                n_markers: a.markers,
                seed: cfg.seed,
            };
            cells.extend(time_profile(&spec)?);
        }
    }
    write_profile(&cells, out)?;
    println!("{} timing cells written to {}", cells.len(), out.display());
    Ok(())
}

fn export(a: &ExportArgs, out: &Path) -> Result<(), Failure> {
    let input = a.results.clone().unwrap_or_else(|| out.join("results.csv"));
    let rows = read_results(&input)?;
    let dest = a.output.clone().unwrap_or_else(|| out.join("export.csv"));
    write_long_table(&rows, &dest)?;
    println!("{}", dest.display());
    Ok(())
}
