//! Hyperparameter search, evaluation and sweeps over sequences, sampling
//! rates, horizons and algorithms.

mod algorithm;
mod config;
mod grid;
mod profile;
mod runner;
mod seed;
mod sweep;

pub use algorithm::Algorithm;
pub use config::{ExperimentConfig, FixedOverrides, SequenceConfig};
pub use grid::{FixedParams, GridSpec, HyperParams, Preset, SamplingRate, SvrHyper};
pub use profile::{time_profile, write_profile, ProfileCell, ProfileSpec};
pub use runner::{cross_validate, evaluate, run_trace, CellKey, CvOutcome, Phase, RunSpec, RunTrace};
pub use seed::derive_seed;
pub use sweep::{
    marginals, noise_seed, read_results, sweep, write_long_table, write_results, write_summary, MarginalRow, ResultRow,
    SequenceEntry, SweepSpec, RESULT_COLUMNS,
};
