//! Online training of single-hidden-layer recurrent networks for forecasting
//! respiratory marker trajectories, together with batch baselines, error
//! metrics and a grid-search experiment harness.

pub mod baselines;
pub mod data;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod rnn;
pub mod trainers;

pub use error::{ForecastError, Result};
