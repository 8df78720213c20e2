use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Algorithm, FixedParams, GridSpec, Preset, SamplingRate, SequenceEntry, SweepSpec};
use crate::data::{load_sequence, Regularity, DEFAULT_MARKERS, DEFAULT_NOISE_GAMMA};
use crate::error::{ForecastError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceConfig {
    pub name: String,
    /// Relative paths are resolved against the config file's directory.
    pub path: PathBuf,
    #[serde(default)]
    pub label: Regularity,
}

/// Overrides of the preset's fixed settings.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedOverrides {
    pub tau: Option<f64>,
    pub sigma_init: Option<f64>,
    pub coefficient_rate: Option<f64>,
    pub n_cv: Option<usize>,
    pub n_test: Option<usize>,
}

fn default_rates() -> Vec<SamplingRate> {
    SamplingRate::ALL.to_vec()
}

fn default_gamma() -> f64 {
    DEFAULT_NOISE_GAMMA
}

fn default_markers() -> usize {
    DEFAULT_MARKERS
}

fn default_out() -> PathBuf {
    PathBuf::from("results")
}

/// Experiment description read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_preset")]
    pub preset: Preset,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "default_rates")]
    pub rates: Vec<SamplingRate>,
    #[serde(default)]
    pub horizons: Option<Vec<f64>>,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default = "default_gamma")]
    pub noise_gamma: f64,
    #[serde(default = "default_markers")]
    pub n_markers: usize,
    #[serde(default)]
    pub sequences: Vec<SequenceConfig>,
    #[serde(default)]
    pub fixed: FixedOverrides,
    #[serde(default)]
    pub grids: Vec<GridSpec>,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_preset() -> Preset {
    Preset::Desk
}

fn default_algorithms() -> Vec<Algorithm> {
    Algorithm::ALL.to_vec()
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        toml::from_str("").expect("every field has a default")
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| ForecastError::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ForecastError::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)
            .map_err(|e| ForecastError::Config(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn fixed_params(&self) -> FixedParams {
        let mut f = self.preset.fixed();
        let o = &self.fixed;
        f.tau = o.tau.unwrap_or(f.tau);
        f.sigma_init = o.sigma_init.unwrap_or(f.sigma_init);
        f.coefficient_rate = o.coefficient_rate.unwrap_or(f.coefficient_rate);
        f.n_cv = o.n_cv.unwrap_or(f.n_cv);
        f.n_test = o.n_test.unwrap_or(f.n_test);
        f
    }

    /// Lists every problem at once rather than stopping at the first.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.algorithms.is_empty() {
            problems.push("no algorithms selected".to_string());
        }
        if self.rates.is_empty() {
            problems.push("no sampling rates selected".to_string());
        }
        if self.sequences.is_empty() {
            problems.push("no sequences listed".to_string());
        }
        if let Some(hs) = &self.horizons {
            if hs.is_empty() {
                problems.push("horizon list is empty".to_string());
            }
            for h in hs.iter().filter(|h| !(**h > 0.0 && h.is_finite())) {
                problems.push(format!("horizon {h} s is not positive"));
            }
        }
        if self.workers == Some(0) {
            problems.push("workers must be at least 1".to_string());
        }
        if !(self.noise_gamma >= 0.0 && self.noise_gamma.is_finite()) {
            problems.push(format!("noise_gamma {} must be non-negative", self.noise_gamma));
        }
        if self.n_markers == 0 {
            problems.push("n_markers must be at least 1".to_string());
        }
        let f = self.fixed_params();
        if !(f.tau > 0.0) {
            problems.push(format!("tau {} must be positive", f.tau));
        }
        if !(f.sigma_init >= 0.0) {
            problems.push(format!("sigma_init {} must be non-negative", f.sigma_init));
        }
        if !(f.coefficient_rate >= 0.0) {
            problems.push(format!("coefficient_rate {} must be non-negative", f.coefficient_rate));
        }
        if f.n_cv == 0 || f.n_test == 0 {
            problems.push("n_cv and n_test must be at least 1".to_string());
        }
        let mut names = std::collections::HashSet::new();
        for s in &self.sequences {
            if !names.insert(&s.name) {
                problems.push(format!("duplicate sequence name {:?}", s.name));
            }
            let p = self.resolve(&s.path);
            if !p.is_file() {
                problems.push(format!("sequence {:?}: {} not found", s.name, p.display()));
            }
        }
        for g in &self.grids {
            if g.is_empty() {
                problems.push(format!("grid for {} is empty", g.algorithm));
            }
            if let Some(bad) = g.points().iter().find(|p| p.validate(g.algorithm).is_err()) {
                problems.push(format!("grid for {}: {}", g.algorithm, bad.validate(g.algorithm).unwrap_err()));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ForecastError::Config(problems.join("; ")))
        }
    }

    /// Validates, loads every sequence and assembles the sweep.
    pub fn to_sweep_spec(&self) -> Result<SweepSpec> {
        self.validate()?;
        let sequences = self
            .sequences
            .iter()
            .map(|s| {
                let base = load_sequence(self.resolve(&s.path), self.n_markers)?.with_label(s.label);
                Ok(SequenceEntry {
                    name: s.name.clone(),
                    label: s.label,
                    base,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SweepSpec {
            sequences,
            rates: self.rates.clone(),
            horizons: self.horizons.clone(),
            algorithms: self.algorithms.clone(),
            preset: self.preset,
            fixed: self.fixed_params(),
            grids: self.grids.clone(),
            master_seed: self.seed,
            noise_gamma: self.noise_gamma,
        })
    }
}
