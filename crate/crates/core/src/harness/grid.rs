use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Algorithm;
use crate::data::{downsample, upsample_with_noise, MarkerSequence};
use crate::error::{ForecastError, Result};
use crate::trainers::{DEFAULT_CLIP, DEFAULT_COEFFICIENT_RATE};

/// The three input sampling rates studied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub enum SamplingRate {
    Hz3,
    Hz10,
    Hz30,
}

impl SamplingRate {
    pub const ALL: [SamplingRate; 3] = [SamplingRate::Hz3, SamplingRate::Hz10, SamplingRate::Hz30];

    pub fn hz(self) -> f64 {
        match self {
            SamplingRate::Hz3 => 10.0 / 3.0,
            SamplingRate::Hz10 => 10.0,
            SamplingRate::Hz30 => 30.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SamplingRate::Hz3 => "3.33",
            SamplingRate::Hz10 => "10",
            SamplingRate::Hz30 => "30",
        }
    }

    pub fn from_hz(hz: f64) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|r| (r.hz() - hz).abs() < 0.01 * r.hz())
            .ok_or_else(|| {
                ForecastError::InvalidArgument(format!(
                    "unsupported sampling rate {hz} Hz (expected 3.33, 10 or 30)"
                ))
            })
    }

    /// Horizons studied at this rate, in seconds.
    pub fn default_horizons(self) -> Vec<f64> {
        let (step, first) = match self {
            SamplingRate::Hz3 => (3, 3),
            SamplingRate::Hz10 | SamplingRate::Hz30 => (1, 1),
        };
        (first..=21).step_by(step).map(|k| k as f64 / 10.0).collect()
    }

    /// `seconds · f` as a whole number of samples; errors when it is not one.
    pub fn steps(self, seconds: f64) -> Result<usize> {
        let exact = seconds * self.hz();
        let steps = exact.round();
        if steps < 1.0 || (exact - steps).abs() > 1e-6 {
            return Err(ForecastError::InvalidArgument(format!(
                "{seconds} s is not a positive whole number of samples at {} Hz",
                self.label()
            )));
        }
        Ok(steps as usize)
    }

    /// History length in samples, rounded to the nearest step.
    pub fn shl_steps(self, seconds: f64) -> usize {
        ((seconds * self.hz()).round() as usize).max(1)
    }

    /// Derives this rate's sequence from a 10 Hz record.
    pub fn resample(self, base: &MarkerSequence, gamma: f64, seed: u64) -> Result<MarkerSequence> {
        if SamplingRate::from_hz(base.sample_rate_hz())? != SamplingRate::Hz10 {
            return Err(ForecastError::InvalidArgument(format!(
                "resampling starts from a 10 Hz record, got {} Hz",
                base.sample_rate_hz()
            )));
        }
        match self {
            SamplingRate::Hz3 => downsample(base, 3),
            SamplingRate::Hz10 => Ok(base.clone()),
            SamplingRate::Hz30 => upsample_with_noise(base, 30.0, gamma, seed),
        }
    }

    pub(crate) fn code(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for SamplingRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SamplingRate {
    type Err = ForecastError;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().trim_end_matches("Hz").trim_end_matches("hz").trim();
        let hz: f64 = t
            .parse()
            .map_err(|_| ForecastError::InvalidArgument(format!("bad sampling rate {s:?}")))?;
        Self::from_hz(hz)
    }
}

impl TryFrom<f64> for SamplingRate {
    type Error = ForecastError;

    fn try_from(hz: f64) -> Result<Self> {
        Self::from_hz(hz)
    }
}

impl From<SamplingRate> for f64 {
    fn from(r: SamplingRate) -> f64 {
        r.hz()
    }
}

/// Kernel regression settings as searched: `scaled_width` is `√2 σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrHyper {
    pub scaled_width: f64,
    pub epsilon: f64,
    pub c: f64,
}

impl SvrHyper {
    pub fn sigma(&self) -> f64 {
        self.scaled_width / std::f64::consts::SQRT_2
    }
}

/// One grid point. Fields an algorithm does not use are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub shl_s: f64,
    pub eta: Option<f64>,
    pub hidden: Option<usize>,
    pub svr: Option<SvrHyper>,
}

impl HyperParams {
    pub fn with_shl(shl_s: f64) -> Self {
        Self {
            shl_s,
            eta: None,
            hidden: None,
            svr: None,
        }
    }

    /// Checks that `algo` finds every parameter it needs.
    pub fn validate(&self, algo: Algorithm) -> Result<()> {
        let mut missing = Vec::new();
        if !(self.shl_s > 0.0 && self.shl_s.is_finite()) {
            missing.push("positive history length");
        }
        let needs_eta = algo.is_stochastic() || algo == Algorithm::Lms;
        if needs_eta && !self.eta.is_some_and(|e| e > 0.0 && e.is_finite()) {
            missing.push("positive learning rate");
        }
        if algo.is_stochastic() && !self.hidden.is_some_and(|q| q > 0) {
            missing.push("positive hidden size");
        }
        if algo == Algorithm::Svr {
            match self.svr {
                Some(s) if s.scaled_width > 0.0 && s.epsilon > 0.0 && s.c > 0.0 => {}
                _ => missing.push("positive SVR width, epsilon and C"),
            }
        }
        if missing.is_empty() {
            Ok(())
        } else {
            Err(ForecastError::InvalidArgument(format!(
                "{algo} needs: {}",
                missing.join(", ")
            )))
        }
    }
}

impl fmt::Display for HyperParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if let Some(eta) = self.eta {
            parts.push(format!("eta={eta}"));
        }
        parts.push(format!("shl={}", self.shl_s));
        if let Some(q) = self.hidden {
            parts.push(format!("q={q}"));
        }
        if let Some(s) = self.svr {
            parts.push(format!("width={} eps={} C={}", s.scaled_width, s.epsilon, s.c));
        }
        f.write_str(&parts.join(" "))
    }
}

/// Settings held constant across the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedParams {
    pub tau: f64,
    pub sigma_init: f64,
    pub coefficient_rate: f64,
    pub n_cv: usize,
    pub n_test: usize,
}

impl Default for FixedParams {
    fn default() -> Self {
        Preset::Paper.fixed()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Full published grids and run counts.
    Paper,
    /// Reduced grids and run counts for quick checks.
    Desk,
}

impl FromStr for Preset {
    type Err = ForecastError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "paper" => Ok(Preset::Paper),
            "desk" => Ok(Preset::Desk),
            other => Err(ForecastError::InvalidArgument(format!(
                "unknown preset {other:?} (expected paper or desk)"
            ))),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Paper => "paper",
            Preset::Desk => "desk",
        })
    }
}

fn lms_rates(rate: SamplingRate) -> Vec<f64> {
    match rate {
        SamplingRate::Hz3 => vec![0.0002, 0.0005, 0.001],
        SamplingRate::Hz10 => vec![0.0001, 0.0002, 0.0005],
        SamplingRate::Hz30 => vec![0.00005, 0.0001, 0.0002],
    }
}

impl Preset {
    pub fn fixed(self) -> FixedParams {
        let (n_cv, n_test) = match self {
            Preset::Paper => (50, 300),
            Preset::Desk => (5, 10),
        };
        FixedParams {
            tau: DEFAULT_CLIP,
            sigma_init: 0.02,
            coefficient_rate: DEFAULT_COEFFICIENT_RATE,
            n_cv,
            n_test,
        }
    }

    pub fn grid(self, algo: Algorithm, rate: SamplingRate) -> GridSpec {
        let paper = self == Preset::Paper;
        let shls: Vec<f64> = if paper {
            (1..=5).map(|k| k as f64 * 1.2).collect()
        } else {
            vec![1.2, 2.4]
        };
        let etas = if paper {
            vec![0.005, 0.01, 0.02]
        } else {
            vec![0.01, 0.02]
        };
        let hidden: Vec<usize> = if paper {
            (1..=6).map(|k| 30 * k).collect()
        } else {
            vec![30, 60]
        };
        let mut g = GridSpec::empty(algo, shls);
        match algo {
            Algorithm::Rtrl => {
                g.etas = etas;
                g.hidden = if paper { vec![10, 25, 40] } else { vec![10, 25] };
            }
            Algorithm::Uoro
            | Algorithm::Snap1
            | Algorithm::Dni
            | Algorithm::DniSimplified
            | Algorithm::Frozen => {
                g.etas = etas;
                g.hidden = hidden;
            }
            Algorithm::Lms => {
                let all = lms_rates(rate);
                g.etas = if paper { all } else { all[1..].to_vec() };
            }
            Algorithm::Svr => {
                if paper {
                    g.svr_widths = vec![100.0, 200.0, 500.0, 1000.0];
                    g.svr_epsilons = vec![0.005, 0.01, 0.02, 0.05];
                    g.svr_cs = vec![100.0, 200.0, 500.0, 1000.0];
                } else {
                    g.svr_widths = vec![100.0, 1000.0];
                    g.svr_epsilons = vec![0.01, 0.05];
                    g.svr_cs = vec![100.0, 1000.0];
                }
            }
            Algorithm::LinearRegression => {}
            Algorithm::NoPrediction => g.shls = vec![1.2],
        }
        g
    }
}

/// Cartesian grid of hyperparameters for one algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub algorithm: Algorithm,
    pub shls: Vec<f64>,
    #[serde(default)]
    pub etas: Vec<f64>,
    #[serde(default)]
    pub hidden: Vec<usize>,
    #[serde(default)]
    pub svr_widths: Vec<f64>,
    #[serde(default)]
    pub svr_epsilons: Vec<f64>,
    #[serde(default)]
    pub svr_cs: Vec<f64>,
}

impl GridSpec {
    pub fn empty(algorithm: Algorithm, shls: Vec<f64>) -> Self {
        Self {
            algorithm,
            shls,
            etas: Vec::new(),
            hidden: Vec::new(),
            svr_widths: Vec::new(),
            svr_epsilons: Vec::new(),
            svr_cs: Vec::new(),
        }
    }

    /// A grid containing exactly `params`.
    pub fn single(algorithm: Algorithm, params: HyperParams) -> Self {
        let mut g = Self::empty(algorithm, vec![params.shl_s]);
        g.etas = params.eta.into_iter().collect();
        g.hidden = params.hidden.into_iter().collect();
        if let Some(s) = params.svr {
            g.svr_widths = vec![s.scaled_width];
            g.svr_epsilons = vec![s.epsilon];
            g.svr_cs = vec![s.c];
        }
        g
    }

    /// Grid points in lexicographic order of (η, history, hidden size, SVR
    /// width, ε, C), each axis ascending. The first of several equally good
    /// points in this order wins a tie.
    pub fn points(&self) -> Vec<HyperParams> {
        fn axis<T: Copy + PartialOrd>(v: &[T]) -> Vec<Option<T>> {
            let mut v = v.to_vec();
            v.sort_by(|a, b| a.partial_cmp(b).expect("grid values are comparable"));
            v.dedup_by(|a, b| a == b);
            if v.is_empty() {
                vec![None]
            } else {
                v.into_iter().map(Some).collect()
            }
        }
        let svr: Vec<Option<SvrHyper>> = if self.algorithm == Algorithm::Svr {
            let mut out = Vec::new();
            for w in axis(&self.svr_widths).into_iter().flatten() {
                for e in axis(&self.svr_epsilons).into_iter().flatten() {
                    for c in axis(&self.svr_cs).into_iter().flatten() {
                        out.push(Some(SvrHyper { scaled_width: w, epsilon: e, c }));
                    }
                }
            }
            out
        } else {
            vec![None]
        };
        let mut points = Vec::new();
        for eta in axis(&self.etas) {
            for shl in axis(&self.shls).into_iter().flatten() {
                for hidden in axis(&self.hidden) {
                    for s in &svr {
                        points.push(HyperParams {
                            shl_s: shl,
                            eta,
                            hidden,
                            svr: *s,
                        });
                    }
                }
            }
        }
        points
    }

    pub fn len(&self) -> usize {
        self.points().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_grid_sizes() {
        for a in [Algorithm::Uoro, Algorithm::Snap1, Algorithm::Dni] {
            assert_eq!(Preset::Paper.grid(a, SamplingRate::Hz10).len(), 90);
        }
        assert_eq!(Preset::Paper.grid(Algorithm::Rtrl, SamplingRate::Hz10).len(), 45);
        assert_eq!(Preset::Paper.grid(Algorithm::Lms, SamplingRate::Hz30).len(), 15);
        assert_eq!(Preset::Paper.grid(Algorithm::LinearRegression, SamplingRate::Hz3).len(), 5);
        assert_eq!(Preset::Paper.grid(Algorithm::Svr, SamplingRate::Hz3).len(), 5 * 64);
        assert_eq!(Preset::Paper.grid(Algorithm::NoPrediction, SamplingRate::Hz3).len(), 1);
    }

    #[test]
    fn paper_values() {
        let g = Preset::Paper.grid(Algorithm::Snap1, SamplingRate::Hz10);
        assert_eq!(g.etas, vec![0.005, 0.01, 0.02]);
        assert_eq!(g.hidden, vec![30, 60, 90, 120, 150, 180]);
        let shls: Vec<usize> = g.shls.iter().map(|&s| SamplingRate::Hz10.shl_steps(s)).collect();
        assert_eq!(shls, vec![12, 24, 36, 48, 60]);
        assert_eq!(SamplingRate::Hz30.shl_steps(2.4), 72);
        assert_eq!(SamplingRate::Hz3.shl_steps(1.2), 4);
        let lms = Preset::Paper.grid(Algorithm::Lms, SamplingRate::Hz10);
        assert_eq!(lms.etas, vec![0.0001, 0.0002, 0.0005]);
        let fixed = Preset::Paper.fixed();
        assert_eq!((fixed.n_cv, fixed.n_test, fixed.tau, fixed.sigma_init), (50, 300, 100.0, 0.02));
    }

    #[test]
    fn points_are_lexicographic() {
        let g = Preset::Desk.grid(Algorithm::Uoro, SamplingRate::Hz10);
        let p = g.points();
        assert_eq!(p.len(), 8);
        assert_eq!((p[0].eta, p[0].shl_s, p[0].hidden), (Some(0.01), 1.2, Some(30)));
        assert_eq!((p[1].eta, p[1].shl_s, p[1].hidden), (Some(0.01), 1.2, Some(60)));
        assert_eq!((p[2].eta, p[2].shl_s, p[2].hidden), (Some(0.01), 2.4, Some(30)));
        assert_eq!(p[4].eta, Some(0.02));
        for q in &p {
            q.validate(Algorithm::Uoro).unwrap();
        }
    }

    #[test]
    fn horizons_are_whole_steps() {
        assert_eq!(SamplingRate::Hz3.default_horizons().len(), 7);
        assert_eq!(SamplingRate::Hz10.default_horizons().len(), 21);
        for r in SamplingRate::ALL {
            for h in r.default_horizons() {
                r.steps(h).unwrap();
            }
        }
        assert_eq!(SamplingRate::Hz3.steps(0.3).unwrap(), 1);
        assert_eq!(SamplingRate::Hz30.steps(0.3).unwrap(), 9);
        assert!(SamplingRate::Hz3.steps(0.1).is_err());
    }

    #[test]
    fn rate_parsing() {
        assert_eq!("3.33".parse::<SamplingRate>().unwrap(), SamplingRate::Hz3);
        assert_eq!("10Hz".parse::<SamplingRate>().unwrap(), SamplingRate::Hz10);
        assert!("20".parse::<SamplingRate>().is_err());
    }

    #[test]
    fn single_grid_round_trip() {
        let p = HyperParams { shl_s: 2.4, eta: Some(0.01), hidden: Some(60), svr: None };
        assert_eq!(GridSpec::single(Algorithm::Snap1, p).points(), vec![p]);
        assert!(HyperParams::with_shl(1.2).validate(Algorithm::Snap1).is_err());
        HyperParams::with_shl(1.2).validate(Algorithm::LinearRegression).unwrap();
    }
}
