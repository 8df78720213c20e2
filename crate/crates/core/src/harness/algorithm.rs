use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::PartitionKind;
use crate::error::ForecastError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Algorithm {
    Rtrl,
    Uoro,
    Snap1,
    Dni,
    DniSimplified,
    Frozen,
    Lms,
    LinearRegression,
    Svr,
    NoPrediction,
}

impl Algorithm {
    pub const ALL: [Algorithm; 10] = [
        Algorithm::Rtrl,
        Algorithm::Uoro,
        Algorithm::Snap1,
        Algorithm::Dni,
        Algorithm::DniSimplified,
        Algorithm::Frozen,
        Algorithm::Lms,
        Algorithm::LinearRegression,
        Algorithm::Svr,
        Algorithm::NoPrediction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Rtrl => "rtrl",
            Algorithm::Uoro => "uoro",
            Algorithm::Snap1 => "snap1",
            Algorithm::Dni => "dni",
            Algorithm::DniSimplified => "dni-simplified",
            Algorithm::Frozen => "frozen",
            Algorithm::Lms => "lms",
            Algorithm::LinearRegression => "linreg",
            Algorithm::Svr => "svr",
            Algorithm::NoPrediction => "no-prediction",
        }
    }

    /// Recurrent networks with random initialization; results are averaged over runs.
    pub fn is_stochastic(self) -> bool {
        matches!(
            self,
            Algorithm::Rtrl
                | Algorithm::Uoro
                | Algorithm::Snap1
                | Algorithm::Dni
                | Algorithm::DniSimplified
                | Algorithm::Frozen
        )
    }

    /// Fitted once on the longer training interval, never updated afterwards.
    pub fn is_offline(self) -> bool {
        matches!(self, Algorithm::LinearRegression | Algorithm::Svr)
    }

    pub fn partition_kind(self) -> PartitionKind {
        if self.is_offline() {
            PartitionKind::Offline
        } else {
            PartitionKind::Online
        }
    }

    /// Stable small integer used when deriving seeds.
    pub(crate) fn code(self) -> u64 {
        Self::ALL.iter().position(|&a| a == self).unwrap_or(0) as u64
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = ForecastError;

    fn from_str(s: &str) -> Result<Self, ForecastError> {
        let key: String = s
            .trim()
            .to_ascii_lowercase()
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect();
        let algo = match key.as_str() {
            "rtrl" => Algorithm::Rtrl,
            "uoro" => Algorithm::Uoro,
            "snap1" | "snap" => Algorithm::Snap1,
            "dni" => Algorithm::Dni,
            "dnisimplified" | "dnisimple" => Algorithm::DniSimplified,
            "frozen" | "frozenrnn" => Algorithm::Frozen,
            "lms" => Algorithm::Lms,
            "linreg" | "linearregression" => Algorithm::LinearRegression,
            "svr" | "kernelsvr" => Algorithm::Svr,
            "noprediction" | "none" => Algorithm::NoPrediction,
            _ => {
                return Err(ForecastError::InvalidArgument(format!(
                    "unknown algorithm {s:?} (expected one of {})",
                    Self::ALL.map(Algorithm::name).join(", ")
                )))
            }
        };
        Ok(algo)
    }
}

impl TryFrom<String> for Algorithm {
    type Error = ForecastError;

    fn try_from(s: String) -> Result<Self, ForecastError> {
        s.parse()
    }
}

impl From<Algorithm> for String {
    fn from(a: Algorithm) -> String {
        a.name().to_string()
    }
}
