use std::ops::Range;

use super::MarkerSequence;
use crate::error::{ForecastError, Result};

/// Which development split applies: online learners warm up on 30 s and are
/// validated on the next 30 s, offline models train on 54 s and validate on 6 s.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionKind {
    Online,
    Offline,
}

impl PartitionKind {
    /// End of the training interval, seconds from the start of the record.
    pub fn train_end_s(self) -> f64 {
        match self {
            PartitionKind::Online => 30.0,
            PartitionKind::Offline => 54.0,
        }
    }

    /// Start of the test interval.
    pub const TEST_START_S: f64 = 60.0;
}

/// Contiguous train / cross-validation / test index ranges covering a sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequencePartition {
    pub kind: PartitionKind,
    pub train: Range<usize>,
    pub cross_validation: Range<usize>,
    pub test: Range<usize>,
}

/// First sample index at or after `seconds` into the record.
pub(crate) fn index_at(seq: &MarkerSequence, seconds: f64) -> usize {
    let idx = (seconds * seq.sample_rate_hz() - 1e-9).ceil().max(0.0) as usize;
    idx.min(seq.len())
}

impl SequencePartition {
    pub fn new(seq: &MarkerSequence, kind: PartitionKind) -> Result<Self> {
        let train_end = index_at(seq, kind.train_end_s());
        let test_start = index_at(seq, PartitionKind::TEST_START_S);
        if test_start >= seq.len() {
            return Err(ForecastError::InvalidArgument(format!(
                "sequence lasts {:.2} s, the partition needs data beyond {} s",
                seq.duration(),
                PartitionKind::TEST_START_S
            )));
        }
        Ok(Self {
            kind,
            train: 0..train_end,
            cross_validation: train_end..test_start,
            test: test_start..seq.len(),
        })
    }

    pub fn online(seq: &MarkerSequence) -> Result<Self> {
        Self::new(seq, PartitionKind::Online)
    }

    pub fn offline(seq: &MarkerSequence) -> Result<Self> {
        Self::new(seq, PartitionKind::Offline)
    }

    /// One past the last index usable during grid search.
    pub fn development_end(&self) -> usize {
        self.cross_validation.end
    }
}
