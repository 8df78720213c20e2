use super::{MarkerSequence, NormStats};

/// One supervised pair: the bias-prefixed history window and the future target.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedExample {
    /// Index of the first sample in the history window.
    pub step: usize,
    /// Sequence index the target was read from.
    pub target_index: usize,
    /// `[1, normalized rows step .. step + shl]`, length `width * shl + 1`.
    pub input: Vec<f64>,
    /// Normalized row `step + shl + horizon - 1`.
    pub target: Vec<f64>,
}

/// Lazy iterator over the windows of a sequence.
#[derive(Debug, Clone)]
pub struct Windows<'a> {
    seq: &'a MarkerSequence,
    stats: &'a NormStats,
    shl: usize,
    horizon: usize,
    next: usize,
    count: usize,
}

impl<'a> Windows<'a> {
    /// Input dimension including the bias term.
    pub fn input_len(&self) -> usize {
        self.seq.width() * self.shl + 1
    }

    pub fn target_len(&self) -> usize {
        self.seq.width()
    }
}

impl Iterator for Windows<'_> {
    type Item = WindowedExample;

    fn next(&mut self) -> Option<WindowedExample> {
        if self.next >= self.count {
            return None;
        }
        let n = self.next;
        self.next += 1;
        let mut input = Vec::with_capacity(self.input_len());
        input.push(1.0);
        for k in n..n + self.shl {
            self.stats.normalize_into(self.seq.row(k), &mut input);
        }
        let target_index = n + self.shl + self.horizon - 1;
        let mut target = Vec::with_capacity(self.target_len());
        self.stats.normalize_into(self.seq.row(target_index), &mut target);
        Some(WindowedExample {
            step: n,
            target_index,
            input,
            target,
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.count - self.next;
        (left, Some(left))
    }
}

impl ExactSizeIterator for Windows<'_> {}

/// Number of windows a sequence of `len` samples yields.
pub(crate) fn window_count(len: usize, shl: usize, horizon: usize) -> usize {
    (len + 1).saturating_sub(shl + horizon)
}

/// Windows with history length `shl` and look-ahead `horizon`, both in samples.
///
/// A zero `shl` or `horizon`, a stats width that differs from the sequence, or a
/// sequence shorter than `shl + horizon` produces an empty stream and a warning.
pub fn make_windows<'a>(
    seq: &'a MarkerSequence,
    stats: &'a NormStats,
    shl: usize,
    horizon: usize,
) -> Windows<'a> {
    let mut count = window_count(seq.len(), shl, horizon);
    if shl == 0 || horizon == 0 || stats.width() != seq.width() {
        log::warn!(
            "invalid window request (shl {shl}, horizon {horizon}, stats width {} vs {})",
            stats.width(),
            seq.width()
        );
        count = 0;
    } else if count == 0 {
        log::warn!(
            "sequence of {} samples too short for shl {shl} + horizon {horizon}",
            seq.len()
        );
    }
    Windows {
        seq,
        stats,
        shl,
        horizon,
        next: 0,
        count,
    }
}
