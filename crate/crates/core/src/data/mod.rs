//! Marker trajectories: loading, resampling, normalization, partitioning and
//! supervised windowing.

mod normalize;
mod partition;
mod resample;
mod sequence;
mod spline;
mod windows;

pub use normalize::{fit_norm_stats, NormStats};
pub use partition::{PartitionKind, SequencePartition};
pub use resample::{downsample, upsample_with_noise, ResampleMetadata, DEFAULT_NOISE_GAMMA};
pub use sequence::{load_sequence, save_sequence, MarkerSequence, Regularity};
pub use spline::NaturalCubicSpline;
pub use windows::{make_windows, WindowedExample, Windows};

/// Spatial coordinates recorded per marker.
pub const COORDS_PER_MARKER: usize = 3;

/// Markers in the respiratory recordings.
pub const DEFAULT_MARKERS: usize = 3;
