//! Chronological train/test split and overlapping fixed-length windows.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::preprocess::CleanTrip;

#[derive(Debug, Error, PartialEq)]
pub enum SegmentError {
    #[error("config error: {0}")]
    Config(String),
    #[error("insufficient data for split: {0}")]
    InsufficientData(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    Train,
    Test,
}

impl std::fmt::Display for Partition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Partition::Train => "train",
            Partition::Test => "test",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentationConfig {
    pub window_minutes: f64,
    /// Fraction of a window shared with its successor, in `[0, 1)`.
    pub overlap_fraction: f64,
    pub train_fraction: f64,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            window_minutes: 15.0,
            overlap_fraction: 0.75,
            train_fraction: 0.7,
        }
    }
}

impl SegmentationConfig {
    pub fn validate(&self) -> Result<(), SegmentError> {
        if !(self.window_minutes.is_finite() && self.window_minutes > 0.0) {
            return Err(SegmentError::Config(format!(
                "window_minutes must be positive, got {}",
                self.window_minutes
            )));
        }
        if !(0.0..1.0).contains(&self.overlap_fraction) {
            return Err(SegmentError::Config(format!(
                "overlap_fraction must be in [0, 1), got {}",
                self.overlap_fraction
            )));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(SegmentError::Config(format!(
                "train_fraction must be in (0, 1), got {}",
                self.train_fraction
            )));
        }
        Ok(())
    }

    /// Window length in samples.
    pub fn window_samples(&self, rate_hz: f64) -> usize {
        (self.window_minutes * 60.0 * rate_hz).round() as usize
    }

    /// Offset between consecutive window starts, in samples (at least 1).
    pub fn stride_samples(&self, rate_hz: f64) -> usize {
        let w = self.window_samples(rate_hz) as f64;
        ((w * (1.0 - self.overlap_fraction)).round() as usize).max(1)
    }
}

/// Half-open index range `[start, end)` of a cleaned trip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub partition: Partition,
}

impl Span {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

/// A fixed-duration slice of the six channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub driver_id: String,
    pub start_t: f64,
    /// One period past the last sample.
    pub end_t: f64,
    /// `ax, ay, az, gx, gy, gz`, all of equal length.
    pub channels: [Vec<f64>; 6],
    pub partition: Partition,
}

impl Window {
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels[0].is_empty()
    }

    pub fn overlaps(&self, other: &Window) -> bool {
        self.start_t < other.end_t && other.start_t < self.end_t
    }
}

/// Splits a cleaned trip chronologically: the first `⌊fraction · N⌋` samples
/// train, the rest test.
///
/// `min_samples` is the smallest acceptable span (usually one window).
pub fn split_train_test(
    trip: &CleanTrip,
    train_fraction: f64,
    min_samples: usize,
) -> Result<(Span, Span), SegmentError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(SegmentError::Config(format!(
            "train_fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    let n = trip.len();
    let cut = (train_fraction * n as f64).floor() as usize;
    let train = Span {
        start: 0,
        end: cut,
        partition: Partition::Train,
    };
    let test = Span {
        start: cut,
        end: n,
        partition: Partition::Test,
    };
    let need = min_samples.max(1);
    if train.len() < need || test.len() < need {
        return Err(SegmentError::InsufficientData(format!(
            "trip `{}` has {n} samples; train {} and test {} must each hold at least {need}",
            trip.driver_id,
            train.len(),
            test.len()
        )));
    }
    Ok((train, test))
}

/// Number of windows of length `w` at stride `s` that fit in `n` samples.
pub fn window_count(n: usize, w: usize, s: usize) -> usize {
    if n < w || s == 0 {
        0
    } else {
        (n - w) / s + 1
    }
}

/// Cuts windows from `span`. Offsets restart at each contiguous block, so a
/// window never covers a removal gap; trailing partial windows are dropped.
pub fn cut_windows(
    trip: &CleanTrip,
    span: Span,
    cfg: &SegmentationConfig,
) -> Result<Vec<Window>, SegmentError> {
    cfg.validate()?;
    let rate = trip.nominal_rate_hz;
    let w = cfg.window_samples(rate);
    if w < 2 {
        return Err(SegmentError::Config(format!(
            "window of {} min at {rate} Hz holds {w} samples; need at least 2",
            cfg.window_minutes
        )));
    }
    let s = cfg.stride_samples(rate);
    let period = trip.period();
    let mut out = Vec::new();
    for (b_start, b_end) in trip.blocks() {
        let lo = b_start.max(span.start);
        let hi = b_end.min(span.end);
        if hi <= lo {
            continue;
        }
        for k in 0..window_count(hi - lo, w, s) {
            let a = lo + k * s;
            let slice = &trip.samples[a..a + w];
            let channels = std::array::from_fn(|c| slice.iter().map(|x| x.channels[c]).collect());
            out.push(Window {
                driver_id: trip.driver_id.clone(),
                start_t: slice[0].t,
                end_t: slice[w - 1].t + period,
                channels,
                partition: span.partition,
            });
        }
    }
    Ok(out)
}
