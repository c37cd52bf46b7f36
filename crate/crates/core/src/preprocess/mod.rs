//! Trip cleaning: denoise, reorient, recover or drop missing values, and
//! delete stop intervals.
//!
//! Stages run in a fixed order (`denoise` → `reorient` → `fill_gaps` →
//! `remove_stops`). Removals never re-compact time, so a cleaned trip keeps
//! original timestamps and records where removals split it into contiguous
//! blocks.

mod denoise;
mod gaps;
mod reorient;
mod stops;

pub use denoise::denoise;
pub use gaps::{fill_gaps, GapFill};
pub use reorient::{reorient, rotation_to_gravity, GRAVITY};
pub use stops::{
    aggregate_accel, detect_stops, detect_stops_in_series, detect_stops_with, remove_stops,
    StopInterval,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{SensorSample, Trip};

#[derive(Debug, Error, PartialEq)]
pub enum PreprocessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("cannot estimate gravity: mean acceleration magnitude {0:.3} m/s² is below 1 m/s²")]
    CannotEstimateGravity(f64),
    #[error("reorientation needs at least {needed_s} s of contiguous complete accelerometer data, longest run is {found_s} s")]
    InsufficientOrientationData { needed_s: f64, found_s: f64 },
    #[error("no valid data")]
    NoValidData,
    #[error("stop intervals overlap or are unsorted at index {0}")]
    OverlappingStops(usize),
    #[error("no movement data")]
    NoMovementData,
}

/// How the three accelerometer axes are combined before stop detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisAggregation {
    /// Euclidean norm `sqrt(ax² + ay² + az²)`; rotation invariant.
    #[default]
    Magnitude,
    /// Plain sum `ax + ay + az`.
    Sum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CleaningConfig {
    /// Centered moving-average length in samples; odd.
    pub denoise_window: usize,
    /// Maximum range (m/s²) of the aggregated acceleration over a stop.
    pub stop_threshold: f64,
    /// Runs shorter than this are kept as movement.
    pub min_stop_seconds: f64,
    /// Longest missing run (seconds) that is interpolated rather than removed.
    pub max_gap_fill: f64,
    pub reorient: bool,
    pub aggregation: AxisAggregation,
}

impl Default for CleaningConfig {
    fn default() -> Self {
        Self {
            denoise_window: 5,
            stop_threshold: 0.5,
            min_stop_seconds: 6.0,
            max_gap_fill: 2.0,
            reorient: true,
            aggregation: AxisAggregation::Magnitude,
        }
    }
}

impl CleaningConfig {
    pub fn validate(&self) -> Result<(), PreprocessError> {
        if self.denoise_window == 0 || self.denoise_window % 2 == 0 {
            return Err(PreprocessError::Config(format!(
                "denoise_window must be odd and positive, got {}",
                self.denoise_window
            )));
        }
        for (name, v) in [
            ("stop_threshold", self.stop_threshold),
            ("min_stop_seconds", self.min_stop_seconds),
            ("max_gap_fill", self.max_gap_fill),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(PreprocessError::Config(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// A span of removed time `[start_t, end_t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemovedSpan {
    pub start_t: f64,
    pub end_t: f64,
}

impl RemovedSpan {
    pub fn duration(&self) -> f64 {
        self.end_t - self.start_t
    }
}

/// A trip ready for segmentation: no missing channels, stops removed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CleanTrip {
    pub driver_id: String,
    pub nominal_rate_hz: f64,
    pub samples: Vec<SensorSample>,
    /// Sample indices that start a new contiguous block (a removal or a
    /// timing hole precedes them). Sorted; never contains 0.
    pub breaks: Vec<usize>,
    pub stops: Vec<StopInterval>,
    pub removed_gaps: Vec<RemovedSpan>,
    pub removed_stop_seconds: f64,
    pub removed_gap_seconds: f64,
    /// Duration of the trip handed to cleaning (sample count × period).
    pub input_duration: f64,
    /// Stage names in the order they ran.
    pub provenance: Vec<String>,
}

impl CleanTrip {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn period(&self) -> f64 {
        1.0 / self.nominal_rate_hz
    }

    pub fn clean_duration(&self) -> f64 {
        self.samples.len() as f64 * self.period()
    }

    /// Contiguous `[start, end)` index ranges between breaks.
    pub fn blocks(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.breaks.len() + 1);
        let mut start = 0;
        for &b in &self.breaks {
            out.push((start, b));
            start = b;
        }
        if start < self.samples.len() {
            out.push((start, self.samples.len()));
        }
        out
    }

    /// Views the cleaned samples as a plain trip (used for re-running stages).
    pub fn as_trip(&self) -> Trip {
        Trip {
            driver_id: self.driver_id.clone(),
            samples: self.samples.clone(),
            nominal_rate_hz: self.nominal_rate_hz,
        }
    }
}

/// Indices `i` where `t[i] - t[i-1]` exceeds 1.5 nominal periods.
pub(crate) fn timing_breaks(samples: &[SensorSample], period: f64) -> Vec<usize> {
    samples
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1].t - w[0].t > 1.5 * period)
        .map(|(i, _)| i + 1)
        .collect()
}

/// Runs the full cleaning chain.
pub fn clean(trip: &Trip, cfg: &CleaningConfig) -> Result<CleanTrip, PreprocessError> {
    cfg.validate()?;
    let input_duration = trip.duration();
    let mut provenance = Vec::with_capacity(4);

    let mut current = denoise(trip, cfg.denoise_window)?;
    provenance.push("denoise".to_string());

    if cfg.reorient {
        current = reorient(&current)?;
        provenance.push("reorient".to_string());
    }

    let (filled, gap_fill) = fill_gaps(&current, cfg.max_gap_fill)?;
    provenance.push("fill_gaps".to_string());

    let stops = detect_stops_with(
        &filled,
        cfg.stop_threshold,
        cfg.min_stop_seconds,
        cfg.aggregation,
    );
    let mut out = remove_stops(&filled, &stops)?;
    provenance.push("remove_stops".to_string());

    out.input_duration = input_duration;
    out.removed_gap_seconds = gap_fill.removed_seconds;
    out.removed_gaps = gap_fill.removed;
    out.provenance = provenance;
    Ok(out)
}
