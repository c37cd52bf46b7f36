use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{timing_breaks, AxisAggregation, CleanTrip, PreprocessError};
use crate::ingest::Trip;

/// A stop `[start_t, end_t)`: `end_t` is one period past the last stopped sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopInterval {
    pub start_t: f64,
    pub end_t: f64,
}

impl StopInterval {
    pub fn duration(&self) -> f64 {
        self.end_t - self.start_t
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start_t && t < self.end_t
    }
}

/// Per-sample aggregated acceleration. Missing axes yield `NaN`.
pub fn aggregate_accel(trip: &Trip, aggregation: AxisAggregation) -> Vec<f64> {
    trip.samples
        .iter()
        .map(|s| {
            let [x, y, z] = s.accel();
            match aggregation {
                AxisAggregation::Magnitude => (x * x + y * y + z * z).sqrt(),
                AxisAggregation::Sum => x + y + z,
            }
        })
        .collect()
}

pub fn detect_stops(trip: &Trip, threshold: f64, min_stop_seconds: f64) -> Vec<StopInterval> {
    detect_stops_with(trip, threshold, min_stop_seconds, AxisAggregation::Magnitude)
}

pub fn detect_stops_with(
    trip: &Trip,
    threshold: f64,
    min_stop_seconds: f64,
    aggregation: AxisAggregation,
) -> Vec<StopInterval> {
    let times: Vec<f64> = trip.samples.iter().map(|s| s.t).collect();
    let series = aggregate_accel(trip, aggregation);
    detect_stops_in_series(&times, &series, trip.period(), threshold, min_stop_seconds)
}

/// Finds maximal runs whose range (max − min) stays within `threshold` and
/// that last at least `min_stop_seconds` (sample count × period).
///
/// Scanning is greedy left to right: from each start the run is extended as
/// far as the range allows; a long enough run is emitted and scanning resumes
/// after it. Runs never cross a timing hole or a `NaN` value.
pub fn detect_stops_in_series(
    times: &[f64],
    values: &[f64],
    period: f64,
    threshold: f64,
    min_stop_seconds: f64,
) -> Vec<StopInterval> {
    assert_eq!(times.len(), values.len());
    let n = values.len();
    let min_len = ((min_stop_seconds / period) - 1e-9).ceil().max(1.0) as usize;
    let contiguous = |j: usize| j == 0 || times[j] - times[j - 1] <= 1.5 * period;

    let mut out = Vec::new();
    let mut max_q: VecDeque<usize> = VecDeque::new();
    let mut min_q: VecDeque<usize> = VecDeque::new();
    let mut start = 0;
    let mut end = 0; // exclusive end of the current run
    while start < n {
        if end <= start {
            end = start;
            max_q.clear();
            min_q.clear();
        }
        while end < n && !values[end].is_nan() && (end == start || contiguous(end)) {
            let v = values[end];
            let hi = max_q.front().map_or(v, |&k| values[k].max(v));
            let lo = min_q.front().map_or(v, |&k| values[k].min(v));
            if hi - lo > threshold {
                break;
            }
            while max_q.back().is_some_and(|&k| values[k] <= v) {
                max_q.pop_back();
            }
            max_q.push_back(end);
            while min_q.back().is_some_and(|&k| values[k] >= v) {
                min_q.pop_back();
            }
            min_q.push_back(end);
            end += 1;
        }
        if end - start >= min_len {
            out.push(StopInterval {
                start_t: times[start],
                end_t: times[end - 1] + period,
            });
            start = end;
        } else {
            if max_q.front() == Some(&start) {
                max_q.pop_front();
            }
            if min_q.front() == Some(&start) {
                min_q.pop_front();
            }
            start += 1;
        }
    }
    out
}

/// Deletes every sample inside a stop interval. Timestamps are kept as they
/// are; the resulting discontinuities become block breaks.
pub fn remove_stops(trip: &Trip, stops: &[StopInterval]) -> Result<CleanTrip, PreprocessError> {
    for (i, w) in stops.windows(2).enumerate() {
        if w[1].start_t < w[0].end_t {
            return Err(PreprocessError::OverlappingStops(i + 1));
        }
    }
    if let Some(i) = stops.iter().position(|s| !(s.end_t > s.start_t)) {
        return Err(PreprocessError::OverlappingStops(i));
    }
    let mut k = 0;
    let samples: Vec<_> = trip
        .samples
        .iter()
        .filter(|s| {
            while k < stops.len() && stops[k].end_t <= s.t {
                k += 1;
            }
            !(k < stops.len() && stops[k].contains(s.t))
        })
        .copied()
        .collect();
    if samples.is_empty() {
        return Err(PreprocessError::NoMovementData);
    }
    let breaks = timing_breaks(&samples, trip.period());
    Ok(CleanTrip {
        driver_id: trip.driver_id.clone(),
        nominal_rate_hz: trip.nominal_rate_hz,
        samples,
        breaks,
        stops: stops.to_vec(),
        removed_gaps: Vec::new(),
        removed_stop_seconds: stops.iter().map(StopInterval::duration).sum(),
        removed_gap_seconds: 0.0,
        input_duration: trip.duration(),
        provenance: vec!["remove_stops".to_string()],
    })
}
