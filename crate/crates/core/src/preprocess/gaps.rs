use serde::{Deserialize, Serialize};

use super::{PreprocessError, RemovedSpan};
use crate::ingest::Trip;

/// What `fill_gaps` did to a trip.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GapFill {
    /// Individual channel values recovered by interpolation.
    pub filled_values: usize,
    pub removed_samples: usize,
    pub removed_seconds: f64,
    pub removed: Vec<RemovedSpan>,
}

/// Recovers short missing runs per channel and drops the rest.
///
/// A run of missing values on one channel lasting at most `max_gap_fill`
/// seconds (sample count × period) between two valid neighbours is linearly
/// interpolated in time. Longer runs, and runs touching either end of the
/// trip, cause their samples to be removed.
pub fn fill_gaps(trip: &Trip, max_gap_fill: f64) -> Result<(Trip, GapFill), PreprocessError> {
    if !trip.samples.iter().any(|s| !s.has_missing()) {
        return Err(PreprocessError::NoValidData);
    }
    let n = trip.samples.len();
    let period = trip.period();
    let mut out = trip.clone();
    let mut remove = vec![false; n];
    let mut filled_values = 0;

    for c in 0..6 {
        let mut i = 0;
        while i < n {
            if !trip.samples[i].is_missing(c) {
                i += 1;
                continue;
            }
            let start = i;
            while i < n && trip.samples[i].is_missing(c) {
                i += 1;
            }
            let end = i; // exclusive
            let duration = (end - start) as f64 * period;
            let interior = start > 0 && end < n;
            if interior && duration <= max_gap_fill + 1e-9 {
                let (t0, v0) = (trip.samples[start - 1].t, trip.samples[start - 1].channels[c]);
                let (t1, v1) = (trip.samples[end].t, trip.samples[end].channels[c]);
                for k in start..end {
                    let w = (trip.samples[k].t - t0) / (t1 - t0);
                    out.samples[k].channels[c] = v0 + w * (v1 - v0);
                }
                filled_values += end - start;
            } else {
                remove[start..end].iter_mut().for_each(|r| *r = true);
            }
        }
    }

    let mut removed = Vec::new();
    let mut kept = Vec::with_capacity(n);
    let mut k = 0;
    while k < n {
        if !remove[k] {
            kept.push(out.samples[k]);
            k += 1;
            continue;
        }
        let start = k;
        while k < n && remove[k] {
            k += 1;
        }
        removed.push(RemovedSpan {
            start_t: trip.samples[start].t,
            end_t: trip.samples[k - 1].t + period,
        });
    }
    if kept.is_empty() {
        return Err(PreprocessError::NoValidData);
    }
    let removed_samples = n - kept.len();
    out.samples = kept;
    Ok((
        out,
        GapFill {
            filled_values,
            removed_samples,
            removed_seconds: removed_samples as f64 * period,
            removed,
        },
    ))
}
