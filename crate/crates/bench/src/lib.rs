//! Shared fixtures for the benchmarks.

use driverid_core::features::FeatureVector;
use driverid_core::pipeline::featurize_trips;
use driverid_core::preprocess::{clean, CleanTrip, CleaningConfig};
use driverid_core::segment::SegmentationConfig;
use driverid_core::synth::{generate_trip, make_profiles, Separation};
use driverid_core::{FeatureConfig, Trip};

/// One raw synthetic trip per driver.
pub fn raw_trips(drivers: usize, seconds: f64, seed: u64) -> Vec<Trip> {
    make_profiles(drivers, Separation::Easy, seed)
        .expect("valid profile count")
        .iter()
        .map(|p| generate_trip(p, seconds, 2.0).expect("valid trip spec").0)
        .collect()
}

pub fn clean_trips(trips: &[Trip]) -> Vec<CleanTrip> {
    trips
        .iter()
        .map(|t| clean(t, &CleaningConfig::default()).expect("synthetic trips clean"))
        .collect()
}

/// Train and test feature vectors with 5-minute windows.
pub fn features(trips: &[CleanTrip]) -> (Vec<FeatureVector>, Vec<FeatureVector>) {
    let seg = SegmentationConfig { window_minutes: 5.0, ..SegmentationConfig::default() };
    let split = featurize_trips(trips, None, &seg, &FeatureConfig::default()).expect("enough driving time");
    (split.train, split.test)
}
