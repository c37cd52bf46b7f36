//! Seeded synthetic trips with per-driver behavioral signatures and
//! ground-truth stop and dropout annotations.
//!
//! Signals are generated in the vehicle frame (x forward, y left, z up, so a
//! phone at rest reads `+g` on z). A trip alternates driving segments and
//! stops:
//!
//! * driving carries a road texture on `az`, a renewal stream of events
//!   (accelerate, brake, turn) shaped by the profile, and Gaussian noise;
//! * stops hold `(0, 0, g, 0, 0, 0)` plus jitter of a tenth of the noise std.
//!
//! The road texture is `A(1 − cos(2πkj/(n−1)))` over a driving segment of
//! `n` samples, so it is zero at both segment ends and swings through a full
//! period about every 8 samples. That keeps driving well above the stop
//! threshold while stop boundaries stay sharp after smoothing.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{SensorSample, Trip};
use crate::pipeline::splitmix;
use crate::preprocess::{StopInterval, GRAVITY};

/// Assumed speed when converting yaw rate into lateral acceleration (m/s).
pub const CRUISE_SPEED: f64 = 12.0;
const ROAD_AMPLITUDE: f64 = 3.2;
const ROAD_PERIOD_SAMPLES: f64 = 8.0;
/// Driving time kept clear of events and dropouts on either side of a stop (s).
const CLEARANCE_S: f64 = 10.0;
const MIN_STOP_SPACING_S: f64 = 60.0;
const END_MARGIN_S: f64 = 30.0;
const PITCH_COUPLING: f64 = 0.02;
const ROLL_COUPLING: f64 = 0.02;
/// Gamma shape of event inter-arrival times; above 1 spaces events more evenly than Poisson.
const ARRIVAL_SHAPE: f64 = 4.0;
const EVENT_SECONDS: (f64, f64) = (3.0, 8.0);

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("config error: {0}")]
    Config(String),
}

/// Bounds and within-driver spread of one behavioral parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParameterRange {
    pub lo: f64,
    pub hi: f64,
    pub spread: f64,
}

impl ParameterRange {
    /// Largest profile count whose evenly spaced levels stay `3 · spread` apart.
    pub fn max_levels(&self) -> usize {
        ((self.hi - self.lo) / (3.0 * self.spread) + 1e-9).floor() as usize + 1
    }
}

pub const ACCEL_RANGE: ParameterRange = ParameterRange { lo: 0.6, hi: 3.6, spread: 0.08 };
pub const BRAKE_RANGE: ParameterRange = ParameterRange { lo: 0.8, hi: 4.4, spread: 0.1 };
pub const TURN_RANGE: ParameterRange = ParameterRange { lo: 0.04, hi: 0.40, spread: 0.01 };
pub const EVENT_RATE_RANGE: ParameterRange = ParameterRange { lo: 3.0, hi: 15.0, spread: 0.4 };
pub const NOISE_RANGE: ParameterRange = ParameterRange { lo: 0.05, hi: 0.41, spread: 0.01 };

/// Ranges of the five behavioral parameters, in profile field order.
pub const PROFILE_RANGES: [ParameterRange; 5] =
    [ACCEL_RANGE, BRAKE_RANGE, TURN_RANGE, EVENT_RATE_RANGE, NOISE_RANGE];

const STOP_FREQUENCY: (f64, f64) = (0.4, 0.8);
const STOP_DURATION: [f64; 2] = [10.0, 60.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Separation {
    Easy,
    Hard,
}

impl std::str::FromStr for Separation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "easy" => Ok(Separation::Easy),
            "hard" => Ok(Separation::Hard),
            other => Err(format!("unknown separation `{other}` (expected easy or hard)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriverProfile {
    pub driver_id: String,
    /// Mean peak longitudinal acceleration of an accelerate event (m/s²).
    pub accel_aggressiveness: f64,
    /// Mean peak deceleration of a brake event (m/s²).
    pub brake_harshness: f64,
    /// Mean peak yaw rate of a turn (rad/s).
    pub turn_rate_scale: f64,
    /// Events per minute.
    pub event_rate: f64,
    pub noise_sigma: f64,
    /// Stops per hour.
    pub stop_frequency: f64,
    pub stop_duration_range: [f64; 2],
    pub seed: u64,
}

impl DriverProfile {
    pub fn validate(&self) -> Result<(), SynthError> {
        let fields = [
            ("accel_aggressiveness", self.accel_aggressiveness),
            ("brake_harshness", self.brake_harshness),
            ("turn_rate_scale", self.turn_rate_scale),
            ("event_rate", self.event_rate),
            ("noise_sigma", self.noise_sigma),
            ("stop_frequency", self.stop_frequency),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(SynthError::Config(format!("{name} must be nonnegative, got {v}")));
            }
        }
        let [lo, hi] = self.stop_duration_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(SynthError::Config(format!(
                "stop_duration_range must satisfy 0 < min <= max, got [{lo}, {hi}]"
            )));
        }
        Ok(())
    }

    /// The five behavioral parameters in [`PROFILE_RANGES`] order.
    pub fn parameters(&self) -> [f64; 5] {
        [
            self.accel_aggressiveness,
            self.brake_harshness,
            self.turn_rate_scale,
            self.event_rate,
            self.noise_sigma,
        ]
    }
}

/// A dropout `[start_t, end_t)` where every channel is missing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapInterval {
    pub start_t: f64,
    pub end_t: f64,
}

impl GapInterval {
    pub fn duration(&self) -> f64 {
        self.end_t - self.start_t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTruth {
    pub profile: DriverProfile,
    pub duration_s: f64,
    pub rate_hz: f64,
    pub stops: Vec<StopInterval>,
    pub gaps: Vec<GapInterval>,
}

impl SyntheticTruth {
    pub fn stop_seconds(&self) -> f64 {
        self.stops.iter().map(StopInterval::duration).sum()
    }

    /// Seconds of dropouts longer than `max_gap_fill` (the ones cleaning removes).
    pub fn removed_gap_seconds(&self, max_gap_fill: f64) -> f64 {
        self.gaps
            .iter()
            .map(GapInterval::duration)
            .filter(|d| *d > max_gap_fill + 1e-9)
            .sum()
    }
}

/// Trip shape beyond the driver's profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripSpec {
    pub duration_s: f64,
    pub rate_hz: f64,
    /// Dropouts short enough to be interpolated (at most 2 s).
    pub short_dropouts_per_hour: f64,
    /// Dropouts of 5 to 20 s, removed by cleaning.
    pub long_dropouts_per_hour: f64,
    /// Distinguishes several trips of one driver.
    pub trip_index: u64,
}

impl TripSpec {
    pub fn new(duration_s: f64, rate_hz: f64) -> Self {
        Self {
            duration_s,
            rate_hz,
            short_dropouts_per_hour: 2.0,
            long_dropouts_per_hour: 0.0,
            trip_index: 0,
        }
    }
}

/// Builds `n` driver profiles.
///
/// `Easy` puts each behavioral parameter on `n` evenly spaced levels and
/// deals them out with an independent seeded permutation per parameter, so
/// any two drivers differ by at least `3 · spread` on all five parameters.
/// `Hard` draws every parameter uniformly from its full range.
pub fn make_profiles(n: usize, separation: Separation, seed: u64) -> Result<Vec<DriverProfile>, SynthError> {
    if n < 2 {
        return Err(SynthError::Config(format!("need at least 2 drivers, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values: Vec<Vec<f64>> = match separation {
        Separation::Easy => {
            let limit = PROFILE_RANGES.iter().map(ParameterRange::max_levels).min().unwrap_or(0);
            if n > limit {
                return Err(SynthError::Config(format!(
                    "easy separation supports at most {limit} drivers, got {n}"
                )));
            }
            PROFILE_RANGES
                .iter()
                .map(|r| {
                    let mut levels: Vec<f64> = (0..n)
                        .map(|i| r.lo + (r.hi - r.lo) * i as f64 / (n - 1) as f64)
                        .collect();
                    levels.shuffle(&mut rng);
                    levels
                })
                .collect()
        }
        Separation::Hard => PROFILE_RANGES
            .iter()
            .map(|r| (0..n).map(|_| rng.random_range(r.lo..=r.hi)).collect())
            .collect(),
    };
    let width = n.to_string().len().max(2);
    Ok((0..n)
        .map(|i| DriverProfile {
            driver_id: format!("d{:0width$}", i + 1),
            accel_aggressiveness: values[0][i],
            brake_harshness: values[1][i],
            turn_rate_scale: values[2][i],
            event_rate: values[3][i],
            noise_sigma: values[4][i],
            stop_frequency: rng.random_range(STOP_FREQUENCY.0..=STOP_FREQUENCY.1),
            stop_duration_range: STOP_DURATION,
            seed: splitmix(seed ^ splitmix(i as u64 + 1)),
        })
        .collect())
}

pub fn generate_trip(
    profile: &DriverProfile,
    duration_s: f64,
    rate_hz: f64,
) -> Result<(Trip, SyntheticTruth), SynthError> {
    generate_trip_with(profile, &TripSpec::new(duration_s, rate_hz))
}

/// Sample-index interval `[start, end)`.
type Range = (usize, usize);

fn place_stops(rng: &mut ChaCha8Rng, profile: &DriverProfile, n: usize, rate: f64) -> Vec<Range> {
    if profile.stop_frequency <= 0.0 {
        return Vec::new();
    }
    let hours = n as f64 / rate / 3600.0;
    let wanted = Poisson::new(profile.stop_frequency * hours).map_or(0, |p| p.sample(rng) as usize);
    let [dmin, dmax] = profile.stop_duration_range;
    let mut lengths: Vec<usize> = (0..wanted)
        .map(|_| (rng.random_range(dmin..=dmax) * rate).round().max(1.0) as usize)
        .collect();
    let margin = (END_MARGIN_S * rate).ceil() as usize;
    let spacing = (MIN_STOP_SPACING_S * rate).ceil() as usize;
    // Drop stops until the mandatory driving fits.
    loop {
        let k = lengths.len();
        if k == 0 {
            return Vec::new();
        }
        let fixed = 2 * margin + (k - 1) * spacing + lengths.iter().sum::<usize>();
        if fixed <= n {
            break;
        }
        lengths.pop();
    }
    let k = lengths.len();
    let slack = n - (2 * margin + (k - 1) * spacing + lengths.iter().sum::<usize>());
    let mut cuts: Vec<usize> = (0..k).map(|_| rng.random_range(0..=slack)).collect();
    cuts.sort_unstable();
    let mut out = Vec::with_capacity(k);
    let mut at = margin;
    let mut used = 0;
    for (i, len) in lengths.into_iter().enumerate() {
        at += cuts[i] - used;
        used = cuts[i];
        out.push((at, at + len));
        at += len + spacing;
    }
    out
}

/// Complement of `stops` inside `[0, n)`.
fn driving_segments(stops: &[Range], n: usize) -> Vec<Range> {
    let mut out = Vec::new();
    let mut at = 0;
    for &(a, b) in stops {
        if a > at {
            out.push((at, a));
        }
        at = b;
    }
    if at < n {
        out.push((at, n));
    }
    out
}

/// Whether `[a, b)` lies in driving with `clearance` samples to any stop.
fn clear_of(stops: &[Range], a: usize, b: usize, clearance: usize) -> bool {
    stops
        .iter()
        .all(|&(s, e)| b + clearance <= s || a >= e + clearance)
}

fn half_sine(u: f64) -> f64 {
    (std::f64::consts::PI * u).sin()
}

/// Adds a half-sine pulse of `peak` lasting `len` samples from `start`.
fn add_pulse(channel: &mut [f64], start: usize, len: usize, peak: f64) {
    for j in 0..len.min(channel.len().saturating_sub(start)) {
        channel[start + j] += peak * half_sine((j as f64 + 0.5) / len as f64);
    }
}

fn jittered(rng: &mut ChaCha8Rng, level: f64, spread: f64) -> f64 {
    let noise = Normal::new(0.0, spread).expect("spread is finite and positive");
    (level + noise.sample(rng)).max(0.0)
}

fn place_dropouts(
    rng: &mut ChaCha8Rng,
    stops: &[Range],
    taken: &mut Vec<Range>,
    n: usize,
    rate: f64,
    per_hour: f64,
    len_s: (f64, f64),
) {
    if per_hour <= 0.0 {
        return;
    }
    let hours = n as f64 / rate / 3600.0;
    let count = Poisson::new(per_hour * hours).map_or(0, |p| p.sample(rng) as usize);
    let clearance = (CLEARANCE_S * rate).ceil() as usize;
    for _ in 0..count {
        let len = ((rng.random_range(len_s.0..=len_s.1) * rate).floor() as usize).max(1);
        for _attempt in 0..100 {
            if n <= len + 2 * clearance {
                break;
            }
            let a = rng.random_range(clearance..n - len - clearance);
            let b = a + len;
            let apart = taken.iter().all(|&(s, e)| b + clearance <= s || a >= e + clearance);
            if apart && clear_of(stops, a, b, clearance) {
                taken.push((a, b));
                break;
            }
        }
    }
}

/// Generates one trip and its truth record.
pub fn generate_trip_with(profile: &DriverProfile, spec: &TripSpec) -> Result<(Trip, SyntheticTruth), SynthError> {
    profile.validate()?;
    if !(spec.duration_s.is_finite() && spec.duration_s >= 60.0) {
        return Err(SynthError::Config(format!(
            "duration must be at least 60 s, got {}",
            spec.duration_s
        )));
    }
    if !(spec.rate_hz.is_finite() && spec.rate_hz > 0.0) {
        return Err(SynthError::Config(format!("rate must be positive, got {}", spec.rate_hz)));
    }
    let rate = spec.rate_hz;
    let period = 1.0 / rate;
    let n = (spec.duration_s * rate).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(profile.seed ^ splitmix(spec.trip_index)));

    let stops = place_stops(&mut rng, profile, n, rate);
    let mut ch: [Vec<f64>; 6] = std::array::from_fn(|c| vec![if c == 2 { GRAVITY } else { 0.0 }; n]);
    let active = profile.event_rate > 0.0;

    if active {
        for (a, b) in driving_segments(&stops, n) {
            let len = b - a;
            if len < 2 {
                continue;
            }
            let span = (len - 1) as f64;
            let k = (span / ROAD_PERIOD_SAMPLES).round().max(1.0);
            for j in 0..len {
                let phase = std::f64::consts::TAU * k * j as f64 / span;
                ch[2][a + j] += ROAD_AMPLITUDE * (1.0 - phase.cos());
            }
        }

        let mean_gap = 60.0 / profile.event_rate;
        let arrivals = Gamma::new(ARRIVAL_SHAPE, mean_gap / ARRIVAL_SHAPE).expect("event rate is positive");
        let clearance = (CLEARANCE_S * rate).ceil() as usize;
        let mut t = 0.0;
        // Speed stays bounded, so longitudinal events alternate between
        // speeding up and slowing down.
        let mut braking = false;
        loop {
            t += arrivals.sample(&mut rng);
            let kind = rng.random_range(0..3u8);
            let dur_s = rng.random_range(EVENT_SECONDS.0..=EVENT_SECONDS.1);
            let left = rng.random_bool(0.5);
            if t >= spec.duration_s {
                break;
            }
            let start = (t * rate).floor() as usize;
            let len = ((dur_s * rate).round() as usize).max(1);
            if start + len > n || !clear_of(&stops, start, start + len, clearance) {
                continue;
            }
            let kind = match kind {
                2 => 2,
                _ => {
                    braking = !braking;
                    if braking { 0 } else { 1 }
                }
            };
            match kind {
                0 => {
                    let peak = jittered(&mut rng, profile.accel_aggressiveness, ACCEL_RANGE.spread);
                    add_pulse(&mut ch[0], start, len, peak);
                    add_pulse(&mut ch[4], start, len, -PITCH_COUPLING * peak);
                }
                1 => {
                    let peak = jittered(&mut rng, profile.brake_harshness, BRAKE_RANGE.spread);
                    add_pulse(&mut ch[0], start, len, -peak);
                    add_pulse(&mut ch[4], start, len, PITCH_COUPLING * peak);
                }
                _ => {
                    let sign = if left { 1.0 } else { -1.0 };
                    let omega = sign * jittered(&mut rng, profile.turn_rate_scale, TURN_RANGE.spread);
                    add_pulse(&mut ch[5], start, len, omega);
                    add_pulse(&mut ch[1], start, len, CRUISE_SPEED * omega);
                    add_pulse(&mut ch[3], start, len, -ROLL_COUPLING * CRUISE_SPEED * omega);
                }
            }
        }
    }

    if profile.noise_sigma > 0.0 {
        let accel_noise = Normal::new(0.0, profile.noise_sigma).expect("finite sigma");
        let gyro_noise = Normal::new(0.0, 0.1 * profile.noise_sigma).expect("finite sigma");
        for i in 0..n {
            for c in 0..3 {
                ch[c][i] += accel_noise.sample(&mut rng);
            }
            for c in 3..6 {
                ch[c][i] += gyro_noise.sample(&mut rng);
            }
        }
    }

    // Stops overwrite whatever driving left there.
    let jitter = Normal::new(0.0, profile.noise_sigma / 10.0).expect("finite sigma");
    for &(a, b) in &stops {
        for i in a..b {
            for (c, channel) in ch.iter_mut().enumerate() {
                let base = if c == 2 { GRAVITY } else { 0.0 };
                channel[i] = base + if profile.noise_sigma > 0.0 { jitter.sample(&mut rng) } else { 0.0 };
            }
        }
    }

    let mut dropouts = Vec::new();
    let short_max = (2.0f64).min(4.0 * period).max(period);
    place_dropouts(&mut rng, &stops, &mut dropouts, n, rate, spec.short_dropouts_per_hour, (period, short_max));
    place_dropouts(&mut rng, &stops, &mut dropouts, n, rate, spec.long_dropouts_per_hour, (5.0, 20.0));
    dropouts.sort_unstable();
    for &(a, b) in &dropouts {
        for channel in ch.iter_mut() {
            channel[a..b].fill(f64::NAN);
        }
    }

    let samples: Vec<SensorSample> = (0..n)
        .map(|i| SensorSample {
            t: i as f64 * period,
            channels: std::array::from_fn(|c| ch[c][i]),
        })
        .collect();
    let trip = Trip::new(profile.driver_id.clone(), samples, rate)
        .map_err(|e| SynthError::Config(e.to_string()))?;
    let at = |i: usize| i as f64 * period;
    let truth = SyntheticTruth {
        profile: profile.clone(),
        duration_s: n as f64 * period,
        rate_hz: rate,
        stops: stops
            .iter()
            .map(|&(a, b)| StopInterval { start_t: at(a), end_t: at(b) })
            .collect(),
        gaps: dropouts
            .iter()
            .map(|&(a, b)| GapInterval { start_t: at(a), end_t: at(b) })
            .collect(),
    };
    Ok((trip, truth))
}
