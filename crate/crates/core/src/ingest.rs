//! Trip log parsing and validation.
//!
//! A trip log is a UTF-8 CSV file with the fixed header `t,ax,ay,az,gx,gy,gz`.
//! Missing channel values are written as the literal `NaN` and carried in-band
//! as `f64::NAN`; later cleaning stages decide whether to fill or drop them.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Header line of the trip log format.
pub const LOG_HEADER: [&str; 7] = ["t", "ax", "ay", "az", "gx", "gy", "gz"];

/// Names of the six sensor channels, in storage order.
pub const CHANNEL_NAMES: [&str; 6] = ["ax", "ay", "az", "gx", "gy", "gz"];

/// Default sampling rate of the source dataset.
pub const DEFAULT_RATE_HZ: f64 = 2.0;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("empty log")]
    EmptyLog,
    #[error("malformed header: expected `t,ax,ay,az,gx,gy,gz`, found `{0}`")]
    MalformedHeader(String),
    #[error("line {line}: timestamp {t} does not increase (previous {prev})")]
    NonMonotonic { line: u64, t: f64, prev: f64 },
    #[error("line {line}: expected at most 7 fields, found {found}")]
    TooManyFields { line: u64, found: usize },
    #[error("invalid trip: {0}")]
    InvalidTrip(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// One timestamped reading of the six channels.
///
/// A channel holding `NaN` is missing. Non-finite values never appear otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorSample {
    pub t: f64,
    /// `[ax, ay, az, gx, gy, gz]`; acceleration in m/s², angular velocity in rad/s.
    pub channels: [f64; 6],
}

impl SensorSample {
    pub fn new(t: f64, accel: [f64; 3], gyro: [f64; 3]) -> Self {
        Self {
            t,
            channels: [accel[0], accel[1], accel[2], gyro[0], gyro[1], gyro[2]],
        }
    }

    pub fn accel(&self) -> [f64; 3] {
        [self.channels[0], self.channels[1], self.channels[2]]
    }

    pub fn gyro(&self) -> [f64; 3] {
        [self.channels[3], self.channels[4], self.channels[5]]
    }

    pub fn is_missing(&self, channel: usize) -> bool {
        self.channels[channel].is_nan()
    }

    pub fn has_missing(&self) -> bool {
        self.channels.iter().any(|v| v.is_nan())
    }

    pub fn accel_complete(&self) -> bool {
        self.channels[..3].iter().all(|v| !v.is_nan())
    }

    /// Bitwise equality that treats two missing markers as equal.
    pub fn same_as(&self, other: &SensorSample) -> bool {
        self.t.to_bits() == other.t.to_bits()
            && self
                .channels
                .iter()
                .zip(other.channels.iter())
                .all(|(a, b)| (a.is_nan() && b.is_nan()) || a.to_bits() == b.to_bits())
    }
}

/// An ordered, labeled sequence of samples recorded for one driver.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trip {
    pub driver_id: String,
    pub samples: Vec<SensorSample>,
    pub nominal_rate_hz: f64,
}

impl Trip {
    /// Builds a trip, checking label, rate and timestamp ordering.
    pub fn new(
        driver_id: impl Into<String>,
        samples: Vec<SensorSample>,
        nominal_rate_hz: f64,
    ) -> Result<Self, IngestError> {
        let driver_id = driver_id.into();
        if driver_id.trim().is_empty() {
            return Err(IngestError::InvalidTrip("driver_id is empty".into()));
        }
        if !(nominal_rate_hz.is_finite() && nominal_rate_hz > 0.0) {
            return Err(IngestError::InvalidTrip(format!(
                "nominal rate must be positive, got {nominal_rate_hz}"
            )));
        }
        for (i, s) in samples.iter().enumerate() {
            if !(s.t.is_finite() && s.t >= 0.0) {
                return Err(IngestError::InvalidTrip(format!(
                    "sample {i} has invalid timestamp {}",
                    s.t
                )));
            }
            if s.channels.iter().any(|v| v.is_infinite()) {
                return Err(IngestError::InvalidTrip(format!(
                    "sample {i} has an infinite channel value"
                )));
            }
        }
        if let Some(i) = samples.windows(2).position(|w| w[1].t <= w[0].t) {
            return Err(IngestError::InvalidTrip(format!(
                "timestamps not strictly increasing at sample {}",
                i + 1
            )));
        }
        Ok(Self {
            driver_id,
            samples,
            nominal_rate_hz,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn period(&self) -> f64 {
        1.0 / self.nominal_rate_hz
    }

    /// Duration covered by the samples, counting one nominal period per sample.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.period()
    }

    /// Bitwise equality (missing markers compare equal).
    pub fn same_as(&self, other: &Trip) -> bool {
        self.driver_id == other.driver_id
            && self.nominal_rate_hz.to_bits() == other.nominal_rate_hz.to_bits()
            && self.samples.len() == other.samples.len()
            && self
                .samples
                .iter()
                .zip(other.samples.iter())
                .all(|(a, b)| a.same_as(b))
    }
}

/// Result of parsing one log.
#[derive(Debug, Clone)]
pub struct ParsedLog {
    pub trip: Trip,
    /// 1-based line numbers of rows dropped for an unparseable timestamp.
    pub rejected_lines: Vec<u64>,
}

fn parse_value(field: &str) -> f64 {
    match field.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => v,
        _ => f64::NAN,
    }
}

/// Parses a trip log.
///
/// Unparseable channel values become missing markers. Rows whose timestamp
/// cannot be parsed (or is negative) are dropped and reported in
/// [`ParsedLog::rejected_lines`].
pub fn parse_log<R: Read>(
    source: R,
    driver_id: &str,
    rate_hz: f64,
) -> Result<ParsedLog, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let mut records = reader.records();

    let header = match records.next() {
        None => return Err(IngestError::EmptyLog),
        Some(r) => r?,
    };
    let header_fields: Vec<&str> = header.iter().collect();
    let first = header_fields.first().map(|f| f.trim_start_matches('\u{feff}'));
    let header_ok = header_fields.len() == LOG_HEADER.len()
        && first == Some(LOG_HEADER[0])
        && header_fields[1..] == LOG_HEADER[1..];
    if !header_ok {
        if header_fields.iter().all(|f| f.is_empty()) {
            return Err(IngestError::EmptyLog);
        }
        return Err(IngestError::MalformedHeader(header_fields.join(",")));
    }

    let mut samples = Vec::new();
    let mut rejected_lines = Vec::new();
    for record in records {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if record.len() > LOG_HEADER.len() {
            return Err(IngestError::TooManyFields {
                line,
                found: record.len(),
            });
        }
        let t = match record.get(0).map(str::parse::<f64>) {
            Some(Ok(t)) if t.is_finite() && t >= 0.0 => t,
            _ => {
                rejected_lines.push(line);
                continue;
            }
        };
        if let Some(prev) = samples.last().map(|s: &SensorSample| s.t) {
            if t <= prev {
                return Err(IngestError::NonMonotonic { line, t, prev });
            }
        }
        let mut channels = [f64::NAN; 6];
        for (c, slot) in channels.iter_mut().enumerate() {
            if let Some(field) = record.get(c + 1) {
                *slot = parse_value(field);
            }
        }
        samples.push(SensorSample { t, channels });
    }
    if samples.is_empty() {
        return Err(IngestError::EmptyLog);
    }
    let trip = Trip::new(driver_id, samples, rate_hz)?;
    Ok(ParsedLog {
        trip,
        rejected_lines,
    })
}

fn format_value(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        // Shortest representation that parses back to the same bits.
        format!("{v:?}")
    }
}

/// Writes samples in the canonical log format.
pub fn write_log<W: Write>(samples: &[SensorSample], mut sink: W) -> std::io::Result<()> {
    writeln!(sink, "{}", LOG_HEADER.join(","))?;
    for s in samples {
        let mut line = format_value(s.t);
        for v in s.channels {
            line.push(',');
            line.push_str(&format_value(v));
        }
        writeln!(sink, "{line}")?;
    }
    Ok(())
}

/// Serializes a trip to the canonical log format.
pub fn serialize_log(trip: &Trip) -> Vec<u8> {
    let mut out = Vec::with_capacity(trip.len() * 64);
    write_log(&trip.samples, &mut out).expect("writing to a Vec cannot fail");
    out
}

/// Summary counts of a parsed trip. Producing one never changes the trip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub samples: usize,
    /// Samples with at least one missing channel.
    pub missing: usize,
    /// Individual missing channel values.
    pub missing_values: usize,
    /// Inter-sample intervals longer than two nominal periods.
    pub gaps: usize,
}

pub fn validate_trip(trip: &Trip) -> ValidationReport {
    let gap_limit = 2.0 / trip.nominal_rate_hz;
    ValidationReport {
        samples: trip.samples.len(),
        missing: trip.samples.iter().filter(|s| s.has_missing()).count(),
        missing_values: trip
            .samples
            .iter()
            .map(|s| s.channels.iter().filter(|v| v.is_nan()).count())
            .sum(),
        gaps: trip
            .samples
            .windows(2)
            .filter(|w| w[1].t - w[0].t > gap_limit)
            .count(),
    }
}
