//! Manifest: CSV with header `path,driver_id,rate_hz`. Relative paths are
//! resolved against the manifest's directory; an empty rate means 2 Hz.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use driverid_core::ingest::DEFAULT_RATE_HZ;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub driver_id: String,
    pub rate_hz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    /// File stem of the manifest.
    pub name: String,
    pub entries: Vec<ManifestEntry>,
}

#[derive(Deserialize)]
struct Row {
    path: String,
    driver_id: String,
    rate_hz: Option<f64>,
}

impl Manifest {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read manifest {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into());
        Self::parse(&text, base, name).with_context(|| format!("invalid manifest {}", path.display()))
    }

    pub fn parse(text: &str, base: &Path, name: String) -> anyhow::Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["path", "driver_id", "rate_hz"] {
            bail!("header must be `path,driver_id,rate_hz`");
        }
        let mut entries = Vec::new();
        let mut seen = HashSet::new();
        for (i, row) in reader.deserialize::<Row>().enumerate() {
            let line = i + 2;
            let row = row.with_context(|| format!("line {line}"))?;
            if row.driver_id.is_empty() {
                bail!("line {line}: driver_id is empty");
            }
            let rate_hz = row.rate_hz.unwrap_or(DEFAULT_RATE_HZ);
            if !(rate_hz.is_finite() && rate_hz > 0.0) {
                bail!("line {line}: rate_hz must be positive");
            }
            let path = base.join(&row.path);
            if !seen.insert(path.clone()) {
                bail!("line {line}: duplicate path {}", row.path);
            }
            entries.push(ManifestEntry {
                path,
                driver_id: row.driver_id,
                rate_hz,
            });
        }
        if entries.is_empty() {
            bail!("no entries");
        }
        Ok(Self { name, entries })
    }
}

/// Renders `(path, driver_id, rate_hz)` rows as manifest text.
pub fn write_manifest(entries: &[(String, String, f64)]) -> String {
    let mut out = String::from("path,driver_id,rate_hz\n");
    for (path, driver, rate) in entries {
        out.push_str(&format!("{path},{driver},{rate}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_entries_relative_to_base() {
        let m = Manifest::parse(
            "path,driver_id,rate_hz\na.csv,d1,2\nb.csv,d2,\n",
            Path::new("/data"),
            "set".into(),
        )
        .unwrap();
        assert_eq!(m.entries.len(), 2);
        assert_eq!(m.entries[0].path, PathBuf::from("/data/a.csv"));
        assert_eq!(m.entries[1].rate_hz, 2.0);
    }

    #[test]
    fn rejects_bad_manifests() {
        let base = Path::new("");
        assert!(Manifest::parse("path,driver_id,rate_hz\n", base, "x".into()).is_err());
        assert!(Manifest::parse("path,driver\na.csv,d\n", base, "x".into()).is_err());
        assert!(Manifest::parse("path,driver_id,rate_hz\na.csv,,2\n", base, "x".into()).is_err());
        assert!(
            Manifest::parse("path,driver_id,rate_hz\na.csv,d,2\na.csv,e,2\n", base, "x".into()).is_err()
        );
    }
}
