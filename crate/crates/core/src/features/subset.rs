use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::FeatureFamily;

/// A named combination of feature families, e.g. "Histogram and Mean".
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureSubset {
    families: Vec<FeatureFamily>,
}

impl FeatureSubset {
    pub fn new(mut families: Vec<FeatureFamily>) -> Self {
        families.sort();
        families.dedup();
        Self { families }
    }

    pub fn all() -> Self {
        Self::new(FeatureFamily::ALL.to_vec())
    }

    pub fn families(&self) -> &[FeatureFamily] {
        &self.families
    }

    pub fn contains(&self, family: FeatureFamily) -> bool {
        self.families.contains(&family)
    }

    /// Human label: "Mean", "Histogram and Mean",
    /// "Histogram, Mean, and Variance".
    pub fn label(&self) -> String {
        let names: Vec<&str> = self.families.iter().map(|f| f.label()).collect();
        match names.as_slice() {
            [] => String::new(),
            [one] => one.to_string(),
            [a, b] => format!("{a} and {b}"),
            [init @ .., last] => format!("{}, and {last}", init.join(", ")),
        }
    }

    /// Short key: `hist+mean+var`.
    pub fn key(&self) -> String {
        self.families
            .iter()
            .map(|f| f.key())
            .collect::<Vec<_>>()
            .join("+")
    }

    /// The single-family subsets, in family order.
    pub fn singles() -> Vec<Self> {
        FeatureFamily::ALL
            .into_iter()
            .map(|f| Self::new(vec![f]))
            .collect()
    }

    /// The distinct feature combinations of the reference accuracy table, in
    /// table order.
    pub fn reference_table() -> Vec<Self> {
        use FeatureFamily::*;
        let rows: [&[FeatureFamily]; 18] = [
            &[Histogram],
            &[Mean, Variance, Difference, Correlation],
            &[Histogram, Mean, Variance, Difference, Correlation],
            &[Histogram, Mean],
            &[Histogram, Variance],
            &[Histogram, Mean, Variance],
            &[Histogram, Mean, Variance, Difference],
            &[Histogram, Correlation],
            &[Histogram, Mean, Correlation],
            &[Mean],
            &[Variance],
            &[Difference],
            &[Correlation],
            &[Mean, Variance],
            &[Mean, Difference],
            &[Mean, Correlation],
            &[Mean, Variance, Difference],
            &[Mean, Variance, Correlation],
        ];
        rows.iter().map(|r| Self::new(r.to_vec())).collect()
    }
}

impl fmt::Display for FeatureSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

fn parse_family(token: &str) -> Option<FeatureFamily> {
    match token.trim().to_ascii_lowercase().as_str() {
        "hist" | "histogram" => Some(FeatureFamily::Histogram),
        "mean" => Some(FeatureFamily::Mean),
        "var" | "variance" => Some(FeatureFamily::Variance),
        "diff" | "difference" => Some(FeatureFamily::Difference),
        "corr" | "correlation" => Some(FeatureFamily::Correlation),
        _ => None,
    }
}

impl FromStr for FeatureSubset {
    type Err = String;

    /// Accepts `all`, short keys joined by `+`, or the human label.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("all") {
            return Ok(Self::all());
        }
        let normalized = s.replace(", and ", ",").replace(" and ", ",").replace('+', ",");
        let families = normalized
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(|t| parse_family(t).ok_or_else(|| format!("unknown feature family `{}`", t.trim())))
            .collect::<Result<Vec<_>, _>>()?;
        if families.is_empty() {
            return Err(format!("empty feature subset `{s}`"));
        }
        Ok(Self::new(families))
    }
}

impl Serialize for FeatureSubset {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.key())
    }
}

impl<'de> Deserialize<'de> for FeatureSubset {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_follow_table_wording() {
        let all = FeatureSubset::all();
        assert_eq!(all.label(), "Histogram, Mean, Variance, Difference, and Correlation");
        let table = FeatureSubset::reference_table();
        assert!(table.contains(&all));
        assert_eq!(table[3].label(), "Histogram and Mean");
        assert_eq!(table[9].label(), "Mean");
        let distinct: std::collections::HashSet<_> = table.iter().collect();
        assert_eq!(distinct.len(), table.len());
    }

    #[test]
    fn parses_keys_and_labels() {
        let a: FeatureSubset = "hist+mean".parse().unwrap();
        let b: FeatureSubset = "Histogram and Mean".parse().unwrap();
        assert_eq!(a, b);
        let c: FeatureSubset = "Histogram, Mean, Variance, Difference, and Correlation"
            .parse()
            .unwrap();
        assert_eq!(c, FeatureSubset::all());
        assert_eq!("all".parse::<FeatureSubset>().unwrap(), FeatureSubset::all());
        assert!("speed".parse::<FeatureSubset>().is_err());
    }
}
