use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One learner judgement of a presented example.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionRecord {
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub sentence_id: String,
    pub method: String,
    pub edit_index: usize,
    /// 1 when the example was useful.
    pub label: u8,
    pub accepted: bool,
}

/// Usefulness rates published for the three retrieval methods, used as
/// historical rows in comparison sheets.
pub const REFERENCE_USEFULNESS: &str = include_str!("../../data/reference_usefulness.csv");

/// Reads one JSON record per line; blank lines are skipped.
pub fn read_decision_log(path: impl AsRef<Path>) -> Result<Vec<DecisionRecord>> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: DecisionRecord = serde_json::from_str(line).map_err(|e| Error::Malformed {
            line: i + 1,
            reason: e.to_string(),
        })?;
        if rec.label > 1 {
            return Err(Error::Malformed {
                line: i + 1,
                reason: format!("label {} is not 0 or 1", rec.label),
            });
        }
        out.push(rec);
    }
    Ok(out)
}

/// `(useful, labelled)` per method.
pub fn usefulness_counts(records: &[DecisionRecord]) -> Result<BTreeMap<String, (usize, usize)>> {
    if records.is_empty() {
        return Err(Error::NoData("decision log is empty".into()));
    }
    let mut m: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for r in records {
        let c = m.entry(r.method.clone()).or_default();
        c.0 += (r.label == 1) as usize;
        c.1 += 1;
    }
    Ok(m)
}

/// Percentage of examples labelled useful, per method.
pub fn usefulness_score(records: &[DecisionRecord]) -> Result<BTreeMap<String, f64>> {
    Ok(usefulness_counts(records)?
        .into_iter()
        .map(|(k, (useful, n))| (k, 100.0 * useful as f64 / n as f64))
        .collect())
}

/// `system,useful_pct` lines after a header.
pub fn parse_reference(text: &str) -> Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |reason: &str| Error::Malformed {
            line: i + 1,
            reason: reason.to_string(),
        };
        let (name, pct) = line.rsplit_once(',').ok_or_else(|| malformed("expected system,useful_pct"))?;
        let pct: f64 = pct.trim().parse().map_err(|_| malformed("percentage is not a number"))?;
        out.push((name.trim().to_string(), pct));
    }
    Ok(out)
}

/// CSV comparing measured rates with reference rows. With `anonymize`,
/// measured methods become "system A", "system B", ... in an order
/// shuffled by the given seed.
pub fn comparison_sheet(
    counts: &BTreeMap<String, (usize, usize)>,
    reference: &[(String, f64)],
    anonymize: Option<u64>,
) -> String {
    let mut rows: Vec<(&String, &(usize, usize))> = counts.iter().collect();
    if let Some(seed) = anonymize {
        rows.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let mut out = String::from("system,useful_pct,labels,source\n");
    for (i, (name, &(useful, n))) in rows.into_iter().enumerate() {
        let label = match anonymize {
            Some(_) => format!("system {}", (b'A' + (i % 26) as u8) as char),
            None => name.clone(),
        };
        out.push_str(&format!(
            "{label},{:.1},{n},measured\n",
            100.0 * useful as f64 / n as f64
        ));
    }
    for (name, pct) in reference {
        out.push_str(&format!("{name},{pct:.1},,historical\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(method: &str, label: u8) -> DecisionRecord {
        DecisionRecord {
            timestamp: 0,
            sentence_id: "s".into(),
            method: method.into(),
            edit_index: 0,
            label,
            accepted: true,
        }
    }

    #[test]
    fn three_of_four_is_75() {
        let log: Vec<_> = [1, 1, 0, 1].into_iter().map(|l| rec("eb", l)).collect();
        assert_eq!(usefulness_score(&log).unwrap()["eb"], 75.0);
    }

    #[test]
    fn all_zero_and_empty() {
        let log = vec![rec("token", 0), rec("token", 0)];
        assert_eq!(usefulness_score(&log).unwrap()["token"], 0.0);
        assert!(matches!(usefulness_score(&[]), Err(Error::NoData(_))));
    }

    #[test]
    fn reference_values_parse_and_render() {
        let refs = parse_reference(REFERENCE_USEFULNESS).unwrap();
        let pcts: Vec<f64> = refs.iter().map(|r| r.1).collect();
        assert_eq!(pcts, vec![28.8, 52.4, 68.8]);
        let counts = usefulness_counts(&[rec("eb", 1), rec("embed", 0)]).unwrap();
        let sheet = comparison_sheet(&counts, &refs, None);
        assert!(sheet.contains("eb,100.0,1,measured"));
        assert!(sheet.contains(",68.8,,historical"));
    }

    #[test]
    fn anonymized_sheet_hides_method_names() {
        let counts = usefulness_counts(&[rec("eb", 1), rec("embed", 0), rec("token", 1)]).unwrap();
        let sheet = comparison_sheet(&counts, &[], Some(3));
        for name in ["eb,", "embed,", "token,"] {
            assert!(!sheet.contains(name));
        }
        assert!(sheet.contains("system A") && sheet.contains("system C"));
    }
}
