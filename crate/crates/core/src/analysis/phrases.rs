use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate};
use serde::Serialize;

use crate::dataset::DatasetRow;

/// Entries mentioning any of `phrases`, per periodical and `YYYY-MM` month.
/// Every month seen in the data is present, with zero if nothing matched.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PhraseSeries {
    pub phrases: Vec<String>,
    pub counts: BTreeMap<(String, String), u64>,
}

/// Count entries (not mentions) whose text contains any phrase,
/// ignoring case. Rows with an unparseable date are skipped with a warning.
pub fn phrase_series(rows: &[DatasetRow], phrases: &[String]) -> PhraseSeries {
    let needles: Vec<String> = phrases.iter().map(|p| p.to_lowercase()).filter(|p| !p.is_empty()).collect();
    let mut counts: BTreeMap<(String, String), u64> = BTreeMap::new();
    let mut skipped = 0usize;
    for row in rows {
        let Ok(date) = NaiveDate::parse_from_str(&row.issue_date, "%Y-%m-%d") else {
            skipped += 1;
            continue;
        };
        let month = format!("{:04}-{:02}", date.year(), date.month());
        let hay = row.text.to_lowercase();
        let hit = needles.iter().any(|n| hay.contains(n.as_str()));
        *counts.entry((row.periodical.clone(), month)).or_insert(0) += u64::from(hit);
    }
    if skipped > 0 {
        log::warn!("{skipped} rows without a parseable issue date skipped");
    }
    PhraseSeries { phrases: phrases.to_vec(), counts }
}
