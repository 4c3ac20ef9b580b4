use std::collections::{BTreeSet, HashMap};
use std::io::BufRead;
use std::path::Path;

use serde::Deserialize;

use super::PipelineError;
use crate::dataset::{DatasetRow, TextType, Topic};

/// One line of a labels file. Either label may be absent.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelLine {
    pub box_id: String,
    #[serde(default)]
    pub text_type: Option<TextType>,
    #[serde(default)]
    pub topic: Option<Topic>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelReport {
    pub applied: usize,
    /// Label lines whose box id is not in the dataset.
    pub unknown_ids: Vec<String>,
    /// Rows left without any label.
    pub unlabeled: usize,
}

/// Join text-type and topic labels from a JSONL file onto `rows`.
///
/// Malformed lines and values outside the closed label sets fail with the
/// line number. Unknown box ids are reported, not fatal.
pub fn ingest_labels(rows: &mut [DatasetRow], labels: &Path) -> Result<LabelReport, PipelineError> {
    let io = |source| PipelineError::Io { path: labels.to_path_buf(), source };
    let file = std::fs::File::open(labels).map_err(io)?;
    let mut by_id: HashMap<String, LabelLine> = HashMap::new();
    let mut order: Vec<String> = Vec::new();
    for (n, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: LabelLine = serde_json::from_str(&line).map_err(|e| PipelineError::Labels {
            path: labels.to_path_buf(),
            line: n + 1,
            message: e.to_string(),
        })?;
        if !by_id.contains_key(&parsed.box_id) {
            order.push(parsed.box_id.clone());
        }
        by_id.insert(parsed.box_id.clone(), parsed);
    }

    let known: BTreeSet<&str> = rows.iter().map(|r| r.box_id.as_str()).collect();
    let unknown_ids: Vec<String> = order.into_iter().filter(|id| !known.contains(id.as_str())).collect();
    let mut report = LabelReport { unknown_ids, ..Default::default() };
    for row in rows.iter_mut() {
        if let Some(l) = by_id.get(&row.box_id) {
            row.text_type = l.text_type.or(row.text_type);
            row.topic = l.topic.or(row.topic);
            report.applied += 1;
        }
        if row.text_type.is_none() && row.topic.is_none() {
            report.unlabeled += 1;
        }
    }
    if !report.unknown_ids.is_empty() {
        log::warn!("{}: {} labels for unknown box ids", labels.display(), report.unknown_ids.len());
    }
    if report.unlabeled > 0 {
        log::warn!("{} rows have no labels", report.unlabeled);
    }
    Ok(report)
}
