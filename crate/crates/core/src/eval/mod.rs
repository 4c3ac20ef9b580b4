//! OCR and classification scoring: normalized character error rate,
//! median/mean aggregation, and precision/recall/F1 with micro and macro
//! averages.

mod cer;
mod f1;
mod report;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::exec::Execution;

pub use cer::{cer, edit_counts, levenshtein, normalize_text, EditCounts};
pub use f1::{f1_scores, ClassScore, LabelEval};
pub use report::{aggregate_report, median, write_report_csv, GroupReport};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("empty reference with a {hypothesis_len}-character hypothesis has no finite error rate")]
    EmptyReference { hypothesis_len: usize },
    #[error("gold and predicted label sequences differ in length ({gold} vs {predicted})")]
    LengthMismatch { gold: usize, predicted: usize },
    #[error("label {0:?} is not in the declared class set")]
    UnknownLabel(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// One scored reference/hypothesis pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalPair {
    pub id: String,
    pub group: String,
    pub reference: String,
    pub hypothesis: String,
    pub counts: EditCounts,
    /// `f64::INFINITY` for an empty reference with a non-empty hypothesis.
    pub cer: f64,
}

impl EvalPair {
    pub fn new(id: impl Into<String>, group: impl Into<String>, reference: String, hypothesis: String) -> Self {
        let (counts, rate) = match cer(&reference, &hypothesis) {
            Ok(v) => v,
            Err(_) => {
                let r: Vec<char> = normalize_text(&reference).chars().collect();
                let h: Vec<char> = normalize_text(&hypothesis).chars().collect();
                (edit_counts(&r, &h), f64::INFINITY)
            }
        };
        EvalPair { id: id.into(), group: group.into(), reference, hypothesis, counts, cer: rate }
    }

    pub fn is_degenerate(&self) -> bool {
        !self.cer.is_finite()
    }
}

/// Score `(id, group, reference, hypothesis)` tuples.
pub fn evaluate_pairs(items: &[(String, String, String, String)], exec: Execution) -> Vec<EvalPair> {
    exec.map(items, |(id, group, r, h)| EvalPair::new(id.clone(), group.clone(), r.clone(), h.clone()))
}

/// Ground-truth side of a test set: `<id>.txt` files, each optionally
/// paired with a `<id>.png` crop. Sorted by id.
pub fn read_ground_truth(dir: &Path) -> Result<Vec<(String, String, Option<PathBuf>)>, EvalError> {
    let io = |source| EvalError::Io { path: dir.to_path_buf(), source };
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("txt") {
            continue;
        }
        let Some(id) = path.file_stem().and_then(|s| s.to_str()).map(str::to_string) else {
            continue;
        };
        let text = std::fs::read_to_string(&path).map_err(|source| EvalError::Io { path: path.clone(), source })?;
        let png = path.with_extension("png");
        out.push((id, text, png.exists().then_some(png)));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}
