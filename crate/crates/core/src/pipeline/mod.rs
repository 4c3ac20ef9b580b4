//! End-to-end orchestration: detections and page images in, an ordered,
//! labelled box-level dataset and per-page articles out, with every stage
//! written to disk so a run can resume where it stopped.

mod config;
mod evaluate;
mod labels;
mod run;
mod score;

use std::path::PathBuf;

use regex::Regex;

pub use config::{AnalysisConfig, Paths, PeriodicalOverride, PipelineConfig, DEFAULT_PAGE_ID_PATTERN};
pub use evaluate::{default_group, evaluate_test_set, Hypotheses};
pub use labels::{ingest_labels, LabelLine, LabelReport};
pub use run::{
    assemble_page, ocr_jobs, run_pipeline, PageStatus, RunManifest, RunStats, TokenTotals, STAGES,
};
pub use score::{score_rows, write_score_csv, ScoreRow};

use crate::analysis::AnalysisError;
use crate::eval::EvalError;
use crate::imaging::ImageError;
use crate::jsonl::JsonlError;
use crate::ocr::OcrError;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Ocr(#[from] OcrError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("{path}:{line}: {message}")]
    Labels { path: PathBuf, line: usize, message: String },
}

/// Periodical, issue date and page number parsed from a page id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PageInfo {
    pub periodical: String,
    pub issue_date: String,
    pub page: Option<u32>,
}

/// Split a page id with `pattern` (named groups `periodical`, `date`,
/// `page`). Ids that do not match keep the whole id as periodical.
pub fn parse_page_id(pattern: &Regex, page_id: &str) -> PageInfo {
    match pattern.captures(page_id) {
        Some(c) => PageInfo {
            periodical: c.name("periodical").map_or(page_id, |m| m.as_str()).to_string(),
            issue_date: c.name("date").map_or("", |m| m.as_str()).to_string(),
            page: c.name("page").and_then(|m| m.as_str().parse().ok()),
        },
        None => PageInfo { periodical: page_id.to_string(), issue_date: String::new(), page: None },
    }
}
