use std::collections::BTreeMap;
use std::path::Path;

use regex::Regex;

use super::{parse_page_id, PipelineError};
use crate::eval::median;
use crate::exec::Execution;
use crate::layout::PageLayout;
use crate::metrics::{score_layouts, Denominator};

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub page_id: String,
    pub coverage: f64,
    pub overlap: f64,
}

/// Per-page scores followed by `mean:<periodical>` and
/// `median:<periodical>` summary rows, periodicals in name order.
pub fn score_rows(pages: &[PageLayout], pattern: &Regex, denominator: Denominator, exec: Execution) -> Vec<ScoreRow> {
    let scores = score_layouts(pages, denominator, exec);
    let mut rows: Vec<ScoreRow> = pages
        .iter()
        .zip(&scores)
        .map(|(p, s)| ScoreRow { page_id: p.page_id.clone(), coverage: s.coverage, overlap: s.overlap })
        .collect();
    let mut groups: BTreeMap<String, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in &rows {
        let g = groups.entry(parse_page_id(pattern, &r.page_id).periodical).or_default();
        g.0.push(r.coverage);
        g.1.push(r.overlap);
    }
    for (name, (cov, ovl)) in groups {
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        rows.push(ScoreRow { page_id: format!("mean:{name}"), coverage: mean(&cov), overlap: mean(&ovl) });
        rows.push(ScoreRow { page_id: format!("median:{name}"), coverage: median(&cov), overlap: median(&ovl) });
    }
    rows
}

pub fn write_score_csv(path: &Path, rows: &[ScoreRow]) -> Result<(), PipelineError> {
    let wrap = |e: csv::Error| PipelineError::Eval(e.into());
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|source| PipelineError::Io { path: parent.to_path_buf(), source })?;
    }
    let mut w = csv::Writer::from_path(path).map_err(wrap)?;
    w.write_record(["page_id", "coverage", "overlap"]).map_err(wrap)?;
    for r in rows {
        w.write_record([r.page_id.clone(), format!("{}", r.coverage), format!("{}", r.overlap)]).map_err(wrap)?;
    }
    w.flush().map_err(|source| PipelineError::Io { path: path.to_path_buf(), source })
}
