//! Corpus analytics over the finished dataset: topic mixes and how similar
//! periodicals are, readability with bootstrapped medians, and monthly
//! counts of entries mentioning given phrases. Results go out as CSV.

mod phrases;
mod readability;
mod topics;

use std::path::{Path, PathBuf};

pub use phrases::{phrase_series, PhraseSeries};
pub use readability::{
    bootstrap_median, count_syllables, flesch_reading_ease, percentile, readability_by_periodical, text_counts,
    BootstrapEstimate, ReadabilityEstimate, TextCounts,
};
pub use topics::{cosine_similarity, hcluster, similarity_matrix, topic_distributions, Merge, TopicDistribution};

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("vector {0:?} is all zeros")]
    ZeroVector(String),
    #[error("dimension mismatch: {0} vs {1}")]
    Dimension(usize, usize),
    #[error("need at least 2 distributions to cluster, got {0}")]
    TooFew(usize),
    #[error("text has no words")]
    NoWords,
    #[error("no values to resample")]
    Empty,
    #[error("values must be finite")]
    NotFinite,
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, AnalysisError> {
    let wrap = |source: csv::Error| AnalysisError::Csv { path: path.to_path_buf(), source };
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| wrap(e.into()))?;
    }
    csv::Writer::from_path(path).map_err(wrap)
}

fn write_rows(path: &Path, rows: Vec<Vec<String>>) -> Result<(), AnalysisError> {
    let wrap = |source: csv::Error| AnalysisError::Csv { path: path.to_path_buf(), source };
    let mut w = csv_writer(path)?;
    for row in rows {
        w.write_record(&row).map_err(wrap)?;
    }
    w.flush().map_err(|e| wrap(e.into()))
}

/// Square cosine-similarity matrix with periodical names on both axes.
pub fn write_similarity_csv(path: &Path, dists: &[TopicDistribution]) -> Result<(), AnalysisError> {
    let m = similarity_matrix(dists)?;
    let mut rows = vec![std::iter::once("periodical".to_string())
        .chain(dists.iter().map(|d| d.periodical.clone()))
        .collect::<Vec<_>>()];
    for (d, row) in dists.iter().zip(m) {
        rows.push(std::iter::once(d.periodical.clone()).chain(row.iter().map(|v| format!("{v}"))).collect());
    }
    write_rows(path, rows)
}

pub fn write_topics_csv(path: &Path, dists: &[TopicDistribution]) -> Result<(), AnalysisError> {
    let mut rows = vec![vec!["periodical".to_string(), "topic".into(), "probability".into()]];
    for d in dists {
        for (t, p) in crate::dataset::Topic::ALL.iter().zip(&d.probs) {
            rows.push(vec![d.periodical.clone(), t.label().into(), format!("{p}")]);
        }
    }
    write_rows(path, rows)
}

pub fn write_merges_csv(path: &Path, merges: &[Merge]) -> Result<(), AnalysisError> {
    let mut rows = vec![vec!["step".to_string(), "left".into(), "right".into(), "height".into(), "size".into(), "members".into()]];
    for (i, m) in merges.iter().enumerate() {
        rows.push(vec![
            i.to_string(),
            m.left.to_string(),
            m.right.to_string(),
            format!("{}", m.height),
            m.size.to_string(),
            m.members.join(";"),
        ]);
    }
    write_rows(path, rows)
}

pub fn write_readability_csv(path: &Path, estimates: &[ReadabilityEstimate]) -> Result<(), AnalysisError> {
    let mut rows = vec![vec![
        "periodical".to_string(),
        "texts".into(),
        "median".into(),
        "ci_low".into(),
        "ci_high".into(),
        "bootstrap_samples".into(),
    ]];
    for e in estimates {
        rows.push(vec![
            e.periodical.clone(),
            e.texts.to_string(),
            format!("{}", e.estimate.median),
            format!("{}", e.estimate.ci_low),
            format!("{}", e.estimate.ci_high),
            e.estimate.samples.to_string(),
        ]);
    }
    write_rows(path, rows)
}

pub fn write_phrase_csv(path: &Path, series: &PhraseSeries) -> Result<(), AnalysisError> {
    let mut rows = vec![vec!["periodical".to_string(), "month".into(), "entries".into()]];
    for ((periodical, month), n) in &series.counts {
        rows.push(vec![periodical.clone(), month.clone(), n.to_string()]);
    }
    write_rows(path, rows)
}
