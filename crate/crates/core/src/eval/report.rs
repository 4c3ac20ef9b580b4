use std::collections::BTreeMap;
use std::path::Path;

use log::warn;
use serde::Serialize;

use super::{EvalError, EvalPair};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupReport {
    pub group: String,
    /// Pairs with a finite error rate.
    pub pairs: usize,
    /// Empty-reference pairs, excluded from every statistic below.
    pub degenerate: usize,
    pub median_cer: f64,
    pub mean_cer: f64,
    pub frac_zero: f64,
    pub frac_below_0_1: f64,
}

/// Median of a non-empty slice (mean of the two middle values for even
/// lengths). Returns NaN for an empty slice.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Per-group median and mean CER plus the share of perfect and near-perfect
/// transcriptions. Groups are keyed by `group_key` and come back sorted.
pub fn aggregate_report<F>(pairs: &[EvalPair], group_key: F) -> Vec<GroupReport>
where
    F: Fn(&EvalPair) -> String,
{
    let mut groups: BTreeMap<String, (Vec<f64>, usize)> = BTreeMap::new();
    for p in pairs {
        let entry = groups.entry(group_key(p)).or_default();
        if p.is_degenerate() {
            entry.1 += 1;
        } else {
            entry.0.push(p.cer);
        }
    }
    let mut out = Vec::new();
    for (group, (values, degenerate)) in groups {
        if values.is_empty() {
            warn!("group {group:?} has no scorable pairs, skipped");
            continue;
        }
        let n = values.len() as f64;
        out.push(GroupReport {
            median_cer: median(&values),
            mean_cer: values.iter().sum::<f64>() / n,
            frac_zero: values.iter().filter(|&&v| v == 0.0).count() as f64 / n,
            frac_below_0_1: values.iter().filter(|&&v| v < 0.1).count() as f64 / n,
            pairs: values.len(),
            degenerate,
            group,
        });
    }
    out
}

pub fn write_report_csv(path: &Path, rows: &[GroupReport]) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|source| EvalError::Io { path: path.to_path_buf(), source })
}
