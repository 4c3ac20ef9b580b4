use std::collections::BTreeMap;

use serde::Serialize;

use super::AnalysisError;
use crate::dataset::{DatasetRow, Topic};

/// Share of a periodical's labelled entries in each topic, indexed like
/// [`Topic::ALL`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopicDistribution {
    pub periodical: String,
    pub probs: Vec<f64>,
}

/// Topic shares per periodical over rows with a topic label, sorted by
/// periodical. Periodicals without any labelled row are left out.
pub fn topic_distributions(rows: &[DatasetRow]) -> Vec<TopicDistribution> {
    let mut counts: BTreeMap<&str, Vec<u64>> = BTreeMap::new();
    for row in rows {
        if let Some(t) = row.topic {
            counts.entry(row.periodical.as_str()).or_insert_with(|| vec![0; Topic::ALL.len()])[t.index()] += 1;
        }
    }
    counts
        .into_iter()
        .map(|(p, c)| {
            let total: u64 = c.iter().sum();
            TopicDistribution { periodical: p.to_string(), probs: c.iter().map(|&n| n as f64 / total as f64).collect() }
        })
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn cosine_similarity(a: &TopicDistribution, b: &TopicDistribution) -> Result<f64, AnalysisError> {
    if a.probs.len() != b.probs.len() {
        return Err(AnalysisError::Dimension(a.probs.len(), b.probs.len()));
    }
    let (na, nb) = (norm(&a.probs), norm(&b.probs));
    if na == 0.0 {
        return Err(AnalysisError::ZeroVector(a.periodical.clone()));
    }
    if nb == 0.0 {
        return Err(AnalysisError::ZeroVector(b.periodical.clone()));
    }
    let dot: f64 = a.probs.iter().zip(&b.probs).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

pub fn similarity_matrix(dists: &[TopicDistribution]) -> Result<Vec<Vec<f64>>, AnalysisError> {
    let n = dists.len();
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let s = cosine_similarity(&dists[i], &dists[j])?;
            m[i][j] = s;
            m[j][i] = s;
        }
    }
    Ok(m)
}

/// One agglomeration step. Leaves are numbered `0..n` in name order, the
/// cluster formed at step `k` gets number `n + k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
    /// Periodicals in the new cluster, sorted.
    pub members: Vec<String>,
}

struct Cluster {
    id: usize,
    members: Vec<String>,
}

/// Average-linkage agglomerative clustering on `1 - cosine` distance.
///
/// Each step joins the closest pair; equal distances go to the pair whose
/// (first name, second name) is lexicographically smallest, where a
/// cluster's name is its smallest member name.
pub fn hcluster(dists: &[TopicDistribution]) -> Result<Vec<Merge>, AnalysisError> {
    if dists.len() < 2 {
        return Err(AnalysisError::TooFew(dists.len()));
    }
    let mut sorted: Vec<&TopicDistribution> = dists.iter().collect();
    sorted.sort_by(|a, b| a.periodical.cmp(&b.periodical));
    let n = sorted.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = 1.0 - cosine_similarity(sorted[i], sorted[j])?;
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    let mut clusters: Vec<Option<Cluster>> = sorted
        .iter()
        .enumerate()
        .map(|(i, t)| Some(Cluster { id: i, members: vec![t.periodical.clone()] }))
        .collect();

    let mut merges = Vec::with_capacity(n - 1);
    for step in 0..n - 1 {
        let mut best: Option<(f64, &str, &str, usize, usize)> = None;
        for i in 0..n {
            let Some(ci) = &clusters[i] else { continue };
            for j in i + 1..n {
                let Some(cj) = &clusters[j] else { continue };
                let (a, b) = (ci.members[0].as_str(), cj.members[0].as_str());
                let (a, b) = if a <= b { (a, b) } else { (b, a) };
                let better = match best {
                    None => true,
                    Some((bd, ba, bb, _, _)) => d[i][j] < bd || (d[i][j] == bd && (a, b) < (ba, bb)),
                };
                if better {
                    best = Some((d[i][j], a, b, i, j));
                }
            }
        }
        let (height, _, _, i, j) = best.expect("two live clusters");
        let cj = clusters[j].take().expect("live");
        let ci = clusters[i].take().expect("live");
        let (ni, nj) = (ci.members.len() as f64, cj.members.len() as f64);
        for k in 0..n {
            if k != i && clusters[k].is_some() {
                let v = (ni * d[i][k] + nj * d[j][k]) / (ni + nj);
                d[i][k] = v;
                d[k][i] = v;
            }
        }
        let (left, right) = if ci.members[0] <= cj.members[0] { (ci.id, cj.id) } else { (cj.id, ci.id) };
        let mut members = ci.members;
        members.extend(cj.members);
        members.sort();
        merges.push(Merge { left, right, height, size: members.len(), members: members.clone() });
        clusters[i] = Some(Cluster { id: n + step, members });
    }
    Ok(merges)
}
