use serde::{Deserialize, Serialize};

use super::EvalError;

/// Lowercase, collapse every whitespace run (line breaks included) to one
/// space, trim both ends. Punctuation is kept.
pub fn normalize_text(s: &str) -> String {
    s.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Operation counts of a minimal unit-cost alignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EditCounts {
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    pub correct: usize,
}

impl EditCounts {
    pub fn errors(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }

    /// `S + D + C`, the reference length.
    pub fn reference_len(&self) -> usize {
        self.substitutions + self.deletions + self.correct
    }

    pub fn rate(&self) -> Option<f64> {
        match self.reference_len() {
            0 if self.errors() > 0 => None,
            0 => Some(0.0),
            n => Some(self.errors() as f64 / n as f64),
        }
    }
}

/// Plain Levenshtein distance with unit costs, two rows.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[derive(Clone, Copy, Default)]
struct Cell {
    cost: u32,
    subs: u32,
    dels: u32,
    ins: u32,
}

impl Cell {
    fn better(self, other: Cell) -> Cell {
        // Lower cost wins; on ties prefer fewer insertions, then fewer
        // deletions, so the split between S, D and I is deterministic.
        if (other.cost, other.ins, other.dels) < (self.cost, self.ins, self.dels) {
            other
        } else {
            self
        }
    }
}

/// Substitution, deletion, insertion and correct counts aligning
/// `reference` to `hypothesis` (raw, not normalized).
pub fn edit_counts(reference: &[char], hypothesis: &[char]) -> EditCounts {
    let m = hypothesis.len();
    let mut prev: Vec<Cell> = (0..=m)
        .map(|j| Cell { cost: j as u32, ins: j as u32, ..Default::default() })
        .collect();
    let mut cur = vec![Cell::default(); m + 1];
    for (i, r) in reference.iter().enumerate() {
        cur[0] = Cell { cost: i as u32 + 1, dels: i as u32 + 1, ..Default::default() };
        for (j, h) in hypothesis.iter().enumerate() {
            let diag = prev[j];
            let mut best = if r == h {
                diag
            } else {
                Cell { cost: diag.cost + 1, subs: diag.subs + 1, ..diag }
            };
            let up = prev[j + 1];
            best = best.better(Cell { cost: up.cost + 1, dels: up.dels + 1, ..up });
            let left = cur[j];
            best = best.better(Cell { cost: left.cost + 1, ins: left.ins + 1, ..left });
            cur[j + 1] = best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let end = prev[m];
    let (s, d) = (end.subs as usize, end.dels as usize);
    EditCounts {
        substitutions: s,
        deletions: d,
        insertions: end.ins as usize,
        correct: reference.len() - s - d,
    }
}

/// Character error rate `(S + D + I) / (S + D + C)` after normalizing both
/// sides. May exceed 1. An empty reference with a non-empty hypothesis is
/// an error since the rate is unbounded.
pub fn cer(reference: &str, hypothesis: &str) -> Result<(EditCounts, f64), EvalError> {
    let r: Vec<char> = normalize_text(reference).chars().collect();
    let h: Vec<char> = normalize_text(hypothesis).chars().collect();
    let counts = edit_counts(&r, &h);
    match counts.rate() {
        Some(rate) => Ok((counts, rate)),
        None => Err(EvalError::EmptyReference { hypothesis_len: h.len() }),
    }
}
