use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::AnalysisError;
use crate::dataset::DatasetRow;
use crate::exec::Execution;
use crate::layout::BoxClass;

/// Word, sentence and syllable counts behind a Flesch score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TextCounts {
    pub words: usize,
    pub sentences: usize,
    pub syllables: usize,
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

/// Vowel groups (`y` counts as a vowel), less one for a silent final `e`
/// that is not part of `-le`, never below 1.
pub fn count_syllables(word: &str) -> usize {
    let letters: Vec<char> = word.chars().filter(|c| c.is_alphabetic()).flat_map(char::to_lowercase).collect();
    let mut groups = 0;
    let mut prev = false;
    for &c in &letters {
        let v = is_vowel(c);
        if v && !prev {
            groups += 1;
        }
        prev = v;
    }
    let n = letters.len();
    if groups > 1 && n >= 2 && letters[n - 1] == 'e' && !is_vowel(letters[n - 2]) && letters[n - 2] != 'l' {
        groups -= 1;
    }
    groups.max(1)
}

/// Words are whitespace tokens holding a letter; sentences are the pieces
/// between runs of `.`, `!`, `?` that contain a word.
pub fn text_counts(text: &str) -> TextCounts {
    let mut counts = TextCounts { words: 0, sentences: 0, syllables: 0 };
    for piece in text.split(['.', '!', '?']) {
        let mut any = false;
        for token in piece.split_whitespace().filter(|t| t.chars().any(char::is_alphabetic)) {
            any = true;
            counts.words += 1;
            counts.syllables += count_syllables(token);
        }
        if any {
            counts.sentences += 1;
        }
    }
    counts
}

/// `206.835 - 1.015 * words/sentences - 84.6 * syllables/words`.
pub fn flesch_reading_ease(text: &str) -> Result<f64, AnalysisError> {
    let c = text_counts(text);
    if c.words == 0 {
        return Err(AnalysisError::NoWords);
    }
    let (w, s, y) = (c.words as f64, c.sentences as f64, c.syllables as f64);
    Ok(206.835 - 1.015 * (w / s) - 84.6 * (y / w))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BootstrapEstimate {
    pub median: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReadabilityEstimate {
    pub periodical: String,
    pub texts: usize,
    pub estimate: BootstrapEstimate,
}

fn sorted_median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Linear-interpolation percentile (`q` in `[0, 1]`) of sorted data.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Median of `samples` resamples-with-replacement medians, with a 95%
/// percentile interval. Resample `i` draws from its own ChaCha stream of
/// `seed`, so the result does not depend on `exec`.
pub fn bootstrap_median(values: &[f64], samples: usize, seed: u64, exec: Execution) -> Result<BootstrapEstimate, AnalysisError> {
    if values.is_empty() || samples == 0 {
        return Err(AnalysisError::Empty);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(AnalysisError::NotFinite);
    }
    let n = values.len();
    let mut medians = exec.map_range(samples, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let mut draw: Vec<f64> = (0..n).map(|_| values[rng.gen_range(0..n)]).collect();
        draw.sort_by(f64::total_cmp);
        sorted_median(&draw)
    });
    medians.sort_by(f64::total_cmp);
    Ok(BootstrapEstimate {
        median: percentile(&medians, 0.5),
        ci_low: percentile(&medians, 0.025),
        ci_high: percentile(&medians, 0.975),
        samples,
    })
}

/// Bootstrapped median Flesch score of each periodical's text boxes,
/// sorted by periodical. Periodical `k` (in name order) uses seed `seed + k`.
pub fn readability_by_periodical(
    rows: &[DatasetRow],
    samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<ReadabilityEstimate>, AnalysisError> {
    let mut groups: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for row in rows.iter().filter(|r| r.class == BoxClass::Text) {
        groups.entry(row.periodical.as_str()).or_default().push(row.text.as_str());
    }
    let mut out = Vec::new();
    for (k, (periodical, texts)) in groups.into_iter().enumerate() {
        let scores: Vec<f64> = exec.map(&texts, |t| flesch_reading_ease(t).ok()).into_iter().flatten().collect();
        if scores.is_empty() {
            log::warn!("{periodical}: no scorable text, skipped");
            continue;
        }
        out.push(ReadabilityEstimate {
            periodical: periodical.to_string(),
            texts: scores.len(),
            estimate: bootstrap_median(&scores, samples, seed.wrapping_add(k as u64), exec)?,
        });
    }
    Ok(out)
}
