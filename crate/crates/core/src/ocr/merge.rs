use crate::eval::levenshtein;

/// Minimum per-line similarity for two transcribed lines to count as the
/// same printed line.
pub const LINE_MATCH_THRESHOLD: f64 = 0.8;

fn norm_line(s: &str) -> Vec<char> {
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
        .chars()
        .collect()
}

/// `1 - distance / longer length` on whitespace- and case-normalized lines.
pub fn line_similarity(a: &str, b: &str) -> f64 {
    let (a, b) = (norm_line(a), norm_line(b));
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 1.0;
    }
    1.0 - levenshtein(&a, &b) as f64 / longest as f64
}

fn overlap_lines(prev: &[String], next: &[&str]) -> usize {
    let max = prev.len().min(next.len());
    (1..=max)
        .rev()
        .find(|&k| {
            let tail = &prev[prev.len() - k..];
            tail.iter()
                .zip(&next[..k])
                .all(|(a, b)| line_similarity(a, b) >= LINE_MATCH_THRESHOLD)
        })
        .unwrap_or(0)
}

/// Join per-tile transcripts, top to bottom, dropping the lines each tile
/// repeats from the one above.
///
/// For each tile the longest run of leading lines that matches the tail of
/// the text so far is removed. Without any match the tile is appended on a
/// new line. `overlap_fraction` is the tiling overlap; matching does not
/// depend on it beyond the text itself.
pub fn merge_tile_texts<S: AsRef<str>>(tile_texts: &[S], overlap_fraction: f64) -> String {
    let _ = overlap_fraction;
    let mut lines: Vec<String> = Vec::new();
    for (i, tile) in tile_texts.iter().enumerate() {
        let next: Vec<&str> = tile.as_ref().lines().collect();
        let skip = if i == 0 { 0 } else { overlap_lines(&lines, &next) };
        lines.extend(next[skip..].iter().map(|s| s.to_string()));
    }
    lines.join("\n")
}
