/// Default shortest repeated unit, in characters.
pub const DEFAULT_MIN_UNIT: usize = 8;
/// Default number of back-to-back copies that counts as a loop.
pub const DEFAULT_MIN_REPEATS: usize = 5;

/// True iff some substring of at least `min_unit` characters occurs at
/// least `min_repeats` times back to back.
///
/// A unit of length `p` repeated `k` times is exactly a run of
/// `(k - 1) * p` positions where `s[i] == s[i + p]`, so each period is one
/// linear scan.
pub fn detect_repetition(text: &str, min_unit: usize, min_repeats: usize) -> bool {
    let chars: Vec<char> = text.chars().collect();
    let n = chars.len();
    let min_unit = min_unit.max(1);
    if min_repeats <= 1 {
        return n >= min_unit;
    }
    for period in min_unit..=n / min_repeats {
        let need = (min_repeats - 1) * period;
        let mut run = 0;
        for i in 0..n - period {
            if chars[i] == chars[i + period] {
                run += 1;
                if run >= need {
                    return true;
                }
            } else {
                run = 0;
            }
        }
    }
    false
}
