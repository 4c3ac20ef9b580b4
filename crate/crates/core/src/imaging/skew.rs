use image::{GrayImage, Luma};
use log::warn;

use crate::exec::Execution;

/// Pixels darker than this count as ink.
const INK_THRESHOLD: u8 = 128;

/// Minimum relative spread of the profile score across candidate angles
/// for the estimate to be trusted.
const MIN_CONTRAST: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkewEstimate {
    /// Rotation of the content; rotating by the negated angle straightens it.
    pub degrees: f64,
    /// Set when the image had no usable structure and 0.0 was returned.
    pub degenerate: bool,
}

/// Sum of squared row counts of the ink projected onto the axis
/// perpendicular to `degrees`. Maximal when text lines run along it.
fn profile_score(ink: &[(f64, f64)], degrees: f64, bins: usize) -> f64 {
    let (s, c) = degrees.to_radians().sin_cos();
    let offset = bins as f64 / 2.0;
    let mut counts = vec![0u32; bins];
    for &(x, y) in ink {
        let v = -x * s + y * c + offset;
        let bin = v.floor();
        if bin >= 0.0 && (bin as usize) < bins {
            counts[bin as usize] += 1;
        }
    }
    counts.iter().map(|&n| (n as f64) * (n as f64)).sum()
}

/// Estimate page rotation by maximizing projection-profile variance over
/// `[-range, range]` in steps of `step` degrees.
///
/// Blank pages and pages whose profile barely changes with angle (noise)
/// return 0.0 with a warning.
pub fn estimate_skew(img: &GrayImage, range: f64, step: f64) -> SkewEstimate {
    estimate_skew_with(img, range, step, Execution::default())
}

/// [`estimate_skew`] with an explicit execution mode for the angle sweep.
pub fn estimate_skew_with(img: &GrayImage, range: f64, step: f64, exec: Execution) -> SkewEstimate {
    let (cx, cy) = (img.width() as f64 / 2.0, img.height() as f64 / 2.0);
    let ink: Vec<(f64, f64)> = img
        .enumerate_pixels()
        .filter(|(_, _, p)| p.0[0] < INK_THRESHOLD)
        .map(|(x, y, _)| (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy))
        .collect();
    let flat = SkewEstimate { degrees: 0.0, degenerate: true };
    if ink.is_empty() || step <= 0.0 {
        warn!("skew estimation: blank image");
        return flat;
    }

    let diag = ((img.width() as f64).hypot(img.height() as f64)).ceil() as usize + 2;
    let n = (range / step).round() as i64;
    let angles: Vec<f64> = (-n..=n).map(|k| k as f64 * step).collect();
    let scores = exec.map(&angles, |&a| profile_score(&ink, a, diag));

    let mut best = 0;
    for i in 1..angles.len() {
        let better = scores[i] > scores[best]
            || (scores[i] == scores[best] && angles[i].abs() < angles[best].abs());
        if better {
            best = i;
        }
    }
    let max = scores[best];
    let min = scores.iter().cloned().fold(f64::INFINITY, f64::min);
    if max <= 0.0 || (max - min) / max < MIN_CONTRAST {
        warn!("skew estimation: no dominant line direction");
        return flat;
    }
    SkewEstimate { degrees: angles[best], degenerate: false }
}

/// Rotate about the image center by `degrees` (positive turns the x axis
/// toward +y), nearest-neighbour, white background, same canvas size.
pub fn rotate_gray(img: &GrayImage, degrees: f64) -> GrayImage {
    let (s, c) = degrees.to_radians().sin_cos();
    let (w, h) = (img.width(), img.height());
    let (cx, cy) = (w as f64 / 2.0, h as f64 / 2.0);
    GrayImage::from_fn(w, h, |x, y| {
        let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
        let sx = c * dx + s * dy + cx;
        let sy = -s * dx + c * dy + cy;
        if sx >= 0.0 && sy >= 0.0 && (sx as u32) < w && (sy as u32) < h {
            *img.get_pixel(sx as u32, sy as u32)
        } else {
            Luma([255])
        }
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// White page with rows of black "words" separated by blank leading.
    pub(crate) fn text_page(w: u32, h: u32, seed: u64) -> GrayImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut img = GrayImage::from_pixel(w, h, Luma([255]));
        let mut y = 30;
        while y + 8 < h - 30 {
            let mut x = 30;
            while x < w - 60 {
                let len = rng.gen_range(10..40);
                for xx in x..(x + len).min(w - 30) {
                    for yy in y..y + 8 {
                        img.put_pixel(xx, yy, Luma([0]));
                    }
                }
                x += len + rng.gen_range(6..14);
            }
            y += 20;
        }
        img
    }

    #[test]
    fn horizontal_text_is_level() {
        let est = estimate_skew(&text_page(400, 400, 1), 5.0, 0.1);
        assert!(!est.degenerate);
        assert_eq!(est.degrees, 0.0);
    }

    #[test]
    fn recovers_small_rotation() {
        let page = text_page(500, 500, 2);
        for &theta in &[2.0, -3.5] {
            let est = estimate_skew(&rotate_gray(&page, theta), 5.0, 0.1);
            assert!((est.degrees - theta).abs() <= 0.2, "{theta} -> {}", est.degrees);
        }
    }

    #[test]
    fn blank_and_noise_are_degenerate() {
        let blank = GrayImage::from_pixel(100, 100, Luma([255]));
        assert!(estimate_skew(&blank, 5.0, 0.1).degenerate);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let noise = GrayImage::from_fn(300, 300, |_, _| Luma([if rng.gen_bool(0.5) { 0 } else { 255 }]));
        let est = estimate_skew(&noise, 5.0, 0.1);
        assert!(est.degenerate);
        assert_eq!(est.degrees, 0.0);
    }
}
