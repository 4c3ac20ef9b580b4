//! Coverage and overlap of a box set, measured on the page's pixel grid.
//!
//! A pixel `(i, j)` (row `i`, column `j`) lies in a box iff
//! `x1 <= j < x2` and `y1 <= i < y2`. Coverage is the fraction of page
//! pixels inside at least one box, overlap the fraction inside two or more.

use serde::{Deserialize, Serialize};

use crate::exec::Execution;
use crate::layout::{PageLayout, Rect};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayoutScore {
    pub coverage: f64,
    pub overlap: f64,
}

/// Which area the pixel counts are divided by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Denominator {
    /// Whole page, `w * h`.
    #[default]
    Page,
    /// Only the print area; boxes are clipped to it first.
    PrintArea,
}

/// Raw pixel counts behind a [`LayoutScore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PixelCounts {
    pub covered: u64,
    pub overlapped: u64,
    pub total: u64,
}

impl PixelCounts {
    pub fn score(&self) -> LayoutScore {
        if self.total == 0 {
            return LayoutScore { coverage: 0.0, overlap: 0.0 };
        }
        LayoutScore {
            coverage: self.covered as f64 / self.total as f64,
            overlap: self.overlapped as f64 / self.total as f64,
        }
    }
}

/// Dense per-pixel box count for a page.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageMask {
    pub width: usize,
    pub height: usize,
    pub counts: Vec<u32>,
}

impl CoverageMask {
    pub fn from_layout(layout: &PageLayout) -> Self {
        let (w, h) = (layout.width.max(0) as usize, layout.height.max(0) as usize);
        let mut counts = vec![0u32; w * h];
        let page = layout.page_rect();
        for b in &layout.boxes {
            let r = b.rect().intersect(&page);
            if r.is_empty() {
                continue;
            }
            for i in r.y1..r.y2 {
                let row = i as usize * w;
                for j in r.x1..r.x2 {
                    counts[row + j as usize] += 1;
                }
            }
        }
        CoverageMask { width: w, height: h, counts }
    }

    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.counts[row * self.width + col]
    }

    pub fn pixel_counts(&self) -> PixelCounts {
        PixelCounts {
            covered: self.counts.iter().filter(|&&c| c > 0).count() as u64,
            overlapped: self.counts.iter().filter(|&&c| c > 1).count() as u64,
            total: self.counts.len() as u64,
        }
    }
}

/// Covered and doubly-covered pixel counts of `rects` inside `area`, by a
/// sweep over vertical slabs between distinct box x-edges.
fn sweep_counts(rects: &[Rect], exec: Execution) -> (u64, u64) {
    let mut xs: Vec<i64> = rects.iter().flat_map(|r| [r.x1, r.x2]).collect();
    xs.sort_unstable();
    xs.dedup();
    if xs.len() < 2 {
        return (0, 0);
    }
    let per_slab = exec.map_range(xs.len() - 1, |s| {
        let (xa, xb) = (xs[s], xs[s + 1]);
        let mut events: Vec<(i64, i32)> = rects
            .iter()
            .filter(|r| r.x1 <= xa && r.x2 >= xb)
            .flat_map(|r| [(r.y1, 1), (r.y2, -1)])
            .collect();
        if events.is_empty() {
            return (0u64, 0u64);
        }
        events.sort_unstable();
        let (mut once, mut twice) = (0i64, 0i64);
        let mut depth = 0i32;
        let mut prev = events[0].0;
        for (y, delta) in events {
            let run = y - prev;
            if depth >= 1 {
                once += run;
            }
            if depth >= 2 {
                twice += run;
            }
            depth += delta;
            prev = y;
        }
        let width = (xb - xa) as u64;
        (once as u64 * width, twice as u64 * width)
    });
    per_slab
        .into_iter()
        .fold((0, 0), |(a, b), (c, d)| (a + c, b + d))
}

pub fn pixel_counts(layout: &PageLayout, denominator: Denominator, exec: Execution) -> PixelCounts {
    let area = match denominator {
        Denominator::Page => layout.page_rect(),
        Denominator::PrintArea => {
            let union = layout
                .print_area
                .or_else(|| layout.boxes.iter().map(|b| b.rect()).reduce(|a, b| a.union(&b)));
            match union {
                Some(r) => r.intersect(&layout.page_rect()),
                None => return PixelCounts::default(),
            }
        }
    };
    if area.is_empty() {
        return PixelCounts::default();
    }
    let rects: Vec<Rect> = layout
        .boxes
        .iter()
        .map(|b| b.rect().intersect(&area))
        .filter(|r| !r.is_empty())
        .collect();
    let (covered, overlapped) = sweep_counts(&rects, exec);
    PixelCounts { covered, overlapped, total: area.area() as u64 }
}

/// Coverage and overlap over the full page (`w * h` denominator).
pub fn score_layout(layout: &PageLayout) -> LayoutScore {
    pixel_counts(layout, Denominator::Page, Execution::Sequential).score()
}

pub fn score_layout_with(layout: &PageLayout, denominator: Denominator) -> LayoutScore {
    pixel_counts(layout, denominator, Execution::Sequential).score()
}

/// Score many pages; `exec` decides whether pages run in parallel.
pub fn score_layouts(layouts: &[PageLayout], denominator: Denominator, exec: Execution) -> Vec<LayoutScore> {
    exec.map(layouts, |l| pixel_counts(l, denominator, Execution::Sequential).score())
}
