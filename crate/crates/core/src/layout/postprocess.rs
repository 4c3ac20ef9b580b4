use serde::{Deserialize, Serialize};

use super::order::finalize_order;
use super::{assign_columns, reading_order, BoundingBox, BoxClass, ColumnRange, PageLayout, Rect};

/// Tunables for [`postprocess_bboxes`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PostprocessConfig {
    /// Boxes shorter than this (pixels) are dropped.
    pub minimum_height_threshold: i64,
    /// Insert text boxes into the voids at the top and bottom of each column.
    pub fill_columns: bool,
    /// Merged text boxes may be at most this many times as tall as they are wide.
    pub merge_height_ratio: f64,
    /// Fraction of the page height at the top and at the bottom treated as
    /// running heads and page numbers.
    pub abandoned_band_fraction: f64,
}

impl Default for PostprocessConfig {
    fn default() -> Self {
        PostprocessConfig {
            minimum_height_threshold: 10,
            fill_columns: false,
            merge_height_ratio: 1.5,
            abandoned_band_fraction: 0.05,
        }
    }
}

impl PostprocessConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.minimum_height_threshold < 0 {
            return Err("minimum_height_threshold must be >= 0".into());
        }
        if !(self.merge_height_ratio > 0.0) {
            return Err("merge_height_ratio must be > 0".into());
        }
        if !(0.0..0.5).contains(&self.abandoned_band_fraction) {
            return Err("abandoned_band_fraction must be in [0, 0.5)".into());
        }
        Ok(())
    }

    /// Vertical pixel range left once both abandoned bands are removed.
    fn content_rows(&self, page_height: i64) -> (i64, i64) {
        let band = self.abandoned_band_fraction * page_height as f64;
        let top = band.ceil() as i64;
        let bottom = (page_height as f64 - band).floor() as i64;
        (top, bottom.max(top))
    }
}

/// Boxes produced by column filling carry this confidence.
const SYNTHETIC_CONFIDENCE: f64 = 0.0;

fn is_synthetic(b: &BoundingBox) -> bool {
    b.class == BoxClass::Text && b.confidence == SYNTHETIC_CONFIDENCE
}

fn clip_to(boxes: &mut Vec<BoundingBox>, area: Rect) {
    for b in boxes.iter_mut() {
        let r = b.rect().intersect(&area);
        b.set_rect(r);
    }
    boxes.retain(|b| !b.rect().is_empty());
}

/// The baseline treatment: detector boxes clipped to the page, boxes
/// labelled abandoned removed and invalid classes renamed to title. No
/// geometry is changed.
pub fn minimal_postprocess(mut layout: PageLayout) -> PageLayout {
    let page = layout.page_rect();
    clip_to(&mut layout.boxes, page);
    layout.boxes.retain(|b| b.class != BoxClass::Abandoned);
    for b in layout.boxes.iter_mut() {
        if let BoxClass::Invalid(_) = b.class {
            b.class = BoxClass::Title;
        }
    }
    layout
}

/// Per column, the indices of the boxes stacked in it: boxes assigned to
/// the column plus full-width boxes crossing it, sorted top to bottom.
fn column_stacks(boxes: &[BoundingBox], columns: &[ColumnRange]) -> Vec<Vec<usize>> {
    columns
        .iter()
        .enumerate()
        .map(|(c, col)| {
            let mut stack: Vec<usize> = (0..boxes.len())
                .filter(|&i| {
                    let b = &boxes[i];
                    if b.full_width {
                        col.intersects(b.x1, b.x2)
                    } else {
                        b.column == Some(c)
                    }
                })
                .collect();
            stack.sort_by(|&a, &b| {
                let (ba, bb) = (&boxes[a], &boxes[b]);
                ba.y1
                    .cmp(&bb.y1)
                    .then(bb.full_width.cmp(&ba.full_width))
                    .then(ba.x1.cmp(&bb.x1))
                    .then_with(|| ba.id.cmp(&bb.id))
                    .then(a.cmp(&b))
            });
            stack
        })
        .collect()
}

/// Set each box's lower edge to the upper edge of the box below it in the
/// same column. The last box of a column keeps the deepest lower edge seen
/// in its band so nested detections do not lose area. A full-width box
/// stops at the highest box below it in any column it crosses.
fn adjust_lower_edges(boxes: &mut Vec<BoundingBox>, columns: &[ColumnRange]) {
    let stacks = column_stacks(boxes, columns);
    let mut new_y2: Vec<Option<i64>> = vec![None; boxes.len()];
    for stack in &stacks {
        let mut band_bottom = i64::MIN;
        for (pos, &i) in stack.iter().enumerate() {
            let next = stack.get(pos + 1).map(|&n| boxes[n].y1);
            if boxes[i].full_width {
                band_bottom = i64::MIN;
                if let Some(ny) = next {
                    new_y2[i] = Some(new_y2[i].map_or(ny, |v| v.min(ny)));
                }
                continue;
            }
            band_bottom = band_bottom.max(boxes[i].y2);
            new_y2[i] = Some(next.unwrap_or(band_bottom));
        }
    }
    for (b, y2) in boxes.iter_mut().zip(new_y2) {
        if let Some(y2) = y2 {
            b.y2 = y2;
        }
    }
    boxes.retain(|b| !b.rect().is_empty());
}

fn snap_to_columns(boxes: &mut [BoundingBox], columns: &[ColumnRange]) {
    for b in boxes.iter_mut() {
        if b.full_width {
            let crossed: Vec<&ColumnRange> =
                columns.iter().filter(|c| c.intersects(b.x1, b.x2)).collect();
            if let (Some(first), Some(last)) = (crossed.first(), crossed.last()) {
                b.x1 = b.x1.min(first.x1);
                b.x2 = b.x2.max(last.x2);
            }
        } else if let Some(col) = b.column.and_then(|c| columns.get(c)) {
            b.x1 = col.x1;
            b.x2 = col.x2;
        }
    }
}

/// Fill the void above the first and below the last box of every column
/// band (a band being the stretch between full-width boxes or the print
/// area edges). Voids shorter than `min_height` are absorbed by stretching
/// the neighbouring box instead.
fn fill_columns(
    boxes: &mut Vec<BoundingBox>,
    columns: &[ColumnRange],
    print_area: Rect,
    min_height: i64,
    page_id: &str,
) {
    let stacks = column_stacks(boxes, columns);
    let mut inserted: Vec<BoundingBox> = Vec::new();
    for (c, stack) in stacks.iter().enumerate() {
        let col = columns[c];
        let mut fill = |y1: i64, y2: i64| {
            let id = format!("{}_fill{}_{}", page_id, c, y1);
            let mut b = BoundingBox::new(
                id,
                Rect::new(col.x1, y1, col.x2, y2),
                BoxClass::Text,
                SYNTHETIC_CONFIDENCE,
            );
            b.column = Some(c);
            inserted.push(b);
        };

        // Bands between separators.
        let mut bands: Vec<(i64, i64, Vec<usize>)> = Vec::new();
        let mut top = print_area.y1;
        let mut current: Vec<usize> = Vec::new();
        for &i in stack {
            if boxes[i].full_width {
                bands.push((top, boxes[i].y1, std::mem::take(&mut current)));
                top = boxes[i].y2;
            } else {
                current.push(i);
            }
        }
        bands.push((top, print_area.y2, current));

        for (top, bottom, members) in bands {
            match (members.first().copied(), members.last().copied()) {
                (Some(first), Some(last)) => {
                    let void = boxes[first].y1 - top;
                    if void > 0 {
                        if void < min_height {
                            boxes[first].y1 = top;
                        } else {
                            fill(top, boxes[first].y1);
                        }
                    }
                    let void = bottom - boxes[last].y2;
                    if void > 0 {
                        if void < min_height {
                            boxes[last].y2 = bottom;
                        } else {
                            fill(boxes[last].y2, bottom);
                        }
                    }
                }
                _ => {
                    if bottom > top {
                        fill(top, bottom);
                    }
                }
            }
        }
    }
    boxes.extend(inserted);
}

/// Merge runs of touching text boxes in a column band while the merged box
/// stays within `ratio` times its width in height.
fn merge_small_boxes(boxes: &mut Vec<BoundingBox>, columns: &[ColumnRange], ratio: f64) {
    let stacks = column_stacks(boxes, columns);
    let mut removed = vec![false; boxes.len()];
    for stack in &stacks {
        let mut current: Option<usize> = None;
        for &i in stack {
            if boxes[i].full_width {
                current = None;
                continue;
            }
            let Some(cur) = current else {
                current = Some(i);
                continue;
            };
            let mergeable = boxes[cur].class == BoxClass::Text
                && boxes[i].class == BoxClass::Text
                && (boxes[i].y2 - boxes[cur].y1) as f64 <= ratio * boxes[cur].width() as f64;
            if mergeable {
                boxes[cur].y2 = boxes[i].y2;
                boxes[cur].confidence = boxes[cur].confidence.min(boxes[i].confidence);
                removed[i] = true;
            } else {
                current = Some(i);
            }
        }
    }
    let mut k = 0;
    boxes.retain(|_| {
        let keep = !removed[k];
        k += 1;
        keep
    });
}

/// Clean raw detector boxes into non-overlapping, column-aligned regions
/// with a final reading order and `B{block}C{column}R{row}` ids.
///
/// Steps, in order: abandon boxes in the top and bottom bands (or labelled
/// abandoned) and remove them; assign columns; rename invalid classes to
/// title; compute reading order; pull lower edges down to the next box in
/// the column; widen boxes to their column; optionally fill column voids;
/// drop short boxes; merge small text boxes; re-adjust lower edges; final
/// reading order and ids.
///
/// Boxes are also clipped to the page and to the print area, which is the
/// bounding rectangle of the kept boxes with the abandoned bands cut off.
/// The print area stored on the result is the bounding rectangle of the
/// output boxes.
pub fn postprocess_bboxes(mut layout: PageLayout, cfg: &PostprocessConfig) -> PageLayout {
    for (i, b) in layout.boxes.iter_mut().enumerate() {
        if b.id.is_empty() {
            b.id = format!("{}_det{}", layout.page_id, i);
        }
        b.column = None;
        b.full_width = false;
        b.reading_order = None;
        b.tiles = None;
    }
    let page = layout.page_rect();
    clip_to(&mut layout.boxes, page);

    let (top, bottom) = cfg.content_rows(layout.height);
    for b in layout.boxes.iter_mut() {
        let cy = b.rect().center_y();
        if cy < top as f64 || cy >= bottom as f64 {
            b.class = BoxClass::Abandoned;
        }
    }
    layout.boxes.retain(|b| b.class != BoxClass::Abandoned);

    let Some(union) = layout.boxes.iter().map(|b| b.rect()).reduce(|a, b| a.union(&b)) else {
        layout.columns.clear();
        layout.print_area = None;
        return layout;
    };
    let print_area = union.intersect(&Rect::new(0, top, layout.width, bottom));
    clip_to(&mut layout.boxes, print_area);
    if layout.boxes.is_empty() {
        layout.columns.clear();
        layout.print_area = None;
        return layout;
    }
    layout.print_area = Some(print_area);

    let mut layout = assign_columns(layout);
    for b in layout.boxes.iter_mut() {
        if let BoxClass::Invalid(_) = b.class {
            b.class = BoxClass::Title;
        }
    }
    let mut layout = reading_order(layout);

    let columns = layout.columns.clone();
    if !columns.is_empty() {
        adjust_lower_edges(&mut layout.boxes, &columns);
        snap_to_columns(&mut layout.boxes, &columns);
        if cfg.fill_columns {
            fill_columns(
                &mut layout.boxes,
                &columns,
                print_area,
                cfg.minimum_height_threshold,
                &layout.page_id,
            );
        }
    }
    layout
        .boxes
        .retain(|b| b.height() >= cfg.minimum_height_threshold || is_synthetic(b));
    if !columns.is_empty() {
        merge_small_boxes(&mut layout.boxes, &columns, cfg.merge_height_ratio);
        adjust_lower_edges(&mut layout.boxes, &columns);
    }
    layout.print_area = layout.boxes.iter().map(|b| b.rect()).reduce(|a, b| a.union(&b));
    finalize_order(layout)
}
