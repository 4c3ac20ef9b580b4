use std::cmp::Ordering;
use std::collections::BTreeMap;

use super::{BoundingBox, BoxClass, PageLayout};

fn fw_cmp(a: &BoundingBox, b: &BoundingBox) -> Ordering {
    a.y1.cmp(&b.y1).then(a.x1.cmp(&b.x1)).then_with(|| a.id.cmp(&b.id))
}

/// Horizontal block of every box, dense from 0.
///
/// Full-width boxes cut the page into bands. Each full-width box is a block
/// of its own; the column boxes between two separators share one block. A
/// column box belongs to the band below every separator whose top is at or
/// above its own top. Abandoned boxes get `None`.
pub fn block_partition(layout: &PageLayout) -> Vec<Option<usize>> {
    let mut separators: Vec<&BoundingBox> = layout
        .boxes
        .iter()
        .filter(|b| b.full_width && b.class != BoxClass::Abandoned)
        .collect();
    separators.sort_by(|a, b| fw_cmp(a, b));

    // Raw key: 2*band for column boxes, 2*rank+1 for separators.
    let raw: Vec<Option<usize>> = layout
        .boxes
        .iter()
        .map(|b| {
            if b.class == BoxClass::Abandoned {
                None
            } else if b.full_width {
                let rank = separators
                    .iter()
                    .position(|s| std::ptr::eq(*s, b))
                    .expect("separator present");
                Some(2 * rank + 1)
            } else {
                let band = separators.partition_point(|s| s.y1 <= b.y1);
                Some(2 * band)
            }
        })
        .collect();

    let mut dense: BTreeMap<usize, usize> = BTreeMap::new();
    for k in raw.iter().flatten() {
        dense.insert(*k, 0);
    }
    for (i, v) in dense.values_mut().enumerate() {
        *v = i;
    }
    raw.into_iter().map(|k| k.map(|k| dense[&k])).collect()
}

/// Per-box `(block, column, row)` in final reading order, plus the order
/// itself as indices into `layout.boxes`.
pub(crate) fn order_with_positions(layout: &PageLayout) -> (Vec<usize>, Vec<(usize, usize, usize)>) {
    let blocks = block_partition(layout);
    let mut idx: Vec<usize> = (0..layout.boxes.len())
        .filter(|&i| blocks[i].is_some())
        .collect();
    let key = |i: usize| {
        let b = &layout.boxes[i];
        (blocks[i].unwrap_or(usize::MAX), b.column.unwrap_or(0), b.y1, b.x1)
    };
    idx.sort_by(|&a, &b| {
        key(a)
            .cmp(&key(b))
            .then_with(|| layout.boxes[a].id.cmp(&layout.boxes[b].id))
            .then(a.cmp(&b))
    });

    let mut positions = vec![(0, 0, 0); layout.boxes.len()];
    let mut rows: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for &i in &idx {
        let b = &layout.boxes[i];
        let block = blocks[i].unwrap_or(0);
        let column = b.column.unwrap_or(0);
        let row = rows.entry((block, column)).or_insert(0);
        positions[i] = (block, column, *row);
        *row += 1;
    }
    (idx, positions)
}

/// Assign a dense reading-order index to every non-abandoned box: blocks
/// top to bottom, columns left to right within a block, boxes top to
/// bottom within a column. Ties on `y1` fall back to `x1`, then `id`.
pub fn reading_order(mut layout: PageLayout) -> PageLayout {
    let (order, _) = order_with_positions(&layout);
    for b in layout.boxes.iter_mut() {
        b.reading_order = None;
    }
    for (rank, &i) in order.iter().enumerate() {
        layout.boxes[i].reading_order = Some(rank);
    }
    layout
}

/// Reading order plus final `{page_id}_B{block}C{column}R{row}` ids; boxes
/// are returned sorted in reading order.
pub(crate) fn finalize_order(mut layout: PageLayout) -> PageLayout {
    let (order, positions) = order_with_positions(&layout);
    let mut boxes = Vec::with_capacity(order.len());
    for (rank, &i) in order.iter().enumerate() {
        let mut b = layout.boxes[i].clone();
        let (block, column, row) = positions[i];
        b.reading_order = Some(rank);
        b.id = format!("{}_B{}C{}R{}", layout.page_id, block, column, row);
        boxes.push(b);
    }
    layout.boxes = boxes;
    layout
}
