use super::{BoxClass, ColumnRange, PageLayout};

/// A box wider than this multiple of the median column width spans columns.
pub const FULL_WIDTH_FACTOR: f64 = 1.5;

/// Single-linkage 1-D clustering: sorted centers split wherever the gap to
/// the previous center exceeds `tolerance`. Returns index groups, left to
/// right.
pub fn cluster_centers(centers: &[f64], tolerance: f64) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..centers.len()).collect();
    idx.sort_by(|&a, &b| centers[a].total_cmp(&centers[b]).then(a.cmp(&b)));
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut last: Option<f64> = None;
    for i in idx {
        let c = centers[i];
        match (last, clusters.last_mut()) {
            (Some(prev), Some(current)) if c - prev <= tolerance => current.push(i),
            _ => clusters.push(vec![i]),
        }
        last = Some(c);
    }
    clusters
}

pub(crate) fn median_i64(values: &mut [i64]) -> f64 {
    values.sort_unstable();
    let n = values.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        values[n / 2] as f64
    } else {
        (values[n / 2 - 1] + values[n / 2]) as f64 / 2.0
    }
}

/// Column whose range holds `center`, else the nearest one (lowest index on ties).
pub(crate) fn nearest_column(columns: &[ColumnRange], center: f64) -> Option<usize> {
    if let Some(i) = columns
        .iter()
        .position(|c| center >= c.x1 as f64 && center < c.x2 as f64)
    {
        return Some(i);
    }
    let mut best: Option<(f64, usize)> = None;
    for (i, col) in columns.iter().enumerate() {
        let d = (col.x1 as f64 - center).max(center - col.x2 as f64);
        if best.map_or(true, |(bd, _)| d < bd) {
            best = Some((d, i));
        }
    }
    best.map(|(_, i)| i)
}

fn column_ranges(layout: &PageLayout) -> Vec<ColumnRange> {
    let text: Vec<_> = layout.boxes.iter().filter(|b| b.class == BoxClass::Text).collect();
    if text.is_empty() {
        return Vec::new();
    }
    let mut widths: Vec<i64> = text.iter().map(|b| b.width()).collect();
    let median_width = median_i64(&mut widths);
    let members: Vec<_> = text
        .into_iter()
        .filter(|b| b.width() as f64 <= FULL_WIDTH_FACTOR * median_width)
        .collect();
    let centers: Vec<f64> = members.iter().map(|b| b.rect().center_x()).collect();

    let mut ranges: Vec<ColumnRange> = cluster_centers(&centers, median_width / 2.0)
        .into_iter()
        .map(|group| ColumnRange {
            x1: group.iter().map(|&i| members[i].x1).min().unwrap_or(0),
            x2: group.iter().map(|&i| members[i].x2).max().unwrap_or(0),
        })
        .collect();
    ranges.sort_by(|a, b| a.center().total_cmp(&b.center()));

    // Neighbouring extents that overlap are split at the middle of the overlap.
    for i in 1..ranges.len() {
        if ranges[i - 1].x2 > ranges[i].x1 {
            let mid = (ranges[i - 1].x2 + ranges[i].x1).div_euclid(2);
            ranges[i - 1].x2 = mid.max(ranges[i - 1].x1 + 1);
            ranges[i].x1 = ranges[i - 1].x2;
            ranges[i].x2 = ranges[i].x2.max(ranges[i].x1 + 1);
        }
    }
    ranges
}

/// Detect text columns and assign every non-abandoned box to one of them,
/// or flag it as full-width.
///
/// Columns are the 1-D clusters of text-box horizontal centers, with a
/// tolerance of half the median text-box width; boxes wider than
/// [`FULL_WIDTH_FACTOR`] times the median text width do not vote. A page
/// without text boxes comes back unchanged with no columns.
pub fn assign_columns(mut layout: PageLayout) -> PageLayout {
    let columns = column_ranges(&layout);
    if columns.is_empty() {
        layout.columns.clear();
        return layout;
    }
    let mut widths: Vec<i64> = columns.iter().map(|c| c.width()).collect();
    let median_column = median_i64(&mut widths);

    for b in layout.boxes.iter_mut() {
        if b.class == BoxClass::Abandoned {
            b.column = None;
            b.full_width = false;
            continue;
        }
        if b.width() as f64 > FULL_WIDTH_FACTOR * median_column {
            b.full_width = true;
            b.column = None;
        } else {
            b.full_width = false;
            b.column = nearest_column(&columns, b.rect().center_x());
        }
    }
    layout.columns = columns;
    layout
}
