use serde::{Deserialize, Serialize};

use super::ImagePrepConfig;
use crate::layout::BoundingBox;

/// One vertical slice of a box crop, relative to the box's top edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tile {
    pub y_offset: i64,
    pub height: i64,
}

impl Tile {
    pub fn end(&self) -> i64 {
        self.y_offset + self.height
    }
}

/// The ordered, overlapping crops of one box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TilePlan {
    pub box_id: String,
    pub tiles: Vec<Tile>,
    /// `None` when the box is sent uncropped.
    pub crop_ratio: Option<f64>,
    pub overlap_fraction: f64,
}

/// Split a `width` x `height` crop into tiles no taller than
/// `crop_ratio * width` (but at least `ceil(1 / (1 - overlap))` px).
///
/// Tiles start every `floor(t * (1 - overlap))` pixels, where `t` is the
/// tile height; the final tile is pinned to the bottom edge so it keeps the
/// full tile height, overlapping its predecessor by more when needed.
pub fn plan_tiles(
    box_id: &str,
    width: i64,
    height: i64,
    crop_ratio: Option<f64>,
    overlap_fraction: f64,
) -> TilePlan {
    let mut plan = TilePlan {
        box_id: box_id.to_string(),
        tiles: Vec::new(),
        crop_ratio,
        overlap_fraction,
    };
    let height = height.max(0);
    // Smallest tile whose step of at least 1 px still leaves o * t overlap.
    let min_tile = (1.0 / (1.0 - overlap_fraction)).ceil().max(1.0) as i64;
    let tile = crop_ratio
        .map(|r| r * width as f64)
        .filter(|t| t.is_finite())
        .map(|t| (t.floor() as i64).max(min_tile));
    let tile = match tile {
        Some(t) if t < height => t,
        _ => {
            plan.tiles.push(Tile { y_offset: 0, height });
            return plan;
        }
    };
    let step = ((tile as f64 * (1.0 - overlap_fraction)).floor() as i64).clamp(1, tile);
    let span = height - tile;
    let count = (span + step - 1) / step + 1;
    for i in 0..count - 1 {
        plan.tiles.push(Tile { y_offset: i * step, height: tile });
    }
    plan.tiles.push(Tile { y_offset: span, height: tile });
    plan
}

pub fn plan_tiles_for(b: &BoundingBox, cfg: &ImagePrepConfig) -> TilePlan {
    plan_tiles(&b.id, b.width(), b.height(), cfg.crop_ratio, cfg.overlap_fraction)
}
