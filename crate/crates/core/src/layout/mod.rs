//! Page and box geometry, column detection, reading order and the
//! bounding-box post-processing pass that turns raw detector output into
//! clean, non-overlapping, column-aligned regions.

mod columns;
pub mod io;
mod order;
mod postprocess;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::imaging::TilePlan;

pub use columns::{assign_columns, cluster_centers, FULL_WIDTH_FACTOR};
pub use order::{block_partition, reading_order};
pub use postprocess::{minimal_postprocess, postprocess_bboxes, PostprocessConfig};

/// Region class of a bounding box.
///
/// `Invalid` keeps the detector's original label verbatim so it can be
/// reported; post-processing re-classes all of them as titles.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BoxClass {
    Text,
    Title,
    Figure,
    Table,
    Abandoned,
    Invalid(String),
}

impl BoxClass {
    /// Map a detector label onto a class. Unknown labels become `Invalid`.
    pub fn from_label(label: &str) -> Self {
        match label.trim().to_ascii_lowercase().as_str() {
            "text" | "plain text" | "plain_text" | "plaintext" => BoxClass::Text,
            "title" => BoxClass::Title,
            "figure" | "picture" | "image" => BoxClass::Figure,
            "table" => BoxClass::Table,
            "abandon" | "abandoned" => BoxClass::Abandoned,
            _ => BoxClass::Invalid(label.to_string()),
        }
    }

    pub fn as_label(&self) -> &str {
        match self {
            BoxClass::Text => "text",
            BoxClass::Title => "title",
            BoxClass::Figure => "figure",
            BoxClass::Table => "table",
            BoxClass::Abandoned => "abandon",
            BoxClass::Invalid(label) => label,
        }
    }

    pub fn is_textual(&self) -> bool {
        matches!(self, BoxClass::Text | BoxClass::Title)
    }
}

impl fmt::Display for BoxClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_label())
    }
}

impl Serialize for BoxClass {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_label())
    }
}

impl<'de> Deserialize<'de> for BoxClass {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let label = String::deserialize(deserializer)?;
        Ok(BoxClass::from_label(&label))
    }
}

/// Axis-aligned pixel rectangle, half-open: `[x1, x2) x [y1, y2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x1: i64,
    pub y1: i64,
    pub x2: i64,
    pub y2: i64,
}

impl Rect {
    pub fn new(x1: i64, y1: i64, x2: i64, y2: i64) -> Self {
        Rect { x1, y1, x2, y2 }
    }

    pub fn width(&self) -> i64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> i64 {
        self.y2 - self.y1
    }

    pub fn is_empty(&self) -> bool {
        self.x2 <= self.x1 || self.y2 <= self.y1
    }

    pub fn area(&self) -> i64 {
        if self.is_empty() {
            0
        } else {
            self.width() * self.height()
        }
    }

    pub fn center_x(&self) -> f64 {
        (self.x1 + self.x2) as f64 / 2.0
    }

    pub fn center_y(&self) -> f64 {
        (self.y1 + self.y2) as f64 / 2.0
    }

    pub fn intersect(&self, other: &Rect) -> Rect {
        Rect {
            x1: self.x1.max(other.x1),
            y1: self.y1.max(other.y1),
            x2: self.x2.min(other.x2),
            y2: self.y2.min(other.y2),
        }
    }

    /// Smallest rectangle containing both.
    pub fn union(&self, other: &Rect) -> Rect {
        Rect {
            x1: self.x1.min(other.x1),
            y1: self.y1.min(other.y1),
            x2: self.x2.max(other.x2),
            y2: self.y2.max(other.y2),
        }
    }
}

/// One detected or derived page region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    #[serde(default)]
    pub id: String,
    pub x1: i64,
    pub y1: i64,
    pub x2: i64,
    pub y2: i64,
    #[serde(rename = "class")]
    pub class: BoxClass,
    #[serde(default)]
    pub confidence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub full_width: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reading_order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tiles: Option<TilePlan>,
}

impl BoundingBox {
    pub fn new(id: impl Into<String>, rect: Rect, class: BoxClass, confidence: f64) -> Self {
        BoundingBox {
            id: id.into(),
            x1: rect.x1,
            y1: rect.y1,
            x2: rect.x2,
            y2: rect.y2,
            class,
            confidence,
            column: None,
            full_width: false,
            reading_order: None,
            tiles: None,
        }
    }

    pub fn rect(&self) -> Rect {
        Rect::new(self.x1, self.y1, self.x2, self.y2)
    }

    pub fn set_rect(&mut self, rect: Rect) {
        self.x1 = rect.x1;
        self.y1 = rect.y1;
        self.x2 = rect.x2;
        self.y2 = rect.y2;
    }

    pub fn width(&self) -> i64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> i64 {
        self.y2 - self.y1
    }
}

/// Horizontal pixel extent of one text column, half-open.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnRange {
    pub x1: i64,
    pub x2: i64,
}

impl ColumnRange {
    pub fn width(&self) -> i64 {
        self.x2 - self.x1
    }

    pub fn center(&self) -> f64 {
        (self.x1 + self.x2) as f64 / 2.0
    }

    pub fn intersects(&self, x1: i64, x2: i64) -> bool {
        x1 < self.x2 && self.x1 < x2
    }
}

/// A page's geometry and its box set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageLayout {
    pub page_id: String,
    #[serde(default)]
    pub image: String,
    pub width: i64,
    pub height: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub print_area: Option<Rect>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub columns: Vec<ColumnRange>,
    pub boxes: Vec<BoundingBox>,
}

impl PageLayout {
    pub fn new(page_id: impl Into<String>, width: i64, height: i64, boxes: Vec<BoundingBox>) -> Self {
        PageLayout {
            page_id: page_id.into(),
            image: String::new(),
            width,
            height,
            print_area: None,
            columns: Vec::new(),
            boxes,
        }
    }

    pub fn page_rect(&self) -> Rect {
        Rect::new(0, 0, self.width, self.height)
    }

    /// Boxes sorted by their reading-order index; unordered boxes go last.
    pub fn boxes_in_order(&self) -> Vec<&BoundingBox> {
        let mut out: Vec<&BoundingBox> = self.boxes.iter().collect();
        out.sort_by_key(|b| (b.reading_order.unwrap_or(usize::MAX), b.id.clone()));
        out
    }
}
