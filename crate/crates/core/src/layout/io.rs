//! Detection and layout files: one [`PageLayout`] per JSON line.
//!
//! Detector input carries `page_id`, `image`, `width`, `height` and boxes
//! with `x1`, `y1`, `x2`, `y2`, `class` and `confidence`. Post-processed
//! output adds `id`, `column`, `reading_order` (and `full_width`,
//! `print_area`, `columns`, `tiles` where set).

use std::path::Path;

use super::PageLayout;
use crate::jsonl::{read_jsonl, write_jsonl, JsonlError};

pub fn read_layouts(path: &Path) -> Result<Vec<PageLayout>, JsonlError> {
    read_jsonl(path)
}

pub fn write_layouts(path: &Path, pages: &[PageLayout]) -> Result<(), JsonlError> {
    write_jsonl(path, pages)
}
