//! Turn scanned newspaper pages and raw layout detections into an ordered,
//! classified text dataset, and measure every stage on the way.

pub mod analysis;
pub mod dataset;
pub mod eval;
pub mod exec;
pub mod imaging;
pub mod jsonl;
pub mod layout;
pub mod metrics;
pub mod ocr;
pub mod pipeline;
pub mod text;
