//! Page image normalization and crop geometry: bit-depth reduction with
//! resampling to a target resolution, projection-profile skew estimation,
//! and overlapping tiling of tall boxes.

mod bitonal;
mod skew;
mod tiles;

use serde::{Deserialize, Serialize};

pub use bitonal::{convert_bitonal, encode_gray_png, load_gray, quantize, read_png_dpi, ConvertReport};
pub use skew::{estimate_skew, estimate_skew_with, rotate_gray, SkewEstimate};
pub use tiles::{plan_tiles, plan_tiles_for, Tile, TilePlan};

#[derive(Debug, thiserror::Error)]
pub enum ImageError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Decode {
        path: String,
        #[source]
        source: image::ImageError,
    },
    #[error("{path}: png encoding failed: {message}")]
    Encode { path: String, message: String },
    #[error("invalid image settings: {0}")]
    Config(String),
}

/// Image preparation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ImagePrepConfig {
    /// Output resolution in dots per inch.
    pub dpi: f64,
    /// Bits per gray sample in the converted PNG (1, 2, 4 or 8).
    pub bit_depth: u8,
    /// Maximum tile height as a multiple of the box width; `None` sends the
    /// whole box as one image.
    pub crop_ratio: Option<f64>,
    /// Fraction of a tile shared with the next one.
    pub overlap_fraction: f64,
    pub deskew: bool,
    /// Search half-width in degrees.
    pub deskew_range: f64,
    /// Search step in degrees.
    pub deskew_step: f64,
    /// Source resolution to assume when the file has no physical size metadata.
    pub source_dpi: Option<f64>,
}

impl Default for ImagePrepConfig {
    fn default() -> Self {
        ImagePrepConfig {
            dpi: 120.0,
            bit_depth: 2,
            crop_ratio: Some(1.5),
            overlap_fraction: 0.2,
            deskew: false,
            deskew_range: 5.0,
            deskew_step: 0.1,
            source_dpi: None,
        }
    }
}

impl ImagePrepConfig {
    pub fn validate(&self) -> Result<(), ImageError> {
        if let Some(r) = self.crop_ratio {
            if !(r > 0.0) {
                return Err(ImageError::Config("crop_ratio must be > 0".into()));
            }
        }
        if !(0.0..1.0).contains(&self.overlap_fraction) {
            return Err(ImageError::Config("overlap_fraction must be in [0, 1)".into()));
        }
        if !matches!(self.bit_depth, 1 | 2 | 4 | 8) {
            return Err(ImageError::Config("bit_depth must be 1, 2, 4 or 8".into()));
        }
        if !(self.dpi > 0.0) {
            return Err(ImageError::Config("dpi must be > 0".into()));
        }
        if !(self.deskew_step > 0.0) || !(self.deskew_range >= 0.0) {
            return Err(ImageError::Config("deskew_step must be > 0 and deskew_range >= 0".into()));
        }
        Ok(())
    }
}
