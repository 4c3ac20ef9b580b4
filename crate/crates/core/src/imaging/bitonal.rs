use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use image::imageops::FilterType;
use image::GrayImage;
use log::warn;

use super::{estimate_skew, rotate_gray, ImageError, ImagePrepConfig};

const METERS_PER_INCH: f64 = 0.0254;

/// What [`convert_bitonal`] did to one page.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvertReport {
    pub source_dpi: Option<f64>,
    pub width: u32,
    pub height: u32,
    pub resampled: bool,
    pub skew_degrees: Option<f64>,
}

/// Decode any supported image file as 8-bit grayscale.
pub fn load_gray(path: &Path) -> Result<GrayImage, ImageError> {
    image::open(path)
        .map(|img| img.to_luma8())
        .map_err(|source| ImageError::Decode { path: path.display().to_string(), source })
}

/// Horizontal resolution recorded in a PNG `pHYs` chunk, if any.
pub fn read_png_dpi(path: &Path) -> Option<f64> {
    let file = File::open(path).ok()?;
    let decoder = png::Decoder::new(BufReader::new(file));
    let reader = decoder.read_info().ok()?;
    let dims = reader.info().pixel_dims?;
    match dims.unit {
        png::Unit::Meter if dims.xppu > 0 => Some(dims.xppu as f64 * METERS_PER_INCH),
        _ => None,
    }
}

/// Map every sample onto `2^bits` evenly spaced gray levels, returned as
/// level indices (0 = black).
pub fn quantize(img: &GrayImage, bits: u8) -> Vec<u8> {
    let max_level = ((1u16 << bits) - 1) as f64;
    img.pixels()
        .map(|p| ((p.0[0] as f64) * max_level / 255.0).round() as u8)
        .collect()
}

/// Encode level indices as a grayscale PNG of the given bit depth, with the
/// resolution stored in `pHYs`.
pub fn encode_gray_png(
    levels: &[u8],
    width: u32,
    height: u32,
    bits: u8,
    dpi: f64,
) -> Result<Vec<u8>, png::EncodingError> {
    let depth = match bits {
        1 => png::BitDepth::One,
        2 => png::BitDepth::Two,
        4 => png::BitDepth::Four,
        _ => png::BitDepth::Eight,
    };
    let per_byte = 8 / bits as usize;
    let row_bytes = (width as usize + per_byte - 1) / per_byte;
    let mut packed = vec![0u8; row_bytes * height as usize];
    for y in 0..height as usize {
        for x in 0..width as usize {
            let level = levels[y * width as usize + x];
            let byte = &mut packed[y * row_bytes + x / per_byte];
            let shift = 8 - bits as usize * (x % per_byte + 1);
            *byte |= level << shift;
        }
    }

    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, width, height);
        encoder.set_color(png::ColorType::Grayscale);
        encoder.set_depth(depth);
        let ppm = (dpi / METERS_PER_INCH).round() as u32;
        encoder.set_pixel_dims(Some(png::PixelDimensions {
            xppu: ppm,
            yppu: ppm,
            unit: png::Unit::Meter,
        }));
        let mut writer = encoder.write_header()?;
        writer.write_image_data(&packed)?;
    }
    Ok(out)
}

/// Convert a page image to a low bit-depth grayscale PNG at `cfg.dpi`.
///
/// The source resolution comes from the PNG `pHYs` chunk, or from
/// `cfg.source_dpi`. Without either, only the bit depth is reduced. With
/// `cfg.deskew` the page is rotated back by the estimated skew first.
pub fn convert_bitonal(src: &Path, dst: &Path, cfg: &ImagePrepConfig) -> Result<ConvertReport, ImageError> {
    cfg.validate()?;
    let path = src.display().to_string();
    let img = image::open(src)
        .map_err(|source| ImageError::Decode { path: path.clone(), source })?;
    let mut gray = img.to_luma8();

    let source_dpi = read_png_dpi(src).or(cfg.source_dpi);
    let mut resampled = false;
    match source_dpi {
        Some(sdpi) if (sdpi - cfg.dpi).abs() >= 0.5 => {
            let scale = cfg.dpi / sdpi;
            let w = ((gray.width() as f64 * scale).round() as u32).max(1);
            let h = ((gray.height() as f64 * scale).round() as u32).max(1);
            gray = image::imageops::resize(&gray, w, h, FilterType::Triangle);
            resampled = true;
        }
        Some(_) => {}
        None => warn!("{path}: no physical size metadata, converting bit depth only"),
    }

    let mut skew_degrees = None;
    if cfg.deskew {
        let est = estimate_skew(&gray, cfg.deskew_range, cfg.deskew_step);
        if est.degrees != 0.0 {
            gray = rotate_gray(&gray, -est.degrees);
        }
        skew_degrees = Some(est.degrees);
    }

    let levels = quantize(&gray, cfg.bit_depth);
    let bytes = encode_gray_png(&levels, gray.width(), gray.height(), cfg.bit_depth, cfg.dpi)
        .map_err(|e| ImageError::Encode { path: dst.display().to_string(), message: e.to_string() })?;
    if let Some(parent) = dst.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|source| ImageError::Io { path: dst.display().to_string(), source })?;
    }
    std::fs::write(dst, bytes)
        .map_err(|source| ImageError::Io { path: dst.display().to_string(), source })?;

    Ok(ConvertReport {
        source_dpi,
        width: gray.width(),
        height: gray.height(),
        resampled,
        skew_degrees,
    })
}
