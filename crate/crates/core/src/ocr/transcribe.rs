use std::io::Cursor;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use image::{DynamicImage, GrayImage, ImageFormat};

use super::{
    detect_repetition, merge_tile_texts, select_prompt, BackendConfig, BackendError, BackendRequest,
    BackendResponse, OcrBackend, OcrError, OcrFlags, OcrRecord, RateLimiter,
};
use crate::imaging::{Tile, TilePlan};
use crate::layout::BoundingBox;

/// A box, its tile plan and the page image it is cut from. Box coordinates
/// are in layout pixels; `layout_size` maps them onto the image.
#[derive(Debug, Clone)]
pub struct BoxJob {
    pub page_id: String,
    pub bbox: BoundingBox,
    pub plan: TilePlan,
    pub image: Arc<GrayImage>,
    pub layout_size: (i64, i64),
}

/// PNG bytes of the region `[x1, x2) x [y1, y2)` given in layout pixels.
pub fn crop_png(image: &GrayImage, layout_size: (i64, i64), x1: i64, y1: i64, x2: i64, y2: i64) -> Vec<u8> {
    let sx = image.width() as f64 / layout_size.0.max(1) as f64;
    let sy = image.height() as f64 / layout_size.1.max(1) as f64;
    let clamp = |v: f64, max: u32| (v.round().max(0.0) as u32).min(max);
    let (ix1, iy1) = (clamp(x1 as f64 * sx, image.width().saturating_sub(1)), clamp(y1 as f64 * sy, image.height().saturating_sub(1)));
    let ix2 = clamp(x2 as f64 * sx, image.width()).max(ix1 + 1);
    let iy2 = clamp(y2 as f64 * sy, image.height()).max(iy1 + 1);
    let sub = image::imageops::crop_imm(image, ix1, iy1, ix2 - ix1, iy2 - iy1).to_image();
    let mut out = Cursor::new(Vec::new());
    DynamicImage::ImageLuma8(sub)
        .write_to(&mut out, ImageFormat::Png)
        .expect("png encoding to memory");
    out.into_inner()
}

struct Session<'a> {
    job: &'a BoxJob,
    backend: &'a dyn OcrBackend,
    cfg: &'a BackendConfig,
    limiter: Option<&'a RateLimiter>,
    requests: u64,
    prompt_tokens: u64,
    completion_tokens: u64,
    truncated: bool,
}

impl Session<'_> {
    fn send(&mut self, tile: &str, region: Tile, budget: &mut u32) -> Result<BackendResponse, BackendError> {
        let b = &self.job.bbox;
        let png = crop_png(
            &self.job.image,
            self.job.layout_size,
            b.x1,
            b.y1 + region.y_offset,
            b.x2,
            b.y1 + region.end(),
        );
        let prompt = select_prompt(&b.class);
        let request = BackendRequest { box_id: &b.id, tile, image_png: &png, prompt: &prompt };
        let mut attempt = 0u32;
        loop {
            if let Some(l) = self.limiter {
                l.acquire();
            }
            self.requests += 1;
            match self.backend.send(&request) {
                Ok(resp) => {
                    self.prompt_tokens += resp.prompt_tokens;
                    self.completion_tokens += resp.completion_tokens;
                    if resp.truncated || resp.completion_tokens >= self.cfg.token_limit {
                        self.truncated = true;
                    }
                    return Ok(resp);
                }
                Err(BackendError::Transport(msg)) if *budget > 0 => {
                    log::warn!("{} tile {tile}: {msg}, retrying", b.id);
                    *budget -= 1;
                    let backoff = self.cfg.retry_backoff_ms.saturating_mul(1 << attempt.min(6));
                    std::thread::sleep(Duration::from_millis(backoff));
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn looping(&self, text: &str) -> bool {
        detect_repetition(text, self.cfg.repetition_min_unit, self.cfg.repetition_min_repeats)
    }
}

/// Two overlapping halves of `tile`, each about half its height plus half
/// the overlap.
fn halves(tile: Tile, overlap: f64) -> (Tile, Tile) {
    let h = tile.height;
    let half = ((h as f64 * (1.0 + overlap) / 2.0).ceil() as i64).clamp(1, h);
    (
        Tile { y_offset: tile.y_offset, height: half },
        Tile { y_offset: tile.y_offset + h - half, height: half },
    )
}

/// Transcribe one box tile by tile and merge the results.
///
/// Each tile may use up to `max_retries` extra requests. Transport errors
/// are retried with exponential backoff; a reply caught in a repetition
/// loop is retried once as two half-height tiles when two requests of
/// budget remain. Transport failure after the budget is spent yields an
/// empty transcript with `flags.error` set. Rejected credentials abort.
pub fn transcribe_box(
    job: &BoxJob,
    backend: &dyn OcrBackend,
    cfg: &BackendConfig,
    limiter: Option<&RateLimiter>,
) -> Result<OcrRecord, OcrError> {
    let mut session = Session {
        job,
        backend,
        cfg,
        limiter,
        requests: 0,
        prompt_tokens: 0,
        completion_tokens: 0,
        truncated: false,
    };
    let mut flags = OcrFlags::default();
    let mut tile_texts = Vec::with_capacity(job.plan.tiles.len());
    let overlap = job.plan.overlap_fraction;

    for (i, &tile) in job.plan.tiles.iter().enumerate() {
        let mut budget = cfg.max_retries;
        let label = i.to_string();
        let text = match session.send(&label, tile, &mut budget) {
            Ok(resp) => resp.text,
            Err(BackendError::Auth(msg)) => return Err(OcrError::Auth(msg)),
            Err(BackendError::Transport(msg)) => {
                flags.error = Some(format!("tile {i}: {msg}"));
                tile_texts.clear();
                break;
            }
        };
        if !session.looping(&text) {
            tile_texts.push(text);
            continue;
        }
        if budget < 2 {
            flags.repetition_detected = true;
            tile_texts.push(text);
            continue;
        }
        budget -= 2;
        flags.retried += 1;
        let (top, bottom) = halves(tile, overlap);
        let mut parts = Vec::with_capacity(2);
        for (suffix, region) in [("a", top), ("b", bottom)] {
            let mut no_more = 0;
            let _ = &mut budget;
            match session.send(&format!("{i}{suffix}"), region, &mut no_more) {
                Ok(resp) => parts.push(resp.text),
                Err(BackendError::Auth(msg)) => return Err(OcrError::Auth(msg)),
                Err(BackendError::Transport(msg)) => {
                    flags.error = Some(format!("tile {i}{suffix}: {msg}"));
                    break;
                }
            }
        }
        if flags.error.is_some() {
            tile_texts.clear();
            break;
        }
        let merged = merge_tile_texts(&parts, overlap);
        if session.looping(&merged) {
            flags.repetition_detected = true;
        }
        tile_texts.push(merged);
    }

    flags.token_limit_hit = session.truncated;
    let merged_text = if flags.error.is_some() { String::new() } else { merge_tile_texts(&tile_texts, overlap) };
    Ok(OcrRecord {
        page_id: job.page_id.clone(),
        box_id: job.bbox.id.clone(),
        reading_order: job.bbox.reading_order.unwrap_or(0),
        class: job.bbox.class.clone(),
        tile_texts,
        merged_text,
        flags,
        backend: backend.name().to_string(),
        requests: session.requests,
        prompt_tokens: session.prompt_tokens,
        completion_tokens: session.completion_tokens,
    })
}

/// Transcribe every job on a bounded pool of `workers` threads (capped by
/// `max_in_flight`) sharing one rate limiter. Output is ordered by
/// `(page_id, reading_order)` whatever order replies arrive in.
pub fn transcribe_all(
    jobs: &[BoxJob],
    backend: &dyn OcrBackend,
    cfg: &BackendConfig,
    workers: usize,
) -> Result<Vec<OcrRecord>, OcrError> {
    cfg.validate()?;
    let limiter = RateLimiter::per_minute(cfg.requests_per_minute);
    let threads = workers.min(cfg.max_in_flight as usize).min(jobs.len()).max(1);
    let next = AtomicUsize::new(0);
    let abort = AtomicBool::new(false);
    let results: Mutex<Vec<Option<OcrRecord>>> = Mutex::new(vec![None; jobs.len()]);
    let failure: Mutex<Option<OcrError>> = Mutex::new(None);

    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                if abort.load(Ordering::SeqCst) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(job) = jobs.get(i) else { break };
                match transcribe_box(job, backend, cfg, Some(&limiter)) {
                    Ok(record) => results.lock().expect("results")[i] = Some(record),
                    Err(e) => {
                        abort.store(true, Ordering::SeqCst);
                        failure.lock().expect("failure").get_or_insert(e);
                        break;
                    }
                }
            });
        }
    });

    if let Some(e) = failure.into_inner().expect("failure") {
        return Err(e);
    }
    let mut records: Vec<OcrRecord> = results.into_inner().expect("results").into_iter().flatten().collect();
    records.sort_by(|a, b| {
        (a.page_id.as_str(), a.reading_order, a.box_id.as_str()).cmp(&(b.page_id.as_str(), b.reading_order, b.box_id.as_str()))
    });
    Ok(records)
}
