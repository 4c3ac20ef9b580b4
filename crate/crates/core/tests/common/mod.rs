#![allow(dead_code)]

use std::path::{Path, PathBuf};

use gazette::imaging::encode_gray_png;
use gazette::layout::{BoundingBox, BoxClass, PageLayout, Rect};
use gazette::ocr::BackendKind;
use gazette::pipeline::PipelineConfig;
use rand::Rng;

pub const FIXTURE_PAGES: [&str; 3] = ["NS2_1851-05-03_page_1", "L_1851-05-10_page_1", "L_1851-06-07_page_2"];

/// Scripted replies: (prompt tokens, completion tokens) of `default.json`.
pub const DEFAULT_TOKENS: (u64, u64) = (850, 60);
pub const TITLE_TOKENS: (u64, u64) = (900, 40);
pub const LOOP_TOKENS: (u64, u64) = (870, 4096);
pub const FLAKY_TOKENS: (u64, u64) = (800, 30);

fn pick_class<R: Rng>(rng: &mut R) -> BoxClass {
    match rng.gen_range(0..100) {
        0..=79 => BoxClass::Text,
        80..=89 => BoxClass::Title,
        90..=94 => BoxClass::Figure,
        _ => BoxClass::Invalid("equation".into()),
    }
}

/// Raw detections shaped like a newspaper page: stacked boxes inside
/// evenly spaced columns, separated vertically by full-width headings.
/// Boxes stay clear of the top and bottom 5% bands, every column holds
/// text, and neighbouring boxes overlap by at most 8 px.
pub fn newspaper_layout<R: Rng>(rng: &mut R, page_id: &str, with_furniture: bool) -> PageLayout {
    let w: i64 = rng.gen_range(900..1600);
    let h: i64 = rng.gen_range(1300..2000);
    let ncols: i64 = rng.gen_range(2..=5);
    let margin: i64 = rng.gen_range(20..60);
    let gutter: i64 = rng.gen_range(10..30);
    let cw = (w - 2 * margin - (ncols - 1) * gutter) / ncols;
    let col = |c: i64| (margin + c * (cw + gutter), margin + c * (cw + gutter) + cw);
    let band = (0.05 * h as f64).ceil() as i64;
    let (top, bottom) = (band + 5, h - band - 5);

    let mut boxes: Vec<BoundingBox> = Vec::new();
    let mut push = |x1: i64, y1: i64, x2: i64, y2: i64, class: BoxClass| {
        let n = boxes.len();
        boxes.push(BoundingBox::new(format!("det{n}"), Rect::new(x1, y1, x2, y2), class, 0.5 + 0.5 * (n % 7) as f64 / 7.0));
    };
    let mut y = top + rng.gen_range(0..20);
    let mut first_section = true;
    while y < bottom - 120 {
        if !first_section && rng.gen_bool(0.3) {
            let a = rng.gen_range(0..ncols - 1);
            let b = rng.gen_range(a + 1..ncols);
            let (a, b) = if rng.gen_bool(0.5) { (0, ncols - 1) } else { (a, b) };
            let hgt = rng.gen_range(30..70).min(bottom - y);
            push(col(a).0 + rng.gen_range(0..10), y, col(b).1 - rng.gen_range(0..10), y + hgt, BoxClass::Title);
            y += hgt + rng.gen_range(5..20);
            continue;
        }
        first_section = false;
        let end = (y + rng.gen_range(200..600)).min(bottom);
        for c in 0..ncols {
            let (cx1, cx2) = col(c);
            let inset = (cw / 20).max(1);
            let mut by = y + rng.gen_range(0..15);
            let mut first = true;
            while end - by >= 25 {
                let hgt = rng.gen_range(25..150).min(end - by);
                let class = if first { BoxClass::Text } else { pick_class(rng) };
                push(cx1 + rng.gen_range(0..inset), by, cx2 - rng.gen_range(0..inset), by + hgt, class);
                first = false;
                by = by + hgt + rng.gen_range(-8..25);
            }
        }
        y = end + rng.gen_range(5..20);
    }
    if with_furniture {
        push(margin, rng.gen_range(0..band / 2), w - margin, band - 2, BoxClass::Abandoned);
        push(w / 2 - 20, h - band + 5, w / 2 + 20, h - 5, BoxClass::Text);
    }
    let mut page = PageLayout::new(page_id, w, h, boxes);
    page.image = format!("{page_id}.png");
    page
}

/// A white page with a dark bar inside each box, at `dpi`.
pub fn render_page(layout: &PageLayout, dpi: f64) -> Vec<u8> {
    let (w, h) = (layout.width as usize, layout.height as usize);
    let mut levels = vec![255u8; w * h];
    for b in &layout.boxes {
        let y_mid = ((b.y1 + b.y2) / 2) as usize;
        for y in y_mid.saturating_sub(2)..(y_mid + 2).min(h) {
            for x in (b.x1 + 4) as usize..(b.x2 - 4).max(b.x1 + 4) as usize {
                levels[y * w + x] = 0;
            }
        }
    }
    encode_gray_png(&levels, w as u32, h as u32, 8, dpi).expect("png")
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) {
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(path, bytes).unwrap();
}

pub fn canned(text: &str, tokens: (u64, u64)) -> String {
    serde_json::json!({"text": text, "prompt_tokens": tokens.0, "completion_tokens": tokens.1}).to_string()
}

/// Box ids whose mock replies are scripted specially.
pub struct Scripted {
    pub title_box: String,
    pub loop_box: String,
    pub flaky_box: String,
}

pub fn scripted() -> Scripted {
    Scripted {
        title_box: format!("{}_B0C0R0", FIXTURE_PAGES[1]),
        loop_box: format!("{}_B0C1R0", FIXTURE_PAGES[0]),
        flaky_box: format!("{}_B0C0R1", FIXTURE_PAGES[2]),
    }
}

/// Three synthetic pages with images, detections, mock replies, labels and
/// a config, all under `dir`.
pub fn build_fixture(dir: &Path) -> PipelineConfig {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1851);
    let mut lines = String::new();
    for page in FIXTURE_PAGES {
        let layout = newspaper_layout(&mut rng, page, true);
        write(&dir.join("images").join(&layout.image), render_page(&layout, 240.0));
        lines.push_str(&serde_json::to_string(&layout).unwrap());
        lines.push('\n');
    }
    write(&dir.join("detections.jsonl"), lines);

    let mock = dir.join("mock");
    let s = scripted();
    write(
        &mock.join("default.json"),
        canned("Report {box_id} part {tile}.\nThe meeting was numerously attended.", DEFAULT_TOKENS),
    );
    write(
        &mock.join(format!("{}.json", s.title_box)),
        canned("THE GREAT EXHIBITION\n\nThe Crystal Palace was opened by Her Majesty.", TITLE_TOKENS),
    );
    write(
        &mock.join(format!("{}.json", s.loop_box)),
        canned(&"Honsc of Commons agmist the bill now before Par-\n".repeat(50), LOOP_TOKENS),
    );
    write(
        &mock.join(format!("{}.json", s.flaky_box)),
        serde_json::json!({"text": "Recovered after a dropped connection.", "prompt_tokens": FLAKY_TOKENS.0,
            "completion_tokens": FLAKY_TOKENS.1, "error": "transport", "fail_times": 1})
        .to_string(),
    );
    write(
        &dir.join("labels.jsonl"),
        format!(
            "{{\"box_id\":\"{}\",\"text_type\":\"article\",\"topic\":\"arts, culture, entertainment and media\"}}\n{{\"box_id\":\"{}\",\"text_type\":\"other\"}}\n{{\"box_id\":\"no_such_box\",\"topic\":\"sport\"}}\n",
            s.title_box, s.loop_box
        ),
    );

    let mut cfg = PipelineConfig::default();
    cfg.seed = 7;
    cfg.paths.detections = dir.join("detections.jsonl");
    cfg.paths.images = dir.join("images");
    cfg.paths.output = dir.join("run");
    cfg.paths.labels = Some(dir.join("labels.jsonl"));
    cfg.ocr.kind = BackendKind::Mock;
    cfg.ocr.mock_dir = Some(mock);
    cfg.ocr.retry_backoff_ms = 0;
    cfg.ocr.requests_per_minute = 1_000_000;
    std::fs::write(dir.join("gazette.toml"), cfg.to_toml().unwrap()).unwrap();
    cfg
}

pub fn with_output(cfg: &PipelineConfig, out: PathBuf) -> PipelineConfig {
    let mut c = cfg.clone();
    c.paths.output = out;
    c
}
