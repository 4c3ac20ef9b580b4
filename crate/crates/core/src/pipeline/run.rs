use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use image::GrayImage;
use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ingest_labels, parse_page_id, PipelineConfig, PipelineError};
use crate::dataset::DatasetRow;
use crate::exec::{with_workers, Execution};
use crate::imaging::{convert_bitonal, plan_tiles_for};
use crate::jsonl::{read_jsonl, to_jsonl_bytes};
use crate::layout::io::read_layouts;
use crate::layout::{postprocess_bboxes, PageLayout};
use crate::ocr::{transcribe_all, BoxJob, OcrRecord};
use crate::text::{assemble_articles, light_post, split_embedded_titles, ArticleRecord};

/// Per-page stages, in execution order. Each reads the previous stage's
/// files under `stages/` and writes its own.
pub const STAGES: [&str; 5] = ["convert", "postprocess", "plan", "ocr", "text"];

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageStatus {
    /// Stage name to hash of (config, stage, stage input bytes).
    pub markers: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenTotals {
    pub requests: u64,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub total_tokens: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunStats {
    /// Pages each stage ran for in the latest invocation.
    pub executed: BTreeMap<String, usize>,
    /// Pages each stage was skipped for because its marker still matched.
    pub skipped: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub config_hash: String,
    pub seed: u64,
    pub pages: BTreeMap<String, PageStatus>,
    pub page_count: usize,
    pub completed_pages: usize,
    pub box_count: usize,
    pub row_count: usize,
    pub article_count: usize,
    pub tokens: TokenTotals,
    pub flagged_repetition: usize,
    pub flagged_token_limit: usize,
    pub transport_failures: usize,
    #[serde(default)]
    pub unknown_label_ids: Vec<String>,
    pub failures: BTreeMap<String, String>,
    pub last_run: RunStats,
}

impl RunManifest {
    pub fn succeeded(&self) -> bool {
        self.failures.is_empty() && self.completed_pages == self.page_count
    }
}

fn stage_path(out: &Path, stage: &str, page: &str, ext: &str) -> PathBuf {
    out.join("stages").join(stage).join(format!("{page}.{ext}"))
}

fn marker(config_hash: &str, stage: &str, inputs: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    h.update(config_hash.as_bytes());
    h.update([0]);
    h.update(stage.as_bytes());
    for part in inputs {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part);
    }
    hex::encode(h.finalize())
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, String> {
    std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), String> {
    let fail = |e: std::io::Error| format!("{}: {e}", path.display());
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(fail)?;
    }
    let tmp = path.with_extension("partial");
    std::fs::write(&tmp, bytes).map_err(fail)?;
    std::fs::rename(&tmp, path).map_err(fail)
}

fn parse_lines<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, String> {
    read_jsonl(path).map_err(|e| e.to_string())
}

/// OCR jobs for every box of a planned layout, in reading order.
pub fn ocr_jobs(layout: &PageLayout, image: Arc<GrayImage>, cfg: &PipelineConfig) -> Vec<BoxJob> {
    let info = parse_page_id(&cfg.page_id_regex().expect("validated pattern"), &layout.page_id);
    let image_cfg = cfg.image_for(&info.periodical);
    layout
        .boxes_in_order()
        .into_iter()
        .map(|b| BoxJob {
            page_id: layout.page_id.clone(),
            plan: b.tiles.clone().unwrap_or_else(|| plan_tiles_for(b, &image_cfg)),
            bbox: b.clone(),
            image: Arc::clone(&image),
            layout_size: (layout.width, layout.height),
        })
        .collect()
}

/// Dataset rows (one per box) and articles for one page's OCR records.
pub fn assemble_page(
    page_id: &str,
    records: &[OcrRecord],
    cfg: &PipelineConfig,
    pattern: &Regex,
) -> (Vec<DatasetRow>, Vec<ArticleRecord>) {
    let info = parse_page_id(pattern, page_id);
    let mut sorted: Vec<&OcrRecord> = records.iter().collect();
    sorted.sort_by(|a, b| (a.reading_order, &a.box_id).cmp(&(b.reading_order, &b.box_id)));
    let units: Vec<_> = sorted.iter().map(|r| light_post(r, &cfg.text)).collect();
    let rows = units
        .iter()
        .map(|u| DatasetRow {
            periodical: info.periodical.clone(),
            issue_date: info.issue_date.clone(),
            page_id: page_id.to_string(),
            box_id: u.box_id.clone(),
            reading_order: u.reading_order,
            class: u.class.clone(),
            text_type: None,
            topic: None,
            text: u.text(),
        })
        .collect();
    let articles = assemble_articles(page_id, &split_embedded_titles(&units));
    (rows, articles)
}

enum Step {
    Ran,
    Skipped,
}

struct Runner<'a> {
    cfg: &'a PipelineConfig,
    hash: String,
    out: PathBuf,
    pattern: Regex,
    prior: BTreeMap<String, PageStatus>,
    dry_run: bool,
}

impl Runner<'_> {
    fn up_to_date(&self, page: &str, stage: &str, mark: &str, outputs: &[PathBuf]) -> bool {
        self.prior
            .get(page)
            .and_then(|s| s.markers.get(stage))
            .is_some_and(|m| m == mark)
            && outputs.iter().all(|p| p.exists())
    }

    fn image_source(&self, layout: &PageLayout) -> PathBuf {
        let p = Path::new(&layout.image);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.cfg.paths.images.join(p)
        }
    }

    /// Run one non-OCR stage for one page, or skip it if its marker matches.
    fn page_stage(&self, stage: &str, layout: &PageLayout, status: &mut PageStatus) -> Result<Step, String> {
        let page = layout.page_id.as_str();
        let info = parse_page_id(&self.pattern, page);
        let (inputs, outputs): (Vec<Vec<u8>>, Vec<PathBuf>) = match stage {
            "convert" => {
                if layout.image.is_empty() {
                    return Err("layout names no page image".into());
                }
                (vec![read_bytes(&self.image_source(layout))?], vec![stage_path(&self.out, stage, page, "png")])
            }
            "postprocess" => (
                vec![serde_json::to_vec(layout).expect("layout serializes")],
                vec![stage_path(&self.out, stage, page, "jsonl")],
            ),
            "plan" => (
                vec![read_bytes(&stage_path(&self.out, "postprocess", page, "jsonl"))?],
                vec![stage_path(&self.out, stage, page, "jsonl")],
            ),
            "text" => (
                vec![read_bytes(&stage_path(&self.out, "ocr", page, "jsonl"))?],
                vec![stage_path(&self.out, "text", page, "jsonl"), stage_path(&self.out, "articles", page, "jsonl")],
            ),
            other => unreachable!("stage {other} has its own driver"),
        };
        let refs: Vec<&[u8]> = inputs.iter().map(Vec::as_slice).collect();
        let mark = marker(&self.hash, stage, &refs);
        if self.up_to_date(page, stage, &mark, &outputs) {
            status.markers.insert(stage.into(), mark);
            return Ok(Step::Skipped);
        }
        if self.dry_run {
            return Ok(Step::Ran);
        }
        match stage {
            "convert" => {
                convert_bitonal(&self.image_source(layout), &outputs[0], &self.cfg.image_for(&info.periodical))
                    .map_err(|e| e.to_string())?;
            }
            "postprocess" => {
                let cleaned = postprocess_bboxes(layout.clone(), &self.cfg.postprocess_for(&info.periodical));
                write_file(&outputs[0], &to_jsonl_bytes(&[cleaned]))?;
            }
            "plan" => {
                let mut pages: Vec<PageLayout> = parse_lines(&stage_path(&self.out, "postprocess", page, "jsonl"))?;
                let mut planned = pages.pop().ok_or("empty postprocess file")?;
                let image_cfg = self.cfg.image_for(&info.periodical);
                for b in planned.boxes.iter_mut() {
                    b.tiles = Some(plan_tiles_for(b, &image_cfg));
                }
                write_file(&outputs[0], &to_jsonl_bytes(&[planned]))?;
            }
            "text" => {
                let records: Vec<OcrRecord> = parse_lines(&stage_path(&self.out, "ocr", page, "jsonl"))?;
                let (rows, articles) = assemble_page(page, &records, self.cfg, &self.pattern);
                write_file(&outputs[0], &to_jsonl_bytes(&rows))?;
                write_file(&outputs[1], &to_jsonl_bytes(&articles))?;
            }
            _ => unreachable!(),
        }
        status.markers.insert(stage.into(), mark);
        Ok(Step::Ran)
    }
}

/// Run every stage over every page of `cfg.paths.detections`.
///
/// A stage is skipped for a page when the marker stored in the previous
/// manifest equals the hash of the current config and the stage's input
/// bytes and its output files still exist. Pages that fail are recorded and
/// dropped from later stages; rejected OCR credentials abort the run.
/// `dry_run` reports what would run without writing anything.
pub fn run_pipeline(cfg: &PipelineConfig, workers: usize, dry_run: bool) -> Result<RunManifest, PipelineError> {
    cfg.validate()?;
    let layouts = read_layouts(&cfg.paths.detections)?;
    let mut seen = BTreeSet::new();
    for l in &layouts {
        if !seen.insert(l.page_id.as_str()) {
            return Err(PipelineError::Config(format!("duplicate page_id {:?} in detections", l.page_id)));
        }
    }
    let out = cfg.paths.output.clone();
    let manifest_path = out.join("manifest.json");
    let prior: BTreeMap<String, PageStatus> = std::fs::read(&manifest_path)
        .ok()
        .and_then(|b| serde_json::from_slice::<RunManifest>(&b).ok())
        .map(|m| m.pages)
        .unwrap_or_default();

    let hash = cfg.hash();
    let runner = Runner { cfg, hash: hash.clone(), out: out.clone(), pattern: cfg.page_id_regex()?, prior, dry_run };
    let exec = if workers > 1 { Execution::Parallel } else { Execution::Sequential };
    let mut status: BTreeMap<String, PageStatus> = layouts.iter().map(|l| (l.page_id.clone(), PageStatus::default())).collect();
    let mut stats = RunStats::default();
    let mut pending: BTreeSet<String> = BTreeSet::new();

    for stage in STAGES {
        let live: Vec<&PageLayout> = layouts.iter().filter(|l| status[&l.page_id].error.is_none()).collect();
        let results: Vec<(String, PageStatus, Result<Step, String>)> = if stage == "ocr" {
            ocr_stage(&runner, &live, &status, workers, &pending)?
        } else {
            with_workers(workers, || {
                exec.map(&live, |l| {
                    let mut s = status[&l.page_id].clone();
                    let r = if dry_run && pending.contains(&l.page_id) {
                        Ok(Step::Ran)
                    } else {
                        runner.page_stage(stage, l, &mut s)
                    };
                    (l.page_id.clone(), s, r)
                })
            })
        };
        for (page, s, r) in results {
            let entry = status.get_mut(&page).expect("known page");
            *entry = s;
            match r {
                Ok(Step::Ran) => {
                    *stats.executed.entry(stage.into()).or_default() += 1;
                    pending.insert(page);
                }
                Ok(Step::Skipped) => *stats.skipped.entry(stage.into()).or_default() += 1,
                Err(e) => {
                    log::error!("{page}: {stage}: {e}");
                    entry.error = Some(format!("{stage}: {e}"));
                }
            }
        }
    }

    let mut manifest = RunManifest {
        run_id: hex::encode(&Sha256::digest(format!("{hash}:{}", cfg.seed))[..8]),
        config_hash: hash,
        seed: cfg.seed,
        page_count: layouts.len(),
        last_run: stats,
        ..Default::default()
    };
    for (page, s) in &status {
        if let Some(e) = &s.error {
            manifest.failures.insert(page.clone(), e.clone());
        }
    }
    if dry_run {
        manifest.pages = status;
        return Ok(manifest);
    }

    let mut rows: Vec<DatasetRow> = Vec::new();
    let mut articles: Vec<ArticleRecord> = Vec::new();
    for l in &layouts {
        if status[&l.page_id].error.is_some() {
            continue;
        }
        let page = l.page_id.as_str();
        let planned: Vec<PageLayout> = read_jsonl(&stage_path(&out, "plan", page, "jsonl"))?;
        manifest.box_count += planned.iter().map(|p| p.boxes.len()).sum::<usize>();
        let records: Vec<OcrRecord> = read_jsonl(&stage_path(&out, "ocr", page, "jsonl"))?;
        for r in &records {
            manifest.tokens.requests += r.requests;
            manifest.tokens.prompt_tokens += r.prompt_tokens;
            manifest.tokens.completion_tokens += r.completion_tokens;
            manifest.flagged_repetition += usize::from(r.flags.repetition_detected);
            manifest.flagged_token_limit += usize::from(r.flags.token_limit_hit);
            manifest.transport_failures += usize::from(r.flags.error.is_some());
        }
        rows.extend(read_jsonl::<DatasetRow>(&stage_path(&out, "text", page, "jsonl"))?);
        articles.extend(read_jsonl::<ArticleRecord>(&stage_path(&out, "articles", page, "jsonl"))?);
        manifest.completed_pages += 1;
    }
    manifest.tokens.total_tokens = manifest.tokens.prompt_tokens + manifest.tokens.completion_tokens;
    rows.sort_by(|a, b| (&a.page_id, a.reading_order, &a.box_id).cmp(&(&b.page_id, b.reading_order, &b.box_id)));
    if let Some(labels) = &cfg.paths.labels {
        manifest.unknown_label_ids = ingest_labels(&mut rows, labels)?.unknown_ids;
    }
    manifest.row_count = rows.len();
    manifest.article_count = articles.len();
    manifest.pages = status;

    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |message: String| PipelineError::Io { path: path.clone(), source: std::io::Error::other(message) }
    };
    let dataset = out.join("dataset.jsonl");
    write_file(&dataset, &to_jsonl_bytes(&rows)).map_err(io(&dataset))?;
    let arts = out.join("articles.jsonl");
    write_file(&arts, &to_jsonl_bytes(&articles)).map_err(io(&arts))?;
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    bytes.push(b'\n');
    write_file(&manifest_path, &bytes).map_err(io(&manifest_path))?;
    Ok(manifest)
}

type StageResult = (String, PageStatus, Result<Step, String>);

fn ocr_stage(
    runner: &Runner<'_>,
    live: &[&PageLayout],
    status: &BTreeMap<String, PageStatus>,
    workers: usize,
    pending: &BTreeSet<String>,
) -> Result<Vec<StageResult>, PipelineError> {
    let stage = "ocr";
    let mut results: Vec<StageResult> = Vec::new();
    let mut todo: Vec<(String, PageStatus, String, PageLayout, Arc<GrayImage>)> = Vec::new();
    for l in live {
        let page = l.page_id.clone();
        let mut s = status[&page].clone();
        if runner.dry_run && pending.contains(&page) {
            results.push((page, s, Ok(Step::Ran)));
            continue;
        }
        let plan_path = stage_path(&runner.out, "plan", &page, "jsonl");
        let png_path = stage_path(&runner.out, "convert", &page, "png");
        let prepared = read_bytes(&plan_path).and_then(|plan| Ok((plan, read_bytes(&png_path)?)));
        let (plan, png) = match prepared {
            Ok(v) => v,
            Err(e) => {
                results.push((page, s, Err(e)));
                continue;
            }
        };
        let mark = marker(&runner.hash, stage, &[&plan, &png]);
        let output = stage_path(&runner.out, stage, &page, "jsonl");
        if runner.up_to_date(&page, stage, &mark, &[output]) {
            s.markers.insert(stage.into(), mark);
            results.push((page, s, Ok(Step::Skipped)));
            continue;
        }
        if runner.dry_run {
            results.push((page, s, Ok(Step::Ran)));
            continue;
        }
        let loaded = parse_lines::<PageLayout>(&plan_path).and_then(|mut v| v.pop().ok_or_else(|| "empty plan file".to_string()));
        let image = image::load_from_memory(&png).map_err(|e| format!("{}: {e}", png_path.display()));
        match (loaded, image) {
            (Ok(layout), Ok(img)) => todo.push((page, s, mark, layout, Arc::new(img.to_luma8()))),
            (Err(e), _) | (_, Err(e)) => results.push((page, s, Err(e))),
        }
    }
    if todo.is_empty() {
        return Ok(results);
    }

    let jobs: Vec<BoxJob> = todo
        .iter()
        .flat_map(|(_, _, _, layout, img)| ocr_jobs(layout, Arc::clone(img), runner.cfg))
        .collect();
    let backend = runner.cfg.ocr.build()?;
    let records = transcribe_all(&jobs, backend.as_ref(), &runner.cfg.ocr, workers.max(1))?;
    let mut by_page: BTreeMap<&str, Vec<&OcrRecord>> = BTreeMap::new();
    for r in &records {
        by_page.entry(r.page_id.as_str()).or_default().push(r);
    }
    for (page, mut s, mark, _, _) in todo {
        let recs: Vec<&OcrRecord> = by_page.remove(page.as_str()).unwrap_or_default();
        let output = stage_path(&runner.out, stage, &page, "jsonl");
        let written = write_file(&output, &to_jsonl_bytes(&recs));
        if written.is_ok() {
            s.markers.insert(stage.into(), mark);
        }
        results.push((page, s, written.map(|_| Step::Ran)));
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn markers_depend_on_every_part() {
        let a = marker("h", "plan", &[b"ab", b"c"]);
        assert_ne!(a, marker("h", "plan", &[b"a", b"bc"]));
        assert_ne!(a, marker("h2", "plan", &[b"ab", b"c"]));
        assert_ne!(a, marker("h", "ocr", &[b"ab", b"c"]));
        assert_eq!(a, marker("h", "plan", &[b"ab", b"c"]));
    }
}
