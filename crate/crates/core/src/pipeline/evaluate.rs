use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use super::{PipelineConfig, PipelineError};
use crate::eval::{aggregate_report, evaluate_pairs, read_ground_truth, EvalPair, GroupReport};
use crate::exec::Execution;
use crate::imaging::plan_tiles;
use crate::jsonl::read_jsonl;
use crate::layout::{BoundingBox, BoxClass, Rect};
use crate::ocr::{transcribe_all, BoxJob, OcrBackend};

/// Where the transcripts under test come from.
#[derive(Debug, Clone)]
pub enum Hypotheses {
    /// `<id>.txt` files.
    Dir(PathBuf),
    /// Lines with `id`/`text`, or OCR records (`box_id`/`merged_text`).
    Jsonl(PathBuf),
    /// Transcribe each `<id>.png` crop with the configured backend.
    Backend,
}

#[derive(Deserialize)]
struct HypLine {
    #[serde(alias = "box_id")]
    id: String,
    #[serde(alias = "merged_text")]
    text: String,
}

/// Group of a test item: the id up to its first `_`.
pub fn default_group(id: &str) -> String {
    id.split('_').next().unwrap_or(id).to_string()
}

fn transcribe_crops(
    items: &[(String, String, Option<PathBuf>)],
    backend: &dyn OcrBackend,
    cfg: &PipelineConfig,
    workers: usize,
) -> Result<HashMap<String, String>, PipelineError> {
    let mut jobs = Vec::new();
    for (i, (id, _, png)) in items.iter().enumerate() {
        let Some(png) = png else {
            log::warn!("{id}: no crop image, scored against an empty transcript");
            continue;
        };
        let img = image::open(png)
            .map_err(|source| crate::imaging::ImageError::Decode { path: png.display().to_string(), source })?
            .to_luma8();
        let (w, h) = (img.width() as i64, img.height() as i64);
        let mut bbox = BoundingBox::new(id.clone(), Rect::new(0, 0, w, h), BoxClass::Text, 1.0);
        bbox.reading_order = Some(i);
        jobs.push(BoxJob {
            page_id: String::new(),
            plan: plan_tiles(id, w, h, cfg.image.crop_ratio, cfg.image.overlap_fraction),
            bbox,
            image: Arc::new(img),
            layout_size: (w, h),
        });
    }
    let records = transcribe_all(&jobs, backend, &cfg.ocr, workers)?;
    Ok(records.into_iter().map(|r| (r.box_id, r.merged_text)).collect())
}

/// Score a ground-truth directory (`<id>.txt`, optional `<id>.png`)
/// against hypotheses. Missing hypotheses count as empty transcripts.
pub fn evaluate_test_set(
    ground_truth: &Path,
    hypotheses: &Hypotheses,
    cfg: &PipelineConfig,
    backend: Option<&dyn OcrBackend>,
    workers: usize,
) -> Result<(Vec<EvalPair>, Vec<GroupReport>), PipelineError> {
    let items = read_ground_truth(ground_truth)?;
    let hyps: HashMap<String, String> = match hypotheses {
        Hypotheses::Dir(dir) => items
            .iter()
            .filter_map(|(id, _, _)| std::fs::read_to_string(dir.join(format!("{id}.txt"))).ok().map(|t| (id.clone(), t)))
            .collect(),
        Hypotheses::Jsonl(path) => read_jsonl::<HypLine>(path)?.into_iter().map(|l| (l.id, l.text)).collect(),
        Hypotheses::Backend => {
            let built;
            let backend = match backend {
                Some(b) => b,
                None => {
                    built = cfg.ocr.build()?;
                    built.as_ref()
                }
            };
            transcribe_crops(&items, backend, cfg, workers)?
        }
    };
    let tuples: Vec<(String, String, String, String)> = items
        .into_iter()
        .map(|(id, reference, _)| {
            let hyp = hyps.get(&id).cloned().unwrap_or_else(|| {
                log::warn!("{id}: no hypothesis");
                String::new()
            });
            (id.clone(), default_group(&id), reference, hyp)
        })
        .collect();
    let exec = if workers > 1 { Execution::Parallel } else { Execution::Sequential };
    let pairs = evaluate_pairs(&tuples, exec);
    let report = aggregate_report(&pairs, |p| p.group.clone());
    Ok((pairs, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scores_against_jsonl_and_dir() {
        let dir = tempfile::tempdir().unwrap();
        let gt = dir.path().join("gt");
        std::fs::create_dir(&gt).unwrap();
        std::fs::write(gt.join("NS2_a.txt"), "The cat sat").unwrap();
        std::fs::write(gt.join("L_b.txt"), "abc").unwrap();
        let hyp = dir.path().join("hyp.jsonl");
        std::fs::write(&hyp, "{\"box_id\":\"NS2_a\",\"merged_text\":\"the  cat\\nsat\",\"flags\":{}}\n{\"id\":\"L_b\",\"text\":\"axc\"}\n").unwrap();
        let cfg = PipelineConfig::default();
        let (pairs, report) = evaluate_test_set(&gt, &Hypotheses::Jsonl(hyp), &cfg, None, 1).unwrap();
        assert_eq!(pairs.len(), 2);
        let by_id: HashMap<_, _> = pairs.iter().map(|p| (p.id.as_str(), p.cer)).collect();
        assert_eq!(by_id["NS2_a"], 0.0);
        assert!((by_id["L_b"] - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(report.len(), 2);

        let hyp_dir = dir.path().join("hyp");
        std::fs::create_dir(&hyp_dir).unwrap();
        std::fs::write(hyp_dir.join("L_b.txt"), "abc").unwrap();
        let (pairs, _) = evaluate_test_set(&gt, &Hypotheses::Dir(hyp_dir), &cfg, None, 1).unwrap();
        let missing = pairs.iter().find(|p| p.id == "NS2_a").unwrap();
        assert_eq!(missing.cer, 1.0);
    }
}
