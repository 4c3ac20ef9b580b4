use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PipelineError;
use crate::imaging::ImagePrepConfig;
use crate::layout::PostprocessConfig;
use crate::ocr::BackendConfig;
use crate::text::TextConfig;

/// Default page-id convention, e.g. `NS2_1843-04-01_page_4`.
pub const DEFAULT_PAGE_ID_PATTERN: &str =
    r"^(?P<periodical>.+?)_(?P<date>\d{4}-\d{2}-\d{2})_page_(?P<page>\d+)$";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    /// Detector output, one page layout per line.
    pub detections: PathBuf,
    /// Directory the layouts' `image` fields are relative to.
    pub images: PathBuf,
    /// Run directory: stage files, dataset, articles, manifest.
    pub output: PathBuf,
    /// Optional text-type/topic labels keyed by box id.
    pub labels: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            detections: "detections.jsonl".into(),
            images: "images".into(),
            output: "run".into(),
            labels: None,
        }
    }
}

/// Settings that differ for one periodical.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PeriodicalOverride {
    pub dpi: Option<f64>,
    pub fill_columns: Option<bool>,
    pub deskew: Option<bool>,
    pub crop_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    pub bootstrap_samples: usize,
    pub phrases: Vec<String>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            bootstrap_samples: 1000,
            phrases: vec!["Crystal Palace".into(), "Great Exhibition".into()],
        }
    }
}

/// Everything a run depends on. Relative paths resolve against the
/// directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub workers: usize,
    pub page_id_pattern: String,
    pub paths: Paths,
    pub image: ImagePrepConfig,
    pub postprocess: PostprocessConfig,
    pub ocr: BackendConfig,
    pub text: TextConfig,
    pub analysis: AnalysisConfig,
    pub periodicals: BTreeMap<String, PeriodicalOverride>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let mut periodicals = BTreeMap::new();
        periodicals.insert(
            "NS2".to_string(),
            PeriodicalOverride { dpi: Some(200.0), fill_columns: Some(true), ..Default::default() },
        );
        PipelineConfig {
            seed: 0,
            workers: 4,
            page_id_pattern: DEFAULT_PAGE_ID_PATTERN.into(),
            paths: Paths::default(),
            image: ImagePrepConfig::default(),
            postprocess: PostprocessConfig::default(),
            ocr: BackendConfig::default(),
            text: TextConfig::default(),
            analysis: AnalysisConfig::default(),
            periodicals,
        }
    }
}

impl PipelineConfig {
    /// Parse a TOML config and resolve its relative paths.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let raw = std::fs::read_to_string(path).map_err(|source| PipelineError::Io { path: path.to_path_buf(), source })?;
        let mut cfg: PipelineConfig =
            toml::from_str(&raw).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String, PipelineError> {
        toml::to_string(self).map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.paths.detections);
        fix(&mut self.paths.images);
        fix(&mut self.paths.output);
        if let Some(l) = self.paths.labels.as_mut() {
            fix(l);
        }
        if let Some(m) = self.ocr.mock_dir.as_mut() {
            fix(m);
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        self.image.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        self.postprocess.validate().map_err(PipelineError::Config)?;
        self.ocr.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        self.page_id_regex()?;
        if self.analysis.bootstrap_samples == 0 {
            return Err(PipelineError::Config("analysis.bootstrap_samples must be > 0".into()));
        }
        for (name, o) in &self.periodicals {
            let mut image = self.image.clone();
            image.dpi = o.dpi.unwrap_or(image.dpi);
            image.crop_ratio = o.crop_ratio.or(image.crop_ratio);
            image.validate().map_err(|e| PipelineError::Config(format!("periodicals.{name}: {e}")))?;
        }
        Ok(())
    }

    pub fn page_id_regex(&self) -> Result<Regex, PipelineError> {
        Regex::new(&self.page_id_pattern).map_err(|e| PipelineError::Config(format!("page_id_pattern: {e}")))
    }

    /// Image settings for one periodical.
    pub fn image_for(&self, periodical: &str) -> ImagePrepConfig {
        let mut image = self.image.clone();
        if let Some(o) = self.periodicals.get(periodical) {
            image.dpi = o.dpi.unwrap_or(image.dpi);
            image.deskew = o.deskew.unwrap_or(image.deskew);
            image.crop_ratio = o.crop_ratio.or(image.crop_ratio);
        }
        image
    }

    pub fn postprocess_for(&self, periodical: &str) -> PostprocessConfig {
        let mut pp = self.postprocess.clone();
        if let Some(fill) = self.periodicals.get(periodical).and_then(|o| o.fill_columns) {
            pp.fill_columns = fill;
        }
        pp
    }

    /// Hash of every setting that can change an output byte. The worker
    /// count and paths are left out.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.workers = 0;
        c.paths = Paths::default();
        c.ocr.mock_dir = None;
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }
}
