//! Image-to-text transcription of post-processed boxes: class-specific
//! prompts, pluggable backends, request pacing and retries, repetition-loop
//! detection, and reassembly of overlapping tile transcripts.

mod backend;
mod merge;
mod prompt;
mod ratelimit;
mod repetition;
mod transcribe;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::layout::BoxClass;

pub use backend::{
    parse_chat_response, BackendError, BackendRequest, BackendResponse, CannedResponse, HttpBackend,
    MockBackend, OcrBackend,
};
pub use merge::{line_similarity, merge_tile_texts, LINE_MATCH_THRESHOLD};
pub use prompt::{select_prompt, Prompt, PromptKind, FIGURE_PROMPT, TABLE_PROMPT, TEXT_PROMPT};
pub use ratelimit::RateLimiter;
pub use repetition::{detect_repetition, DEFAULT_MIN_REPEATS, DEFAULT_MIN_UNIT};
pub use transcribe::{crop_png, transcribe_all, transcribe_box, BoxJob};

#[derive(Debug, thiserror::Error)]
pub enum OcrError {
    #[error("backend rejected credentials: {0}")]
    Auth(String),
    #[error("invalid backend settings: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Http,
    Mock,
}

/// Backend connection and pacing settings. Credentials are never stored
/// here, only the name of the environment variable holding them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub endpoint: String,
    pub model: String,
    pub max_in_flight: u32,
    pub requests_per_minute: u32,
    /// Extra requests allowed per tile, shared between transport retries
    /// and the halved-tile retry after a repetition loop.
    pub max_retries: u32,
    pub timeout_secs: f64,
    pub token_limit: u64,
    pub api_key_env: String,
    pub retry_backoff_ms: u64,
    /// Directory of canned replies for the mock backend.
    pub mock_dir: Option<PathBuf>,
    pub repetition_min_unit: usize,
    pub repetition_min_repeats: usize,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            kind: BackendKind::Http,
            endpoint: "https://api.mistral.ai/v1/chat/completions".into(),
            model: "pixtral-12b-2409".into(),
            max_in_flight: 8,
            requests_per_minute: 300,
            max_retries: 3,
            timeout_secs: 120.0,
            token_limit: 4096,
            api_key_env: "OCR_API_KEY".into(),
            retry_backoff_ms: 500,
            mock_dir: None,
            repetition_min_unit: DEFAULT_MIN_UNIT,
            repetition_min_repeats: DEFAULT_MIN_REPEATS,
        }
    }
}

impl BackendConfig {
    pub fn validate(&self) -> Result<(), OcrError> {
        let positive = self.max_in_flight > 0
            && self.requests_per_minute > 0
            && self.timeout_secs > 0.0
            && self.token_limit > 0
            && self.repetition_min_unit > 0
            && self.repetition_min_repeats > 1;
        if !positive {
            return Err(OcrError::Config(
                "max_in_flight, requests_per_minute, timeout_secs, token_limit and repetition settings must be positive".into(),
            ));
        }
        if self.kind == BackendKind::Mock && self.mock_dir.is_none() {
            return Err(OcrError::Config("mock backend needs mock_dir".into()));
        }
        Ok(())
    }

    /// Build the configured backend.
    pub fn build(&self) -> Result<Box<dyn OcrBackend>, OcrError> {
        self.validate()?;
        Ok(match self.kind {
            BackendKind::Http => Box::new(HttpBackend::new(self).map_err(|e| OcrError::Config(e.to_string()))?),
            BackendKind::Mock => Box::new(MockBackend::from_dir(self.mock_dir.as_ref().expect("validated"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OcrFlags {
    /// A repetition loop survived the halved-tile retry (or no retry budget was left).
    pub repetition_detected: bool,
    /// Some reply stopped at the token limit.
    pub token_limit_hit: bool,
    /// Halved-tile retries performed.
    pub retried: u32,
    /// Transport failure that exhausted the retries.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Transcription of one box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcrRecord {
    pub page_id: String,
    pub box_id: String,
    pub reading_order: usize,
    #[serde(rename = "class")]
    pub class: BoxClass,
    pub tile_texts: Vec<String>,
    pub merged_text: String,
    pub flags: OcrFlags,
    pub backend: String,
    pub requests: u64,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}
