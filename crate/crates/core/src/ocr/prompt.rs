use serde::{Deserialize, Serialize};

use crate::layout::BoxClass;

pub const TEXT_PROMPT: &str = "The text in the image is from a 19th century English newspaper, please transcribe the text including linebreaks. Do not use markdown use plain text only. Do not add any commentary.";
pub const FIGURE_PROMPT: &str = "Please describe the graphic taken from a 19th century English newspaper. Do not add additional commentary";
pub const TABLE_PROMPT: &str = "Please extract the table from the image taken from a 19th century English newspaper as a tab separated values (tsv) text file. Do not add any commentary";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptKind {
    Text,
    Figure,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Prompt {
    pub kind: PromptKind,
    pub text: &'static str,
}

/// Titles share the text prompt. Classes that should not reach OCR at all
/// (abandoned, invalid) also fall back to it.
pub fn select_prompt(class: &BoxClass) -> Prompt {
    match class {
        BoxClass::Figure => Prompt { kind: PromptKind::Figure, text: FIGURE_PROMPT },
        BoxClass::Table => Prompt { kind: PromptKind::Table, text: TABLE_PROMPT },
        _ => Prompt { kind: PromptKind::Text, text: TEXT_PROMPT },
    }
}
