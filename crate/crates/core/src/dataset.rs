//! Box-level dataset rows and the closed label sets they carry.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::layout::BoxClass;

/// Kind of writing a text box holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TextType {
    #[serde(rename = "article")]
    Article,
    #[serde(rename = "advert")]
    Advert,
    #[serde(rename = "poem/song/story")]
    PoemSongStory,
    #[serde(rename = "other")]
    Other,
}

impl TextType {
    pub const ALL: [TextType; 4] = [TextType::Article, TextType::Advert, TextType::PoemSongStory, TextType::Other];

    pub fn label(self) -> &'static str {
        match self {
            TextType::Article => "article",
            TextType::Advert => "advert",
            TextType::PoemSongStory => "poem/song/story",
            TextType::Other => "other",
        }
    }
}

/// IPTC media-topic tier-1 subjects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Topic {
    ArtsCulture,
    CrimeLaw,
    Disaster,
    Economy,
    Education,
    Environment,
    Health,
    HumanInterest,
    Labour,
    Lifestyle,
    Politics,
    Religion,
    Science,
    Society,
    Sport,
    Conflict,
    Weather,
}

impl Topic {
    pub const ALL: [Topic; 17] = [
        Topic::ArtsCulture,
        Topic::CrimeLaw,
        Topic::Disaster,
        Topic::Economy,
        Topic::Education,
        Topic::Environment,
        Topic::Health,
        Topic::HumanInterest,
        Topic::Labour,
        Topic::Lifestyle,
        Topic::Politics,
        Topic::Religion,
        Topic::Science,
        Topic::Society,
        Topic::Sport,
        Topic::Conflict,
        Topic::Weather,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Topic::ArtsCulture => "arts, culture, entertainment and media",
            Topic::CrimeLaw => "crime, law and justice",
            Topic::Disaster => "disaster accident and emergency incident",
            Topic::Economy => "economy, business and finance",
            Topic::Education => "education",
            Topic::Environment => "environment",
            Topic::Health => "health",
            Topic::HumanInterest => "human interest",
            Topic::Labour => "labour",
            Topic::Lifestyle => "lifestyle and leisure",
            Topic::Politics => "politics",
            Topic::Religion => "religion",
            Topic::Science => "science and technology",
            Topic::Society => "society",
            Topic::Sport => "sport",
            Topic::Conflict => "conflict, war and peace",
            Topic::Weather => "weather",
        }
    }

    pub fn index(self) -> usize {
        Topic::ALL.iter().position(|&t| t == self).expect("listed")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown {kind} label {value:?}")]
pub struct LabelError {
    pub kind: &'static str,
    pub value: String,
}

impl FromStr for TextType {
    type Err = LabelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TextType::ALL
            .into_iter()
            .find(|t| t.label() == s.trim())
            .ok_or_else(|| LabelError { kind: "text_type", value: s.to_string() })
    }
}

impl FromStr for Topic {
    type Err = LabelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Topic::ALL
            .into_iter()
            .find(|t| t.label() == s.trim())
            .ok_or_else(|| LabelError { kind: "topic", value: s.to_string() })
    }
}

impl fmt::Display for TextType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl fmt::Display for Topic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl Serialize for Topic {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for Topic {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One transcribed box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRow {
    pub periodical: String,
    /// `YYYY-MM-DD`, empty when the page id carries no date.
    pub issue_date: String,
    pub page_id: String,
    pub box_id: String,
    pub reading_order: usize,
    #[serde(rename = "class")]
    pub class: BoxClass,
    pub text_type: Option<TextType>,
    pub topic: Option<Topic>,
    pub text: String,
}
