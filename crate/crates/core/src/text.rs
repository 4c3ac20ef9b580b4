//! Post-OCR text passes: light cleanup into one-line paragraphs, extraction
//! of embedded all-caps titles, title merging, and grouping of a page's
//! units into articles.

use serde::{Deserialize, Serialize};

use crate::layout::BoxClass;
use crate::ocr::OcrRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TextConfig {
    /// Characters stripped, along with whitespace, from both ends of a transcript.
    pub strip_chars: String,
    /// Titles longer than this many characters become text.
    pub title_max_chars: usize,
}

impl Default for TextConfig {
    fn default() -> Self {
        TextConfig { strip_chars: "`'\"".into(), title_max_chars: 50 }
    }
}

/// A box's text, split into one-line paragraphs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextUnit {
    pub page_id: String,
    pub box_id: String,
    /// Further boxes folded into this one when consecutive titles merge.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub merged_box_ids: Vec<String>,
    #[serde(rename = "class")]
    pub class: BoxClass,
    pub paragraphs: Vec<String>,
    pub reading_order: usize,
    /// Position among the pieces a box was split into.
    #[serde(default)]
    pub sub_order: usize,
}

impl TextUnit {
    pub fn box_ids(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.box_id.as_str()).chain(self.merged_box_ids.iter().map(String::as_str))
    }

    pub fn is_title(&self) -> bool {
        self.class == BoxClass::Title
    }

    pub fn text(&self) -> String {
        self.paragraphs.join("\n")
    }
}

fn strip<'a>(s: &'a str, cfg: &TextConfig) -> &'a str {
    s.trim_matches(|c: char| c.is_whitespace() || cfg.strip_chars.contains(c))
}

/// Paragraphs of a raw transcript: blank lines separate paragraphs, the
/// lines inside one are trimmed and joined with a space.
pub fn paragraphs(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for line in text.lines().map(str::trim) {
        if line.is_empty() {
            if !current.is_empty() {
                out.push(current.join(" "));
                current.clear();
            }
        } else {
            current.push(line);
        }
    }
    if !current.is_empty() {
        out.push(current.join(" "));
    }
    out
}

/// Clean one transcript: strip the configured end symbols, make every
/// paragraph a single line, and re-class over-long titles as text.
pub fn light_post_text(text: &str, class: &BoxClass, cfg: &TextConfig) -> (BoxClass, Vec<String>) {
    let paras = paragraphs(strip(text, cfg));
    let mut class = class.clone();
    if class == BoxClass::Title && paras.join(" ").chars().count() > cfg.title_max_chars {
        class = BoxClass::Text;
    }
    (class, paras)
}

pub fn light_post(record: &OcrRecord, cfg: &TextConfig) -> TextUnit {
    let (class, paragraphs) = light_post_text(&record.merged_text, &record.class, cfg);
    TextUnit {
        page_id: record.page_id.clone(),
        box_id: record.box_id.clone(),
        merged_box_ids: Vec::new(),
        class,
        paragraphs,
        reading_order: record.reading_order,
        sub_order: 0,
    }
}

/// All-caps heading test: `s` equals its upper-case form, has at least 5
/// letters and at least two of `A E I O U`.
pub fn is_title(s: &str) -> bool {
    let unchanged = |c: char| {
        if c.is_ascii() {
            !c.is_ascii_lowercase()
        } else {
            let mut up = c.to_uppercase();
            up.next() == Some(c) && up.next().is_none()
        }
    };
    if !s.chars().all(unchanged) {
        return false;
    }
    if s.chars().filter(|c| c.is_alphabetic()).count() < 5 {
        return false;
    }
    s.chars().filter(|c| matches!(c, 'A' | 'E' | 'I' | 'O' | 'U')).count() >= 2
}

/// Split text units at paragraphs that look like titles, then merge runs of
/// consecutive titles into one title unit. Figures and tables pass through.
pub fn split_embedded_titles(units: &[TextUnit]) -> Vec<TextUnit> {
    let mut pieces: Vec<TextUnit> = Vec::new();
    for unit in units {
        if unit.class != BoxClass::Text {
            pieces.push(unit.clone());
            continue;
        }
        let mut sub = 0;
        let mut group: Vec<String> = Vec::new();
        let mut group_title = false;
        let mut flush = |group: &mut Vec<String>, title: bool, sub: &mut usize| {
            if group.is_empty() {
                return;
            }
            pieces.push(TextUnit {
                class: if title { BoxClass::Title } else { BoxClass::Text },
                paragraphs: std::mem::take(group),
                sub_order: *sub,
                ..unit.clone()
            });
            *sub += 1;
        };
        for p in &unit.paragraphs {
            let title = is_title(p);
            if title != group_title {
                flush(&mut group, group_title, &mut sub);
                group_title = title;
            }
            group.push(p.clone());
        }
        flush(&mut group, group_title, &mut sub);
        if unit.paragraphs.is_empty() {
            pieces.push(unit.clone());
        }
    }

    let mut out: Vec<TextUnit> = Vec::with_capacity(pieces.len());
    for piece in pieces {
        match out.last_mut() {
            Some(prev) if prev.is_title() && piece.is_title() => {
                prev.paragraphs.extend(piece.paragraphs);
                if piece.box_id != prev.box_id && !prev.merged_box_ids.contains(&piece.box_id) {
                    prev.merged_box_ids.push(piece.box_id);
                }
                for id in piece.merged_box_ids {
                    if id != prev.box_id && !prev.merged_box_ids.contains(&id) {
                        prev.merged_box_ids.push(id);
                    }
                }
            }
            _ => out.push(piece),
        }
    }
    out
}

/// A title and the body units that follow it up to the next title.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticleRecord {
    pub article_id: String,
    pub page_id: String,
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub title_box_ids: Vec<String>,
    pub member_box_ids: Vec<String>,
    pub text: String,
}

/// Group one page's units (in reading order, titles already split and
/// merged) into articles. Body units before the first title form an
/// article without a title.
pub fn assemble_articles(page_id: &str, units: &[TextUnit]) -> Vec<ArticleRecord> {
    let mut articles: Vec<ArticleRecord> = Vec::new();
    let mut body: Vec<String> = Vec::new();
    let close = |articles: &mut Vec<ArticleRecord>, body: &mut Vec<String>| {
        if let Some(a) = articles.last_mut() {
            a.text = std::mem::take(body).join("\n");
        }
    };
    for unit in units {
        if unit.is_title() {
            close(&mut articles, &mut body);
            articles.push(ArticleRecord {
                article_id: format!("{page_id}_A{}", articles.len()),
                page_id: page_id.to_string(),
                title: Some(unit.paragraphs.join(" ")),
                title_box_ids: unit.box_ids().map(String::from).collect(),
                member_box_ids: Vec::new(),
                text: String::new(),
            });
            continue;
        }
        if articles.is_empty() {
            articles.push(ArticleRecord {
                article_id: format!("{page_id}_A0"),
                page_id: page_id.to_string(),
                title: None,
                title_box_ids: Vec::new(),
                member_box_ids: Vec::new(),
                text: String::new(),
            });
        }
        let article = articles.last_mut().expect("article open");
        article.member_box_ids.push(unit.box_id.clone());
        body.extend(unit.paragraphs.iter().cloned());
    }
    close(&mut articles, &mut body);
    articles
}
