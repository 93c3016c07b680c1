//! String-analysis segmentation of plain text.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use regex::Regex;

use super::{SegError, Segment, SegmentKind, SegmentedText, SourceFormat, Span};
use crate::langtags::{LanguageTag, TagKind};

/// Information separator two: never part of natural-language text.
pub const DEFAULT_SEPARATOR: char = '\u{1E}';

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParagraphIndicator {
    /// One or more empty (or whitespace-only) lines.
    #[default]
    BlankLine,
    /// Every line break starts a new paragraph.
    LineBreak,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentationPolicy {
    pub paragraph_indicator: ParagraphIndicator,
    pub sentence_indicators: BTreeSet<char>,
    pub separator: char,
    pub honor_markup: bool,
}

impl Default for SegmentationPolicy {
    fn default() -> Self {
        SegmentationPolicy {
            paragraph_indicator: ParagraphIndicator::BlankLine,
            sentence_indicators: ['.', ';', '!', '?'].into_iter().collect(),
            separator: DEFAULT_SEPARATOR,
            honor_markup: true,
        }
    }
}

impl SegmentationPolicy {
    pub fn with_separator(mut self, separator: char) -> Self {
        self.separator = separator;
        self
    }

    /// A separator that could be ordinary text is ambiguous once it shows up
    /// in the input.
    fn separator_is_textual(&self) -> bool {
        let c = self.separator;
        c.is_alphanumeric()
            || c.is_whitespace()
            || c.is_ascii_punctuation()
            || self.sentence_indicators.contains(&c)
    }
}

fn blank_line_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\r?\n(?:[ \t\x0B\x0C]*\r?\n)+").expect("valid regex"))
}

fn line_break_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\r?\n").expect("valid regex"))
}

/// Segments plain text down to `target` using indicators and the policy's
/// separator.
///
/// Sentence indicators end a sentence only when followed by whitespace and
/// then an uppercase letter or digit, or by the end of the paragraph.
/// Sub-sentences come from separators alone.
pub fn segment_text(
    text: &str,
    language: LanguageTag,
    policy: &SegmentationPolicy,
    target: SegmentKind,
) -> Result<SegmentedText, SegError> {
    match language.kind() {
        TagKind::Multilingual => return Err(SegError::MultilingualInput),
        TagKind::NoLinguisticContent => return Ok(SegmentedText::neutral(text.to_string())),
        _ => {}
    }
    if policy.separator_is_textual() && text.contains(policy.separator) {
        return Err(SegError::SeparatorCollision(policy.separator));
    }

    let mut root = Segment::new(SegmentKind::File, Span::new(0, text.len()));
    if target > SegmentKind::File {
        root.children = paragraphs(text, policy)
            .into_iter()
            .map(|p| {
                let mut para = Segment::new(SegmentKind::Paragraph, p);
                if target >= SegmentKind::Sentence {
                    para.children = sentences(text, p, policy)
                        .into_iter()
                        .map(|s| {
                            let mut sentence = Segment::new(SegmentKind::Sentence, s);
                            if target >= SegmentKind::SubSentence {
                                sentence.children = sub_sentences(text, s, policy.separator)
                                    .into_iter()
                                    .map(|sub| Segment::new(SegmentKind::SubSentence, sub))
                                    .collect();
                            }
                            sentence
                        })
                        .collect();
                }
                para
            })
            .collect();
    }
    let separator = text.contains(policy.separator).then_some(policy.separator);
    SegmentedText::from_parts(language, text.to_string(), SourceFormat::Plain, separator, root)
}

/// Shrinks a span to exclude leading and trailing whitespace and separators.
fn trim(text: &str, span: Span, sep: char) -> Span {
    let slice = &text[span.start..span.end];
    let is_pad = |c: char| c.is_whitespace() || c == sep;
    let start = span.start + (slice.len() - slice.trim_start_matches(is_pad).len());
    let end = span.start + slice.trim_end_matches(is_pad).len();
    if start >= end {
        Span::new(start, start)
    } else {
        Span::new(start, end)
    }
}

fn paragraphs(text: &str, policy: &SegmentationPolicy) -> Vec<Span> {
    let re = match policy.paragraph_indicator {
        ParagraphIndicator::BlankLine => blank_line_re(),
        ParagraphIndicator::LineBreak => line_break_re(),
    };
    let mut out = Vec::new();
    let mut start = 0;
    let bounds = re.find_iter(text).map(|m| (m.start(), m.end())).chain(std::iter::once((text.len(), text.len())));
    for (end, next) in bounds {
        let span = trim(text, Span::new(start, end), policy.separator);
        if !span.is_empty() {
            out.push(span);
        }
        start = next;
    }
    out
}

fn sentences(text: &str, para: Span, policy: &SegmentationPolicy) -> Vec<Span> {
    let body = &text[para.start..para.end];
    let mut out = Vec::new();
    let mut start = para.start;
    for (i, c) in body.char_indices() {
        if !policy.sentence_indicators.contains(&c) {
            continue;
        }
        let after = para.start + i + c.len_utf8();
        let rest = &text[after..para.end];
        let trimmed = rest.trim_start();
        let boundary = if rest.is_empty() {
            true
        } else if trimmed.len() < rest.len() {
            trimmed.chars().next().is_some_and(|n| n.is_uppercase() || n.is_numeric())
        } else {
            false
        };
        if boundary {
            let span = trim(text, Span::new(start, after), policy.separator);
            if !span.is_empty() {
                out.push(span);
            }
            start = after;
        }
    }
    let tail = trim(text, Span::new(start, para.end), policy.separator);
    if !tail.is_empty() {
        out.push(tail);
    }
    out
}

fn sub_sentences(text: &str, sentence: Span, sep: char) -> Vec<Span> {
    let body = &text[sentence.start..sentence.end];
    if !body.contains(sep) {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut start = sentence.start;
    for (i, c) in body.char_indices() {
        if c == sep {
            let span = trim(text, Span::new(start, sentence.start + i), sep);
            if !span.is_empty() {
                out.push(span);
            }
            start = sentence.start + i + c.len_utf8();
        }
    }
    let tail = trim(text, Span::new(start, sentence.end), sep);
    if !tail.is_empty() {
        out.push(tail);
    }
    out
}
