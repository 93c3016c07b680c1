//! Segments and segmented texts.
//!
//! A [`SegmentedText`] is one linguistic version: an immutable source string
//! and a tree of [`Segment`]s whose spans are byte ranges into that string.
//! Whatever lies between leaf spans (whitespace, indicators, markup) is
//! residue, so the source can always be rebuilt from the tree.

mod edit;
mod markup;
mod plain;
mod sidecar;

use std::borrow::Cow;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::langtags::{LangError, LanguageTag};

pub use edit::{apply_manual_edit, ManualEdit};
pub(crate) use markup::element_kind;
pub use markup::{markup_content_ranges, segment_marked, strip_markup};
pub use plain::{segment_text, ParagraphIndicator, SegmentationPolicy, DEFAULT_SEPARATOR};
pub use sidecar::{read_sidecar, write_sidecar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SegError {
    #[error("separator {0:?} occurs in natural-language content")]
    SeparatorCollision(char),
    #[error("multilingual text must be split into its languages before segmentation")]
    MultilingualInput,
    #[error("malformed markup at byte {position}: {message}")]
    MalformedMarkup { position: usize, message: String },
    #[error("invalid edit: {0}")]
    InvalidEdit(String),
    #[error("invalid segment tree: {0}")]
    InvalidTree(String),
    #[error("text is not valid {0}")]
    Undecodable(&'static str),
    #[error(transparent)]
    Language(#[from] LangError),
}

/// Segment size classes. Ordering runs from coarse to fine, so
/// `File < Paragraph < Sentence < SubSentence`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SegmentKind {
    File,
    Paragraph,
    Sentence,
    SubSentence,
}

impl SegmentKind {
    pub const ALL: [SegmentKind; 4] =
        [SegmentKind::File, SegmentKind::Paragraph, SegmentKind::Sentence, SegmentKind::SubSentence];

    pub fn coarser(self) -> Option<SegmentKind> {
        match self {
            SegmentKind::File => None,
            SegmentKind::Paragraph => Some(SegmentKind::File),
            SegmentKind::Sentence => Some(SegmentKind::Paragraph),
            SegmentKind::SubSentence => Some(SegmentKind::Sentence),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SegmentKind::File => "file",
            SegmentKind::Paragraph => "paragraph",
            SegmentKind::Sentence => "sentence",
            SegmentKind::SubSentence => "sub-sentence",
        }
    }
}

impl fmt::Display for SegmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SegmentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "file" => Ok(SegmentKind::File),
            "paragraph" => Ok(SegmentKind::Paragraph),
            "sentence" => Ok(SegmentKind::Sentence),
            "sub-sentence" | "subsentence" => Ok(SegmentKind::SubSentence),
            other => Err(format!("unknown segment kind {other:?}")),
        }
    }
}

/// Half-open byte range into a source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    #[default]
    Programmatic,
    Manual,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    pub span: Span,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<Segment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_uri: Option<String>,
    #[serde(default)]
    pub origin: Origin,
    /// Processing language in force for this segment, when markup declares one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lang: Option<LanguageTag>,
}

impl Segment {
    pub fn new(kind: SegmentKind, span: Span) -> Self {
        Segment { kind, span, children: Vec::new(), record_uri: None, origin: Origin::Programmatic, lang: None }
    }

    pub fn with_children(mut self, children: Vec<Segment>) -> Self {
        self.children = children;
        self
    }

    pub fn with_record_uri(mut self, uri: impl Into<String>) -> Self {
        self.record_uri = Some(uri.into());
        self
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Pre-order walk yielding each segment with its path from this node.
    pub fn walk(&self) -> Vec<(SegmentPath, &Segment)> {
        fn go<'a>(seg: &'a Segment, path: &mut Vec<usize>, out: &mut Vec<(SegmentPath, &'a Segment)>) {
            out.push((SegmentPath(path.clone()), seg));
            for (i, child) in seg.children.iter().enumerate() {
                path.push(i);
                go(child, path, out);
                path.pop();
            }
        }
        let mut out = Vec::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn get(&self, path: &SegmentPath) -> Option<&Segment> {
        let mut seg = self;
        for &i in &path.0 {
            seg = seg.children.get(i)?;
        }
        Some(seg)
    }

    pub(crate) fn get_mut(&mut self, path: &[usize]) -> Option<&mut Segment> {
        let mut seg = self;
        for &i in path {
            seg = seg.children.get_mut(i)?;
        }
        Some(seg)
    }

    fn count_kind(&self, kind: SegmentKind, n: &mut usize) {
        if self.kind == kind {
            *n += 1;
        }
        for c in &self.children {
            c.count_kind(kind, n);
        }
    }
}

/// Child indices leading from the root to a segment. The empty path is the root.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct SegmentPath(pub Vec<usize>);

impl SegmentPath {
    pub fn root() -> Self {
        SegmentPath(Vec::new())
    }
}

impl fmt::Display for SegmentPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str(".");
        }
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        f.write_str(&parts.join("."))
    }
}

impl FromStr for SegmentPath {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "." || s.is_empty() {
            return Ok(SegmentPath::root());
        }
        s.split('.')
            .map(|p| p.parse::<usize>().map_err(|_| format!("bad segment path {s:?}")))
            .collect::<Result<Vec<_>, _>>()
            .map(SegmentPath)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coverage {
    Partial,
    Full,
}

/// Finest segment level present in a text, and whether that level covers
/// all natural-language content.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TextGranularity {
    pub level: SegmentKind,
    pub coverage: Coverage,
}

impl TextGranularity {
    pub fn new(level: SegmentKind, coverage: Coverage) -> Self {
        TextGranularity { level, coverage }
    }

    /// Greatest lower bound in the product order of levels and coverage.
    pub fn meet(self, other: TextGranularity) -> TextGranularity {
        TextGranularity { level: self.level.min(other.level), coverage: self.coverage.min(other.coverage) }
    }

    /// All eight lattice elements.
    pub fn lattice() -> Vec<TextGranularity> {
        SegmentKind::ALL
            .iter()
            .flat_map(|&level| [Coverage::Partial, Coverage::Full].map(|c| TextGranularity::new(level, c)))
            .collect()
    }
}

impl fmt::Display for TextGranularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cov = match self.coverage {
            Coverage::Full => "full",
            Coverage::Partial => "partial",
        };
        write!(f, "{cov} {} granularity", self.level)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceFormat {
    #[default]
    Plain,
    Markup,
}

/// Character encodings accepted for input text when labelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Charset {
    #[default]
    Utf8,
    Latin1,
}

impl FromStr for Charset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "utf-8" | "utf8" => Ok(Charset::Utf8),
            "latin-1" | "latin1" | "iso-8859-1" | "iso8859-1" => Ok(Charset::Latin1),
            other => Err(format!("unsupported charset {other:?}")),
        }
    }
}

/// Decodes labelled input bytes into Unicode text.
pub fn decode_text(bytes: &[u8], charset: Charset) -> Result<String, SegError> {
    match charset {
        Charset::Utf8 => String::from_utf8(bytes.to_vec()).map_err(|_| SegError::Undecodable("UTF-8")),
        Charset::Latin1 => Ok(bytes.iter().map(|&b| b as char).collect()),
    }
}

/// One linguistic version as a segment tree over its source text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSegmentedText")]
pub struct SegmentedText {
    language: LanguageTag,
    source: String,
    format: SourceFormat,
    separator: Option<char>,
    neutral: bool,
    root: Segment,
    granularity: TextGranularity,
}

#[derive(Deserialize)]
struct RawSegmentedText {
    language: LanguageTag,
    source: String,
    #[serde(default)]
    format: SourceFormat,
    #[serde(default)]
    separator: Option<char>,
    #[serde(default)]
    neutral: bool,
    root: Segment,
}

impl TryFrom<RawSegmentedText> for SegmentedText {
    type Error = SegError;

    fn try_from(raw: RawSegmentedText) -> Result<Self, Self::Error> {
        let mut st = SegmentedText::from_parts(raw.language, raw.source, raw.format, raw.separator, raw.root)?;
        st.neutral = raw.neutral;
        if st.neutral {
            st.granularity = TextGranularity::new(SegmentKind::File, Coverage::Full);
        }
        Ok(st)
    }
}

impl SegmentedText {
    /// Builds a text from an explicit tree, checking every structural
    /// invariant and computing the granularity.
    pub fn from_parts(
        language: LanguageTag,
        source: String,
        format: SourceFormat,
        separator: Option<char>,
        root: Segment,
    ) -> Result<Self, SegError> {
        validate_tree(&source, &root)?;
        let mut st = SegmentedText {
            language,
            source,
            format,
            separator,
            neutral: false,
            root,
            granularity: TextGranularity::new(SegmentKind::File, Coverage::Full),
        };
        st.granularity = compute_granularity(&st);
        Ok(st)
    }

    /// A language-neutral text: one file segment, no further analysis.
    pub fn neutral(source: String) -> Self {
        let root = Segment::new(SegmentKind::File, Span::new(0, source.len()));
        SegmentedText {
            language: LanguageTag::NEUTRAL,
            source,
            format: SourceFormat::Plain,
            separator: None,
            neutral: true,
            root,
            granularity: TextGranularity::new(SegmentKind::File, Coverage::Full),
        }
    }

    pub fn language(&self) -> LanguageTag {
        self.language
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn format(&self) -> SourceFormat {
        self.format
    }

    pub fn separator(&self) -> Option<char> {
        self.separator
    }

    pub fn is_neutral(&self) -> bool {
        self.neutral
    }

    pub fn root(&self) -> &Segment {
        &self.root
    }

    pub fn granularity(&self) -> TextGranularity {
        self.granularity
    }

    pub fn with_language(mut self, language: LanguageTag) -> Self {
        self.language = language;
        self
    }

    pub fn get(&self, path: &SegmentPath) -> Option<&Segment> {
        self.root.get(path)
    }

    /// Leaves in document order with their paths.
    pub fn leaves(&self) -> Vec<(SegmentPath, &Segment)> {
        self.root.walk().into_iter().filter(|(_, s)| s.is_leaf()).collect()
    }

    /// Segments of exactly `kind` in document order.
    pub fn segments_of_kind(&self, kind: SegmentKind) -> Vec<(SegmentPath, &Segment)> {
        self.root.walk().into_iter().filter(|(_, s)| s.kind == kind).collect()
    }

    pub fn count_kind(&self, kind: SegmentKind) -> usize {
        let mut n = 0;
        self.root.count_kind(kind, &mut n);
        n
    }

    /// Natural-language text of a segment: markup removed, entities decoded
    /// and separator characters dropped.
    pub fn text_of(&self, seg: &Segment) -> Cow<'_, str> {
        let raw = &self.source[seg.span.start..seg.span.end];
        match self.format {
            SourceFormat::Markup => Cow::Owned(strip_markup(raw)),
            SourceFormat::Plain => match self.separator {
                Some(sep) if raw.contains(sep) => Cow::Owned(raw.chars().filter(|&c| c != sep).collect()),
                _ => Cow::Borrowed(raw),
            },
        }
    }

    /// Rebuilds the source from leaf spans and the residue between them.
    pub fn reconstruct(&self) -> String {
        let mut out = String::with_capacity(self.source.len());
        let mut cursor = 0;
        for (_, leaf) in self.leaves() {
            out.push_str(&self.source[cursor..leaf.span.start]);
            out.push_str(&self.source[leaf.span.start..leaf.span.end]);
            cursor = leaf.span.end;
        }
        out.push_str(&self.source[cursor..]);
        out
    }

    /// Byte ranges holding natural-language content.
    pub fn content_ranges(&self) -> Vec<Span> {
        if self.neutral {
            return Vec::new();
        }
        match self.format {
            SourceFormat::Markup => markup_content_ranges(&self.source),
            SourceFormat::Plain => {
                let sep = self.separator;
                let mut out = Vec::new();
                for (i, c) in self.source.char_indices() {
                    if !c.is_whitespace() && Some(c) != sep {
                        push_merged(&mut out, Span::new(i, i + c.len_utf8()));
                    }
                }
                out
            }
        }
    }

    pub(crate) fn replace_root(&self, root: Segment) -> Result<SegmentedText, SegError> {
        validate_tree(&self.source, &root)?;
        let mut st = SegmentedText { root, ..self.clone() };
        st.granularity = compute_granularity(&st);
        Ok(st)
    }

    /// Distinct processing languages declared anywhere in the tree.
    pub fn observed_languages(&self) -> BTreeSet<LanguageTag> {
        let mut out: BTreeSet<LanguageTag> =
            self.root.walk().into_iter().filter_map(|(_, s)| s.lang).collect();
        if out.is_empty() {
            out.insert(self.language);
        }
        out
    }
}

fn push_merged(out: &mut Vec<Span>, span: Span) {
    match out.last_mut() {
        Some(last) if last.end == span.start => last.end = span.end,
        _ => out.push(span),
    }
}

fn validate_tree(source: &str, root: &Segment) -> Result<(), SegError> {
    if root.kind != SegmentKind::File {
        return Err(SegError::InvalidTree("root segment must be of kind file".into()));
    }
    if root.span != Span::new(0, source.len()) {
        return Err(SegError::InvalidTree("root span must cover the whole source".into()));
    }
    fn check(source: &str, seg: &Segment) -> Result<(), SegError> {
        let Span { start, end } = seg.span;
        if start > end || end > source.len() || !source.is_char_boundary(start) || !source.is_char_boundary(end) {
            return Err(SegError::InvalidTree(format!("span {start}..{end} is not a valid character range")));
        }
        let mut prev_end = start;
        for child in &seg.children {
            if child.kind <= seg.kind {
                return Err(SegError::InvalidTree(format!(
                    "{} segment nested inside {} segment",
                    child.kind, seg.kind
                )));
            }
            if child.span.start < prev_end || child.span.end > end {
                return Err(SegError::InvalidTree(format!(
                    "child span {}..{} overlaps a sibling or leaves its parent {}..{}",
                    child.span.start, child.span.end, start, end
                )));
            }
            prev_end = child.span.end;
            check(source, child)?;
        }
        Ok(())
    }
    check(source, root)
}

/// Finest level present in the tree and whether it covers all content.
pub fn compute_granularity(st: &SegmentedText) -> TextGranularity {
    if st.neutral {
        return TextGranularity::new(SegmentKind::File, Coverage::Full);
    }
    let walk = st.root.walk();
    let level = walk.iter().map(|(_, s)| s.kind).max().unwrap_or(SegmentKind::File);
    if level == SegmentKind::File {
        return TextGranularity::new(level, Coverage::Full);
    }
    // Maximal segments at `level` or finer; nested ones add nothing.
    let mut covered: Vec<Span> = Vec::new();
    collect_covering(&st.root, level, &mut covered);
    let content = st.content_ranges();
    let coverage = if ranges_within(&content, &covered) { Coverage::Full } else { Coverage::Partial };
    TextGranularity::new(level, coverage)
}

fn collect_covering(seg: &Segment, level: SegmentKind, out: &mut Vec<Span>) {
    if seg.kind >= level {
        if !seg.span.is_empty() {
            out.push(seg.span);
        }
        return;
    }
    for c in &seg.children {
        collect_covering(c, level, out);
    }
}

/// True when every byte of `content` lies inside some span of `covered`.
/// Both lists are sorted and internally disjoint.
fn ranges_within(content: &[Span], covered: &[Span]) -> bool {
    let mut j = 0;
    for c in content {
        let mut pos = c.start;
        while pos < c.end {
            while j < covered.len() && covered[j].end <= pos {
                j += 1;
            }
            match covered.get(j) {
                Some(cov) if cov.start <= pos => pos = cov.end,
                _ => return false,
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn en() -> LanguageTag {
        LanguageTag::parse("en").unwrap()
    }

    #[test]
    fn bare_file_segment_is_full_file_granularity() {
        let src = "Some text".to_string();
        let root = Segment::new(SegmentKind::File, Span::new(0, src.len()));
        let st = SegmentedText::from_parts(en(), src, SourceFormat::Plain, None, root).unwrap();
        assert_eq!(st.granularity(), TextGranularity::new(SegmentKind::File, Coverage::Full));
    }

    #[test]
    fn missing_sentences_in_one_paragraph_is_partial() {
        let src = "One. Two.\n\nThree".to_string();
        let p1 = Segment::new(SegmentKind::Paragraph, Span::new(0, 9)).with_children(vec![
            Segment::new(SegmentKind::Sentence, Span::new(0, 4)),
            Segment::new(SegmentKind::Sentence, Span::new(5, 9)),
        ]);
        let p2 = Segment::new(SegmentKind::Paragraph, Span::new(11, 16));
        let root = Segment::new(SegmentKind::File, Span::new(0, 16)).with_children(vec![p1, p2]);
        let st = SegmentedText::from_parts(en(), src, SourceFormat::Plain, None, root).unwrap();
        assert_eq!(st.granularity(), TextGranularity::new(SegmentKind::Sentence, Coverage::Partial));
    }

    #[test]
    fn all_sentences_identified_is_full() {
        let src = "One. Two.".to_string();
        let root = Segment::new(SegmentKind::File, Span::new(0, 9)).with_children(vec![
            Segment::new(SegmentKind::Sentence, Span::new(0, 4)),
            Segment::new(SegmentKind::Sentence, Span::new(5, 9)),
        ]);
        let st = SegmentedText::from_parts(en(), src, SourceFormat::Plain, None, root).unwrap();
        assert_eq!(st.granularity(), TextGranularity::new(SegmentKind::Sentence, Coverage::Full));
    }

    #[test]
    fn rejects_broken_trees() {
        let src = "abc".to_string();
        let bad_kind = Segment::new(SegmentKind::File, Span::new(0, 3))
            .with_children(vec![Segment::new(SegmentKind::File, Span::new(0, 1))]);
        assert!(SegmentedText::from_parts(en(), src.clone(), SourceFormat::Plain, None, bad_kind).is_err());
        let overlap = Segment::new(SegmentKind::File, Span::new(0, 3)).with_children(vec![
            Segment::new(SegmentKind::Sentence, Span::new(0, 2)),
            Segment::new(SegmentKind::Sentence, Span::new(1, 3)),
        ]);
        assert!(SegmentedText::from_parts(en(), src.clone(), SourceFormat::Plain, None, overlap).is_err());
        let short_root = Segment::new(SegmentKind::File, Span::new(0, 2));
        assert!(SegmentedText::from_parts(en(), src, SourceFormat::Plain, None, short_root).is_err());
        let mid_char = Segment::new(SegmentKind::File, Span::new(0, 2))
            .with_children(vec![Segment::new(SegmentKind::Sentence, Span::new(0, 1))]);
        assert!(SegmentedText::from_parts(en(), "é".into(), SourceFormat::Plain, None, mid_char).is_err());
    }

    #[test]
    fn lattice_meet_is_product_order() {
        let a = TextGranularity::new(SegmentKind::Paragraph, Coverage::Full);
        let b = TextGranularity::new(SegmentKind::Sentence, Coverage::Partial);
        assert_eq!(a.meet(b), TextGranularity::new(SegmentKind::Paragraph, Coverage::Partial));
        assert_eq!(TextGranularity::lattice().len(), 8);
    }

    #[test]
    fn latin1_is_decoded_when_labelled() {
        assert_eq!(decode_text(&[0x63, 0x61, 0x66, 0xe9], Charset::Latin1).unwrap(), "café");
        assert!(decode_text(&[0xff], Charset::Utf8).is_err());
    }

    #[test]
    fn serde_round_trip_validates() {
        let st = segment_text("Hello world. Bye now.", en(), &SegmentationPolicy::default(), SegmentKind::Sentence)
            .unwrap();
        let json = serde_json::to_string(&st).unwrap();
        let back: SegmentedText = serde_json::from_str(&json).unwrap();
        assert_eq!(back, st);
        let broken = json.replace("\"end\":21", "\"end\":99");
        assert!(serde_json::from_str::<SegmentedText>(&broken).is_err());
    }
}
