//! Parallel texts: aligned linguistic versions of the same content.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::langtags::{LanguageTag, TagKind};
use crate::segcore::{
    segment_marked, Coverage, SegError, SegmentKind, SegmentPath, SegmentedText, SourceFormat, TextGranularity,
};
use crate::xml::{Token, Tokenizer};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlignError {
    #[error("alignment needs at least two versions, got {0}")]
    TooFewVersions(usize),
    #[error("cannot align at {kind}: no version is segmented finer than {finest}")]
    KindTooFine { kind: SegmentKind, finest: SegmentKind },
    #[error("no version has any content, not even file-level pairing is possible")]
    GranularityUnachievable,
    #[error("illegal entirety combination: {0}")]
    IllegalCombination(String),
    #[error("unknown entirety attribute {0:?}")]
    UnknownEntirety(String),
    #[error("language switches below paragraph level at byte {position} are not supported")]
    VeryMixedUnsupported { position: usize },
    #[error("only markup-based multilingual files can be split")]
    NotMarkup,
    #[error("invalid alignment group {index}: {reason}")]
    InvalidGroup { index: usize, reason: String },
    #[error(transparent)]
    Segmentation(#[from] SegError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Entirety {
    Complete,
    Partial,
    Summary,
    Translating,
    Machine,
    Suspended,
    Undefined,
}

impl Entirety {
    pub const ALL: [Entirety; 7] = [
        Entirety::Complete,
        Entirety::Partial,
        Entirety::Summary,
        Entirety::Translating,
        Entirety::Machine,
        Entirety::Suspended,
        Entirety::Undefined,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Entirety::Complete => "complete",
            Entirety::Partial => "partial",
            Entirety::Summary => "summary",
            Entirety::Translating => "translating",
            Entirety::Machine => "machine",
            Entirety::Suspended => "suspended",
            Entirety::Undefined => "undefined",
        }
    }
}

impl FromStr for Entirety {
    type Err = AlignError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Entirety::ALL
            .into_iter()
            .find(|e| e.as_str() == s.trim())
            .ok_or_else(|| AlignError::UnknownEntirety(s.to_string()))
    }
}

impl fmt::Display for Entirety {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Declared completeness of one version. Always non-empty; `undefined`
/// stands alone and `complete` rules out `partial` and `summary`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "BTreeSet<Entirety>", into = "BTreeSet<Entirety>")]
pub struct EntiretySet(BTreeSet<Entirety>);

impl EntiretySet {
    pub fn new(attrs: impl IntoIterator<Item = Entirety>) -> Result<Self, AlignError> {
        let set: BTreeSet<Entirety> = attrs.into_iter().collect();
        let illegal = |why: &str| Err(AlignError::IllegalCombination(why.to_string()));
        if set.is_empty() {
            return illegal("at least one attribute is required");
        }
        if set.contains(&Entirety::Undefined) && set.len() > 1 {
            return illegal("undefined cannot be combined with other attributes");
        }
        if set.contains(&Entirety::Complete) && (set.contains(&Entirety::Partial) || set.contains(&Entirety::Summary)) {
            return illegal("complete excludes partial and summary");
        }
        Ok(EntiretySet(set))
    }

    pub fn single(attr: Entirety) -> Self {
        EntiretySet(BTreeSet::from([attr]))
    }

    pub fn contains(&self, attr: Entirety) -> bool {
        self.0.contains(&attr)
    }

    pub fn iter(&self) -> impl Iterator<Item = Entirety> + '_ {
        self.0.iter().copied()
    }
}

impl TryFrom<BTreeSet<Entirety>> for EntiretySet {
    type Error = AlignError;

    fn try_from(set: BTreeSet<Entirety>) -> Result<Self, Self::Error> {
        EntiretySet::new(set)
    }
}

impl From<EntiretySet> for BTreeSet<Entirety> {
    fn from(set: EntiretySet) -> Self {
        set.0
    }
}

impl fmt::Display for EntiretySet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = self.0.iter().map(|e| e.as_str()).collect();
        f.write_str(&parts.join("+"))
    }
}

/// Accepts `summary+machine`, `summary,machine` or `summary machine`.
impl FromStr for EntiretySet {
    type Err = AlignError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let attrs = s
            .split(|c: char| c == '+' || c == ',' || c.is_whitespace())
            .filter(|p| !p.is_empty())
            .map(str::parse)
            .collect::<Result<Vec<Entirety>, _>>()?;
        EntiretySet::new(attrs)
    }
}

/// One line of the parallel texts: at most one segment per language.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentGroup {
    pub kind: SegmentKind,
    pub members: BTreeMap<LanguageTag, SegmentPath>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelTexts {
    versions: BTreeMap<LanguageTag, SegmentedText>,
    groups: Vec<AlignmentGroup>,
    entirety: BTreeMap<LanguageTag, EntiretySet>,
    granularity: TextGranularity,
    kind: SegmentKind,
    source: Option<String>,
}

impl ParallelTexts {
    /// Assembles parallel texts from explicit groups, checking that every
    /// member exists, has the group's kind and that groups are monotone.
    pub fn from_parts(
        versions: BTreeMap<LanguageTag, SegmentedText>,
        groups: Vec<AlignmentGroup>,
        kind: SegmentKind,
    ) -> Result<Self, AlignError> {
        // Same-kind segments never nest, so path order is document order.
        let mut last: BTreeMap<LanguageTag, &SegmentPath> = BTreeMap::new();
        for (index, group) in groups.iter().enumerate() {
            let bad = |reason: String| AlignError::InvalidGroup { index, reason };
            if group.members.is_empty() {
                return Err(bad("no members".into()));
            }
            if group.kind != kind {
                return Err(bad(format!("kind {} differs from alignment kind {kind}", group.kind)));
            }
            for (lang, path) in &group.members {
                let version = versions.get(lang).ok_or_else(|| bad(format!("no {lang} version")))?;
                let seg = version.get(path).ok_or_else(|| bad(format!("no {lang} segment at {path}")))?;
                if seg.kind != group.kind {
                    return Err(bad(format!("{lang} segment at {path} is a {}", seg.kind)));
                }
                if last.get(lang).is_some_and(|prev| prev.0 >= path.0) {
                    return Err(bad(format!("{lang} segment at {path} is out of document order")));
                }
                last.insert(*lang, path);
            }
        }
        let granularity = parallel_granularity(&versions).unwrap_or(TextGranularity::new(kind, Coverage::Full));
        Ok(ParallelTexts { versions, groups, entirety: BTreeMap::new(), granularity, kind, source: None })
    }

    pub fn versions(&self) -> &BTreeMap<LanguageTag, SegmentedText> {
        &self.versions
    }

    pub fn groups(&self) -> &[AlignmentGroup] {
        &self.groups
    }

    pub fn entirety(&self) -> &BTreeMap<LanguageTag, EntiretySet> {
        &self.entirety
    }

    pub fn granularity(&self) -> TextGranularity {
        self.granularity
    }

    /// Kind actually achieved by the alignment.
    pub fn kind(&self) -> SegmentKind {
        self.kind
    }

    /// Where the texts came from; harvested records link back to it.
    pub fn source(&self) -> Option<&str> {
        self.source.as_deref()
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = Some(source.into());
        self
    }

    pub fn set_entirety(&mut self, lang: LanguageTag, attrs: EntiretySet) {
        self.entirety.insert(lang, attrs);
    }

    /// Texts of one group's members, in language order.
    pub fn group_texts(&self, index: usize) -> BTreeMap<LanguageTag, String> {
        let mut out = BTreeMap::new();
        if let Some(group) = self.groups.get(index) {
            for (lang, path) in &group.members {
                if let Some(seg) = self.versions[lang].get(path) {
                    out.insert(*lang, self.versions[lang].text_of(seg).into_owned());
                }
            }
        }
        out
    }
}

pub fn set_entirety(mut pt: ParallelTexts, lang: LanguageTag, attrs: EntiretySet) -> ParallelTexts {
    pt.set_entirety(lang, attrs);
    pt
}

/// Meet of granularities: the coarsest level, full only if every input is.
pub fn meet_all(items: impl IntoIterator<Item = TextGranularity>) -> Option<TextGranularity> {
    items.into_iter().reduce(TextGranularity::meet)
}

/// Granularity of parallel texts: no finer than any of its versions.
pub fn parallel_granularity(versions: &BTreeMap<LanguageTag, SegmentedText>) -> Option<TextGranularity> {
    meet_all(versions.values().map(SegmentedText::granularity))
}

fn has_content(st: &SegmentedText) -> bool {
    if st.is_neutral() {
        return !st.source().trim().is_empty();
    }
    !st.content_ranges().is_empty()
}

/// Pairs the i-th segment of every version at `kind`, coarsening one level
/// at a time while the segment counts disagree.
pub fn align(versions: BTreeMap<LanguageTag, SegmentedText>, kind: SegmentKind) -> Result<ParallelTexts, AlignError> {
    if versions.len() < 2 {
        return Err(AlignError::TooFewVersions(versions.len()));
    }
    let finest = versions.values().map(|v| v.granularity().level).max().expect("at least two versions");
    if kind > finest {
        return Err(AlignError::KindTooFine { kind, finest });
    }
    let granularity = parallel_granularity(&versions).expect("at least two versions");
    let mut current = kind.min(granularity.level);
    loop {
        if current == SegmentKind::File {
            let members: BTreeMap<LanguageTag, SegmentPath> = versions
                .iter()
                .filter(|(_, v)| has_content(v))
                .map(|(l, _)| (*l, SegmentPath::root()))
                .collect();
            if members.is_empty() {
                return Err(AlignError::GranularityUnachievable);
            }
            let groups = vec![AlignmentGroup { kind: current, members }];
            return ParallelTexts::from_parts(versions, groups, current);
        }
        let per_version: Vec<(LanguageTag, Vec<SegmentPath>)> = versions
            .iter()
            .map(|(l, v)| (*l, v.segments_of_kind(current).into_iter().map(|(p, _)| p).collect()))
            .collect();
        let count = per_version[0].1.len();
        if per_version.iter().all(|(_, paths)| paths.len() == count) {
            let groups = (0..count)
                .map(|i| AlignmentGroup {
                    kind: current,
                    members: per_version.iter().map(|(l, paths)| (*l, paths[i].clone())).collect(),
                })
                .collect();
            return ParallelTexts::from_parts(versions, groups, current);
        }
        current = current.coarser().expect("file level handled above");
    }
}

fn effective_projection_lang(lang: Option<LanguageTag>) -> LanguageTag {
    match lang {
        Some(l) if matches!(l.kind(), TagKind::Standard | TagKind::NoLinguisticContent) => l,
        _ => LanguageTag::UNDETERMINED,
    }
}

struct Block {
    start: usize,
    end: usize,
    lang: LanguageTag,
    kind: SegmentKind,
}

/// Splits a serial multilingual marked document into one document per
/// language. Blocks are the outermost segment elements; unlabelled blocks
/// go to `un` and language-neutral (`xx`) blocks are copied everywhere.
pub fn split_multilingual(st: &SegmentedText) -> Result<BTreeMap<LanguageTag, SegmentedText>, AlignError> {
    if st.format() != SourceFormat::Markup {
        return Err(AlignError::NotMarkup);
    }
    let source = st.source();
    let mut blocks: Vec<Block> = Vec::new();
    // (language in force, inside a block)
    let mut stack: Vec<(Option<LanguageTag>, bool)> = Vec::new();
    let mut open_block: Option<(usize, LanguageTag, SegmentKind, usize)> = None;
    let mut base: Option<String> = None;

    for token in Tokenizer::new(source) {
        let token = token.map_err(SegError::from)?;
        let (name, attrs, span, empty) = match token {
            Token::Start { name, attrs, span } => (name, attrs, span, false),
            Token::Empty { name, attrs, span } => (name, attrs, span, true),
            Token::End { span, .. } => {
                stack.pop();
                if let Some((start, lang, kind, depth)) = open_block {
                    if stack.len() == depth {
                        blocks.push(Block { start, end: span.end, lang, kind });
                        open_block = None;
                    }
                }
                continue;
            }
            _ => continue,
        };
        let mut lang = None;
        for (k, v) in &attrs {
            match *k {
                "xml:lang" | "lang" => lang = Some(LanguageTag::parse(v).map_err(SegError::from)?),
                "xml:base" | "base" if stack.is_empty() => base = Some(v.clone()),
                "href" if name == "base" && base.is_none() => base = Some(v.clone()),
                _ => {}
            }
        }
        let inherited = stack.last().and_then(|(l, _)| *l);
        let in_block = stack.last().is_some_and(|(_, b)| *b);
        if in_block {
            let block_lang = open_block.as_ref().map(|b| b.1);
            if let Some(l) = lang {
                if Some(effective_projection_lang(Some(l))) != block_lang {
                    return Err(AlignError::VeryMixedUnsupported { position: span.start });
                }
            }
        }
        let effective = lang.or(inherited);
        let kind = crate::segcore::element_kind(name);
        let starts_block = !stack.is_empty() && !in_block && kind.is_some();
        if starts_block {
            let block_lang = effective_projection_lang(effective);
            let kind = kind.expect("checked");
            if empty {
                blocks.push(Block { start: span.start, end: span.end, lang: block_lang, kind });
            } else {
                open_block = Some((span.start, block_lang, kind, stack.len()));
            }
        }
        if !empty {
            stack.push((effective, in_block || starts_block));
        }
    }

    // Sentence-level blocks that change language are an interleaved text.
    for pair in blocks.windows(2) {
        let fine = pair.iter().any(|b| b.kind > SegmentKind::Paragraph);
        let neutral = pair.iter().any(|b| b.lang == LanguageTag::NEUTRAL);
        if fine && !neutral && pair[0].lang != pair[1].lang {
            return Err(AlignError::VeryMixedUnsupported { position: pair[1].start });
        }
    }

    let mut langs: BTreeSet<LanguageTag> =
        blocks.iter().map(|b| b.lang).filter(|l| *l != LanguageTag::NEUTRAL).collect();
    if langs.is_empty() {
        langs.insert(if blocks.is_empty() { LanguageTag::UNDETERMINED } else { LanguageTag::NEUTRAL });
    }
    let mut out = BTreeMap::new();
    for lang in langs {
        let mut doc = format!("<text xml:lang=\"{lang}\"");
        if let Some(b) = &base {
            doc.push_str(&format!(" xml:base=\"{}\"", crate::xml::escape(b)));
        }
        doc.push('>');
        for b in blocks.iter().filter(|b| b.lang == lang || b.lang == LanguageTag::NEUTRAL) {
            doc.push('\n');
            doc.push_str(&source[b.start..b.end]);
        }
        doc.push_str("\n</text>\n");
        out.insert(lang, segment_marked(&doc)?);
    }
    Ok(out)
}

pub(crate) fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConsistencyDiagnostic {
    /// The language has no version in the parallel texts.
    LanguageAbsent(LanguageTag),
    Mismatch { group: usize, expected: String, found: String },
    /// The projection ran out of segments before this group.
    Uncovered { group: usize },
    /// Projection segment with no corresponding group.
    Extra { index: usize, text: String },
}

impl fmt::Display for ConsistencyDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConsistencyDiagnostic::LanguageAbsent(l) => write!(f, "no {l} version to compare against"),
            ConsistencyDiagnostic::Mismatch { group, expected, found } => {
                write!(f, "group {group}: expected {expected:?}, found {found:?}")
            }
            ConsistencyDiagnostic::Uncovered { group } => write!(f, "group {group}: not covered by the multilingual file"),
            ConsistencyDiagnostic::Extra { index, text } => {
                write!(f, "segment {index} of the multilingual file has no counterpart: {text:?}")
            }
        }
    }
}

/// Compares a language's projection from a multilingual file with the
/// monolingual version of the parallel texts, group by group.
pub fn check_multilingual_consistency(
    pt: &ParallelTexts,
    projection: &SegmentedText,
    lang: LanguageTag,
) -> Vec<ConsistencyDiagnostic> {
    let Some(version) = pt.versions().get(&lang) else {
        return vec![ConsistencyDiagnostic::LanguageAbsent(lang)];
    };
    let expected: Vec<(usize, String)> = pt
        .groups()
        .iter()
        .enumerate()
        .filter_map(|(i, g)| g.members.get(&lang).and_then(|p| version.get(p)).map(|s| (i, version.text_of(s))))
        .map(|(i, t)| (i, normalize_ws(&t)))
        .collect();
    let found: Vec<String> = projection
        .segments_of_kind(pt.kind())
        .into_iter()
        .map(|(_, s)| normalize_ws(&projection.text_of(s)))
        .collect();
    let mut out = Vec::new();
    for (j, (group, text)) in expected.iter().enumerate() {
        match found.get(j) {
            Some(f) if f == text => {}
            Some(f) => out.push(ConsistencyDiagnostic::Mismatch { group: *group, expected: text.clone(), found: f.clone() }),
            None => out.push(ConsistencyDiagnostic::Uncovered { group: *group }),
        }
    }
    for (index, text) in found.iter().enumerate().skip(expected.len()) {
        out.push(ConsistencyDiagnostic::Extra { index, text: text.clone() });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segcore::{segment_text, SegmentationPolicy};
    use proptest::prelude::*;

    fn tag(s: &str) -> LanguageTag {
        LanguageTag::parse(s).unwrap()
    }

    fn plain(text: &str, lang: &str, kind: SegmentKind) -> SegmentedText {
        segment_text(text, tag(lang), &SegmentationPolicy::default(), kind).unwrap()
    }

    #[test]
    fn equal_paragraph_counts_pair_by_index() {
        let en = plain("One.\n\nTwo.\n\nThree.", "en", SegmentKind::Paragraph);
        let es = plain("Uno.\n\nDos.\n\nTres.", "es", SegmentKind::Paragraph);
        let pt = align(BTreeMap::from([(tag("en"), en), (tag("es"), es)]), SegmentKind::Paragraph).unwrap();
        assert_eq!(pt.groups().len(), 3);
        for (i, g) in pt.groups().iter().enumerate() {
            assert_eq!(g.members[&tag("en")], SegmentPath(vec![i]));
            assert_eq!(g.members[&tag("es")], SegmentPath(vec![i]));
        }
        assert_eq!(pt.group_texts(1)[&tag("es")], "Dos.");
    }

    #[test]
    fn coarser_version_limits_the_kind() {
        let en = plain("Hello there. Bye.", "en", SegmentKind::Paragraph);
        let es = plain("Hola. Adios.", "es", SegmentKind::Sentence);
        let pt = align(BTreeMap::from([(tag("en"), en), (tag("es"), es)]), SegmentKind::Sentence).unwrap();
        assert_eq!(pt.kind(), SegmentKind::Paragraph);
        assert_eq!(pt.granularity(), TextGranularity::new(SegmentKind::Paragraph, Coverage::Full));
    }

    #[test]
    fn count_mismatch_coarsens() {
        let en = plain("A b. C d.\n\nE f.", "en", SegmentKind::Sentence);
        let es = plain("A b.\n\nE f.", "es", SegmentKind::Sentence);
        let pt = align(BTreeMap::from([(tag("en"), en), (tag("es"), es)]), SegmentKind::Sentence).unwrap();
        assert_eq!(pt.kind(), SegmentKind::Paragraph);
        assert_eq!(pt.groups().len(), 2);
    }

    #[test]
    fn errors() {
        let en = plain("A b.", "en", SegmentKind::Paragraph);
        assert_eq!(align(BTreeMap::from([(tag("en"), en.clone())]), SegmentKind::File), Err(AlignError::TooFewVersions(1)));
        let es = plain("C d.", "es", SegmentKind::Paragraph);
        let r = align(BTreeMap::from([(tag("en"), en), (tag("es"), es)]), SegmentKind::Sentence);
        assert!(matches!(r, Err(AlignError::KindTooFine { .. })));
        let empty = plain("", "en", SegmentKind::Sentence);
        let r = align(BTreeMap::from([(tag("en"), empty.clone()), (tag("fr"), empty.with_language(tag("fr")))]), SegmentKind::File);
        assert_eq!(r, Err(AlignError::GranularityUnachievable));
    }

    #[test]
    fn file_level_skips_empty_versions() {
        let en = plain("Text.", "en", SegmentKind::File);
        let fr = plain("   ", "fr", SegmentKind::File);
        let pt = align(BTreeMap::from([(tag("en"), en), (tag("fr"), fr)]), SegmentKind::File).unwrap();
        assert_eq!(pt.groups().len(), 1);
        assert_eq!(pt.groups()[0].members.keys().copied().collect::<Vec<_>>(), [tag("en")]);
    }

    #[test]
    fn self_alignment_is_identity() {
        let en = plain("A b. C d.\n\nE f. G h.", "en", SegmentKind::Sentence);
        let copy = en.clone().with_language(tag("fr"));
        let n = en.count_kind(SegmentKind::Sentence);
        let pt = align(BTreeMap::from([(tag("en"), en), (tag("fr"), copy)]), SegmentKind::Sentence).unwrap();
        assert_eq!(pt.groups().len(), n);
        for i in 0..n {
            let texts = pt.group_texts(i);
            assert_eq!(texts[&tag("en")], texts[&tag("fr")]);
        }
    }

    #[test]
    fn granularity_examples() {
        use Coverage::*;
        use SegmentKind::*;
        let g = TextGranularity::new;
        assert_eq!(meet_all([g(Sentence, Full), g(Sentence, Full)]), Some(g(Sentence, Full)));
        assert_eq!(meet_all([g(Paragraph, Full), g(Sentence, Full)]), Some(g(Paragraph, Full)));
        assert_eq!(meet_all([g(Sentence, Partial), g(Sentence, Full)]), Some(g(Sentence, Partial)));
        assert_eq!(meet_all([]), None);
    }

    #[test]
    fn entirety_sets() {
        let farsi: EntiretySet = "summary+machine".parse().unwrap();
        assert_eq!(farsi.to_string(), "summary+machine");
        assert!(EntiretySet::new([Entirety::Undefined]).is_ok());
        for bad in ["complete+partial", "complete,summary", "undefined+machine", ""] {
            assert!(matches!(bad.parse::<EntiretySet>(), Err(AlignError::IllegalCombination(_))), "{bad}");
        }
        assert!(matches!("finished".parse::<EntiretySet>(), Err(AlignError::UnknownEntirety(_))));
        let en = plain("A.", "en", SegmentKind::File);
        let fa = plain("B.", "fa", SegmentKind::File);
        let pt = align(BTreeMap::from([(tag("en"), en), (tag("fa"), fa)]), SegmentKind::File).unwrap();
        let pt = set_entirety(pt, tag("fa"), farsi.clone());
        assert_eq!(pt.entirety()[&tag("fa")], farsi);
        let json = serde_json::to_string(&farsi).unwrap();
        assert_eq!(json, r#"["summary","machine"]"#);
        assert!(serde_json::from_str::<EntiretySet>(r#"["complete","summary"]"#).is_err());
    }

    #[test]
    fn from_parts_rejects_bad_groups() {
        let en = plain("A b. C d.", "en", SegmentKind::Sentence);
        let es = plain("E f. G h.", "es", SegmentKind::Sentence);
        let versions = BTreeMap::from([(tag("en"), en), (tag("es"), es)]);
        let g = |en: Vec<usize>, es: Vec<usize>| AlignmentGroup {
            kind: SegmentKind::Sentence,
            members: BTreeMap::from([(tag("en"), SegmentPath(en)), (tag("es"), SegmentPath(es))]),
        };
        let crossed = vec![g(vec![0, 1], vec![0, 0]), g(vec![0, 0], vec![0, 1])];
        assert!(ParallelTexts::from_parts(versions.clone(), crossed, SegmentKind::Sentence).is_err());
        let wrong_kind = vec![g(vec![0], vec![0])];
        assert!(ParallelTexts::from_parts(versions.clone(), wrong_kind, SegmentKind::Sentence).is_err());
        let missing = vec![g(vec![0, 5], vec![0, 0])];
        assert!(ParallelTexts::from_parts(versions, missing, SegmentKind::Sentence).is_err());
    }

    const SERIAL: &str = r#"<text xml:lang="mm" xml:base="http://example.com"><div xml:lang="es"><p>Cuerpo uno.</p><p>Cuerpo dos.</p></div><p xml:lang="xx">2024-01-01</p><div xml:lang="en"><h1>Annex</h1></div></text>"#;

    #[test]
    fn serial_file_splits_per_language() {
        let st = segment_marked(SERIAL).unwrap();
        let parts = split_multilingual(&st).unwrap();
        assert_eq!(parts.keys().map(|l| l.to_string()).collect::<Vec<_>>(), ["en", "es"]);
        let texts = |l: &str| -> Vec<String> {
            let v = &parts[&tag(l)];
            v.segments_of_kind(SegmentKind::Paragraph).iter().map(|(_, s)| v.text_of(s).into_owned()).collect()
        };
        assert_eq!(texts("es"), ["Cuerpo uno.", "Cuerpo dos.", "2024-01-01"]);
        assert_eq!(texts("en"), ["2024-01-01", "Annex"]);
        assert_eq!(parts[&tag("es")].language(), tag("es"));
    }

    #[test]
    fn monolingual_file_gives_one_projection() {
        let st = segment_marked(r#"<text xml:lang="mm"><p xml:lang="de">Nur Deutsch.</p></text>"#).unwrap();
        let parts = split_multilingual(&st).unwrap();
        assert_eq!(parts.len(), 1);
        assert!(parts.contains_key(&tag("de")));
    }

    #[test]
    fn interleaved_sentences_are_unsupported() {
        let docs = [
            r#"<text xml:lang="mm"><p xml:lang="es">Hola <s xml:lang="en">Hello.</s></p></text>"#,
            r#"<text xml:lang="mm"><s xml:lang="es">Hola.</s><s xml:lang="en">Hello.</s></text>"#,
        ];
        for doc in docs {
            let st = segment_marked(doc).unwrap();
            assert!(matches!(split_multilingual(&st), Err(AlignError::VeryMixedUnsupported { .. })), "{doc}");
        }
    }

    #[test]
    fn consistency_against_monolingual_versions() {
        let es = segment_marked(r#"<text xml:lang="es"><p>Cuerpo uno.</p><p>Cuerpo  dos.</p><p>2024-01-01</p></text>"#).unwrap();
        let en = segment_marked(r#"<text xml:lang="en"><p>Body one.</p><p>Body two.</p><p>2024-01-01</p></text>"#).unwrap();
        let pt = align(BTreeMap::from([(tag("en"), en), (tag("es"), es)]), SegmentKind::Paragraph).unwrap();
        let parts = split_multilingual(&segment_marked(SERIAL).unwrap()).unwrap();
        assert!(check_multilingual_consistency(&pt, &parts[&tag("es")], tag("es")).is_empty());

        let changed = segment_marked(r#"<text xml:lang="es"><p>Cuerpo uno.</p><p>Otro.</p><p>2024-01-01</p></text>"#).unwrap();
        let d = check_multilingual_consistency(&pt, &changed, tag("es"));
        assert_eq!(d.len(), 1);
        assert!(matches!(&d[0], ConsistencyDiagnostic::Mismatch { group: 1, .. }));

        // The English projection lacks the body paragraphs.
        let d = check_multilingual_consistency(&pt, &parts[&tag("en")], tag("en"));
        assert!(d.iter().any(|x| matches!(x, ConsistencyDiagnostic::Uncovered { group: 2 })));
        assert_eq!(check_multilingual_consistency(&pt, &changed, tag("fr")), vec![ConsistencyDiagnostic::LanguageAbsent(tag("fr"))]);
    }

    fn granularity_strategy() -> impl Strategy<Value = TextGranularity> {
        (0usize..4, any::<bool>()).prop_map(|(k, full)| {
            TextGranularity::new(SegmentKind::ALL[k], if full { Coverage::Full } else { Coverage::Partial })
        })
    }

    proptest! {
        #[test]
        fn meet_is_commutative_and_associative(a in granularity_strategy(), b in granularity_strategy(), c in granularity_strategy()) {
            prop_assert_eq!(a.meet(b), b.meet(a));
            prop_assert_eq!(a.meet(b).meet(c), a.meet(b.meet(c)));
        }

        #[test]
        fn alignment_is_symmetric_and_bounded(
            a in proptest::collection::vec(1usize..4, 1..4),
            b in proptest::collection::vec(1usize..4, 1..4),
            kind in 0usize..3,
        ) {
            let make = |shape: &[usize]| shape.iter().map(|n| vec!["Ab cd."; *n].join(" ")).collect::<Vec<_>>().join("\n\n");
            let x = plain(&make(&a), "en", SegmentKind::Sentence);
            let y = plain(&make(&b), "es", SegmentKind::Sentence);
            let kind = SegmentKind::ALL[kind];
            let one = align(BTreeMap::from([(tag("en"), x.clone()), (tag("es"), y.clone())]), kind).unwrap();
            let two = align(BTreeMap::from([(tag("es"), y), (tag("en"), x)]), kind).unwrap();
            prop_assert_eq!(one.groups(), two.groups());
            prop_assert!(one.kind() <= one.granularity().level);
            prop_assert!(one.kind() <= kind);
        }
    }
}
