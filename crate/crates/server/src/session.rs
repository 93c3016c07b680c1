//! Translation sessions over an uploaded dossier: one source version, one
//! target language, a row per source segment.

use std::collections::BTreeMap;

use partext_core::align::{AlignmentGroup, Entirety, EntiretySet, ParallelTexts};
use partext_core::langtags::LanguageTag;
use partext_core::lingstore::{harvest, LinguisticTable, RecordId};
use partext_core::medbox::{validate, Alignment, Content, Dossier, ParallelFile, Severity};
use partext_core::segcore::{
    apply_manual_edit, segment_marked, segment_text, ManualEdit, Segment, SegmentKind, SegmentPath, SegmentationPolicy,
    SegmentedText, SourceFormat, Span,
};
use serde::{Deserialize, Serialize};

use crate::error::ApiError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentState {
    Untouched,
    Draft,
    Confirmed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSegment {
    pub path: SegmentPath,
    pub span: Span,
    pub state: SegmentState,
    pub text: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    /// Creation order among the server's sessions.
    pub seq: u64,
    pub dossier: String,
    pub source: LanguageTag,
    pub target: LanguageTag,
    /// Name of the source file inside `parallel/<source>/`.
    pub file: String,
    pub kind: SegmentKind,
    pub source_text: SegmentedText,
    pub segments: Vec<SessionSegment>,
    pub resegmented: bool,
    /// Records added to the database on completion; set once completed.
    pub harvested: Option<usize>,
    #[serde(skip)]
    pub med: Vec<u8>,
    #[serde(skip)]
    pub result: Option<Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Suggestion {
    pub record: RecordId,
    pub uri: String,
    pub score: f64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentView {
    pub n: usize,
    pub source: String,
    pub text: String,
    pub state: SegmentState,
    pub suggestions: Vec<Suggestion>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentUpdate {
    pub text: String,
    pub state: SegmentState,
    /// Suggestion the translator accepted; counts as a use of the record.
    #[serde(default)]
    pub record: Option<RecordId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum Resegment {
    /// Split at a byte offset counted from the segment start.
    Split { offset: usize },
    /// Join with the following row.
    Merge,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SessionSummary {
    pub id: String,
    pub dossier: String,
    pub source: LanguageTag,
    pub target: LanguageTag,
    pub segments: usize,
    pub confirmed: usize,
    pub completed: bool,
    pub harvested: Option<usize>,
}

fn source_file(med: &Dossier, lang: LanguageTag) -> Option<&ParallelFile> {
    let embedded = || {
        med.parallel()
            .iter()
            .filter(move |f| f.lang == lang && matches!(&f.content, Content::Embedded(b) if std::str::from_utf8(b).is_ok()))
    };
    embedded().find(|f| f.segmentation.is_some()).or_else(|| embedded().next())
}

fn is_markup_name(name: &str) -> bool {
    let lower = name.to_ascii_lowercase();
    [".html", ".htm", ".xhtml", ".xml"].iter().any(|e| lower.ends_with(e))
}

fn segment_file(file: &ParallelFile) -> Result<SegmentedText, ApiError> {
    if let Some(st) = &file.segmentation {
        return Ok(st.clone());
    }
    let Content::Embedded(bytes) = &file.content else { unreachable!("only embedded files are picked") };
    let text = std::str::from_utf8(bytes).expect("checked when picking the file");
    let st = if is_markup_name(&file.name) {
        segment_marked(text)
    } else {
        segment_text(text, file.lang, &SegmentationPolicy::default(), SegmentKind::Sentence)
    };
    st.map_err(|e| ApiError::unprocessable(format!("{}: {e}", file.path())))
}

fn units(st: &SegmentedText, kind: SegmentKind) -> Vec<(SegmentPath, Span)> {
    st.segments_of_kind(kind)
        .into_iter()
        .filter(|(_, s)| !st.text_of(s).trim().is_empty())
        .map(|(p, s)| (p, s.span))
        .collect()
}

// Target text and, per row, where that row landed in it.
type TargetVersion = (SegmentedText, Vec<Option<SegmentPath>>);

impl Session {
    /// Starts a session on a packed dossier. The dossier must validate
    /// without errors and declare `target`. Without an explicit source, the
    /// first declared language with an embedded text is used.
    pub fn open(
        id: String,
        seq: u64,
        med: Vec<u8>,
        source: Option<LanguageTag>,
        target: LanguageTag,
    ) -> Result<Session, ApiError> {
        let errors: Vec<_> = validate(&med).into_iter().filter(|d| d.severity == Severity::Error).collect();
        if !errors.is_empty() {
            return Err(ApiError::invalid_med(errors));
        }
        let dossier = Dossier::unpack(&med).map_err(|e| ApiError::bad_request(e.to_string()))?;
        if !dossier.languages().contains(&target) {
            return Err(ApiError::bad_request(format!("{target} is not declared in the dossier")));
        }
        let source = match source {
            Some(s) => s,
            None => dossier
                .languages()
                .iter()
                .copied()
                .find(|l| *l != target && source_file(&dossier, *l).is_some())
                .ok_or_else(|| ApiError::bad_request("the dossier has no version to translate from"))?,
        };
        if source == target {
            return Err(ApiError::bad_request("source and target are the same language"));
        }
        let file = source_file(&dossier, source)
            .ok_or_else(|| ApiError::bad_request(format!("the dossier has no embedded {source} text")))?;
        let source_text = segment_file(file)?;
        let kind = source_text.granularity().level.min(SegmentKind::Sentence);
        let segments = units(&source_text, kind)
            .into_iter()
            .map(|(path, span)| SessionSegment { path, span, state: SegmentState::Untouched, text: String::new() })
            .collect();
        Ok(Session {
            id,
            seq,
            dossier: dossier.id().to_string(),
            source,
            target,
            file: file.name.clone(),
            kind,
            source_text,
            segments,
            resegmented: false,
            harvested: None,
            med,
            result: None,
        })
    }

    pub fn completed(&self) -> bool {
        self.harvested.is_some()
    }

    pub fn summary(&self) -> SessionSummary {
        SessionSummary {
            id: self.id.clone(),
            dossier: self.dossier.clone(),
            source: self.source,
            target: self.target,
            segments: self.segments.len(),
            confirmed: self.segments.iter().filter(|s| s.state == SegmentState::Confirmed).count(),
            completed: self.completed(),
            harvested: self.harvested,
        }
    }

    fn source_of(&self, seg: &SessionSegment) -> String {
        self.source_text.get(&seg.path).map(|s| self.source_text.text_of(s).into_owned()).unwrap_or_default()
    }

    /// Rows with database suggestions for the target language.
    pub fn view(&self, db: Option<&LinguisticTable>, threshold: f64) -> Vec<SegmentView> {
        self.segments
            .iter()
            .enumerate()
            .map(|(n, seg)| {
                let source = self.source_of(seg);
                let suggestions = db
                    .map(|db| {
                        db.lookup_fuzzy(self.source, &source, threshold)
                            .into_iter()
                            .filter_map(|m| {
                                let text = db.get(m.id)?.segment(self.target)?.to_string();
                                Some(Suggestion { record: m.id, uri: db.record_uri(m.id), score: m.score, text })
                            })
                            .collect()
                    })
                    .unwrap_or_default();
                SegmentView { n, source, text: seg.text.clone(), state: seg.state, suggestions }
            })
            .collect()
    }

    fn editable(&self) -> Result<(), ApiError> {
        if self.completed() {
            return Err(ApiError::conflict(format!("session {} is completed", self.id)));
        }
        Ok(())
    }

    /// Stores a draft or confirmed translation for row `n`. A blank draft
    /// returns the row to untouched.
    pub fn update(&mut self, n: usize, update: &SegmentUpdate, db: Option<&LinguisticTable>) -> Result<(), ApiError> {
        self.editable()?;
        if n >= self.segments.len() {
            return Err(ApiError::not_found(format!("session {} has no segment {n}", self.id)));
        }
        let blank = update.text.trim().is_empty();
        let state = match update.state {
            SegmentState::Confirmed if blank => return Err(ApiError::bad_request("a confirmed segment needs text")),
            SegmentState::Draft if blank => SegmentState::Untouched,
            s => s,
        };
        if let Some(id) = update.record {
            let db = db.ok_or_else(|| ApiError::bad_request("no database is registered"))?;
            if db.get(id).is_none() {
                return Err(ApiError::bad_request(format!("no record {id}")));
            }
        }
        let seg = &mut self.segments[n];
        seg.state = state;
        seg.text = if state == SegmentState::Untouched { String::new() } else { update.text.clone() };
        Ok(())
    }

    /// Splits or merges source rows. Rows whose span is unchanged keep
    /// their translation; the others start over.
    pub fn resegment(&mut self, n: usize, op: Resegment) -> Result<(), ApiError> {
        self.editable()?;
        let seg = self.segments.get(n).ok_or_else(|| ApiError::not_found(format!("session {} has no segment {n}", self.id)))?;
        let edit = match op {
            Resegment::Split { offset } => ManualEdit::Split { path: seg.path.clone(), at: seg.span.start + offset },
            Resegment::Merge => ManualEdit::Merge { path: seg.path.clone() },
        };
        let st = apply_manual_edit(&self.source_text, &edit).map_err(|e| ApiError::unprocessable(e.to_string()))?;
        let old: BTreeMap<Span, SessionSegment> = self.segments.drain(..).map(|s| (s.span, s)).collect();
        self.segments = units(&st, self.kind)
            .into_iter()
            .map(|(path, span)| match old.get(&span) {
                Some(prev) => SessionSegment { path, ..prev.clone() },
                None => SessionSegment { path, span, state: SegmentState::Untouched, text: String::new() },
            })
            .collect();
        self.source_text = st;
        self.resegmented = true;
        Ok(())
    }

    /// Confirmed rows, for other translators to look at.
    pub fn confirmed(&self) -> Vec<(usize, String)> {
        self.segments
            .iter()
            .enumerate()
            .filter(|(_, s)| s.state == SegmentState::Confirmed)
            .map(|(n, s)| (n, s.text.clone()))
            .collect()
    }

    /// The target text assembled from the rows that have text, and the
    /// target path of each row.
    fn target_version(&self) -> Result<Option<TargetVersion>, ApiError> {
        let has_text = |s: &SessionSegment| s.state != SegmentState::Untouched && !s.text.trim().is_empty();
        if !self.segments.iter().any(has_text) {
            return Ok(None);
        }
        let mut text = String::new();
        let mut paths = Vec::new();
        let root = if self.kind == SegmentKind::File {
            for seg in &self.segments {
                if has_text(seg) && text.is_empty() {
                    text = seg.text.clone();
                    paths.push(Some(SegmentPath::root()));
                } else {
                    paths.push(None);
                }
            }
            Segment::new(SegmentKind::File, Span::new(0, text.len()))
        } else {
            let src = self.source_text.source();
            let plain = self.source_text.format() == SourceFormat::Plain;
            let mut children = Vec::new();
            let mut prev_end = 0;
            for seg in &self.segments {
                if plain {
                    text.push_str(&src[prev_end..seg.span.start]);
                    prev_end = seg.span.end;
                }
                if !has_text(seg) {
                    paths.push(None);
                    continue;
                }
                if !plain && !text.is_empty() {
                    text.push('\n');
                }
                let start = text.len();
                text.push_str(&seg.text);
                paths.push(Some(SegmentPath(vec![children.len()])));
                children.push(Segment::new(self.kind, Span::new(start, text.len())));
            }
            if plain {
                text.push_str(&src[prev_end..]);
            }
            Segment::new(SegmentKind::File, Span::new(0, text.len())).with_children(children)
        };
        let st = SegmentedText::from_parts(self.target, text, SourceFormat::Plain, None, root)
            .map_err(|e| ApiError::internal(format!("assembling the {} version: {e}", self.target)))?;
        Ok(Some((st, paths)))
    }

    fn target_name(&self) -> String {
        if self.source_text.format() == SourceFormat::Plain {
            return self.file.clone();
        }
        let stem = self.file.rsplit_once('.').map(|(s, _)| s).unwrap_or(&self.file);
        format!("{stem}.txt")
    }

    /// Writes the target version into the dossier, sets its entirety,
    /// harvests the confirmed pairs into `db` and returns the packed
    /// dossier. Completing again returns the same bytes.
    pub fn complete(&mut self, db: &mut LinguisticTable) -> Result<Vec<u8>, ApiError> {
        if let Some(bytes) = &self.result {
            return Ok(bytes.clone());
        }
        let internal = |e: &dyn std::fmt::Display| ApiError::internal(e.to_string());
        let mut med = Dossier::unpack(&self.med).map_err(|e| internal(&e))?;
        for mut f in med.remove_version(self.source) {
            if f.name == self.file {
                f.segmentation = Some(self.source_text.clone());
            }
            med.add_parallel(f).map_err(|e| internal(&e))?;
        }
        med.remove_version(self.target);

        let target = self.target_version()?;
        let mut groups = Vec::new();
        let mut confirmed = Vec::new();
        if let Some((st, paths)) = &target {
            med.add_parallel(ParallelFile {
                lang: self.target,
                name: self.target_name(),
                content: Content::Embedded(st.source().as_bytes().to_vec()),
                segmentation: Some(st.clone()),
            })
            .map_err(|e| internal(&e))?;
            let pairs: BTreeMap<&SegmentPath, &SegmentPath> =
                self.segments.iter().zip(paths).filter_map(|(s, t)| t.as_ref().map(|t| (&s.path, t))).collect();
            let pair_group = |s: &SegmentPath, t: &SegmentPath| AlignmentGroup {
                kind: self.kind,
                members: BTreeMap::from([(self.source, s.clone()), (self.target, t.clone())]),
            };
            groups = match med.alignment() {
                Some(a) if a.kind == self.kind && !self.resegmented => a
                    .groups
                    .iter()
                    .filter_map(|g| {
                        let mut g = g.clone();
                        g.members.remove(&self.target);
                        if let Some(t) = g.members.get(&self.source).and_then(|p| pairs.get(p)) {
                            g.members.insert(self.target, (*t).clone());
                        }
                        (!g.members.is_empty()).then_some(g)
                    })
                    .collect(),
                _ => pairs.iter().map(|(s, t)| pair_group(s, t)).collect(),
            };
            confirmed = self
                .segments
                .iter()
                .zip(paths)
                .filter(|(s, _)| s.state == SegmentState::Confirmed)
                .filter_map(|(s, t)| t.as_ref().map(|t| pair_group(&s.path, t)))
                .collect();
        }
        med.set_alignment((!groups.is_empty()).then_some(Alignment { kind: self.kind, groups }));
        let done = self.segments.iter().all(|s| s.state == SegmentState::Confirmed);
        let entirety = if done { Entirety::Complete } else { Entirety::Translating };
        med.set_entirety(self.target, EntiretySet::single(entirety));

        let harvested = match (&target, confirmed.is_empty()) {
            (Some((st, _)), false) => {
                let versions = BTreeMap::from([(self.source, self.source_text.clone()), (self.target, st.clone())]);
                let link = med.header().get("source").cloned().unwrap_or_else(|| format!("med:{}", med.id()));
                let pt = ParallelTexts::from_parts(versions, confirmed, self.kind).map_err(|e| internal(&e))?.with_source(link);
                harvest(&pt, db)
            }
            _ => 0,
        };
        let bytes = med.pack();
        self.result = Some(bytes.clone());
        self.harvested = Some(harvested);
        Ok(bytes)
    }
}
