//! Linguistic tables: records of parallel segments with exact and fuzzy
//! lookup, usage accounting and interchange formats.

mod csvio;
mod extract;
mod fuzzy;
mod marked;
mod persist;
mod tmx;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::langtags::LanguageTag;

pub use csvio::{export_csv, import_csv, CsvHeader};
pub use extract::{extract_by_ids, extract_tm, harvest, match_document, resolve_record_uri, SegmentMatches};
pub use fuzzy::levenshtein;
pub use marked::{emit_marked_text, parse_marked_text};
pub use persist::{load_table, save_table};
pub use tmx::{export_tmx, import_tmx};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StoreError {
    #[error("a record needs at least one segment")]
    EmptyRecord,
    #[error("empty {0} segment")]
    EmptySegment(LanguageTag),
    #[error("no record {0}")]
    NoSuchRecord(RecordId),
    #[error("record id {0} is already taken")]
    DuplicateId(RecordId),
    #[error("malformed TMX at byte {position}: {message}")]
    MalformedTmx { position: usize, message: String },
    #[error("unsupported TMX inline elements at byte {position}: {}", elements.join(", "))]
    UnsupportedTmxMarkup { position: usize, elements: Vec<String> },
    #[error("malformed CSV at line {line}: {message}")]
    MalformedCsv { line: u64, message: String },
    #[error("no table registered for base {0}")]
    UnknownBase(String),
    #[error("malformed record URI {0:?}")]
    MalformedRecordUri(String),
    #[error("record URIs use different bases: {expected} and {found}")]
    MixedBases { expected: String, found: String },
    #[error("malformed marked text at byte {position}: {message}")]
    MalformedMarkup { position: usize, message: String },
    #[error("language {0} is not present in the table")]
    UnknownLanguage(LanguageTag),
    #[error("table storage: {0}")]
    Storage(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RecordId(pub u64);

impl fmt::Display for RecordId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

/// Accepts `r12` or `12`.
impl FromStr for RecordId {
    type Err = StoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let digits = s.strip_prefix('r').unwrap_or(s);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(StoreError::MalformedRecordUri(s.to_string()));
        }
        digits.parse().map(RecordId).map_err(|_| StoreError::MalformedRecordUri(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueEvent {
    Read,
    Use,
}

/// Weight of a use relative to a read.
pub const USE_WEIGHT: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RecordValue {
    pub reads: u64,
    pub uses: u64,
    pub manual_override: Option<u64>,
}

impl RecordValue {
    pub fn effective(&self) -> u64 {
        self.manual_override.unwrap_or(self.uses.saturating_mul(USE_WEIGHT).saturating_add(self.reads))
    }
}

/// Where an extracted record came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub table: String,
    pub id: RecordId,
}

/// A record before it has an id.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RecordDraft {
    pub segments: BTreeMap<LanguageTag, String>,
    pub domain: Option<String>,
    pub source_link: Option<String>,
}

impl RecordDraft {
    pub fn new<'a>(segments: impl IntoIterator<Item = (LanguageTag, &'a str)>) -> Self {
        RecordDraft {
            segments: segments.into_iter().map(|(l, t)| (l, t.to_string())).collect(),
            ..Default::default()
        }
    }
}

#[derive(Debug)]
pub struct Record {
    id: RecordId,
    segments: BTreeMap<LanguageTag, String>,
    pub domain: Option<String>,
    pub source_link: Option<String>,
    pub provenance: Option<Provenance>,
    reads: AtomicU64,
    uses: AtomicU64,
    manual_override: Option<u64>,
}

impl Clone for Record {
    fn clone(&self) -> Self {
        let v = self.value();
        Record {
            id: self.id,
            segments: self.segments.clone(),
            domain: self.domain.clone(),
            source_link: self.source_link.clone(),
            provenance: self.provenance.clone(),
            reads: AtomicU64::new(v.reads),
            uses: AtomicU64::new(v.uses),
            manual_override: v.manual_override,
        }
    }
}

impl PartialEq for Record {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
            && self.segments == other.segments
            && self.domain == other.domain
            && self.source_link == other.source_link
            && self.provenance == other.provenance
            && self.value() == other.value()
    }
}

impl Record {
    pub fn id(&self) -> RecordId {
        self.id
    }

    pub fn segments(&self) -> &BTreeMap<LanguageTag, String> {
        &self.segments
    }

    pub fn segment(&self, lang: LanguageTag) -> Option<&str> {
        self.segments.get(&lang).map(String::as_str)
    }

    pub fn value(&self) -> RecordValue {
        RecordValue {
            reads: self.reads.load(Ordering::Relaxed),
            uses: self.uses.load(Ordering::Relaxed),
            manual_override: self.manual_override,
        }
    }

    pub(crate) fn bump(&self, event: ValueEvent) {
        match event {
            ValueEvent::Read => self.reads.fetch_add(1, Ordering::Relaxed),
            ValueEvent::Use => self.uses.fetch_add(1, Ordering::Relaxed),
        };
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredMatch {
    pub id: RecordId,
    pub score: f64,
}

/// Collapses whitespace runs to one space and trims the ends.
pub fn normalize(text: &str) -> String {
    crate::align::normalize_ws(text)
}

fn normalized_map(segments: &BTreeMap<LanguageTag, String>) -> BTreeMap<LanguageTag, String> {
    segments.iter().map(|(l, t)| (*l, normalize(t))).collect()
}

#[derive(Debug, Clone)]
pub struct LinguisticTable {
    name: String,
    base: Option<String>,
    records: BTreeMap<RecordId, Record>,
    next_id: u64,
    exact: HashMap<LanguageTag, HashMap<String, BTreeSet<RecordId>>>,
    fuzzy: HashMap<LanguageTag, fuzzy::FuzzyIndex>,
    dedup: HashMap<BTreeMap<LanguageTag, String>, RecordId>,
}

impl LinguisticTable {
    pub fn new(name: impl Into<String>) -> Self {
        LinguisticTable {
            name: name.into(),
            base: None,
            records: BTreeMap::new(),
            next_id: 1,
            exact: HashMap::new(),
            fuzzy: HashMap::new(),
            dedup: HashMap::new(),
        }
    }

    pub fn with_base(mut self, base: impl Into<String>) -> Self {
        self.base = Some(base.into().trim_end_matches('/').to_string());
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rename(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    pub fn base(&self) -> Option<&str> {
        self.base.as_deref()
    }

    pub fn set_base(&mut self, base: Option<String>) {
        self.base = base.map(|b| b.trim_end_matches('/').to_string());
    }

    /// `<base>/rN`, or `<name>/rN` for a table without a base.
    pub fn record_uri(&self, id: RecordId) -> String {
        format!("{}/{}", self.base.as_deref().unwrap_or(&self.name), id)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: RecordId) -> Option<&Record> {
        self.records.get(&id)
    }

    pub fn records(&self) -> impl Iterator<Item = &Record> {
        self.records.values()
    }

    pub fn ids(&self) -> impl Iterator<Item = RecordId> + '_ {
        self.records.keys().copied()
    }

    pub(crate) fn next_id(&self) -> u64 {
        self.next_id
    }

    /// Languages with at least one segment.
    pub fn languages(&self) -> BTreeSet<LanguageTag> {
        self.exact.iter().filter(|(_, idx)| !idx.is_empty()).map(|(l, _)| *l).collect()
    }

    fn check(draft: &RecordDraft) -> Result<(), StoreError> {
        if draft.segments.is_empty() {
            return Err(StoreError::EmptyRecord);
        }
        if let Some((lang, _)) = draft.segments.iter().find(|(_, t)| normalize(t).is_empty()) {
            return Err(StoreError::EmptySegment(*lang));
        }
        Ok(())
    }

    /// Id of an existing record with the same segments, if any.
    pub fn find_duplicate(&self, segments: &BTreeMap<LanguageTag, String>) -> Option<RecordId> {
        self.dedup.get(&normalized_map(segments)).copied()
    }

    /// Adds a record under the next free id. A record whose segment map
    /// matches an existing one is not added again; its id is returned.
    pub fn insert(&mut self, draft: RecordDraft) -> Result<RecordId, StoreError> {
        Self::check(&draft)?;
        if let Some(id) = self.find_duplicate(&draft.segments) {
            return Ok(id);
        }
        let id = RecordId(self.next_id);
        self.add(id, draft, None, RecordValue::default());
        Ok(id)
    }

    /// Adds a record under a chosen id, keeping provenance and counters.
    /// Used when copying records between tables.
    pub fn insert_with_id(
        &mut self,
        id: RecordId,
        draft: RecordDraft,
        provenance: Option<Provenance>,
        value: RecordValue,
    ) -> Result<(), StoreError> {
        Self::check(&draft)?;
        if id.0 == 0 {
            return Err(StoreError::NoSuchRecord(id));
        }
        if self.records.contains_key(&id) {
            return Err(StoreError::DuplicateId(id));
        }
        self.add(id, draft, provenance, value);
        Ok(())
    }

    fn add(&mut self, id: RecordId, draft: RecordDraft, provenance: Option<Provenance>, value: RecordValue) {
        for (lang, text) in &draft.segments {
            let norm = normalize(text);
            self.fuzzy.entry(*lang).or_default().insert(id, &norm);
            self.exact.entry(*lang).or_default().entry(norm).or_default().insert(id);
        }
        self.dedup.entry(normalized_map(&draft.segments)).or_insert(id);
        self.next_id = self.next_id.max(id.0 + 1);
        self.records.insert(
            id,
            Record {
                id,
                segments: draft.segments,
                domain: draft.domain,
                source_link: draft.source_link,
                provenance,
                reads: AtomicU64::new(value.reads),
                uses: AtomicU64::new(value.uses),
                manual_override: value.manual_override,
            },
        );
    }

    fn ranked(&self, ids: impl IntoIterator<Item = RecordId>) -> Vec<&Record> {
        let mut out: Vec<&Record> = ids.into_iter().filter_map(|id| self.records.get(&id)).collect();
        out.sort_by(|a, b| b.value().effective().cmp(&a.value().effective()).then(a.id.cmp(&b.id)));
        out
    }

    /// Every record whose `lang` segment equals `text` after whitespace
    /// normalization, most valuable first, then by id.
    pub fn lookup_exact(&self, lang: LanguageTag, text: &str) -> Vec<&Record> {
        let hits = self.exact.get(&lang).and_then(|idx| idx.get(&normalize(text)));
        match hits {
            Some(ids) => self.ranked(ids.iter().copied()),
            None => Vec::new(),
        }
    }

    /// Records scoring at least `threshold`, where the score is one minus
    /// the character edit distance over the longer length. Ordered by
    /// score, then value, then id.
    pub fn lookup_fuzzy(&self, lang: LanguageTag, text: &str, threshold: f64) -> Vec<ScoredMatch> {
        let Some(index) = self.fuzzy.get(&lang) else { return Vec::new() };
        let threshold = threshold.clamp(f64::MIN_POSITIVE, 1.0);
        let query: Vec<char> = normalize(text).chars().collect();
        let mut out: Vec<(ScoredMatch, u64)> = index
            .candidates(&query, threshold)
            .into_iter()
            .filter_map(|id| {
                let rec = self.records.get(&id)?;
                let stored: Vec<char> = normalize(rec.segment(lang)?).chars().collect();
                let score = fuzzy::score(&query, &stored);
                (score >= threshold).then(|| (ScoredMatch { id, score }, rec.value().effective()))
            })
            .collect();
        out.sort_by(|(a, va), (b, vb)| {
            b.score.total_cmp(&a.score).then(vb.cmp(va)).then(a.id.cmp(&b.id))
        });
        out.into_iter().map(|(m, _)| m).collect()
    }

    pub fn bump_value(&self, id: RecordId, event: ValueEvent) -> Result<RecordValue, StoreError> {
        let rec = self.records.get(&id).ok_or(StoreError::NoSuchRecord(id))?;
        rec.bump(event);
        Ok(rec.value())
    }

    pub fn set_manual_value(&mut self, id: RecordId, value: Option<u64>) -> Result<(), StoreError> {
        let rec = self.records.get_mut(&id).ok_or(StoreError::NoSuchRecord(id))?;
        rec.manual_override = value;
        Ok(())
    }

    /// Same segment maps under the same ids.
    pub fn same_content(&self, other: &LinguisticTable) -> bool {
        self.records.len() == other.records.len()
            && self.records.iter().zip(other.records.iter()).all(|((a, ra), (b, rb))| a == b && ra.segments == rb.segments)
    }
}

impl PartialEq for LinguisticTable {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.base == other.base && self.records == other.records
    }
}

/// The three-row table used throughout the examples.
pub fn sample_table() -> LinguisticTable {
    let en = LanguageTag::parse("en").expect("valid");
    let es = LanguageTag::parse("es").expect("valid");
    let mut t = LinguisticTable::new("example").with_base("http://example.com");
    for (a, b) in [("hello world", "Hola mundo"), ("white cat", "gato blanco"), ("white cat", "gata blanca")] {
        t.insert(RecordDraft::new([(en, a), (es, b)])).expect("valid record");
    }
    t
}
