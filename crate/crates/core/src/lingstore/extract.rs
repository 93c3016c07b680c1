//! Moving records between documents and tables: matching a document
//! against a database, cutting a small TM out of it, and harvesting
//! aligned texts back in.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{LinguisticTable, Provenance, Record, RecordDraft, RecordId, RecordValue, ScoredMatch, StoreError};
use crate::align::ParallelTexts;
use crate::langtags::LanguageTag;
use crate::segcore::{Segment, SegmentPath, SegmentedText};

/// Fuzzy hits for one leaf segment of a document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentMatches {
    pub path: SegmentPath,
    pub text: String,
    pub matches: Vec<ScoredMatch>,
}

fn leaves(doc: &SegmentedText) -> Vec<(SegmentPath, &Segment)> {
    if doc.root().is_leaf() {
        vec![(SegmentPath::root(), doc.root())]
    } else {
        doc.leaves()
    }
}

/// Looks every non-blank leaf of `doc` up in `db`, in the document's
/// language.
pub fn match_document(db: &LinguisticTable, doc: &SegmentedText, threshold: f64) -> Vec<SegmentMatches> {
    let lang = doc.language();
    leaves(doc)
        .into_iter()
        .filter_map(|(path, seg)| {
            let text = doc.text_of(seg).into_owned();
            if text.trim().is_empty() {
                return None;
            }
            let matches = db.lookup_fuzzy(lang, &text, threshold);
            Some(SegmentMatches { path, text, matches })
        })
        .collect()
}

/// Copies the given records into a new table, keeping their ids and
/// noting where they came from. Segments outside `source` and `targets`
/// are dropped, as are records with no target segment.
pub fn extract_by_ids(
    db: &LinguisticTable,
    source: LanguageTag,
    ids: impl IntoIterator<Item = RecordId>,
    targets: &BTreeSet<LanguageTag>,
) -> LinguisticTable {
    let mut tm = LinguisticTable::new(format!("{}-tm", db.name()));
    tm.base = db.base.clone();
    let wanted: BTreeSet<RecordId> = ids.into_iter().collect();
    for rec in wanted.into_iter().filter_map(|id| db.get(id)) {
        if !targets.iter().any(|t| *t != source && rec.segment(*t).is_some()) {
            continue;
        }
        let segments: BTreeMap<LanguageTag, String> = rec
            .segments()
            .iter()
            .filter(|(l, _)| **l == source || targets.contains(l))
            .map(|(l, t)| (*l, t.clone()))
            .collect();
        let draft = RecordDraft { segments, domain: rec.domain.clone(), source_link: rec.source_link.clone() };
        let provenance = Provenance { table: db.name().to_string(), id: rec.id() };
        tm.insert_with_id(rec.id(), draft, Some(provenance), RecordValue::default())
            .expect("ids are unique and segments were valid in the source table");
    }
    tm
}

/// A TM table for one document: every record matching one of its
/// segments at `threshold` or better that has a segment in a target
/// language.
pub fn extract_tm(
    db: &LinguisticTable,
    doc: &SegmentedText,
    targets: &BTreeSet<LanguageTag>,
    threshold: f64,
) -> LinguisticTable {
    let ids = match_document(db, doc, threshold).into_iter().flat_map(|m| m.matches).map(|m| m.id);
    extract_by_ids(db, doc.language(), ids, targets)
}

/// Appends one record per alignment group that has text in at least two
/// languages. Returns how many records were new.
pub fn harvest(pt: &ParallelTexts, table: &mut LinguisticTable) -> usize {
    let before = table.len();
    for i in 0..pt.groups().len() {
        let segments: BTreeMap<LanguageTag, String> = pt
            .group_texts(i)
            .into_iter()
            .filter(|(l, t)| l.is_standard() && !t.trim().is_empty())
            .collect();
        if segments.len() < 2 {
            continue;
        }
        let draft = RecordDraft { segments, domain: None, source_link: pt.source().map(|s| format!("{s}#g{i}")) };
        table.insert(draft).expect("segments are non-empty");
    }
    table.len() - before
}

/// Finds the record named by `<base>/rN` among tables keyed by base URI.
pub fn resolve_record_uri<'a>(
    uri: &str,
    registry: &'a BTreeMap<String, LinguisticTable>,
) -> Result<&'a Record, StoreError> {
    let (base, last) = uri.rsplit_once('/').ok_or_else(|| StoreError::MalformedRecordUri(uri.to_string()))?;
    let digits = last.strip_prefix('r').ok_or_else(|| StoreError::MalformedRecordUri(uri.to_string()))?;
    let id: RecordId = digits.parse().map_err(|_| StoreError::MalformedRecordUri(uri.to_string()))?;
    if base.is_empty() {
        return Err(StoreError::MalformedRecordUri(uri.to_string()));
    }
    let table = registry
        .get(base)
        .or_else(|| registry.iter().find(|(k, _)| k.trim_end_matches('/') == base).map(|(_, t)| t))
        .ok_or_else(|| StoreError::UnknownBase(base.to_string()))?;
    table.get(id).ok_or(StoreError::NoSuchRecord(id))
}
