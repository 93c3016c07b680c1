//! Server state: registered tables, document submissions and translation
//! sessions, all mirrored under the data directory.
//!
//! ```text
//! <data>/tables/<name>/            table store
//! <data>/submissions/<id>.json     segmented document + matched record ids
//! <data>/sessions/<id>/state.json  rows and their translations
//! <data>/sessions/<id>/source.med  uploaded dossier
//! <data>/sessions/<id>/result.med  dossier returned on completion
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard, RwLock, RwLockReadGuard, RwLockWriteGuard};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::http::StatusCode;
use partext_core::langtags::{parse_tag_list, LanguageTag};
use partext_core::lingstore::{
    export_csv, export_tmx, extract_by_ids, load_table, match_document, parse_marked_text, save_table, LinguisticTable,
    RecordId, RecordValue, ValueEvent,
};
use partext_core::segcore::{segment_text, SegmentKind, SegmentPath, SegmentationPolicy, SegmentedText};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::ApiError;
use crate::session::{Resegment, SegmentUpdate, SegmentView, Session, SessionSummary};

pub const DEFAULT_THRESHOLD: f64 = 0.7;
pub const DEFAULT_DATABASE: &str = "db";

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub data_dir: PathBuf,
    /// Table that documents are matched against and sessions harvest into.
    pub database: String,
    /// Fuzzy threshold when a submission names none.
    pub threshold: f64,
}

impl ServerConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        ServerConfig { data_dir: data_dir.into(), database: DEFAULT_DATABASE.into(), threshold: DEFAULT_THRESHOLD }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedSegment {
    pub index: usize,
    pub path: SegmentPath,
    pub text: String,
    pub records: Vec<RecordId>,
}

/// A document matched against the database. Only record ids are kept;
/// translation memories are cut from the database on request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Submission {
    pub id: String,
    pub table: String,
    pub threshold: f64,
    pub created_at: u64,
    pub doc: SegmentedText,
    pub matches: Vec<MatchedSegment>,
}

impl Submission {
    pub fn uri(&self) -> String {
        format!("/documents/{}", self.id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TmFormat {
    Tmx,
    Csv,
}

impl TmFormat {
    pub fn content_type(self) -> &'static str {
        match self {
            TmFormat::Tmx => "application/x-tmx+xml; charset=utf-8",
            TmFormat::Csv => "text/csv; charset=utf-8",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeerView {
    pub lang: LanguageTag,
    pub session: Option<String>,
    pub segments: Vec<PeerSegment>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PeerSegment {
    pub n: usize,
    pub text: String,
}

struct Inner {
    config: ServerConfig,
    tables: RwLock<BTreeMap<String, LinguisticTable>>,
    submissions: RwLock<BTreeMap<String, Submission>>,
    // Taken before `tables` whenever both are needed.
    sessions: Mutex<BTreeMap<String, Session>>,
    seq: AtomicU64,
}

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

fn io_err(context: &str) -> impl Fn(io::Error) -> ApiError + '_ {
    move |e| ApiError::internal(format!("{context}: {e}"))
}

fn valid_table_name(name: &str) -> bool {
    !name.is_empty()
        && !name.starts_with('.')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn subdirs(dir: &Path) -> io::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

impl AppState {
    /// Opens (or creates) the data directory and loads what it holds.
    pub fn open(config: ServerConfig) -> io::Result<AppState> {
        let dir = &config.data_dir;
        for sub in ["tables", "submissions", "sessions"] {
            fs::create_dir_all(dir.join(sub))?;
        }
        let mut tables = BTreeMap::new();
        for path in subdirs(&dir.join("tables"))? {
            let table = load_table(&path).map_err(|e| io::Error::other(format!("{}: {e}", path.display())))?;
            tables.insert(table.name().to_string(), table);
        }
        let mut submissions = BTreeMap::new();
        for entry in fs::read_dir(dir.join("submissions"))? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "json") {
                let sub: Submission = serde_json::from_slice(&fs::read(&path)?)
                    .map_err(|e| io::Error::other(format!("{}: {e}", path.display())))?;
                submissions.insert(sub.id.clone(), sub);
            }
        }
        let mut sessions = BTreeMap::new();
        for path in subdirs(&dir.join("sessions"))? {
            let mut s: Session = serde_json::from_slice(&fs::read(path.join("state.json"))?)
                .map_err(|e| io::Error::other(format!("{}: {e}", path.display())))?;
            s.med = fs::read(path.join("source.med"))?;
            let result = path.join("result.med");
            s.result = if result.exists() { Some(fs::read(result)?) } else { None };
            sessions.insert(s.id.clone(), s);
        }
        let seq = sessions.values().map(|s| s.seq + 1).max().unwrap_or(1);
        Ok(AppState {
            inner: Arc::new(Inner {
                config,
                tables: RwLock::new(tables),
                submissions: RwLock::new(submissions),
                sessions: Mutex::new(sessions),
                seq: AtomicU64::new(seq),
            }),
        })
    }

    pub fn config(&self) -> &ServerConfig {
        &self.inner.config
    }

    fn tables(&self) -> RwLockReadGuard<'_, BTreeMap<String, LinguisticTable>> {
        self.inner.tables.read().unwrap_or_else(|e| e.into_inner())
    }

    fn tables_mut(&self) -> RwLockWriteGuard<'_, BTreeMap<String, LinguisticTable>> {
        self.inner.tables.write().unwrap_or_else(|e| e.into_inner())
    }

    fn sessions(&self) -> MutexGuard<'_, BTreeMap<String, Session>> {
        self.inner.sessions.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn table_dir(&self, name: &str) -> PathBuf {
        self.inner.config.data_dir.join("tables").join(name)
    }

    fn save(&self, table: &LinguisticTable) -> Result<(), ApiError> {
        save_table(table, &self.table_dir(table.name())).map_err(|e| ApiError::internal(e.to_string()))
    }

    /// Stores a table under its name, replacing any table of that name.
    pub fn register_table(&self, table: LinguisticTable) -> Result<(), ApiError> {
        if !valid_table_name(table.name()) {
            return Err(ApiError::bad_request(format!("unusable table name {:?}", table.name())));
        }
        self.save(&table)?;
        self.tables_mut().insert(table.name().to_string(), table);
        Ok(())
    }

    /// A copy of a registered table.
    pub fn table(&self, name: &str) -> Option<LinguisticTable> {
        self.tables().get(name).cloned()
    }

    pub fn database(&self) -> Option<LinguisticTable> {
        self.table(&self.inner.config.database)
    }

    fn no_database(&self) -> ApiError {
        ApiError::new(StatusCode::SERVICE_UNAVAILABLE, format!("no table {} is registered", self.inner.config.database))
    }

    pub fn list_tables(&self) -> serde_json::Value {
        let tables = self.tables();
        let list: Vec<_> = tables
            .values()
            .map(|t| json!({ "name": t.name(), "base": t.base(), "records": t.len(), "languages": t.languages() }))
            .collect();
        json!(list)
    }

    /// A record as JSON. Looking a record up counts as reading it.
    pub fn record(&self, table: &str, rid: &str) -> Result<serde_json::Value, ApiError> {
        let tables = self.tables();
        let t = tables.get(table).ok_or_else(|| ApiError::not_found(format!("no table {table}")))?;
        let id: RecordId = rid.parse().map_err(|_| ApiError::bad_request(format!("malformed record id {rid:?}")))?;
        let rec = t.get(id).ok_or_else(|| ApiError::not_found(format!("no record {id} in {table}")))?;
        let value: RecordValue = t.bump_value(id, ValueEvent::Read).map_err(|e| ApiError::internal(e.to_string()))?;
        Ok(json!({
            "uri": t.record_uri(id),
            "table": t.name(),
            "id": id,
            "segments": rec.segments(),
            "domain": rec.domain,
            "source_link": rec.source_link,
            "provenance": rec.provenance,
            "value": { "reads": value.reads, "uses": value.uses, "override": value.manual_override, "effective": value.effective() },
        }))
    }

    /// Segments and matches a document, keeping the matched record ids.
    pub fn submit(&self, body: &str, lang: Option<&str>, threshold: Option<f64>) -> Result<Submission, ApiError> {
        if body.trim().is_empty() {
            return Err(ApiError::bad_request("empty document"));
        }
        let threshold = threshold.unwrap_or(self.inner.config.threshold);
        if !(threshold > 0.0 && threshold <= 1.0) {
            return Err(ApiError::bad_request(format!("threshold {threshold} is outside (0, 1]")));
        }
        let lang = lang
            .map(LanguageTag::parse)
            .transpose()
            .map_err(|e| ApiError::bad_request(format!("invalid language: {e}")))?;
        let doc = if body.starts_with("#base ") {
            let st = parse_marked_text(body).map_err(|e| ApiError::unprocessable(e.to_string()))?;
            match lang {
                Some(l) => st.with_language(l),
                None => st,
            }
        } else {
            let lang = lang.ok_or_else(|| ApiError::bad_request("missing lang"))?;
            if !lang.is_standard() {
                return Err(ApiError::bad_request(format!("invalid language {lang} for a submission")));
            }
            segment_text(body, lang, &SegmentationPolicy::default(), SegmentKind::Sentence)
                .map_err(|e| ApiError::unprocessable(e.to_string()))?
        };
        if !doc.language().is_standard() {
            return Err(ApiError::bad_request(format!("invalid language {} for a submission", doc.language())));
        }
        let table = self.inner.config.database.clone();
        let matches = {
            let tables = self.tables();
            let db = tables.get(&table).ok_or_else(|| self.no_database())?;
            match_document(db, &doc, threshold)
                .into_iter()
                .enumerate()
                .map(|(index, m)| MatchedSegment {
                    index,
                    path: m.path,
                    text: m.text,
                    records: m.matches.into_iter().map(|m| m.id).collect(),
                })
                .collect()
        };
        let sub = Submission { id: uuid::Uuid::new_v4().simple().to_string(), table, threshold, created_at: now(), doc, matches };
        let path = self.inner.config.data_dir.join("submissions").join(format!("{}.json", sub.id));
        let json = serde_json::to_vec(&sub).map_err(|e| ApiError::internal(e.to_string()))?;
        write_atomic(&path, &json).map_err(io_err("storing the submission"))?;
        self.inner.submissions.write().unwrap_or_else(|e| e.into_inner()).insert(sub.id.clone(), sub.clone());
        Ok(sub)
    }

    pub fn submission(&self, id: &str) -> Result<Submission, ApiError> {
        let subs = self.inner.submissions.read().unwrap_or_else(|e| e.into_inner());
        subs.get(id).cloned().ok_or_else(|| ApiError::not_found(format!("no document {id}")))
    }

    /// The translation memory of a submission in `langs` (all database
    /// languages by default), cut from the database as it is now.
    pub fn extract(&self, id: &str, langs: Option<&str>, format: Option<&str>) -> Result<(TmFormat, String), ApiError> {
        let sub = self.submission(id)?;
        let format = match format.unwrap_or("tmx") {
            "tmx" => TmFormat::Tmx,
            "csv" => TmFormat::Csv,
            other => return Err(ApiError::bad_request(format!("unknown format {other:?}"))),
        };
        let tables = self.tables();
        let db = tables.get(&sub.table).ok_or_else(|| self.no_database())?;
        let known = db.languages();
        let langs: Vec<LanguageTag> = match langs {
            Some(raw) => parse_tag_list(raw).map_err(|e| ApiError::bad_request(format!("invalid language: {e}")))?,
            None => known.iter().copied().collect(),
        };
        if langs.is_empty() {
            return Err(ApiError::bad_request("no languages requested"));
        }
        if let Some(l) = langs.iter().find(|l| !known.contains(l)) {
            return Err(ApiError::bad_request(format!("language {l} is not in table {}", db.name())));
        }
        let targets: BTreeSet<LanguageTag> = langs.iter().copied().collect();
        let ids = sub.matches.iter().flat_map(|m| m.records.iter().copied());
        let tm = extract_by_ids(db, sub.doc.language(), ids, &targets);
        let body = match format {
            TmFormat::Tmx => export_tmx(&tm, &langs),
            TmFormat::Csv => export_csv(&tm, &langs),
        };
        Ok((format, body))
    }

    fn session_dir(&self, id: &str) -> PathBuf {
        self.inner.config.data_dir.join("sessions").join(id)
    }

    fn persist_session(&self, s: &Session) -> Result<(), ApiError> {
        let dir = self.session_dir(&s.id);
        fs::create_dir_all(&dir).map_err(io_err("storing the session"))?;
        let json = serde_json::to_vec(s).map_err(|e| ApiError::internal(e.to_string()))?;
        write_atomic(&dir.join("state.json"), &json).map_err(io_err("storing the session"))?;
        if let Some(result) = &s.result {
            write_atomic(&dir.join("result.med"), result).map_err(io_err("storing the session"))?;
        }
        Ok(())
    }

    pub fn create_session(&self, med: Vec<u8>, source: Option<&str>, target: Option<&str>) -> Result<SessionSummary, ApiError> {
        let parse = |raw: &str| LanguageTag::parse(raw).map_err(|e| ApiError::bad_request(format!("invalid language: {e}")));
        let target = parse(target.ok_or_else(|| ApiError::bad_request("missing target"))?)?;
        let source = source.map(parse).transpose()?;
        let seq = self.inner.seq.fetch_add(1, Ordering::SeqCst);
        let s = Session::open(uuid::Uuid::new_v4().simple().to_string(), seq, med, source, target)?;
        let dir = self.session_dir(&s.id);
        fs::create_dir_all(&dir).map_err(io_err("storing the session"))?;
        write_atomic(&dir.join("source.med"), &s.med).map_err(io_err("storing the session"))?;
        self.persist_session(&s)?;
        let summary = s.summary();
        self.sessions().insert(s.id.clone(), s);
        Ok(summary)
    }

    pub fn list_sessions(&self, active_only: bool) -> Vec<SessionSummary> {
        let sessions = self.sessions();
        let mut list: Vec<&Session> = sessions.values().filter(|s| !active_only || !s.completed()).collect();
        list.sort_by_key(|s| s.seq);
        list.into_iter().map(Session::summary).collect()
    }

    fn with_session<T>(&self, id: &str, f: impl FnOnce(&mut Session, &Self) -> Result<T, ApiError>) -> Result<T, ApiError> {
        let mut sessions = self.sessions();
        let s = sessions.get_mut(id).ok_or_else(|| ApiError::not_found(format!("no session {id}")))?;
        f(s, self)
    }

    pub fn session_summary(&self, id: &str) -> Result<SessionSummary, ApiError> {
        self.with_session(id, |s, _| Ok(s.summary()))
    }

    pub fn segments(&self, id: &str) -> Result<Vec<SegmentView>, ApiError> {
        self.with_session(id, |s, st| {
            let tables = st.tables();
            Ok(s.view(tables.get(&st.inner.config.database), st.inner.config.threshold))
        })
    }

    /// Saves a row; an accepted suggestion counts as a use of its record.
    pub fn update_segment(&self, id: &str, n: usize, update: &SegmentUpdate) -> Result<SegmentView, ApiError> {
        self.with_session(id, |s, st| {
            let tables = st.tables();
            let db = tables.get(&st.inner.config.database);
            s.update(n, update, db)?;
            if let (Some(rid), Some(db)) = (update.record, db) {
                db.bump_value(rid, ValueEvent::Use).map_err(|e| ApiError::internal(e.to_string()))?;
                st.save(db)?;
            }
            st.persist_session(s)?;
            Ok(s.view(db, st.inner.config.threshold).swap_remove(n))
        })
    }

    pub fn resegment(&self, id: &str, n: usize, op: Resegment) -> Result<Vec<SegmentView>, ApiError> {
        self.with_session(id, |s, st| {
            s.resegment(n, op)?;
            st.persist_session(s)?;
            let tables = st.tables();
            Ok(s.view(tables.get(&st.inner.config.database), st.inner.config.threshold))
        })
    }

    /// Confirmed rows of the latest other session translating the same
    /// dossier from the same language into `lang`.
    pub fn peer(&self, id: &str, lang: &str) -> Result<PeerView, ApiError> {
        let lang = LanguageTag::parse(lang).map_err(|e| ApiError::bad_request(format!("invalid language: {e}")))?;
        let sessions = self.sessions();
        let me = sessions.get(id).ok_or_else(|| ApiError::not_found(format!("no session {id}")))?;
        let peer = sessions
            .values()
            .filter(|p| p.id != me.id && p.dossier == me.dossier && p.source == me.source && p.target == lang)
            .max_by_key(|p| (!p.completed(), p.seq));
        Ok(PeerView {
            lang,
            session: peer.map(|p| p.id.clone()),
            segments: peer
                .map(|p| p.confirmed().into_iter().map(|(n, text)| PeerSegment { n, text }).collect())
                .unwrap_or_default(),
        })
    }

    /// Completes a session and returns the packed dossier.
    pub fn complete(&self, id: &str) -> Result<Vec<u8>, ApiError> {
        self.with_session(id, |s, st| {
            if let Some(bytes) = &s.result {
                return Ok(bytes.clone());
            }
            let mut tables = st.tables_mut();
            let db = tables.get_mut(&st.inner.config.database).ok_or_else(|| st.no_database())?;
            let bytes = s.complete(db)?;
            st.save(db)?;
            st.persist_session(s)?;
            Ok(bytes)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::session::tests::three_sentence_med;
    use crate::session::SegmentState;
    use partext_core::lingstore::{extract_tm, sample_table};

    fn state(dir: &Path) -> AppState {
        let mut config = ServerConfig::new(dir);
        config.database = "example".into();
        let st = AppState::open(config).unwrap();
        if st.database().is_none() {
            st.register_table(sample_table()).unwrap();
        }
        st
    }

    fn ids(sub: &Submission) -> Vec<Vec<u64>> {
        sub.matches.iter().map(|m| m.records.iter().map(|r| r.0).collect()).collect()
    }

    #[test]
    fn submissions_keep_ids_and_extract_like_the_library() {
        let dir = tempfile::tempdir().unwrap();
        let st = state(dir.path());
        let hello = st.submit("hello world", Some("en"), None).unwrap();
        assert_eq!(ids(&hello), [vec![1]]);
        assert_eq!(ids(&st.submit("white cat", Some("en"), None).unwrap()), [vec![2, 3]]);

        let (_, tmx) = st.extract(&hello.id, Some("en,es"), None).unwrap();
        let en = LanguageTag::parse("en").unwrap();
        let es = LanguageTag::parse("es").unwrap();
        let local = extract_tm(&sample_table(), &hello.doc, &BTreeSet::from([en, es]), DEFAULT_THRESHOLD);
        assert_eq!(tmx, export_tmx(&local, &[en, es]));
        let (_, csv) = st.extract(&hello.id, Some("en,es"), Some("csv")).unwrap();
        assert_eq!(csv, "id,en,es\r\n1,hello world,Hola mundo\r\n");
    }

    #[test]
    fn submission_errors() {
        let dir = tempfile::tempdir().unwrap();
        let st = state(dir.path());
        assert_eq!(st.submit("  ", Some("en"), None).unwrap_err().status, 400);
        assert_eq!(st.submit("hi", Some("q1"), None).unwrap_err().status, 400);
        assert_eq!(st.submit("hi", None, None).unwrap_err().status, 400);
        assert_eq!(st.submit("hi", Some("en"), Some(1.5)).unwrap_err().status, 400);
        assert_eq!(st.submit("hi", Some("mm"), None).unwrap_err().status, 400);
        assert_eq!(st.submit("#base http://x\n<<r1|open", None, None).unwrap_err().status, 422);
        let sub = st.submit("hello world", Some("en"), None).unwrap();
        assert_eq!(st.extract("nope", None, None).unwrap_err().status, 404);
        assert_eq!(st.extract(&sub.id, Some("en,fr"), None).unwrap_err().status, 400);
        assert_eq!(st.extract(&sub.id, None, Some("pdf")).unwrap_err().status, 400);
    }

    #[test]
    fn marked_submissions_take_the_header_language() {
        let dir = tempfile::tempdir().unwrap();
        let st = state(dir.path());
        let sub = st.submit("#base http://example.com\n#lang en\n<<r2|white cat>> and <<|hello world>>", None, None).unwrap();
        assert_eq!(ids(&sub), [vec![2, 3], vec![1]]);
    }

    #[test]
    fn records_are_read_and_counted() {
        let dir = tempfile::tempdir().unwrap();
        let st = state(dir.path());
        let r = st.record("example", "r1").unwrap();
        assert_eq!(r["segments"]["es"], "Hola mundo");
        assert_eq!(r["uri"], "http://example.com/r1");
        assert_eq!(st.record("example", "r1").unwrap()["value"]["reads"], 2);
        assert_eq!(st.record("example", "r999").unwrap_err().status, 404);
        assert_eq!(st.record("example", "x1").unwrap_err().status, 400);
        assert_eq!(st.record("other", "r1").unwrap_err().status, 404);
    }

    #[test]
    fn everything_survives_a_restart() {
        let dir = tempfile::tempdir().unwrap();
        let (sub, session, bytes) = {
            let st = state(dir.path());
            let sub = st.submit("white cat", Some("en"), None).unwrap();
            let session = st.create_session(three_sentence_med(), None, Some("es")).unwrap();
            let up = SegmentUpdate { text: "gato blanco".into(), state: SegmentState::Confirmed, record: Some(RecordId(2)) };
            st.update_segment(&session.id, 1, &up).unwrap();
            let bytes = st.complete(&session.id).unwrap();
            (sub, session, bytes)
        };
        let st = state(dir.path());
        assert_eq!(st.submission(&sub.id).unwrap(), sub);
        assert_eq!(st.complete(&session.id).unwrap(), bytes);
        let db = st.database().unwrap();
        assert_eq!(db.get(RecordId(2)).unwrap().value().uses, 1);
        assert_eq!(db.len(), 4);
        assert_eq!(st.list_sessions(true), []);
        assert_eq!(st.list_sessions(false).len(), 1);
    }

    #[test]
    fn peers_show_confirmed_rows_only() {
        let dir = tempfile::tempdir().unwrap();
        let st = state(dir.path());
        let es = st.create_session(three_sentence_med(), None, Some("es")).unwrap();
        assert_eq!(st.peer(&es.id, "fr").unwrap().session, None);
        let other = st.create_session(three_sentence_med(), None, Some("es")).unwrap();
        let put = |n, text: &str, state| {
            st.update_segment(&other.id, n, &SegmentUpdate { text: text.into(), state, record: None }).unwrap();
        };
        put(0, "Hola mundo.", SegmentState::Confirmed);
        put(1, "Gato", SegmentState::Draft);
        let peer = st.peer(&es.id, "es").unwrap();
        assert_eq!(peer.session.as_deref(), Some(other.id.as_str()));
        assert_eq!(peer.segments, [PeerSegment { n: 0, text: "Hola mundo.".into() }]);
        assert_eq!(st.peer("nope", "es").unwrap_err().status, 404);
    }
}
