//! Multilingual electronic dossiers: a header, the linguistic versions and
//! auxiliary artefacts, packed as one zip file.
//!
//! Archive layout:
//!
//! ```text
//! index.html                       generated on pack
//! header/med.meta                  `key: value` lines
//! parallel/<lang>/<file>           a linguistic version
//! parallel/<lang>/<file>.seg       its segmentation, if any
//! parallel/alignment.tsv           alignment groups, if any
//! artefacts/<role>/<file>          translation memories, background documents
//! external.links                   one URI per line
//! ```
//!
//! Line N of `external.links` belongs to the component named by the
//! `link.N` header entry. Reserved header keys: `id`, `languages`, `form`,
//! `entirety.<lang>` and `link.<n>`.

mod corpus;
mod index;
mod lint;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::align::{AlignmentGroup, Entirety, EntiretySet, ParallelTexts};
use crate::langtags::{parse_tag_list, LanguageTag};
use crate::segcore::{read_sidecar, write_sidecar, SegmentKind, SegmentPath, SegmentedText, SourceFormat};
use crate::zipper::{read_zip, write_zip};

pub use corpus::{clean_dossier, seeded_defects, SeededDefect};
pub use index::generate_index;
pub use lint::{validate, validate_dir, validate_members, Defect, LintDiagnostic, Severity};

pub const META_PATH: &str = "header/med.meta";
pub const INDEX_PATH: &str = "index.html";
pub const LINKS_PATH: &str = "external.links";
pub const ALIGNMENT_PATH: &str = "parallel/alignment.tsv";
const SIDECAR_EXT: &str = ".seg";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MedError {
    #[error("not a zip archive: {0}")]
    NotAZip(String),
    #[error("archive has no {META_PATH}")]
    MissingHeader,
    #[error("{META_PATH} line {line}: {message}")]
    BadHeader { line: usize, message: String },
    #[error("{path}: {message}")]
    BadMember { path: String, message: String },
    #[error("invalid dossier: {0}")]
    Invalid(String),
    #[error("{0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArtefactRole {
    TranslationMemory,
    BackgroundDocument,
    Other,
}

impl ArtefactRole {
    pub const ALL: [ArtefactRole; 3] = [ArtefactRole::TranslationMemory, ArtefactRole::BackgroundDocument, ArtefactRole::Other];

    pub fn as_str(self) -> &'static str {
        match self {
            ArtefactRole::TranslationMemory => "translation-memory",
            ArtefactRole::BackgroundDocument => "background-document",
            ArtefactRole::Other => "other",
        }
    }
}

impl fmt::Display for ArtefactRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ArtefactRole {
    type Err = MedError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ArtefactRole::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| MedError::Invalid(format!("unknown artefact role {s:?}")))
    }
}

/// A component is either inside the archive or referenced by URI.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Content {
    Embedded(Vec<u8>),
    External(String),
}

impl Content {
    pub fn is_external(&self) -> bool {
        matches!(self, Content::External(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelFile {
    pub lang: LanguageTag,
    pub name: String,
    pub content: Content,
    /// Only for embedded UTF-8 text.
    pub segmentation: Option<SegmentedText>,
}

impl ParallelFile {
    pub fn path(&self) -> String {
        format!("parallel/{}/{}", self.lang, self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artefact {
    pub role: ArtefactRole,
    pub name: String,
    pub content: Content,
}

impl Artefact {
    pub fn path(&self) -> String {
        format!("artefacts/{}/{}", self.role, self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    pub kind: SegmentKind,
    pub groups: Vec<AlignmentGroup>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Form {
    SelfContained,
    Mix,
    ExternalOnly,
}

impl Form {
    pub fn as_str(self) -> &'static str {
        match self {
            Form::SelfContained => "self-contained",
            Form::Mix => "mix",
            Form::ExternalOnly => "external-only",
        }
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn is_reserved(key: &str) -> bool {
    matches!(key, "id" | "languages" | "form") || key.starts_with("entirety.") || key.starts_with("link.")
}

fn valid_key(key: &str) -> bool {
    !key.is_empty() && key.bytes().all(|b| b.is_ascii_alphanumeric() || matches!(b, b'.' | b'_' | b'-'))
}

/// Relative file names: no empty, `.` or `..` components.
fn valid_name(name: &str) -> bool {
    !name.is_empty() && name.split('/').all(|c| !c.is_empty() && c != "." && c != ".." && !c.contains('\\'))
}

fn escape_value(v: &str) -> String {
    v.replace('\\', "\\\\").replace('\n', "\\n").replace('\r', "\\r")
}

fn unescape_value(v: &str) -> String {
    let mut out = String::with_capacity(v.len());
    let mut chars = v.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some(other) => out.push(other),
            None => out.push('\\'),
        }
    }
    out
}

type MetaEntries = Vec<(usize, String, String)>;

/// Header lines as (line number, key, value), plus the lines that are not
/// `key: value`.
pub(crate) fn parse_meta(text: &str) -> (MetaEntries, Vec<(usize, String)>) {
    let mut entries = Vec::new();
    let mut bad = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        match line.split_once(':') {
            Some((k, v)) if valid_key(k.trim()) => {
                entries.push((n, k.trim().to_string(), unescape_value(v.strip_prefix(' ').unwrap_or(v))));
            }
            _ => bad.push((n, format!("expected `key: value`, found {line:?}"))),
        }
    }
    (entries, bad)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dossier {
    id: String,
    languages: Vec<LanguageTag>,
    header: BTreeMap<String, String>,
    entirety: BTreeMap<LanguageTag, EntiretySet>,
    parallel: Vec<ParallelFile>,
    alignment: Option<Alignment>,
    artefacts: Vec<Artefact>,
}

impl Dossier {
    pub fn new(id: impl Into<String>, languages: impl IntoIterator<Item = LanguageTag>) -> Result<Self, MedError> {
        let id = id.into();
        if id.trim().is_empty() {
            return Err(MedError::Invalid("a dossier needs an id".into()));
        }
        let mut langs: Vec<LanguageTag> = Vec::new();
        for l in languages {
            if !langs.contains(&l) {
                langs.push(l);
            }
        }
        if langs.is_empty() {
            return Err(MedError::Invalid("a dossier needs at least one declared language".into()));
        }
        Ok(Dossier {
            id,
            languages: langs,
            header: BTreeMap::new(),
            entirety: BTreeMap::new(),
            parallel: Vec::new(),
            alignment: None,
            artefacts: Vec::new(),
        })
    }

    /// A dossier holding every version of `pt`, its segmentation, alignment
    /// and entirety.
    pub fn from_parallel_texts(id: impl Into<String>, pt: &ParallelTexts) -> Result<Self, MedError> {
        let mut med = Dossier::new(id, pt.versions().keys().copied())?;
        for (lang, st) in pt.versions() {
            let name = match st.format() {
                SourceFormat::Plain => "text.txt",
                SourceFormat::Markup => "text.html",
            };
            med.add_parallel(ParallelFile {
                lang: *lang,
                name: name.into(),
                content: Content::Embedded(st.source().as_bytes().to_vec()),
                segmentation: Some(st.clone()),
            })?;
        }
        med.alignment = Some(Alignment { kind: pt.kind(), groups: pt.groups().to_vec() });
        med.entirety = pt.entirety().clone();
        if let Some(source) = pt.source() {
            med.set_header("source", source)?;
        }
        Ok(med)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn languages(&self) -> &[LanguageTag] {
        &self.languages
    }

    pub fn declare_language(&mut self, lang: LanguageTag) {
        if !self.languages.contains(&lang) {
            self.languages.push(lang);
        }
    }

    /// Free-form header entries (title, workflow state, statistics ...).
    pub fn header(&self) -> &BTreeMap<String, String> {
        &self.header
    }

    pub fn set_header(&mut self, key: &str, value: impl Into<String>) -> Result<(), MedError> {
        if !valid_key(key) || is_reserved(key) {
            return Err(MedError::Invalid(format!("header key {key:?} is reserved or malformed")));
        }
        self.header.insert(key.to_string(), value.into());
        Ok(())
    }

    pub fn entirety(&self) -> &BTreeMap<LanguageTag, EntiretySet> {
        &self.entirety
    }

    pub fn set_entirety(&mut self, lang: LanguageTag, attrs: EntiretySet) {
        self.entirety.insert(lang, attrs);
    }

    pub fn parallel(&self) -> &[ParallelFile] {
        &self.parallel
    }

    pub fn artefacts(&self) -> &[Artefact] {
        &self.artefacts
    }

    pub fn alignment(&self) -> Option<&Alignment> {
        self.alignment.as_ref()
    }

    pub fn set_alignment(&mut self, alignment: Option<Alignment>) {
        self.alignment = alignment;
    }

    pub fn add_parallel(&mut self, file: ParallelFile) -> Result<(), MedError> {
        if !valid_name(&file.name) || file.name.ends_with(SIDECAR_EXT) {
            return Err(MedError::Invalid(format!("bad file name {:?}", file.name)));
        }
        if self.parallel.iter().any(|f| f.lang == file.lang && f.name == file.name) {
            return Err(MedError::Invalid(format!("{} already present", file.path())));
        }
        if let Some(st) = &file.segmentation {
            match &file.content {
                Content::Embedded(bytes) if bytes == st.source().as_bytes() => {}
                _ => return Err(MedError::Invalid(format!("{}: segmentation does not match the content", file.path()))),
            }
            if self.parallel.iter().any(|f| f.lang == file.lang && f.segmentation.is_some()) {
                return Err(MedError::Invalid(format!("a segmented {} version is already present", file.lang)));
            }
        }
        let at = self.parallel.partition_point(|f| (f.lang, f.name.as_str()) < (file.lang, file.name.as_str()));
        self.parallel.insert(at, file);
        Ok(())
    }

    /// Takes out every file of one version. The language stays declared.
    pub fn remove_version(&mut self, lang: LanguageTag) -> Vec<ParallelFile> {
        let (taken, kept) = std::mem::take(&mut self.parallel).into_iter().partition(|f| f.lang == lang);
        self.parallel = kept;
        taken
    }

    pub fn add_artefact(&mut self, artefact: Artefact) -> Result<(), MedError> {
        if !valid_name(&artefact.name) {
            return Err(MedError::Invalid(format!("bad file name {:?}", artefact.name)));
        }
        if self.artefacts.iter().any(|a| a.role == artefact.role && a.name == artefact.name) {
            return Err(MedError::Invalid(format!("{} already present", artefact.path())));
        }
        let key = (artefact.role, artefact.name.as_str());
        let at = self.artefacts.partition_point(|a| (a.role, a.name.as_str()) < key);
        self.artefacts.insert(at, artefact);
        Ok(())
    }

    /// Self-contained when nothing is a URI reference, external-only when
    /// everything is.
    pub fn form(&self) -> Form {
        let externals: Vec<bool> = self
            .parallel
            .iter()
            .map(|f| f.content.is_external())
            .chain(self.artefacts.iter().map(|a| a.content.is_external()))
            .collect();
        if externals.iter().all(|e| !e) {
            Form::SelfContained
        } else if externals.iter().all(|e| *e) {
            Form::ExternalOnly
        } else {
            Form::Mix
        }
    }

    /// The aligned versions, when the dossier carries segmentation.
    pub fn parallel_texts(&self) -> Result<Option<ParallelTexts>, MedError> {
        let versions: BTreeMap<LanguageTag, SegmentedText> =
            self.parallel.iter().filter_map(|f| f.segmentation.clone().map(|s| (f.lang, s))).collect();
        if versions.is_empty() {
            return Ok(None);
        }
        let (groups, kind) = match &self.alignment {
            Some(a) => (a.groups.clone(), a.kind),
            None => (Vec::new(), SegmentKind::File),
        };
        let mut pt = ParallelTexts::from_parts(versions, groups, kind).map_err(|e| MedError::Invalid(e.to_string()))?;
        for (lang, attrs) in &self.entirety {
            if pt.versions().contains_key(lang) {
                pt.set_entirety(*lang, attrs.clone());
            }
        }
        if let Some(source) = self.header.get("source") {
            pt = pt.with_source(source.clone());
        }
        Ok(Some(pt))
    }

    fn externals(&self) -> Vec<(String, &str)> {
        let files = self.parallel.iter().filter_map(|f| match &f.content {
            Content::External(uri) => Some((f.path(), uri.as_str())),
            Content::Embedded(_) => None,
        });
        let arts = self.artefacts.iter().filter_map(|a| match &a.content {
            Content::External(uri) => Some((a.path(), uri.as_str())),
            Content::Embedded(_) => None,
        });
        files.chain(arts).collect()
    }

    pub(crate) fn meta_text(&self) -> String {
        let mut lines: Vec<(String, String)> = vec![
            ("id".into(), self.id.clone()),
            ("languages".into(), self.languages.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(",")),
            ("form".into(), self.form().to_string()),
        ];
        let undefined = EntiretySet::single(Entirety::Undefined);
        let with_files: BTreeSet<LanguageTag> = self.parallel.iter().map(|f| f.lang).collect();
        let mut entirety = self.entirety.clone();
        for lang in self.languages.iter().filter(|l| !with_files.contains(l)) {
            entirety.entry(*lang).or_insert_with(|| undefined.clone());
        }
        for (lang, attrs) in &entirety {
            lines.push((format!("entirety.{lang}"), attrs.to_string()));
        }
        for (n, (path, _)) in self.externals().iter().enumerate() {
            lines.push((format!("link.{}", n + 1), path.clone()));
        }
        lines.extend(self.header.iter().map(|(k, v)| (k.clone(), v.clone())));
        lines.iter().map(|(k, v)| format!("{k}: {}\n", escape_value(v))).collect()
    }

    /// Archive members, sorted by name.
    pub fn to_members(&self) -> Vec<(String, Vec<u8>)> {
        let mut members = vec![
            (META_PATH.to_string(), self.meta_text().into_bytes()),
            (INDEX_PATH.to_string(), generate_index(self).into_bytes()),
        ];
        for f in &self.parallel {
            if let Content::Embedded(bytes) = &f.content {
                members.push((f.path(), bytes.clone()));
            }
            if let Some(st) = &f.segmentation {
                members.push((format!("{}{SIDECAR_EXT}", f.path()), write_sidecar(st).into_bytes()));
            }
        }
        if let Some(a) = &self.alignment {
            members.push((ALIGNMENT_PATH.to_string(), alignment_text(a).into_bytes()));
        }
        for a in &self.artefacts {
            if let Content::Embedded(bytes) = &a.content {
                members.push((a.path(), bytes.clone()));
            }
        }
        let externals = self.externals();
        if !externals.is_empty() {
            let text: String = externals.iter().map(|(_, uri)| format!("{uri}\n")).collect();
            members.push((LINKS_PATH.to_string(), text.into_bytes()));
        }
        members.sort_by(|a, b| a.0.cmp(&b.0));
        members
    }

    pub fn pack(&self) -> Vec<u8> {
        write_zip(&self.to_members())
    }

    pub fn unpack(bytes: &[u8]) -> Result<Dossier, MedError> {
        let members = read_zip(bytes).map_err(|e| MedError::NotAZip(e.0))?;
        Dossier::from_members(members)
    }

    /// Rebuilds a dossier from archive members. Files outside the known
    /// layout are kept as artefacts of role `other` under their full path.
    pub fn from_members(members: Vec<(String, Vec<u8>)>) -> Result<Dossier, MedError> {
        let mut files: BTreeMap<String, Vec<u8>> = members.into_iter().collect();
        let meta = files.remove(META_PATH).ok_or(MedError::MissingHeader)?;
        let meta = String::from_utf8(meta).map_err(|_| MedError::BadHeader { line: 0, message: "not UTF-8".into() })?;
        let (entries, bad) = parse_meta(&meta);
        if let Some((line, message)) = bad.into_iter().next() {
            return Err(MedError::BadHeader { line, message });
        }
        let mut id = None;
        let mut languages = None;
        let mut header = BTreeMap::new();
        let mut entirety = BTreeMap::new();
        let mut links: BTreeMap<usize, String> = BTreeMap::new();
        for (line, key, value) in entries {
            let bad = |message: String| MedError::BadHeader { line, message };
            match key.as_str() {
                "id" => id = Some(value),
                "languages" => languages = Some(parse_tag_list(&value).map_err(|e| bad(e.to_string()))?),
                "form" => {}
                k if k.starts_with("entirety.") => {
                    let lang = LanguageTag::parse(&k["entirety.".len()..]).map_err(|e| bad(e.to_string()))?;
                    entirety.insert(lang, value.parse::<EntiretySet>().map_err(|e| bad(e.to_string()))?);
                }
                k if k.starts_with("link.") => {
                    let n = k["link.".len()..].parse().map_err(|_| bad(format!("bad link key {k:?}")))?;
                    links.insert(n, value);
                }
                _ => {
                    header.insert(key, value);
                }
            }
        }
        let id = id.ok_or(MedError::BadHeader { line: 0, message: "no `id` entry".into() })?;
        let languages = languages.ok_or(MedError::BadHeader { line: 0, message: "no `languages` entry".into() })?;
        let mut med = Dossier::new(id, languages).map_err(|e| MedError::BadHeader { line: 0, message: e.to_string() })?;
        med.header = header;
        med.entirety = entirety;

        files.remove(INDEX_PATH);
        let uris: Vec<String> = match files.remove(LINKS_PATH) {
            Some(bytes) => String::from_utf8_lossy(&bytes).lines().filter(|l| !l.trim().is_empty()).map(|l| l.trim().to_string()).collect(),
            None => Vec::new(),
        };
        let alignment = files.remove(ALIGNMENT_PATH);

        let member_err = |path: &str, e: MedError| MedError::BadMember { path: path.to_string(), message: e.to_string() };
        let names: Vec<String> = files.keys().cloned().collect();
        for path in &names {
            if path.ends_with('/') {
                continue;
            }
            if let Some(base) = path.strip_suffix(SIDECAR_EXT) {
                if files.contains_key(base) && parallel_parts(base).is_some() {
                    continue;
                }
            }
            let bytes = files[path].clone();
            if let Some((lang, name)) = parallel_parts(path) {
                let segmentation = match files.get(&format!("{path}{SIDECAR_EXT}")) {
                    Some(seg) => {
                        let seg = std::str::from_utf8(seg).map_err(|_| member_err(path, MedError::Invalid("sidecar is not UTF-8".into())))?;
                        let source = String::from_utf8(bytes.clone())
                            .map_err(|_| member_err(path, MedError::Invalid("segmented text is not UTF-8".into())))?;
                        Some(read_sidecar(seg, source).map_err(|e| member_err(path, MedError::Invalid(e.to_string())))?)
                    }
                    None => None,
                };
                let file = ParallelFile { lang, name: name.to_string(), content: Content::Embedded(bytes), segmentation };
                med.add_parallel(file).map_err(|e| member_err(path, e))?;
            } else {
                let (role, name) = artefact_parts(path);
                med.add_artefact(Artefact { role, name, content: Content::Embedded(bytes) }).map_err(|e| member_err(path, e))?;
            }
        }

        for (n, path) in &links {
            let uri = uris.get(n - 1).ok_or_else(|| MedError::BadMember {
                path: LINKS_PATH.into(),
                message: format!("no line {n} for {path}"),
            })?;
            let content = Content::External(uri.clone());
            if let Some((lang, name)) = parallel_parts(path) {
                let file = ParallelFile { lang, name: name.to_string(), content, segmentation: None };
                med.add_parallel(file).map_err(|e| member_err(path, e))?;
            } else {
                let (role, name) = artefact_parts(path);
                med.add_artefact(Artefact { role, name, content }).map_err(|e| member_err(path, e))?;
            }
        }
        if links.len() != uris.len() {
            return Err(MedError::BadMember {
                path: LINKS_PATH.into(),
                message: format!("{} URIs but {} link entries", uris.len(), links.len()),
            });
        }

        // A version with no file and no entirety was written as undefined.
        let with_files: BTreeSet<LanguageTag> = med.parallel.iter().map(|f| f.lang).collect();
        let undefined = EntiretySet::single(Entirety::Undefined);
        med.entirety.retain(|lang, attrs| with_files.contains(lang) || *attrs != undefined);

        if let Some(bytes) = alignment {
            let text = String::from_utf8(bytes).map_err(|_| member_err(ALIGNMENT_PATH, MedError::Invalid("not UTF-8".into())))?;
            med.alignment = Some(parse_alignment(&text).map_err(|e| member_err(ALIGNMENT_PATH, e))?);
        }
        Ok(med)
    }

    /// Writes the unpacked layout under `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<(), MedError> {
        write_members(&self.to_members(), dir)
    }

    pub fn read_dir(dir: &Path) -> Result<Dossier, MedError> {
        Dossier::from_members(read_members(dir)?)
    }
}

/// `parallel/<lang>/<name>` with a valid language label.
fn parallel_parts(path: &str) -> Option<(LanguageTag, &str)> {
    let rest = path.strip_prefix("parallel/")?;
    let (lang, name) = rest.split_once('/')?;
    let lang = LanguageTag::parse(lang).ok()?;
    valid_name(name).then_some((lang, name))
}

fn artefact_parts(path: &str) -> (ArtefactRole, String) {
    if let Some((role, name)) = path.strip_prefix("artefacts/").and_then(|r| r.split_once('/')) {
        if let Ok(role) = role.parse::<ArtefactRole>() {
            if valid_name(name) {
                return (role, name.to_string());
            }
        }
    }
    (ArtefactRole::Other, path.to_string())
}

pub(crate) fn alignment_text(a: &Alignment) -> String {
    let mut out = format!("#alignment {}\n", a.kind);
    for g in &a.groups {
        let cells: Vec<String> = g.members.iter().map(|(l, p)| format!("{l}={p}")).collect();
        out.push_str(&cells.join("\t"));
        out.push('\n');
    }
    out
}

pub(crate) fn parse_alignment(text: &str) -> Result<Alignment, MedError> {
    let mut lines = text.lines();
    let kind = lines
        .next()
        .and_then(|l| l.strip_prefix("#alignment "))
        .ok_or_else(|| MedError::Invalid("first line must be `#alignment <kind>`".into()))?;
    let kind = kind.trim().parse::<SegmentKind>().map_err(|e| MedError::Invalid(e.to_string()))?;
    let mut groups = Vec::new();
    for (i, line) in lines.enumerate() {
        let mut members = BTreeMap::new();
        for cell in line.split('\t').filter(|c| !c.is_empty()) {
            let (lang, path) = cell.split_once('=').ok_or_else(|| MedError::Invalid(format!("line {}: bad cell {cell:?}", i + 2)))?;
            let lang = LanguageTag::parse(lang).map_err(|e| MedError::Invalid(format!("line {}: {e}", i + 2)))?;
            let path: SegmentPath = path.parse().map_err(|e| MedError::Invalid(format!("line {}: {e}", i + 2)))?;
            members.insert(lang, path);
        }
        groups.push(AlignmentGroup { kind, members });
    }
    Ok(Alignment { kind, groups })
}

fn io(e: impl fmt::Display) -> MedError {
    MedError::Io(e.to_string())
}

pub fn write_members(members: &[(String, Vec<u8>)], dir: &Path) -> Result<(), MedError> {
    for (name, bytes) in members {
        if !valid_name(name) {
            return Err(MedError::BadMember { path: name.clone(), message: "unsafe path".into() });
        }
        let path = dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io)?;
        }
        fs::write(&path, bytes).map_err(io)?;
    }
    Ok(())
}

/// Every file under `dir`, named by its `/`-separated relative path.
pub fn read_members(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, MedError> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) -> Result<(), MedError> {
        let mut entries: Vec<_> = fs::read_dir(dir).map_err(io)?.collect::<Result<_, _>>().map_err(io)?;
        entries.sort_by_key(|e| e.file_name());
        for entry in entries {
            let path = entry.path();
            if path.is_dir() {
                walk(root, &path, out)?;
            } else {
                let rel = path.strip_prefix(root).map_err(io)?;
                let name: Vec<String> = rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect();
                out.push((name.join("/"), fs::read(&path).map_err(io)?));
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out)?;
    Ok(out)
}
