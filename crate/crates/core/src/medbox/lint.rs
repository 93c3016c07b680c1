//! Dossier checker. Works on raw archive members so that it can report
//! problems that would stop a dossier from being unpacked at all.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::Serialize;

use super::{
    artefact_parts, parallel_parts, parse_alignment, parse_meta, read_members, valid_name, ALIGNMENT_PATH, INDEX_PATH,
    LINKS_PATH, META_PATH, SIDECAR_EXT,
};
use crate::align::{Entirety, EntiretySet, ParallelTexts};
use crate::langtags::{check_labelling, FileLanguageMetadata, LabellingDiagnostic, LanguageTag, MALAYALAM};
use crate::lingstore::{import_tmx, StoreError};
use crate::segcore::{read_sidecar, segment_marked, SegmentKind, SegmentedText};
use crate::zipper::read_zip;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Defect {
    NotAZip,
    Unreadable,
    UnsafePath,
    MissingHeader,
    HeaderSyntax,
    DuplicateHeaderKey,
    MissingId,
    MissingLanguages,
    BadLanguageTag,
    MalayalamMisuse,
    MissingVersion,
    UndeclaredVersion,
    BadEntirety,
    MissingIndex,
    BrokenIndexLink,
    BadExternalUri,
    DanglingLink,
    InvalidTmx,
    UnsupportedTmx,
    BadSegmentation,
    BadAlignment,
    FormMismatch,
    UnknownMember,
}

impl Defect {
    pub const ALL: [Defect; 23] = [
        Defect::NotAZip,
        Defect::Unreadable,
        Defect::UnsafePath,
        Defect::MissingHeader,
        Defect::HeaderSyntax,
        Defect::DuplicateHeaderKey,
        Defect::MissingId,
        Defect::MissingLanguages,
        Defect::BadLanguageTag,
        Defect::MalayalamMisuse,
        Defect::MissingVersion,
        Defect::UndeclaredVersion,
        Defect::BadEntirety,
        Defect::MissingIndex,
        Defect::BrokenIndexLink,
        Defect::BadExternalUri,
        Defect::DanglingLink,
        Defect::InvalidTmx,
        Defect::UnsupportedTmx,
        Defect::BadSegmentation,
        Defect::BadAlignment,
        Defect::FormMismatch,
        Defect::UnknownMember,
    ];

    pub fn severity(self) -> Severity {
        match self {
            Defect::DuplicateHeaderKey
            | Defect::UndeclaredVersion
            | Defect::MissingIndex
            | Defect::UnsupportedTmx
            | Defect::FormMismatch
            | Defect::UnknownMember => Severity::Warning,
            _ => Severity::Error,
        }
    }

    pub fn code(self) -> String {
        serde_json::to_value(self).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct LintDiagnostic {
    pub severity: Severity,
    pub defect: Defect,
    pub path: Option<String>,
    pub message: String,
}

impl fmt::Display for LintDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.severity, self.defect.code())?;
        if let Some(p) = &self.path {
            write!(f, " {p}")?;
        }
        write!(f, ": {}", self.message)
    }
}

struct Report(Vec<LintDiagnostic>);

impl Report {
    fn add(&mut self, defect: Defect, path: Option<&str>, message: impl Into<String>) {
        self.0.push(LintDiagnostic { severity: defect.severity(), defect, path: path.map(str::to_string), message: message.into() });
    }
}

/// Checks a packed dossier. An empty list means it is clean.
pub fn validate(bytes: &[u8]) -> Vec<LintDiagnostic> {
    match read_zip(bytes) {
        Ok(members) => validate_members(&members),
        Err(e) => vec![LintDiagnostic { severity: Severity::Error, defect: Defect::NotAZip, path: None, message: e.0 }],
    }
}

/// Checks an unpacked dossier directory.
pub fn validate_dir(dir: &Path) -> Vec<LintDiagnostic> {
    match read_members(dir) {
        Ok(members) => validate_members(&members),
        Err(e) => vec![LintDiagnostic { severity: Severity::Error, defect: Defect::Unreadable, path: None, message: e.to_string() }],
    }
}

fn malayalam_note(label: &str) -> String {
    if label.eq_ignore_ascii_case("m1") {
        format!("`{label}` is not a language code; the look-alike `{MALAYALAM}` is reserved for Malayalam, label multilingual content `mm`")
    } else {
        format!("`{label}` is not a valid language label")
    }
}

fn has_scheme(href: &str) -> bool {
    match href.find(':') {
        Some(i) => href[..i].bytes().all(|b| b.is_ascii_alphanumeric() || matches!(b, b'+' | b'-' | b'.')) && i > 0,
        None => false,
    }
}

pub fn validate_members(members: &[(String, Vec<u8>)]) -> Vec<LintDiagnostic> {
    let mut r = Report(Vec::new());
    let files: BTreeMap<&str, &[u8]> = members.iter().map(|(n, b)| (n.as_str(), b.as_slice())).collect();
    for name in files.keys() {
        if !valid_name(name) {
            r.add(Defect::UnsafePath, Some(name), "member name escapes the archive or is empty");
        }
    }

    let Some(meta) = files.get(META_PATH) else {
        r.add(Defect::MissingHeader, None, format!("no {META_PATH}"));
        return finish(r);
    };
    let meta = String::from_utf8_lossy(meta);
    let (entries, bad) = parse_meta(&meta);
    for (line, msg) in bad {
        r.add(Defect::HeaderSyntax, Some(META_PATH), format!("line {line}: {msg}"));
    }
    let mut header: BTreeMap<&str, &str> = BTreeMap::new();
    for (line, k, v) in &entries {
        if header.insert(k, v).is_some() {
            r.add(Defect::DuplicateHeaderKey, Some(META_PATH), format!("line {line}: `{k}` repeated; the last value wins"));
        }
    }
    if header.get("id").is_none_or(|v| v.trim().is_empty()) {
        r.add(Defect::MissingId, Some(META_PATH), "no dossier `id`");
    }

    let mut reported_labels: BTreeSet<String> = BTreeSet::new();
    let mut bad_label = |r: &mut Report, path: &str, label: &str| {
        if reported_labels.insert(label.to_ascii_lowercase()) {
            r.add(Defect::BadLanguageTag, Some(path), malayalam_note(label));
        }
    };
    let mut declared: Vec<LanguageTag> = Vec::new();
    match header.get("languages") {
        None => r.add(Defect::MissingLanguages, Some(META_PATH), "no `languages` list"),
        Some(list) => {
            for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                match LanguageTag::parse(item) {
                    Ok(t) => declared.push(t),
                    Err(_) => bad_label(&mut r, META_PATH, item),
                }
            }
            if declared.is_empty() && !list.split(',').any(|s| !s.trim().is_empty()) {
                r.add(Defect::MissingLanguages, Some(META_PATH), "empty `languages` list");
            }
        }
    }

    let mut entirety: BTreeMap<LanguageTag, EntiretySet> = BTreeMap::new();
    for (k, v) in &header {
        if let Some(label) = k.strip_prefix("entirety.") {
            match LanguageTag::parse(label) {
                Ok(lang) => match v.parse::<EntiretySet>() {
                    Ok(set) => {
                        entirety.insert(lang, set);
                    }
                    Err(e) => r.add(Defect::BadEntirety, Some(META_PATH), format!("{k}: {e}")),
                },
                Err(_) => bad_label(&mut r, META_PATH, label),
            }
        }
    }

    // Layout walk.
    let mut with_files: BTreeSet<LanguageTag> = BTreeSet::new();
    let mut embedded = 0usize;
    for (&name, bytes) in &files {
        if matches!(name, META_PATH | INDEX_PATH | LINKS_PATH | ALIGNMENT_PATH) {
            continue;
        }
        if let Some(rest) = name.strip_prefix("parallel/") {
            let label = rest.split('/').next().unwrap_or("");
            if let Some((lang, _)) = parallel_parts(name) {
                with_files.insert(lang);
                if let Some(base) = name.strip_suffix(SIDECAR_EXT) {
                    if files.contains_key(base) {
                        check_sidecar(&mut r, name, bytes, files[base]);
                        continue;
                    }
                }
                embedded += 1;
            } else if rest.contains('/') && LanguageTag::parse(label).is_err() {
                bad_label(&mut r, name, label);
            } else {
                r.add(Defect::UnknownMember, Some(name), "not part of the dossier layout; kept as an artefact");
            }
            continue;
        }
        let (role, _) = artefact_parts(name);
        if role == super::ArtefactRole::Other && !name.starts_with("artefacts/other/") {
            r.add(Defect::UnknownMember, Some(name), "not part of the dossier layout; kept as an artefact");
        }
        embedded += 1;
        if name.starts_with("artefacts/") && name.to_ascii_lowercase().ends_with(".tmx") {
            check_tmx(&mut r, name, bytes);
        }
    }

    for lang in &with_files {
        if !declared.contains(lang) {
            r.add(Defect::UndeclaredVersion, Some(&format!("parallel/{lang}/")), format!("`{lang}` has files but is not declared"));
        }
    }
    let linked: BTreeSet<LanguageTag> = header
        .iter()
        .filter(|(k, _)| k.starts_with("link."))
        .filter_map(|(_, v)| parallel_parts(v).map(|(l, _)| l))
        .collect();
    for lang in &declared {
        if with_files.contains(lang) || linked.contains(lang) {
            continue;
        }
        let explained = entirety.get(lang).is_some_and(|e| !e.contains(Entirety::Complete));
        if !explained {
            r.add(
                Defect::MissingVersion,
                Some(META_PATH),
                format!("`{lang}` is declared but has no file under parallel/ and no entirety saying why"),
            );
        }
    }

    check_malayalam(&mut r, &declared, &files);
    check_index(&mut r, &files);
    let externals = check_links(&mut r, &header, files.get(LINKS_PATH).copied());
    check_alignment(&mut r, &files);

    if let Some(form) = header.get("form") {
        let actual = match (embedded, externals) {
            (_, 0) => "self-contained",
            (0, _) => "external-only",
            _ => "mix",
        };
        if *form != actual {
            r.add(Defect::FormMismatch, Some(META_PATH), format!("form says `{form}` but the components make it `{actual}`"));
        }
    }
    finish(r)
}

fn finish(mut r: Report) -> Vec<LintDiagnostic> {
    r.0.sort();
    r.0.dedup();
    r.0
}

fn check_sidecar(r: &mut Report, name: &str, sidecar: &[u8], base: &[u8]) {
    let (Ok(sidecar), Ok(source)) = (std::str::from_utf8(sidecar), std::str::from_utf8(base)) else {
        r.add(Defect::BadSegmentation, Some(name), "segmentation or its text is not UTF-8");
        return;
    };
    if let Err(e) = read_sidecar(sidecar, source.to_string()) {
        r.add(Defect::BadSegmentation, Some(name), e.to_string());
    }
}

fn check_tmx(r: &mut Report, name: &str, bytes: &[u8]) {
    let Ok(text) = std::str::from_utf8(bytes) else {
        r.add(Defect::InvalidTmx, Some(name), "not UTF-8");
        return;
    };
    match import_tmx(text) {
        Ok(_) => {}
        Err(e @ StoreError::UnsupportedTmxMarkup { .. }) => r.add(Defect::UnsupportedTmx, Some(name), e.to_string()),
        Err(e) => r.add(Defect::InvalidTmx, Some(name), e.to_string()),
    }
}

/// `ml` on a file whose content switches between languages.
fn check_malayalam(r: &mut Report, declared: &[LanguageTag], files: &BTreeMap<&str, &[u8]>) {
    let ml = LanguageTag::parse(MALAYALAM).expect("valid code");
    if !declared.contains(&ml) {
        return;
    }
    for (&name, bytes) in files {
        if !name.starts_with("parallel/ml/") || name.ends_with(SIDECAR_EXT) {
            continue;
        }
        let Ok(text) = std::str::from_utf8(bytes) else { continue };
        let Ok(st) = segment_marked(text) else { continue };
        let meta = FileLanguageMetadata::new([ml], None).expect("non-empty");
        for d in check_labelling(&meta, &st.observed_languages()) {
            if matches!(d, LabellingDiagnostic::MalayalamMisuse { .. }) {
                r.add(Defect::MalayalamMisuse, Some(name), d.to_string());
            }
        }
    }
}

fn check_index(r: &mut Report, files: &BTreeMap<&str, &[u8]>) {
    let Some(index) = files.get(INDEX_PATH) else {
        r.add(Defect::MissingIndex, None, "no index.html; the dossier cannot be browsed");
        return;
    };
    let html = String::from_utf8_lossy(index);
    let re = regex::Regex::new(r#"(?i)\b(?:href|src)\s*=\s*"([^"]*)""#).expect("valid pattern");
    for cap in re.captures_iter(&html) {
        let raw = crate::xml::unescape(&cap[1]).map(|c| c.into_owned()).unwrap_or_else(|_| cap[1].to_string());
        if raw.is_empty() || raw.starts_with('#') || has_scheme(&raw) || raw.starts_with("//") {
            continue;
        }
        let target = raw.split(['#', '?']).next().unwrap_or("").trim_start_matches("./");
        if !files.contains_key(target) {
            r.add(Defect::BrokenIndexLink, Some(INDEX_PATH), format!("link {raw:?} does not resolve inside the archive"));
        }
    }
}

/// Returns the number of external components.
fn check_links(r: &mut Report, header: &BTreeMap<&str, &str>, links: Option<&[u8]>) -> usize {
    let lines: Vec<String> = links
        .map(|b| String::from_utf8_lossy(b).lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_string).collect())
        .unwrap_or_default();
    for (i, line) in lines.iter().enumerate() {
        match url::Url::parse(line) {
            Ok(u) if !u.cannot_be_a_base() || u.scheme() == "urn" || u.scheme() == "mailto" => {}
            Ok(_) => r.add(Defect::BadExternalUri, Some(LINKS_PATH), format!("line {}: {line:?} is not a usable URI", i + 1)),
            Err(e) => r.add(Defect::BadExternalUri, Some(LINKS_PATH), format!("line {}: {line:?}: {e}", i + 1)),
        }
    }
    let mut numbered = BTreeSet::new();
    for (k, v) in header {
        let Some(n) = k.strip_prefix("link.") else { continue };
        match n.parse::<usize>() {
            Ok(n) if n >= 1 && n <= lines.len() => {
                numbered.insert(n);
                if parallel_parts(v).is_none() && !v.starts_with("artefacts/") {
                    r.add(Defect::DanglingLink, Some(META_PATH), format!("{k} names {v:?}, which is not a component path"));
                }
            }
            _ => r.add(Defect::DanglingLink, Some(META_PATH), format!("{k} has no line in {LINKS_PATH}")),
        }
    }
    for n in 1..=lines.len() {
        if !numbered.contains(&n) {
            r.add(Defect::DanglingLink, Some(LINKS_PATH), format!("line {n} is not named by any link.{n} entry"));
        }
    }
    lines.len()
}

fn check_alignment(r: &mut Report, files: &BTreeMap<&str, &[u8]>) {
    let Some(bytes) = files.get(ALIGNMENT_PATH) else { return };
    let alignment = match std::str::from_utf8(bytes).map_err(|e| e.to_string()).and_then(|t| parse_alignment(t).map_err(|e| e.to_string())) {
        Ok(a) => a,
        Err(e) => {
            r.add(Defect::BadAlignment, Some(ALIGNMENT_PATH), e);
            return;
        }
    };
    let mut versions: BTreeMap<LanguageTag, SegmentedText> = BTreeMap::new();
    for (&name, bytes) in files {
        let Some(base) = name.strip_suffix(SIDECAR_EXT) else { continue };
        let (Some((lang, _)), Some(source)) = (parallel_parts(base), files.get(base)) else { continue };
        let (Ok(seg), Ok(src)) = (std::str::from_utf8(bytes), std::str::from_utf8(source)) else { continue };
        match read_sidecar(seg, src.to_string()) {
            Ok(st) => {
                versions.insert(lang, st);
            }
            // already reported as a segmentation defect
            Err(_) => return,
        }
    }
    let kind = if alignment.groups.is_empty() { SegmentKind::File } else { alignment.kind };
    if let Err(e) = ParallelTexts::from_parts(versions, alignment.groups, kind) {
        r.add(Defect::BadAlignment, Some(ALIGNMENT_PATH), e.to_string());
    }
}
