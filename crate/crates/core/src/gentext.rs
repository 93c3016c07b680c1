//! Document templates: text with record identifiers in place of
//! sentences, expanded into every linguistic version from linguistic
//! tables.
//!
//! ```text
//! {base:law=http://example.com/law}
//! {lang:en}Article 1{/lang}{lang:es}Artículo 1{/lang}
//! {r1} {law#r12}
//! ```
//!
//! `{rN}` takes record N from the default table, `{alias#rN}` from the
//! table declared under `alias`. `{{` is a literal `{`; `}` needs no escape.
//! Adjacent `{lang:..}` blocks form one language-dependent literal.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::align::{AlignmentGroup, Entirety, EntiretySet, ParallelTexts};
use crate::langtags::LanguageTag;
use crate::lingstore::{LinguisticTable, Record, RecordId, ValueEvent};
use crate::segcore::{Segment, SegmentKind, SegmentPath, SegmentedText, SourceFormat, Span};

/// Segment kind given to generated record text.
pub const PLACEHOLDER_KIND: SegmentKind = SegmentKind::Sentence;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TemplatePart {
    Literal(String),
    Placeholder { table: Option<String>, id: RecordId },
    PerLanguage(BTreeMap<LanguageTag, String>),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DocumentTemplate {
    pub name: String,
    /// Alias to base URI.
    pub bases: BTreeMap<String, String>,
    pub parts: Vec<TemplatePart>,
}

impl DocumentTemplate {
    pub fn placeholders(&self) -> impl Iterator<Item = (Option<&str>, RecordId)> {
        self.parts.iter().filter_map(|p| match p {
            TemplatePart::Placeholder { table, id } => Some((table.as_deref(), *id)),
            _ => None,
        })
    }
}

fn escape_literal(s: &str) -> String {
    s.replace('{', "{{")
}

/// Writes the template back in its text syntax.
impl fmt::Display for DocumentTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (alias, uri) in &self.bases {
            write!(f, "{{base:{alias}={uri}}}")?;
        }
        for part in &self.parts {
            match part {
                TemplatePart::Literal(s) => f.write_str(&escape_literal(s))?,
                TemplatePart::Placeholder { table: Some(t), id } => write!(f, "{{{t}#{id}}}")?,
                TemplatePart::Placeholder { table: None, id } => write!(f, "{{{id}}}")?,
                TemplatePart::PerLanguage(map) => {
                    for (lang, s) in map {
                        write!(f, "{{lang:{lang}}}{}{{/lang}}", escape_literal(s))?;
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenFailure {
    #[error("no record {0}")]
    UnknownRecord(RecordId),
    #[error("record {0} has no {1} segment")]
    MissingLanguage(RecordId, LanguageTag),
    #[error("no table registered for {0}")]
    UnknownTable(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("malformed template at byte {position}: {message}")]
    MalformedTemplate { position: usize, message: String },
    #[error("{0} is not a language of natural text")]
    NotStandard(LanguageTag),
    #[error("no languages requested")]
    NoLanguages,
    #[error("generation failed: {}", .0.iter().map(|f| f.to_string()).collect::<Vec<_>>().join("; "))]
    Failures(Vec<GenFailure>),
}

fn malformed(position: usize, message: impl Into<String>) -> GenError {
    GenError::MalformedTemplate { position, message: message.into() }
}

fn is_alias(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
}

fn parse_rid(s: &str) -> Option<RecordId> {
    let digits = s.strip_prefix('r')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok().filter(|n| *n > 0).map(RecordId)
}

/// Reads literal text up to the next unescaped `{`, starting at `i`.
fn read_literal(text: &str, mut i: usize, out: &mut String) -> usize {
    while i < text.len() {
        if text[i..].starts_with("{{") {
            out.push('{');
            i += 2;
        } else if text[i..].starts_with('{') {
            break;
        } else {
            let c = text[i..].chars().next().expect("in bounds");
            out.push(c);
            i += c.len_utf8();
        }
    }
    i
}

pub fn parse_template(text: &str) -> Result<DocumentTemplate, GenError> {
    let mut tmpl = DocumentTemplate::default();
    let mut i = 0;
    let mut literal = String::new();
    let flush = |literal: &mut String, parts: &mut Vec<TemplatePart>| {
        if !literal.is_empty() {
            parts.push(TemplatePart::Literal(std::mem::take(literal)));
        }
    };
    while i < text.len() {
        i = read_literal(text, i, &mut literal);
        if i >= text.len() {
            break;
        }
        let at = i;
        let close = text[i..].find('}').ok_or_else(|| malformed(at, "unterminated `{`"))?;
        let inner = &text[i + 1..i + close];
        i += close + 1;
        if let Some(decl) = inner.strip_prefix("base:") {
            let (alias, uri) = decl.split_once('=').ok_or_else(|| malformed(at, "expected `{base:alias=URI}`"))?;
            if !is_alias(alias) || uri.trim().is_empty() {
                return Err(malformed(at, format!("bad base declaration {inner:?}")));
            }
            if tmpl.bases.insert(alias.to_string(), uri.trim().trim_end_matches('/').to_string()).is_some() {
                return Err(malformed(at, format!("alias {alias:?} declared twice")));
            }
        } else if let Some(code) = inner.strip_prefix("lang:") {
            let lang = LanguageTag::parse(code).map_err(|e| malformed(at, e.to_string()))?;
            let mut body = String::new();
            i = read_literal(text, i, &mut body);
            if !text[i..].starts_with("{/lang}") {
                return Err(malformed(i, "expected `{/lang}`"));
            }
            i += "{/lang}".len();
            flush(&mut literal, &mut tmpl.parts);
            if let Some(TemplatePart::PerLanguage(map)) = tmpl.parts.last_mut() {
                if map.insert(lang, body).is_some() {
                    return Err(malformed(at, format!("{lang} given twice in one block")));
                }
            } else {
                tmpl.parts.push(TemplatePart::PerLanguage(BTreeMap::from([(lang, body)])));
            }
        } else if inner == "/lang" {
            return Err(malformed(at, "`{/lang}` without `{lang:..}`"));
        } else {
            let (table, rid) = match inner.split_once('#') {
                Some((alias, rid)) => {
                    if !tmpl.bases.contains_key(alias) {
                        return Err(malformed(at, format!("undeclared table alias {alias:?}")));
                    }
                    (Some(alias.to_string()), rid)
                }
                None => (None, inner),
            };
            let id = parse_rid(rid).ok_or_else(|| malformed(at, format!("bad placeholder {{{inner}}}")))?;
            flush(&mut literal, &mut tmpl.parts);
            tmpl.parts.push(TemplatePart::Placeholder { table, id });
        }
    }
    flush(&mut literal, &mut tmpl.parts);
    Ok(tmpl)
}

/// The tables a template can draw from: a default one plus any others,
/// keyed by base URI.
#[derive(Debug, Clone, Copy)]
pub struct Tables<'a> {
    default: &'a LinguisticTable,
    others: &'a [&'a LinguisticTable],
}

impl<'a> Tables<'a> {
    pub fn new(default: &'a LinguisticTable, others: &'a [&'a LinguisticTable]) -> Self {
        Tables { default, others }
    }

    fn by_uri(&self, uri: &str) -> Option<&'a LinguisticTable> {
        let uri = uri.trim_end_matches('/');
        std::iter::once(self.default).chain(self.others.iter().copied()).find(|t| t.base().unwrap_or(t.name()) == uri)
    }
}

struct Resolved<'a> {
    record: &'a Record,
    uri: String,
}

fn resolve<'a>(
    tmpl: &DocumentTemplate,
    tables: &Tables<'a>,
    lang: LanguageTag,
) -> (Vec<Result<Resolved<'a>, GenFailure>>, Vec<GenFailure>) {
    let mut failures = Vec::new();
    let out = tmpl
        .placeholders()
        .map(|(alias, id)| {
            let table = match alias {
                None => tables.default,
                Some(a) => {
                    let uri = &tmpl.bases[a];
                    tables.by_uri(uri).ok_or_else(|| GenFailure::UnknownTable(uri.clone()))?
                }
            };
            let record = table.get(id).ok_or(GenFailure::UnknownRecord(id))?;
            if record.segment(lang).is_none() {
                return Err(GenFailure::MissingLanguage(id, lang));
            }
            Ok(Resolved { record, uri: table.record_uri(id) })
        })
        .inspect(|r| {
            if let Err(f) = r {
                if !failures.contains(f) {
                    failures.push(f.clone());
                }
            }
        })
        .collect();
    (out, failures)
}

/// Builds one version. Unresolved placeholders produce no text; the
/// returned map gives the child index of each resolved placeholder.
fn render(
    tmpl: &DocumentTemplate,
    resolved: &[Result<Resolved<'_>, GenFailure>],
    lang: LanguageTag,
) -> (SegmentedText, BTreeMap<usize, usize>) {
    let mut text = String::new();
    let mut children = Vec::new();
    let mut placed = BTreeMap::new();
    let mut next = 0;
    for part in &tmpl.parts {
        match part {
            TemplatePart::Literal(s) => text.push_str(s),
            TemplatePart::PerLanguage(map) => text.push_str(map.get(&lang).map(String::as_str).unwrap_or("")),
            TemplatePart::Placeholder { .. } => {
                if let Ok(r) = &resolved[next] {
                    let start = text.len();
                    text.push_str(r.record.segment(lang).expect("checked in resolve"));
                    placed.insert(next, children.len());
                    children.push(Segment::new(PLACEHOLDER_KIND, Span::new(start, text.len())).with_record_uri(r.uri.clone()));
                    r.record.bump(ValueEvent::Use);
                }
                next += 1;
            }
        }
    }
    let root = Segment::new(SegmentKind::File, Span::new(0, text.len())).with_children(children);
    let st = SegmentedText::from_parts(lang, text, SourceFormat::Plain, None, root)
        .expect("placeholder spans are disjoint and in order");
    (st, placed)
}

/// One linguistic version. Every placeholder must resolve; all failures
/// are reported together and no use is counted in that case.
pub fn generate_in(tmpl: &DocumentTemplate, tables: &Tables<'_>, lang: LanguageTag) -> Result<SegmentedText, GenError> {
    if !lang.is_standard() {
        return Err(GenError::NotStandard(lang));
    }
    let (resolved, failures) = resolve(tmpl, tables, lang);
    if !failures.is_empty() {
        return Err(GenError::Failures(failures));
    }
    Ok(render(tmpl, &resolved, lang).0)
}

pub fn generate(tmpl: &DocumentTemplate, table: &LinguisticTable, lang: LanguageTag) -> Result<SegmentedText, GenError> {
    generate_in(tmpl, &Tables::new(table, &[]), lang)
}

/// Every requested version with one alignment group per placeholder.
#[derive(Debug, Clone, PartialEq)]
pub struct Generation {
    pub texts: ParallelTexts,
    /// Problems behind `partial` versions.
    pub failures: Vec<GenFailure>,
}

/// All versions at once. A version missing some segments is still
/// produced, marked `partial`; generation fails only when no version is
/// complete.
pub fn generate_all_in(
    tmpl: &DocumentTemplate,
    tables: &Tables<'_>,
    langs: &BTreeSet<LanguageTag>,
) -> Result<Generation, GenError> {
    if langs.is_empty() {
        return Err(GenError::NoLanguages);
    }
    if let Some(bad) = langs.iter().find(|l| !l.is_standard()) {
        return Err(GenError::NotStandard(*bad));
    }
    let resolved: BTreeMap<LanguageTag, _> = langs.iter().map(|l| (*l, resolve(tmpl, tables, *l))).collect();
    let mut failures: Vec<GenFailure> = Vec::new();
    for (_, fs) in resolved.values() {
        for f in fs {
            if !failures.contains(f) {
                failures.push(f.clone());
            }
        }
    }
    if resolved.values().all(|(_, fs)| !fs.is_empty()) {
        return Err(GenError::Failures(failures));
    }

    let count = tmpl.placeholders().count();
    let mut versions = BTreeMap::new();
    let mut groups: Vec<AlignmentGroup> =
        (0..count).map(|_| AlignmentGroup { kind: PLACEHOLDER_KIND, members: BTreeMap::new() }).collect();
    let mut entirety = BTreeMap::new();
    for (lang, (res, fs)) in &resolved {
        let (st, placed) = render(tmpl, res, *lang);
        for (p, child) in placed {
            groups[p].members.insert(*lang, SegmentPath(vec![child]));
        }
        versions.insert(*lang, st);
        let attr = if fs.is_empty() { Entirety::Complete } else { Entirety::Partial };
        entirety.insert(*lang, EntiretySet::single(attr));
    }
    let mut texts = ParallelTexts::from_parts(versions, groups, PLACEHOLDER_KIND)
        .expect("groups follow placeholder order and some version is complete");
    for (lang, attrs) in entirety {
        texts.set_entirety(lang, attrs);
    }
    if !tmpl.name.is_empty() {
        texts = texts.with_source(tmpl.name.clone());
    }
    Ok(Generation { texts, failures })
}

pub fn generate_all(
    tmpl: &DocumentTemplate,
    table: &LinguisticTable,
    langs: &BTreeSet<LanguageTag>,
) -> Result<Generation, GenError> {
    generate_all_in(tmpl, &Tables::new(table, &[]), langs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lingstore::{harvest, sample_table, RecordDraft};
    use proptest::prelude::*;

    fn tag(s: &str) -> LanguageTag {
        LanguageTag::parse(s).unwrap()
    }

    fn langs(ls: &[&str]) -> BTreeSet<LanguageTag> {
        ls.iter().map(|l| tag(l)).collect()
    }

    fn lit(s: &str) -> TemplatePart {
        TemplatePart::Literal(s.into())
    }

    fn ph(n: u64) -> TemplatePart {
        TemplatePart::Placeholder { table: None, id: RecordId(n) }
    }

    #[test]
    fn parses_placeholders_and_literals() {
        assert_eq!(parse_template("Greeting: {r1}.").unwrap().parts, [lit("Greeting: "), ph(1), lit(".")]);
        assert_eq!(parse_template("").unwrap(), DocumentTemplate::default());
        assert_eq!(parse_template("{{r1} }").unwrap().parts, [lit("{r1} }")]);
        let t = parse_template("{base:law=http://x.org/law/}{lang:en}Art{/lang}{lang:es}Artículo{/lang} {law#r12}").unwrap();
        assert_eq!(t.bases["law"], "http://x.org/law");
        assert_eq!(
            t.parts,
            [
                TemplatePart::PerLanguage(BTreeMap::from([(tag("en"), "Art".into()), (tag("es"), "Artículo".into())])),
                lit(" "),
                TemplatePart::Placeholder { table: Some("law".into()), id: RecordId(12) },
            ]
        );
        assert_eq!(parse_template(&t.to_string()).unwrap(), t);
    }

    #[test]
    fn malformed_templates() {
        for (bad, pos) in [("{rX}", 0), ("ab {r1", 3), ("{r0}", 0), ("{q#r1}", 0), ("x{lang:en}a", 11), ("{/lang}", 0), ("{lang:zz}a{/lang}", 0)] {
            match parse_template(bad) {
                Err(GenError::MalformedTemplate { position, .. }) => assert_eq!(position, pos, "{bad}"),
                other => panic!("{bad}: {other:?}"),
            }
        }
    }

    #[test]
    fn generates_each_language() {
        let table = sample_table();
        let t = parse_template("{r1}").unwrap();
        let es = generate(&t, &table, tag("es")).unwrap();
        assert_eq!(es.source(), "Hola mundo");
        assert_eq!(es.leaves()[0].1.record_uri.as_deref(), Some("http://example.com/r1"));
        assert_eq!(generate(&t, &table, tag("en")).unwrap().source(), "hello world");
        assert_eq!(table.get(RecordId(1)).unwrap().value().uses, 2);
    }

    #[test]
    fn failures_are_all_listed() {
        let mut table = sample_table();
        table.insert(RecordDraft::new([(tag("en"), "only english")])).unwrap();
        let t = parse_template("{r9} {r4} {r8}").unwrap();
        assert_eq!(
            generate(&t, &table, tag("fr")),
            Err(GenError::Failures(vec![
                GenFailure::UnknownRecord(RecordId(9)),
                GenFailure::MissingLanguage(RecordId(4), tag("fr")),
                GenFailure::UnknownRecord(RecordId(8)),
            ]))
        );
        assert_eq!(table.get(RecordId(4)).unwrap().value().uses, 0);
        assert_eq!(generate(&t, &table, tag("xx")), Err(GenError::NotStandard(tag("xx"))));
    }

    #[test]
    fn all_versions() {
        let table = sample_table();
        let t = parse_template("{r1}").unwrap();
        let g = generate_all(&t, &table, &langs(&["en", "es"])).unwrap();
        assert_eq!(g.texts.versions().len(), 2);
        assert_eq!(g.texts.groups().len(), 1);
        assert!(g.texts.entirety().values().all(|e| e.contains(Entirety::Complete)));

        let g = generate_all(&t, &table, &langs(&["en", "es", "fr"])).unwrap();
        assert!(g.texts.entirety()[&tag("fr")].contains(Entirety::Partial));
        assert!(g.texts.entirety()[&tag("es")].contains(Entirety::Complete));
        assert_eq!(g.texts.versions()[&tag("fr")].source(), "");
        assert_eq!(g.failures, [GenFailure::MissingLanguage(RecordId(1), tag("fr"))]);

        let g = generate_all(&DocumentTemplate::default(), &table, &langs(&["en", "es"])).unwrap();
        assert_eq!(g.texts.versions().len(), 2);
        assert!(g.texts.groups().is_empty());

        assert!(matches!(generate_all(&t, &table, &langs(&["fr"])), Err(GenError::Failures(_))));
        assert_eq!(generate_all(&t, &table, &BTreeSet::new()), Err(GenError::NoLanguages));
    }

    #[test]
    fn qualified_placeholders_use_their_table() {
        let main = sample_table();
        let mut law = LinguisticTable::new("law").with_base("http://x.org/law");
        law.insert(RecordDraft::new([(tag("en"), "Article"), (tag("es"), "Artículo")])).unwrap();
        let others = [&law];
        let tables = Tables::new(&main, &others);
        let t = parse_template("{base:law=http://x.org/law}{law#r1}: {r1}").unwrap();
        let es = generate_in(&t, &tables, tag("es")).unwrap();
        assert_eq!(es.source(), "Artículo: Hola mundo");
        assert_eq!(es.leaves()[0].1.record_uri.as_deref(), Some("http://x.org/law/r1"));
        let t = parse_template("{base:q=http://nowhere}{q#r1}").unwrap();
        assert_eq!(
            generate_in(&t, &tables, tag("es")),
            Err(GenError::Failures(vec![GenFailure::UnknownTable("http://nowhere".into())]))
        );
    }

    fn template_and_table() -> impl Strategy<Value = (DocumentTemplate, LinguisticTable)> {
        let records = proptest::collection::vec(("[a-z]{1,6}( [a-z]{1,6})?", "[a-z]{1,6}", "[a-z]{1,6}"), 1..8);
        records.prop_flat_map(|recs| {
            let n = recs.len() as u64;
            let parts = proptest::collection::vec(
                prop_oneof![
                    (1..=n).prop_map(ph),
                    "[a-z .,{}]{1,5}".prop_map(TemplatePart::Literal),
                ],
                0..20,
            );
            (Just(recs), parts)
        })
        .prop_map(|(recs, parts)| {
            let mut table = LinguisticTable::new("p");
            for (en, de, fi) in &recs {
                let id = RecordId(table.next_id());
                table
                    .insert_with_id(id, RecordDraft::new([(tag("en"), en.as_str()), (tag("de"), de.as_str()), (tag("fi"), fi.as_str())]), None, Default::default())
                    .unwrap();
            }
            // Merge adjacent literals so the template has a canonical form.
            let mut merged: Vec<TemplatePart> = Vec::new();
            for p in parts {
                match (merged.last_mut(), p) {
                    (Some(TemplatePart::Literal(a)), TemplatePart::Literal(b)) => a.push_str(&b),
                    (_, p) => merged.push(p),
                }
            }
            (DocumentTemplate { parts: merged, ..Default::default() }, table)
        })
    }

    proptest! {
        #[test]
        fn harvest_gives_back_referenced_records((tmpl, table) in template_and_table()) {
            let l = langs(&["en", "de", "fi"]);
            let g = generate_all(&tmpl, &table, &l).unwrap();
            let mut fresh = LinguisticTable::new("h");
            harvest(&g.texts, &mut fresh);
            let got: BTreeSet<_> = fresh.records().map(|r| r.segments().clone()).collect();
            let want: BTreeSet<_> = tmpl.placeholders().map(|(_, id)| table.get(id).unwrap().segments().clone()).collect();
            prop_assert_eq!(got, want);
        }

        #[test]
        fn templates_round_trip_through_text((tmpl, _t) in template_and_table()) {
            prop_assert_eq!(parse_template(&tmpl.to_string()).unwrap(), tmpl);
        }

        #[test]
        fn output_is_deterministic_and_free_of_syntax((tmpl, table) in template_and_table()) {
            let a = generate(&tmpl, &table, tag("en")).unwrap();
            let b = generate(&tmpl, &table, tag("en")).unwrap();
            prop_assert_eq!(a.source(), b.source());
            prop_assert_eq!(a.root().children.len(), tmpl.placeholders().count());
            if !a.root().children.is_empty() {
                prop_assert_eq!(a.granularity().level, PLACEHOLDER_KIND);
            }
            // Only literal text lies outside segments.
            let mut outside = String::new();
            let mut at = 0;
            for c in &a.root().children {
                outside.push_str(&a.source()[at..c.span.start]);
                at = c.span.end;
            }
            outside.push_str(&a.source()[at..]);
            let literals: String = tmpl.parts.iter().filter_map(|p| match p {
                TemplatePart::Literal(s) => Some(s.as_str()),
                _ => None,
            }).collect();
            prop_assert_eq!(outside, literals);
        }
    }
}
