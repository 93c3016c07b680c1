//! TMX 1.4 subset: header, body, `tu`/`tuv`/`seg` and a few `prop`s.

use std::collections::BTreeMap;

use super::{LinguisticTable, RecordDraft, StoreError};
use crate::langtags::LanguageTag;
use crate::xml::{escape, unescape, Token, Tokenizer};

/// One `tu` per record that has at least one of `langs`, one `tuv` per
/// language present. Output depends only on the table contents.
pub fn export_tmx(table: &LinguisticTable, langs: &[LanguageTag]) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str("<tmx version=\"1.4\">\n");
    out.push_str(
        "  <header creationtool=\"partext\" creationtoolversion=\"1\" segtype=\"sentence\" \
         o-tmf=\"partext\" adminlang=\"en\" srclang=\"*all*\" datatype=\"plaintext\">\n",
    );
    out.push_str(&format!("    <prop type=\"x-table\">{}</prop>\n", escape(table.name())));
    if let Some(base) = table.base() {
        out.push_str(&format!("    <prop type=\"x-base\">{}</prop>\n", escape(base)));
    }
    out.push_str("  </header>\n  <body>\n");
    for rec in table.records() {
        let variants: Vec<(&LanguageTag, &String)> =
            rec.segments().iter().filter(|(l, _)| langs.contains(l)).collect();
        if variants.is_empty() {
            continue;
        }
        out.push_str(&format!("    <tu tuid=\"{}\">\n", rec.id().0));
        if let Some(d) = &rec.domain {
            out.push_str(&format!("      <prop type=\"x-domain\">{}</prop>\n", escape(d)));
        }
        if let Some(s) = &rec.source_link {
            out.push_str(&format!("      <prop type=\"x-source-link\">{}</prop>\n", escape(s)));
        }
        for (lang, text) in variants {
            out.push_str(&format!("      <tuv xml:lang=\"{lang}\">\n        <seg>{}</seg>\n      </tuv>\n", escape(text)));
        }
        out.push_str("    </tu>\n");
    }
    out.push_str("  </body>\n</tmx>\n");
    out
}

fn malformed(position: usize, message: impl Into<String>) -> StoreError {
    StoreError::MalformedTmx { position, message: message.into() }
}

/// Region labels such as `en-GB` keep only the language part.
fn tmx_lang(raw: &str, position: usize) -> Result<LanguageTag, StoreError> {
    let primary = raw.split(['-', '_']).next().unwrap_or(raw);
    LanguageTag::parse(primary).map_err(|e| malformed(position, format!("bad language {raw:?}: {e}")))
}

#[derive(Default)]
struct Unit {
    segments: BTreeMap<LanguageTag, String>,
    domain: Option<String>,
    source_link: Option<String>,
}

/// Reads a TMX document into a fresh table; records get new ids in
/// document order. Inline markup inside `seg` (`bpt`, `ph`, `hi` and the
/// like) is rejected with the element names.
pub fn import_tmx(text: &str) -> Result<LinguisticTable, StoreError> {
    let mut table_name: Option<String> = None;
    let mut base: Option<String> = None;
    let mut units: Vec<Unit> = Vec::new();
    let mut path: Vec<&str> = Vec::new();
    let mut unit: Option<Unit> = None;
    let mut tuv_lang: Option<LanguageTag> = None;
    let mut seg_text: Option<String> = None;
    let mut prop: Option<(String, String)> = None;
    let mut inline: Vec<String> = Vec::new();
    let mut inline_at = 0;
    let mut saw_body = false;

    for token in Tokenizer::new(text) {
        let token = token.map_err(|e| malformed(e.position, e.message))?;
        match token {
            Token::Start { name, span, .. } | Token::Empty { name, span, .. } if seg_text.is_some() => {
                if inline.is_empty() {
                    inline_at = span.start;
                }
                if !inline.iter().any(|n| n == name) {
                    inline.push(name.to_string());
                }
                if !text[span].ends_with("/>") {
                    path.push(name);
                }
            }
            Token::Start { name, attrs, span } => {
                let attr = |k: &str| attrs.iter().find(|(a, _)| *a == k).map(|(_, v)| v.as_str());
                match (path.last().copied(), name) {
                    (None, "tmx") => {}
                    (None, other) => return Err(malformed(span.start, format!("root element is <{other}>, not <tmx>"))),
                    (Some("tmx"), "header") => {}
                    (Some("tmx"), "body") => saw_body = true,
                    (Some("header"), "prop") | (Some("tu"), "prop") => {
                        prop = Some((attr("type").unwrap_or_default().to_string(), String::new()));
                    }
                    (Some("body"), "tu") => unit = Some(Unit::default()),
                    (Some("tu"), "tuv") => {
                        let raw = attr("xml:lang")
                            .or_else(|| attr("lang"))
                            .ok_or_else(|| malformed(span.start, "tuv without a language"))?;
                        tuv_lang = Some(tmx_lang(raw, span.start)?);
                    }
                    (Some("tuv"), "seg") => seg_text = Some(String::new()),
                    _ => {}
                }
                path.push(name);
            }
            Token::Empty { name, span, .. } => {
                if path.is_empty() {
                    return Err(malformed(span.start, format!("root element is <{name}/>, not <tmx>")));
                }
            }
            Token::Text { raw, span } => {
                let decoded = unescape(raw).map_err(|e| malformed(span.start + e.position, e.message))?;
                if let Some(s) = seg_text.as_mut() {
                    s.push_str(&decoded);
                } else if let Some((_, v)) = prop.as_mut() {
                    v.push_str(&decoded);
                }
            }
            Token::CData { text: t, .. } => {
                if let Some(s) = seg_text.as_mut() {
                    s.push_str(t);
                } else if let Some((_, v)) = prop.as_mut() {
                    v.push_str(t);
                }
            }
            Token::End { name, span } => {
                path.pop();
                if seg_text.is_some() && name != "seg" {
                    continue;
                }
                match name {
                    "seg" => {
                        let s = seg_text.take().unwrap_or_default();
                        if !inline.is_empty() {
                            return Err(StoreError::UnsupportedTmxMarkup {
                                position: inline_at,
                                elements: std::mem::take(&mut inline),
                            });
                        }
                        let (Some(u), Some(lang)) = (unit.as_mut(), tuv_lang) else {
                            return Err(malformed(span.start, "seg outside a tuv"));
                        };
                        if !s.trim().is_empty() {
                            u.segments.insert(lang, s);
                        }
                    }
                    "tuv" => tuv_lang = None,
                    "prop" => {
                        if let Some((kind, value)) = prop.take() {
                            match (kind.as_str(), unit.as_mut()) {
                                ("x-domain", Some(u)) => u.domain = Some(value),
                                ("x-source-link", Some(u)) => u.source_link = Some(value),
                                ("x-table", None) => table_name = Some(value),
                                ("x-base", None) => base = Some(value),
                                _ => {}
                            }
                        }
                    }
                    "tu" => {
                        if let Some(u) = unit.take() {
                            units.push(u);
                        }
                    }
                    _ => {}
                }
            }
            Token::Misc => {}
        }
    }
    if !saw_body {
        return Err(malformed(text.len(), "no <body> element"));
    }
    let mut table = LinguisticTable::new(table_name.unwrap_or_else(|| "tmx".into()));
    table.set_base(base);
    for u in units.into_iter().filter(|u| !u.segments.is_empty()) {
        table.insert(RecordDraft { segments: u.segments, domain: u.domain, source_link: u.source_link })?;
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lingstore::{sample_table, RecordId};
    use proptest::prelude::*;

    fn tag(s: &str) -> LanguageTag {
        LanguageTag::parse(s).unwrap()
    }

    #[test]
    fn sample_table_exports_three_units() {
        let t = sample_table();
        let doc = export_tmx(&t, &[tag("en"), tag("es")]);
        assert_eq!(doc.matches("<tu ").count(), 3);
        assert!(doc.contains("<tuv xml:lang=\"es\">\n        <seg>gata blanca</seg>"));
        let back = import_tmx(&doc).unwrap();
        assert!(back.same_content(&t));
        assert_eq!(back.name(), "example");
        assert_eq!(back.base(), Some("http://example.com"));
    }

    #[test]
    fn language_subset_and_metadata() {
        let mut t = LinguisticTable::new("t");
        let mut d = RecordDraft::new([(tag("en"), "a <b> & \"c\"\r\n"), (tag("fr"), "x")]);
        d.domain = Some("law".into());
        d.source_link = Some("file:///a.txt#g1".into());
        t.insert(d).unwrap();
        t.insert(RecordDraft::new([(tag("fr"), "only french")])).unwrap();
        let doc = export_tmx(&t, &[tag("en")]);
        assert_eq!(doc.matches("<tu ").count(), 1);
        let back = import_tmx(&doc).unwrap();
        let r = back.get(RecordId(1)).unwrap();
        assert_eq!(r.segment(tag("en")), Some("a <b> & \"c\"\r\n"));
        assert_eq!(r.segment(tag("fr")), None);
        assert_eq!(r.domain.as_deref(), Some("law"));
        assert_eq!(r.source_link.as_deref(), Some("file:///a.txt#g1"));
    }

    #[test]
    fn truncated_document_is_malformed() {
        let doc = export_tmx(&sample_table(), &[tag("en"), tag("es")]);
        let cut = &doc[..doc.len() / 2];
        assert!(matches!(import_tmx(cut), Err(StoreError::MalformedTmx { .. })));
        assert!(matches!(import_tmx("<html/>"), Err(StoreError::MalformedTmx { position: 0, .. })));
        assert!(matches!(import_tmx("<tmx version=\"1.4\"><header/></tmx>"), Err(StoreError::MalformedTmx { .. })));
    }

    #[test]
    fn inline_markup_is_listed() {
        let doc = r#"<tmx version="1.4"><header/><body><tu><tuv xml:lang="en"><seg>a <bpt i="1">&lt;b&gt;</bpt>b<ept i="1">&lt;/b&gt;</ept> <ph/></seg></tuv></tu></body></tmx>"#;
        match import_tmx(doc) {
            Err(StoreError::UnsupportedTmxMarkup { elements, .. }) => assert_eq!(elements, ["bpt", "ept", "ph"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn foreign_tmx_is_read() {
        let doc = r#"<?xml version="1.0"?>
<!DOCTYPE tmx SYSTEM "tmx14.dtd">
<tmx version="1.4"><header srclang="en-US"/><body>
<tu tuid="77"><tuv lang="EN-US"><seg>Hello</seg></tuv><tuv xml:lang="de-DE"><seg><![CDATA[Hallo & tschüss]]></seg></tuv></tu>
</body></tmx>"#;
        let t = import_tmx(doc).unwrap();
        let r = t.get(RecordId(1)).unwrap();
        assert_eq!(r.segment(tag("de")), Some("Hallo & tschüss"));
        assert_eq!(r.segment(tag("en")), Some("Hello"));
    }

    proptest! {
        #[test]
        fn round_trip(rows in proptest::collection::vec(("\\PC{1,20}", "[^\u{0}-\u{8}\u{b}\u{c}\u{e}-\u{1f}]{1,20}"), 1..20)) {
            let mut t = LinguisticTable::new("p");
            for (a, b) in &rows {
                let _ = t.insert(RecordDraft::new([(tag("en"), a.as_str()), (tag("ja"), b.as_str())]));
            }
            let back = import_tmx(&export_tmx(&t, &[tag("en"), tag("ja")])).unwrap();
            prop_assert_eq!(back.len(), t.len());
            for (x, y) in t.records().zip(back.records()) {
                prop_assert_eq!(x.segments(), y.segments());
            }
        }
    }
}
