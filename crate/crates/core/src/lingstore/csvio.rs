//! Comma-separated tables: `id,<lang>,<lang>...`, one record per row.
//! An empty field means the record has no segment in that language.

use std::collections::BTreeMap;

use super::{LinguisticTable, RecordDraft, StoreError};
use crate::langtags::LanguageTag;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CsvHeader {
    /// The first row names the columns.
    Present,
    /// No header row; columns after `id` are these languages.
    Given(Vec<LanguageTag>),
}

pub fn export_csv(table: &LinguisticTable, langs: &[LanguageTag]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    let mut header = vec!["id".to_string()];
    header.extend(langs.iter().map(|l| l.to_string()));
    w.write_record(&header).expect("writing to a Vec cannot fail");
    for rec in table.records() {
        if !langs.iter().any(|l| rec.segment(*l).is_some()) {
            continue;
        }
        let mut row = vec![rec.id().0.to_string()];
        row.extend(langs.iter().map(|l| rec.segment(*l).unwrap_or("").to_string()));
        w.write_record(&row).expect("writing to a Vec cannot fail");
    }
    String::from_utf8(w.into_inner().expect("flush to a Vec cannot fail")).expect("input was UTF-8")
}

fn malformed(line: u64, message: impl Into<String>) -> StoreError {
    StoreError::MalformedCsv { line, message: message.into() }
}

pub fn import_csv(text: &str, header: CsvHeader) -> Result<LinguisticTable, StoreError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(false).from_reader(text.as_bytes());
    let mut rows = rdr.records();
    let langs = match header {
        CsvHeader::Given(langs) => langs,
        CsvHeader::Present => {
            let head = match rows.next() {
                Some(r) => r.map_err(|e| malformed(1, e.to_string()))?,
                None => return Err(malformed(1, "missing header row")),
            };
            if head.get(0) != Some("id") {
                return Err(malformed(1, "first column must be `id`"));
            }
            head.iter()
                .skip(1)
                .map(|c| LanguageTag::parse(c.trim()).map_err(|e| malformed(1, format!("column {c:?}: {e}"))))
                .collect::<Result<Vec<_>, _>>()?
        }
    };
    let mut table = LinguisticTable::new("csv");
    for row in rows {
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            malformed(line, e.to_string())
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() != langs.len() + 1 {
            return Err(malformed(line, format!("expected {} fields, found {}", langs.len() + 1, row.len())));
        }
        let id = &row[0];
        if id.is_empty() || !id.bytes().all(|b| b.is_ascii_digit()) {
            return Err(malformed(line, format!("id {id:?} is not a number")));
        }
        let segments: BTreeMap<LanguageTag, String> = langs
            .iter()
            .zip(row.iter().skip(1))
            .filter(|(_, t)| !t.is_empty())
            .map(|(l, t)| (*l, t.to_string()))
            .collect();
        if segments.is_empty() {
            continue;
        }
        table.insert(RecordDraft { segments, ..Default::default() }).map_err(|e| malformed(line, e.to_string()))?;
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
    fn sample_table_has_four_lines() {
        let out = export_csv(&sample_table(), &[tag("en"), tag("es")]);
        assert_eq!(out, "id,en,es\r\n1,hello world,Hola mundo\r\n2,white cat,gato blanco\r\n3,white cat,gata blanca\r\n");
        assert_eq!(out.lines().count(), 4);
    }

    #[test]
    fn quoting_survives() {
        let mut t = LinguisticTable::new("t");
        t.insert(RecordDraft::new([(tag("en"), "one, two \"three\"\nfour")])).unwrap();
        let out = export_csv(&t, &[tag("en"), tag("fr")]);
        assert!(out.contains("\"one, two \"\"three\"\"\nfour\""));
        let back = import_csv(&out, CsvHeader::Present).unwrap();
        assert_eq!(back.get(RecordId(1)).unwrap().segment(tag("en")), Some("one, two \"three\"\nfour"));
        assert_eq!(back.get(RecordId(1)).unwrap().segment(tag("fr")), None);
    }

    #[test]
    fn malformed_rows() {
        assert!(matches!(import_csv("id,en,es\n1,a\n", CsvHeader::Present), Err(StoreError::MalformedCsv { line: 2, .. })));
        assert!(matches!(import_csv("key,en\n1,a\n", CsvHeader::Present), Err(StoreError::MalformedCsv { line: 1, .. })));
        assert!(matches!(import_csv("id,english\n", CsvHeader::Present), Err(StoreError::MalformedCsv { .. })));
        assert!(matches!(import_csv("x,a\n", CsvHeader::Given(vec![tag("en")])), Err(StoreError::MalformedCsv { .. })));
        assert!(matches!(import_csv("", CsvHeader::Present), Err(StoreError::MalformedCsv { .. })));
    }

    #[test]
    fn headerless_import() {
        let t = import_csv("7,hello,hola\n", CsvHeader::Given(vec![tag("en"), tag("es")])).unwrap();
        assert_eq!(t.get(RecordId(1)).unwrap().segment(tag("es")), Some("hola"));
    }

    proptest! {
        #[test]
        fn round_trip(rows in proptest::collection::vec(("\\PC{0,15}", "\\PC{0,15}"), 0..20)) {
            let mut t = LinguisticTable::new("csv");
            for (a, b) in &rows {
                let segs: Vec<(LanguageTag, &str)> = [(tag("en"), a.as_str()), (tag("zh"), b.as_str())]
                    .into_iter().filter(|(_, s)| !s.trim().is_empty()).collect();
                let _ = t.insert(RecordDraft::new(segs));
            }
            let back = import_csv(&export_csv(&t, &[tag("en"), tag("zh")]), CsvHeader::Present).unwrap();
            prop_assert!(back.same_content(&t));
        }
    }
}
