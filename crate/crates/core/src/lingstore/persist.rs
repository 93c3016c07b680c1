//! Tables on disk: a directory holding `manifest.json` and CSV shards of
//! at most `SHARD_SIZE` records each. Ids, counters and provenance are
//! kept, so a load after a save gives back an equal table.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LinguisticTable, Provenance, RecordDraft, RecordId, RecordValue, StoreError};
use crate::langtags::LanguageTag;

pub const SHARD_SIZE: usize = 10_000;
const FORMAT: &str = "partext-table";
const META: [&str; 8] = ["id", "x-domain", "x-source-link", "x-reads", "x-uses", "x-override", "x-origin-table", "x-origin-id"];

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format: String,
    version: u32,
    name: String,
    base: Option<String>,
    next_id: u64,
    languages: Vec<LanguageTag>,
    shards: Vec<String>,
}

fn io(context: &str, e: impl std::fmt::Display) -> StoreError {
    StoreError::Storage(format!("{context}: {e}"))
}

fn opt(s: &Option<String>) -> &str {
    s.as_deref().unwrap_or("")
}

pub fn save_table(table: &LinguisticTable, dir: &Path) -> Result<(), StoreError> {
    fs::create_dir_all(dir).map_err(|e| io(&dir.display().to_string(), e))?;
    let languages: Vec<LanguageTag> = table.languages().into_iter().collect();
    let records: Vec<_> = table.records().collect();
    let mut shards = Vec::new();
    for (n, chunk) in records.chunks(SHARD_SIZE).enumerate() {
        let file = format!("shard-{n:05}.csv");
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        let mut header: Vec<String> = META.iter().map(|s| s.to_string()).collect();
        header.extend(languages.iter().map(|l| l.to_string()));
        w.write_record(&header).map_err(|e| io(&file, e))?;
        for rec in chunk {
            let v = rec.value();
            let mut row = vec![
                rec.id().0.to_string(),
                opt(&rec.domain).to_string(),
                opt(&rec.source_link).to_string(),
                v.reads.to_string(),
                v.uses.to_string(),
                v.manual_override.map(|o| o.to_string()).unwrap_or_default(),
                rec.provenance.as_ref().map(|p| p.table.clone()).unwrap_or_default(),
                rec.provenance.as_ref().map(|p| p.id.0.to_string()).unwrap_or_default(),
            ];
            row.extend(languages.iter().map(|l| rec.segment(*l).unwrap_or("").to_string()));
            w.write_record(&row).map_err(|e| io(&file, e))?;
        }
        let bytes = w.into_inner().map_err(|e| io(&file, e))?;
        fs::write(dir.join(&file), bytes).map_err(|e| io(&file, e))?;
        shards.push(file);
    }
    let manifest = Manifest {
        format: FORMAT.into(),
        version: 1,
        name: table.name().to_string(),
        base: table.base().map(str::to_string),
        next_id: table.next_id(),
        languages,
        shards: shards.clone(),
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| io("manifest", e))?;
    let tmp = dir.join("manifest.json.tmp");
    fs::write(&tmp, json + "\n").map_err(|e| io("manifest", e))?;
    fs::rename(&tmp, dir.join("manifest.json")).map_err(|e| io("manifest", e))?;

    // Shards left over from a larger earlier save.
    for entry in fs::read_dir(dir).map_err(|e| io("listing", e))?.flatten() {
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.starts_with("shard-") && name.ends_with(".csv") && !shards.contains(&name) {
            fs::remove_file(entry.path()).map_err(|e| io(&name, e))?;
        }
    }
    Ok(())
}

fn number(file: &str, line: u64, field: &str) -> Result<u64, StoreError> {
    field.parse().map_err(|_| StoreError::Storage(format!("{file} line {line}: {field:?} is not a number")))
}

fn non_empty(field: &str) -> Option<String> {
    (!field.is_empty()).then(|| field.to_string())
}

pub fn load_table(dir: &Path) -> Result<LinguisticTable, StoreError> {
    let raw = fs::read_to_string(dir.join("manifest.json")).map_err(|e| io("manifest", e))?;
    let manifest: Manifest = serde_json::from_str(&raw).map_err(|e| io("manifest", e))?;
    if manifest.format != FORMAT || manifest.version != 1 {
        return Err(StoreError::Storage(format!("unsupported table format {} {}", manifest.format, manifest.version)));
    }
    let mut table = LinguisticTable::new(manifest.name);
    table.set_base(manifest.base);
    let width = META.len() + manifest.languages.len();
    for file in &manifest.shards {
        if file.contains(['/', '\\']) || file.starts_with('.') {
            return Err(StoreError::Storage(format!("bad shard name {file:?}")));
        }
        let text = fs::read_to_string(dir.join(file)).map_err(|e| io(file, e))?;
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        for row in rdr.records() {
            let row = row.map_err(|e| io(file, e))?;
            let line = row.position().map(|p| p.line()).unwrap_or(0);
            if row.len() != width {
                return Err(StoreError::Storage(format!("{file} line {line}: expected {width} fields")));
            }
            let id = RecordId(number(file, line, &row[0])?);
            let segments: BTreeMap<LanguageTag, String> = manifest
                .languages
                .iter()
                .zip(row.iter().skip(META.len()))
                .filter(|(_, t)| !t.is_empty())
                .map(|(l, t)| (*l, t.to_string()))
                .collect();
            let value = RecordValue {
                reads: number(file, line, &row[3])?,
                uses: number(file, line, &row[4])?,
                manual_override: if row[5].is_empty() { None } else { Some(number(file, line, &row[5])?) },
            };
            let provenance = match (&row[6], &row[7]) {
                ("", "") => None,
                (t, i) => Some(Provenance { table: t.to_string(), id: RecordId(number(file, line, i)?) }),
            };
            let draft = RecordDraft { segments, domain: non_empty(&row[1]), source_link: non_empty(&row[2]) };
            table.insert_with_id(id, draft, provenance, value)?;
        }
    }
    table.next_id = table.next_id.max(manifest.next_id);
    Ok(table)
}
