//! Seeded-defect fixtures for the checker: a clean dossier and copies of it
//! with one defect injected each.

use super::{Artefact, ArtefactRole, Content, Defect, Dossier, ALIGNMENT_PATH, INDEX_PATH, LINKS_PATH, META_PATH};
use crate::align::{align, Entirety, EntiretySet};
use crate::langtags::LanguageTag;
use crate::lingstore::{export_tmx, sample_table};
use crate::segcore::{segment_text, SegmentKind, SegmentationPolicy};
use crate::zipper::write_zip;

pub struct SeededDefect {
    pub name: &'static str,
    pub defect: Defect,
    pub bytes: Vec<u8>,
}

fn tag(s: &str) -> LanguageTag {
    LanguageTag::parse(s).expect("valid fixture label")
}

/// English and Spanish versions aligned by sentence, a TMX artefact and an
/// external background document.
pub fn clean_dossier() -> Dossier {
    let seg = |l: &str, t: &str| {
        segment_text(t, tag(l), &SegmentationPolicy::default(), SegmentKind::Sentence).expect("fixture text segments")
    };
    let versions = [(tag("en"), seg("en", "Hello world. White cat.")), (tag("es"), seg("es", "Hola mundo. Gato blanco."))];
    let pt = align(versions.into_iter().collect(), SegmentKind::Sentence).expect("fixture aligns");
    let mut med = Dossier::from_parallel_texts("fixture-1", &pt).expect("fixture dossier");
    med.set_header("title", "Fixture dossier").expect("free key");
    med.set_entirety(tag("en"), EntiretySet::single(Entirety::Complete));
    med.set_entirety(tag("es"), EntiretySet::single(Entirety::Complete));
    let tmx = export_tmx(&sample_table(), &[tag("en"), tag("es")]);
    med.add_artefact(Artefact { role: ArtefactRole::TranslationMemory, name: "tm.tmx".into(), content: Content::Embedded(tmx.into_bytes()) })
        .expect("fresh name");
    med.add_artefact(Artefact {
        role: ArtefactRole::BackgroundDocument,
        name: "study.pdf".into(),
        content: Content::External("https://example.org/study.pdf".into()),
    })
    .expect("fresh name");
    med
}

type Members = Vec<(String, Vec<u8>)>;
type Seed = (&'static str, Defect, Box<dyn Fn(&mut Members)>);

fn edit(members: &mut Members, path: &str, f: impl FnOnce(String) -> String) {
    let m = members.iter_mut().find(|m| m.0 == path).expect("fixture member exists");
    m.1 = f(String::from_utf8(m.1.clone()).expect("fixture text")).into_bytes();
}

fn remove(members: &mut Members, path: &str) {
    members.retain(|m| m.0 != path);
}

fn add(members: &mut Members, path: &str, text: &str) {
    members.push((path.to_string(), text.as_bytes().to_vec()));
}

pub fn seeded_defects() -> Vec<SeededDefect> {
    let base = clean_dossier().to_members();
    let mut out = vec![SeededDefect { name: "not a zip", defect: Defect::NotAZip, bytes: b"PK\x03\x04 this is not a zip".to_vec() }];
    let cases: Vec<Seed> = vec![
        ("no header", Defect::MissingHeader, Box::new(|m| remove(m, META_PATH))),
        ("header line without colon", Defect::HeaderSyntax, Box::new(|m| edit(m, META_PATH, |t| t + "just some words\n"))),
        ("repeated key", Defect::DuplicateHeaderKey, Box::new(|m| edit(m, META_PATH, |t| t + "title: Again\n"))),
        ("no id", Defect::MissingId, Box::new(|m| edit(m, META_PATH, |t| t.replace("id: fixture-1\n", "")))),
        ("no language list", Defect::MissingLanguages, Box::new(|m| edit(m, META_PATH, |t| t.replace("languages: en,es\n", "")))),
        ("m1 label", Defect::BadLanguageTag, Box::new(|m| edit(m, META_PATH, |t| t.replace("languages: en,es", "languages: en,es,m1")))),
        (
            "ml on multilingual content",
            Defect::MalayalamMisuse,
            Box::new(|m| {
                edit(m, META_PATH, |t| t.replace("languages: en,es", "languages: en,es,ml"));
                add(m, "parallel/ml/mixed.html", "<text><p xml:lang=\"en\">Hello.</p><p xml:lang=\"fr\">Bonjour.</p></text>");
            }),
        ),
        ("declared but absent", Defect::MissingVersion, Box::new(|m| edit(m, META_PATH, |t| t.replace("languages: en,es", "languages: en,es,fr")))),
        ("undeclared version", Defect::UndeclaredVersion, Box::new(|m| add(m, "parallel/de/text.txt", "Hallo Welt."))),
        ("unknown entirety", Defect::BadEntirety, Box::new(|m| edit(m, META_PATH, |t| t.replace("entirety.es: complete", "entirety.es: finished")))),
        ("no index", Defect::MissingIndex, Box::new(|m| remove(m, INDEX_PATH))),
        (
            "index link to nothing",
            Defect::BrokenIndexLink,
            Box::new(|m| edit(m, INDEX_PATH, |t| t.replace("</body>", "<a href=\"parallel/en/gone.txt\">gone</a>\n</body>"))),
        ),
        ("malformed external URI", Defect::BadExternalUri, Box::new(|m| edit(m, LINKS_PATH, |_| "not a uri at all\n".into()))),
        ("unnamed external line", Defect::DanglingLink, Box::new(|m| edit(m, LINKS_PATH, |t| t + "https://example.org/extra\n"))),
        ("truncated TMX", Defect::InvalidTmx, Box::new(|m| edit(m, "artefacts/translation-memory/tm.tmx", |t| t[..t.len() / 2].to_string()))),
        (
            "TMX inline markup",
            Defect::UnsupportedTmx,
            Box::new(|m| {
                add(
                    m,
                    "artefacts/translation-memory/inline.tmx",
                    "<tmx version=\"1.4\"><header/><body><tu><tuv xml:lang=\"en\"><seg>a<ph/></seg></tuv></tu></body></tmx>",
                )
            }),
        ),
        ("segmentation out of range", Defect::BadSegmentation, Box::new(|m| edit(m, "parallel/es/text.txt.seg", |t| t.replace("\t0\t24\t", "\t0\t99\t")))),
        ("alignment past the text", Defect::BadAlignment, Box::new(|m| edit(m, ALIGNMENT_PATH, |t| t + "en=0.7\tes=0.7\n"))),
        ("wrong form", Defect::FormMismatch, Box::new(|m| edit(m, META_PATH, |t| t.replace("form: mix", "form: self-contained")))),
        ("stray file", Defect::UnknownMember, Box::new(|m| add(m, "notes.txt", "remember the milk"))),
        ("escaping path", Defect::UnsafePath, Box::new(|m| add(m, "artefacts/other/../../evil.txt", "x"))),
    ];
    for (name, defect, mutate) in cases {
        let mut members = base.clone();
        mutate(&mut members);
        members.sort_by(|a, b| a.0.cmp(&b.0));
        out.push(SeededDefect { name, defect, bytes: write_zip(&members) });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medbox::validate;
    use std::collections::BTreeSet;

    #[test]
    fn clean_fixture_is_clean() {
        assert_eq!(validate(&clean_dossier().pack()), []);
    }

    #[test]
    fn every_seeded_defect_is_found_alone() {
        let corpus = seeded_defects();
        let classes: BTreeSet<Defect> = corpus.iter().map(|c| c.defect).collect();
        assert!(classes.len() >= 20);
        for case in corpus {
            let found: BTreeSet<(Defect, _)> = validate(&case.bytes).into_iter().map(|d| (d.defect, d.severity)).collect();
            let mut expected = BTreeSet::from([(case.defect, case.defect.severity())]);
            // without a language list every version is undeclared
            if case.defect == Defect::MissingLanguages {
                expected.insert((Defect::UndeclaredVersion, Defect::UndeclaredVersion.severity()));
            }
            assert_eq!(found, expected, "{}", case.name);
        }
    }
}
