//! Deterministic inputs for the throughput benchmarks.

use partext_core::align::align;
use partext_core::lingstore::{LinguisticTable, RecordDraft};
use partext_core::medbox::Dossier;
use partext_core::segcore::{segment_text, SegmentKind, SegmentationPolicy};
use partext_core::LanguageTag;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

const WORDS: &[&str] = &[
    "the", "white", "cat", "sleeps", "near", "window", "mundo", "gato", "blanco", "Привет", "日本語", "ñandú", "translation",
    "memory", "segment", "record",
];

fn tag(s: &str) -> LanguageTag {
    LanguageTag::parse(s).expect("valid tag")
}

fn sentence(rng: &mut StdRng) -> String {
    let n = rng.gen_range(3..12);
    let words: Vec<&str> = (0..n).map(|_| *WORDS.choose(rng).unwrap()).collect();
    let joined = words.join(" ");
    let mut chars = joined.chars();
    let first = chars.next().expect("at least one word");
    first.to_uppercase().chain(chars).chain(['.']).collect()
}

/// Plain text of about `bytes` bytes in paragraphs of a few sentences.
pub fn plain_text(seed: u64, bytes: usize) -> String {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut out = String::new();
    while out.len() < bytes {
        let para: Vec<String> = (0..rng.gen_range(1..6)).map(|_| sentence(&mut rng)).collect();
        out.push_str(&para.join(" "));
        out.push_str("\n\n");
    }
    out
}

/// A table of `n` en/es records, plus queries that are near copies of
/// stored segments.
pub fn fuzzy_fixture(seed: u64, n: usize, queries: usize) -> (LinguisticTable, Vec<String>) {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut table = LinguisticTable::new("bench");
    while table.len() < n {
        let (en, es) = (sentence(&mut rng), sentence(&mut rng));
        let _ = table.insert(RecordDraft::new([(tag("en"), en.as_str()), (tag("es"), es.as_str())]));
    }
    let stored: Vec<String> = table.records().filter_map(|r| r.segment(tag("en"))).map(str::to_string).collect();
    let qs = (0..queries)
        .map(|_| {
            let mut q = stored.choose(&mut rng).unwrap().clone();
            let at = q.char_indices().map(|(i, _)| i).collect::<Vec<_>>();
            q.insert(*at.choose(&mut rng).unwrap(), 'x');
            q
        })
        .collect();
    (table, qs)
}

/// A dossier with aligned en and es versions of about `bytes` each.
pub fn dossier(seed: u64, bytes: usize) -> Dossier {
    let policy = SegmentationPolicy::default();
    let en = segment_text(&plain_text(seed, bytes), tag("en"), &policy, SegmentKind::Sentence).expect("plain text");
    let es = segment_text(&plain_text(seed, bytes), tag("es"), &policy, SegmentKind::Sentence).expect("plain text");
    let pt = align([(tag("en"), en), (tag("es"), es)].into(), SegmentKind::Sentence).expect("same shape");
    Dossier::from_parallel_texts("bench", &pt).expect("two versions")
}
