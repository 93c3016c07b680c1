//! Acceptance run: one PASS/FAIL line per criterion, with its time limit.
//! Exits non-zero when any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use partext_core::align::{align, parallel_granularity, Entirety, EntiretySet};
use partext_core::gentext::{generate, generate_all, parse_template};
use partext_core::lingstore::{
    emit_marked_text, export_csv, export_tmx, extract_tm, harvest, import_csv, import_tmx, parse_marked_text,
    sample_table, CsvHeader, LinguisticTable, RecordDraft, RecordId,
};
use partext_core::medbox::{seeded_defects, validate, Artefact, ArtefactRole, Content, Defect, Dossier, ParallelFile, Severity};
use partext_core::segcore::{
    segment_marked, segment_text, Coverage, Segment, SegmentKind, SegmentationPolicy, SegmentedText, SourceFormat,
    Span, TextGranularity,
};
use partext_core::LanguageTag;
use partext_server::{serve_on, AppState, ServerConfig};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use serde_json::{json, Value};

type Check = Result<String, String>;

fn tag(s: &str) -> LanguageTag {
    LanguageTag::parse(s).unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn run(name: &str, limit: Duration, f: impl FnOnce() -> Check) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
        Err(format!("panicked: {}", msg.unwrap_or_default()))
    });
    let took = start.elapsed();
    let timing = format!("{:.2}s, limit {}s", took.as_secs_f64(), limit.as_secs());
    let (ok, detail) = match outcome {
        Ok(_) if took > limit => (false, "too slow".to_string()),
        Ok(detail) => (true, detail),
        Err(detail) => (false, detail),
    };
    println!("{} {name} ({timing}): {detail}", if ok { "PASS" } else { "FAIL" });
    ok
}

const WORDS: &[&str] = &[
    "Hello", "world", "white", "cat", "Привет", "мир", "Γειά", "σου", "日本語", "文章", "مرحبا", "بالعالم", "नमस्ते",
    "दुनिया", "שלום", "ñandú", "façade", "😀", "x\u{303}", "42", "3.14", "e.g.", "Mr.", "ümlaut", "ქართული",
];

fn word(rng: &mut StdRng) -> &'static str {
    WORDS.choose(rng).unwrap()
}

fn phrase(rng: &mut StdRng, max_words: usize) -> String {
    let n = rng.gen_range(1..=max_words);
    (0..n).map(|_| word(rng)).collect::<Vec<_>>().join(" ")
}

fn sample_table_fidelity() -> Check {
    let table = sample_table();
    let ids: Vec<u64> = table.lookup_exact(tag("en"), "white cat").iter().map(|r| r.id().0).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    ensure(sorted == [2, 3], || format!("lookup_exact gave {ids:?}"))?;
    let out = generate(&parse_template("{r1}").unwrap(), &table, tag("es")).map_err(|e| e.to_string())?;
    ensure(out.source() == "Hola mundo", || format!("generate gave {:?}", out.source()))?;
    Ok("white cat -> r2, r3; {r1} in es -> \"Hola mundo\"".into())
}

fn level_rank(k: SegmentKind) -> u8 {
    match k {
        SegmentKind::File => 0,
        SegmentKind::Paragraph => 1,
        SegmentKind::Sentence => 2,
        SegmentKind::SubSentence => 3,
    }
}

fn below(a: TextGranularity, b: TextGranularity) -> bool {
    let cov = |c: Coverage| u8::from(c == Coverage::Full);
    level_rank(a.level) <= level_rank(b.level) && cov(a.coverage) <= cov(b.coverage)
}

// Greatest lower bound by enumeration over the whole lattice.
fn brute_meet(all: &[TextGranularity], a: TextGranularity, b: TextGranularity) -> Option<TextGranularity> {
    let lower: Vec<TextGranularity> = all.iter().copied().filter(|g| below(*g, a) && below(*g, b)).collect();
    lower.iter().copied().find(|g| lower.iter().all(|h| below(*h, *g)))
}

// "One. Two.\n\nThree." segmented down to `level`; partial texts leave the
// second paragraph one level coarser.
fn text_at(g: TextGranularity) -> Option<SegmentedText> {
    let src = "One. Two.\n\nThree.".to_string();
    let sentences = [vec![(0, 4), (5, 9)], vec![(11, 17)]];
    let paragraphs = [(0, 9), (11, 17)];
    let full = g.coverage == Coverage::Full;
    let build = |kind: SegmentKind, (s, e): (usize, usize), children: Vec<Segment>| {
        Segment::new(kind, Span::new(s, e)).with_children(children)
    };
    let mut paras = Vec::new();
    for (i, p) in paragraphs.iter().enumerate() {
        let depth = level_rank(g.level).saturating_sub(u8::from(i == 1 && !full));
        if depth == 0 {
            continue;
        }
        let sents: Vec<Segment> = if depth >= 2 {
            sentences[i]
                .iter()
                .map(|s| {
                    let subs = if depth >= 3 { vec![build(SegmentKind::SubSentence, *s, vec![])] } else { vec![] };
                    build(SegmentKind::Sentence, *s, subs)
                })
                .collect()
        } else {
            vec![]
        };
        paras.push(build(SegmentKind::Paragraph, *p, sents));
    }
    let root = build(SegmentKind::File, (0, src.len()), paras);
    let st = SegmentedText::from_parts(tag("en"), src, SourceFormat::Plain, None, root).ok()?;
    (st.granularity() == g).then_some(st)
}

fn lattice() -> Check {
    let all = TextGranularity::lattice();
    ensure(all.len() == 8, || format!("lattice has {} elements", all.len()))?;
    let texts: BTreeMap<usize, SegmentedText> = all.iter().enumerate().filter_map(|(i, g)| Some((i, text_at(*g)?))).collect();
    let (mut pairs, mut via_texts) = (0, 0);
    for (i, a) in all.iter().enumerate() {
        for (j, b) in all.iter().enumerate() {
            let want = brute_meet(&all, *a, *b).ok_or_else(|| format!("no meet for {a} and {b}"))?;
            ensure(a.meet(*b) == want, || format!("{a} meet {b} = {}, expected {want}", a.meet(*b)))?;
            if let (Some(x), Some(y)) = (texts.get(&i), texts.get(&j)) {
                let versions = BTreeMap::from([(tag("en"), x.clone()), (tag("es"), y.clone().with_language(tag("es")))]);
                let got = parallel_granularity(&versions);
                ensure(got == Some(want), || format!("parallel_granularity({a}, {b}) = {got:?}, expected {want}"))?;
                via_texts += 1;
            }
            pairs += 1;
        }
    }
    Ok(format!("{pairs} pairs agree; {via_texts} checked through segmented texts (file level is always full)"))
}

const BREAKS: &[&str] = &[" ", " ", " ", ". ", "! ", "? ", "; ", ", ", "\n", "\n\n", "\r\n", "\t", "。", "... ", "  ", "\u{1E}"];

fn random_plain(rng: &mut StdRng, max_len: usize) -> String {
    let target = rng.gen_range(0..=max_len);
    let mut s = String::new();
    loop {
        let piece = if rng.gen_bool(0.6) { word(rng) } else { BREAKS.choose(rng).unwrap() };
        if s.len() + piece.len() > target {
            return s;
        }
        s.push_str(piece);
    }
}

fn random_markup(rng: &mut StdRng, max_len: usize) -> String {
    let mut doc = String::from("<text xml:lang=\"en\">");
    let budget = max_len - 40;
    while doc.len() < budget {
        let body = random_plain(rng, 300.min(budget - doc.len().min(budget)));
        let lang = ["", " xml:lang=\"fr\"", " xml:lang=\"ru\""].choose(rng).unwrap();
        doc.push_str(&format!("<p{lang}>{body}</p>\n"));
        if rng.gen_bool(0.1) {
            break;
        }
    }
    doc.push_str("</text>");
    doc
}

fn losslessness() -> Check {
    let mut rng = StdRng::seed_from_u64(1);
    let (mut bytes, mut markup) = (0, 0);
    for i in 0..1000 {
        let max = if i % 10 == 0 { 10_000 } else { 2_000 };
        if i % 4 == 3 {
            let doc = random_markup(&mut rng, max);
            let st = segment_marked(&doc).map_err(|e| format!("case {i}: {e}"))?;
            ensure(st.reconstruct() == doc, || format!("case {i}: markup not reconstructed"))?;
            bytes += doc.len();
            markup += 1;
        } else {
            let text = random_plain(&mut rng, max);
            let kind = *SegmentKind::ALL.choose(&mut rng).unwrap();
            let st = segment_text(&text, tag("en"), &SegmentationPolicy::default(), kind).map_err(|e| format!("case {i}: {e}"))?;
            ensure(st.reconstruct() == text, || format!("case {i}: {text:?} not reconstructed"))?;
            bytes += text.len();
        }
    }
    Ok(format!("1000 texts ({markup} markup), {bytes} bytes, all byte-identical"))
}

const SPECIAL: &[&str] = &["&", "<", ">", "\"", "'", "<<", ">>", "|", "||", ",", "\n", "]]>", "&amp;"];

fn messy(rng: &mut StdRng) -> String {
    let n = rng.gen_range(1..6);
    let mut s = String::new();
    for k in 0..n {
        if k > 0 {
            s.push(' ');
        }
        s.push_str(if rng.gen_bool(0.3) { SPECIAL.choose(rng).unwrap() } else { word(rng) });
    }
    if s.trim().is_empty() {
        s.push('x');
    }
    s
}

fn random_table(rng: &mut StdRng, langs: &[LanguageTag], rows: usize) -> LinguisticTable {
    let mut t = LinguisticTable::new(format!("t{}", rng.gen_range(0..1000)));
    if rng.gen_bool(0.5) {
        t.set_base(Some("http://example.org/tables/t".into()));
    }
    for _ in 0..rows {
        let mut draft = RecordDraft::default();
        for l in langs {
            if rng.gen_bool(0.8) {
                draft.segments.insert(*l, messy(rng));
            }
        }
        if draft.segments.is_empty() {
            draft.segments.insert(langs[0], messy(rng));
        }
        if rng.gen_bool(0.2) {
            draft.domain = Some("law".into());
        }
        if rng.gen_bool(0.2) {
            draft.source_link = Some(format!("med:d{}#g{}", rng.gen_range(0..9), rng.gen_range(0..9)));
        }
        let _ = t.insert(draft);
    }
    t
}

fn random_marked(rng: &mut StdRng) -> SegmentedText {
    let mut source = String::new();
    let mut children = Vec::new();
    for _ in 0..rng.gen_range(0..10) {
        let start = source.len();
        source.push_str(&messy(rng));
        if rng.gen_bool(0.6) {
            let mut seg = Segment::new(SegmentKind::Sentence, Span::new(start, source.len()));
            if rng.gen_bool(0.7) {
                seg.record_uri = Some(format!("http://example.com/r{}", rng.gen_range(1..500)));
            }
            children.push(seg);
        }
    }
    let lang = ["en", "ar", "ja", "ru"].choose(rng).unwrap();
    let root = Segment::new(SegmentKind::File, Span::new(0, source.len())).with_children(children);
    SegmentedText::from_parts(tag(lang), source, SourceFormat::Plain, None, root).unwrap()
}

fn random_dossier(rng: &mut StdRng, n: usize) -> Dossier {
    let all = [tag("en"), tag("es"), tag("fr"), tag("de")];
    let k = rng.gen_range(1..=all.len());
    let langs: Vec<LanguageTag> = all[..k].to_vec();
    let sentences = rng.gen_range(1..6);
    let versions: BTreeMap<LanguageTag, SegmentedText> = langs
        .iter()
        .map(|l| {
            let text: Vec<String> = (0..sentences).map(|_| format!("{}.", phrase(rng, 5))).collect();
            let st = segment_text(&text.join(" "), *l, &SegmentationPolicy::default(), SegmentKind::Sentence).unwrap();
            (*l, st)
        })
        .collect();
    let mut med = if langs.len() > 1 && rng.gen_bool(0.7) {
        let pt = align(versions, SegmentKind::Sentence).unwrap();
        Dossier::from_parallel_texts(format!("d{n}"), &pt).unwrap()
    } else {
        let mut med = Dossier::new(format!("d{n}"), langs.clone()).unwrap();
        for (l, st) in versions {
            let content = Content::Embedded(st.source().as_bytes().to_vec());
            let segmentation = rng.gen_bool(0.5).then_some(st);
            med.add_parallel(ParallelFile { lang: l, name: "text.txt".into(), content, segmentation }).unwrap();
        }
        med
    };
    for _ in 0..rng.gen_range(0..4) {
        let key = ["title", "source", "author", "note", "x-kind"].choose(rng).unwrap();
        let _ = med.set_header(key, messy(rng));
    }
    for a in 0..rng.gen_range(0..4) {
        let role = *ArtefactRole::ALL.choose(rng).unwrap();
        let name = format!("a{a}.{}", ["bin", "txt", "pdf"].choose(rng).unwrap());
        let content = if rng.gen_bool(0.3) {
            Content::External(format!("https://example.org/{name}"))
        } else {
            Content::Embedded((0..rng.gen_range(0..64)).map(|_| rng.gen()).collect())
        };
        let _ = med.add_artefact(Artefact { role, name, content });
    }
    med
}

fn round_trips() -> Check {
    let mut rng = StdRng::seed_from_u64(2);
    let langs = [tag("en"), tag("es"), tag("ja")];
    for i in 0..200 {
        let rows = rng.gen_range(1..30);
        let t = random_table(&mut rng, &langs, rows);
        let back = import_tmx(&export_tmx(&t, &langs)).map_err(|e| format!("tmx {i}: {e}"))?;
        ensure(back == t, || format!("tmx {i}: table changed"))?;
    }
    for i in 0..200 {
        let rows = rng.gen_range(0..30);
        let t = random_table(&mut rng, &langs, rows);
        let back = import_csv(&export_csv(&t, &langs), CsvHeader::Present).map_err(|e| format!("csv {i}: {e}"))?;
        ensure(back.same_content(&t), || format!("csv {i}: records changed"))?;
        ensure(back.ids().eq(t.ids()), || format!("csv {i}: ids changed"))?;
    }
    for i in 0..200 {
        let d = random_marked(&mut rng);
        let text = emit_marked_text(&d, "http://example.com").map_err(|e| format!("marked {i}: {e}"))?;
        let back = parse_marked_text(&text).map_err(|e| format!("marked {i}: {e}"))?;
        ensure(back == d, || format!("marked {i}: {text:?} changed"))?;
    }
    for i in 0..200 {
        let med = random_dossier(&mut rng, i);
        let bytes = med.pack();
        let back = Dossier::unpack(&bytes).map_err(|e| format!("med {i}: {e}"))?;
        ensure(back == med, || format!("med {i}: dossier changed"))?;
        ensure(back.pack() == bytes, || format!("med {i}: repacked bytes differ"))?;
    }
    Ok("200 each of TMX, CSV, marked text and MED preserved".into())
}

fn oracle_distance(a: &[char], b: &[char]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let cost = usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = (d[i - 1][j] + 1).min(d[i][j - 1] + 1).min(d[i - 1][j - 1] + cost);
        }
    }
    d[a.len()][b.len()]
}

fn oracle_score(q: &str, s: &str) -> f64 {
    let norm = |x: &str| x.split_whitespace().collect::<Vec<_>>().join(" ").chars().collect::<Vec<char>>();
    let (q, s) = (norm(q), norm(s));
    let m = q.len().max(s.len());
    if m == 0 {
        return 1.0;
    }
    1.0 - oracle_distance(&q, &s) as f64 / m as f64
}

fn fuzzy_text(rng: &mut StdRng) -> String {
    let syllables = ["ka", "ta", "na", "ki", "to", " ", "a", "ñu", "日"];
    (0..rng.gen_range(2..12)).map(|_| *syllables.choose(rng).unwrap()).collect()
}

fn mutate(rng: &mut StdRng, s: &str) -> String {
    let mut chars: Vec<char> = s.chars().collect();
    for _ in 0..rng.gen_range(0..4) {
        let at = rng.gen_range(0..=chars.len());
        match rng.gen_range(0..3) {
            0 => chars.insert(at, *['k', 'a', ' ', 'z'].choose(rng).unwrap()),
            1 if at < chars.len() => {
                chars.remove(at);
            }
            _ if at < chars.len() => chars[at] = 'o',
            _ => {}
        }
    }
    chars.into_iter().collect()
}

fn fuzzy_oracle() -> Check {
    let mut rng = StdRng::seed_from_u64(3);
    let en = tag("en");
    let (mut compared, mut hits) = (0, 0);
    for size in [40usize, 250, 600, 1000] {
        let mut table = LinguisticTable::new("f");
        while table.len() < size {
            let mut segs = vec![(tag("es"), fuzzy_text(&mut rng))];
            if rng.gen_bool(0.9) {
                segs.push((en, fuzzy_text(&mut rng)));
            }
            let _ = table.insert(RecordDraft::new(segs.iter().map(|(l, s)| (*l, s.as_str()))));
        }
        let stored: Vec<String> = table.records().filter_map(|r| r.segment(en)).map(str::to_string).collect();
        for _ in 0..25 {
            let query = if rng.gen_bool(0.7) {
                let base = stored.choose(&mut rng).unwrap().clone();
                mutate(&mut rng, &base)
            } else {
                fuzzy_text(&mut rng)
            };
            for threshold in [0.5, 0.8, 1.0] {
                let got: BTreeMap<RecordId, f64> =
                    table.lookup_fuzzy(en, &query, threshold).into_iter().map(|m| (m.id, m.score)).collect();
                let want: BTreeMap<RecordId, f64> = table
                    .records()
                    .filter_map(|r| Some((r.id(), oracle_score(&query, r.segment(en)?))))
                    .filter(|(_, s)| *s >= threshold)
                    .collect();
                let same_ids = got.keys().eq(want.keys());
                ensure(same_ids, || format!("{query:?} at {threshold}: ids {:?} vs oracle {:?}", got.keys(), want.keys()))?;
                for (id, s) in &got {
                    ensure((s - want[id]).abs() <= 1e-9, || format!("{query:?}: {id:?} scored {s} vs {}", want[id]))?;
                }
                compared += 1;
                hits += got.len();
            }
        }
    }
    Ok(format!("100 queries x 3 thresholds over tables of 40..1000 records; {compared} lookups, {hits} hits agree"))
}

fn duality() -> Check {
    let mut rng = StdRng::seed_from_u64(4);
    let langs = BTreeSet::from([tag("en"), tag("de"), tag("fi")]);
    let mut referenced = 0;
    for i in 0..50 {
        let mut table = LinguisticTable::new("dual");
        for _ in 0..rng.gen_range(1..40) {
            let segs: Vec<(LanguageTag, String)> = langs.iter().map(|l| (*l, phrase(&mut rng, 4))).collect();
            let _ = table.insert(RecordDraft::new(segs.iter().map(|(l, s)| (*l, s.as_str()))));
        }
        let ids: Vec<RecordId> = table.ids().collect();
        let mut text = String::new();
        for _ in 0..rng.gen_range(1..=20) {
            if rng.gen_bool(0.7) {
                text.push_str([" ", ". ", ", ", "\n\n", " - "].choose(&mut rng).unwrap());
            }
            text.push_str(&format!("{{r{}}}", ids.choose(&mut rng).unwrap().0));
        }
        let tmpl = parse_template(&text).map_err(|e| format!("template {i}: {e}"))?;
        let generated = generate_all(&tmpl, &table, &langs).map_err(|e| format!("template {i}: {e}"))?;
        let mut fresh = LinguisticTable::new("h");
        harvest(&generated.texts, &mut fresh);
        let got: BTreeSet<_> = fresh.records().map(|r| r.segments().clone()).collect();
        let want: BTreeSet<_> = tmpl.placeholders().map(|(_, id)| table.get(id).unwrap().segments().clone()).collect();
        ensure(got == want, || format!("template {i} {text:?}: harvested {} records, expected {}", got.len(), want.len()))?;
        ensure(fresh.len() == want.len(), || format!("template {i}: {} records harvested", fresh.len()))?;
        referenced += want.len();
    }
    Ok(format!("50 templates, {referenced} referenced records reproduced exactly"))
}

fn expected_severity(d: Defect) -> Severity {
    use Defect::*;
    match d {
        DuplicateHeaderKey | UndeclaredVersion | MissingIndex | UnsupportedTmx | FormMismatch | UnknownMember => {
            Severity::Warning
        }
        NotAZip | Unreadable | UnsafePath | MissingHeader | HeaderSyntax | MissingId | MissingLanguages
        | BadLanguageTag | MalayalamMisuse | MissingVersion | BadEntirety | BrokenIndexLink | BadExternalUri
        | DanglingLink | InvalidTmx | BadSegmentation | BadAlignment => Severity::Error,
    }
}

fn lint_corpus() -> Check {
    let corpus = seeded_defects();
    let classes: BTreeSet<Defect> = corpus.iter().map(|c| c.defect).collect();
    ensure(classes.len() >= 10, || format!("only {} defect classes seeded", classes.len()))?;
    for required in [Defect::MissingHeader, Defect::UndeclaredVersion, Defect::MalayalamMisuse, Defect::DanglingLink, Defect::InvalidTmx] {
        ensure(classes.contains(&required), || format!("{} is not seeded", required.code()))?;
    }
    let mut misses = Vec::new();
    for case in &corpus {
        let found = validate(&case.bytes);
        let hit = found.iter().any(|d| d.defect == case.defect && d.severity == expected_severity(case.defect));
        if !hit {
            misses.push(format!("{} ({})", case.name, case.defect.code()));
        }
    }
    ensure(misses.is_empty(), || format!("missed: {}", misses.join(", ")))?;
    Ok(format!("{} seeded dossiers, {} defect classes, all detected at the expected severity", corpus.len(), classes.len()))
}

struct Server {
    base: String,
    state: AppState,
    stop: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
    _dir: tempfile::TempDir,
}

impl Server {
    fn start(db: LinguisticTable) -> Server {
        let dir = tempfile::tempdir().unwrap();
        let mut config = ServerConfig::new(dir.path());
        config.database = db.name().to_string();
        let state = AppState::open(config).unwrap();
        state.register_table(db).unwrap();
        let (stop, stopped) = tokio::sync::oneshot::channel::<()>();
        let (addr_tx, addr_rx) = std::sync::mpsc::channel();
        let served = state.clone();
        let thread = std::thread::spawn(move || {
            let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().unwrap();
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
                addr_tx.send(listener.local_addr().unwrap()).unwrap();
                serve_on(listener, served, async {
                    let _ = stopped.await;
                })
                .await
                .unwrap();
            });
        });
        let addr = addr_rx.recv().unwrap();
        Server { base: format!("http://{addr}"), state, stop: Some(stop), thread: Some(thread), _dir: dir }
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

fn server_library() -> Check {
    let mut rng = StdRng::seed_from_u64(5);
    let (en, es, fr) = (tag("en"), tag("es"), tag("fr"));
    let mut db = LinguisticTable::new("db").with_base("http://example.org/db");
    for _ in 0..300 {
        let mut segs = vec![(en, phrase(&mut rng, 4))];
        for l in [es, fr] {
            if rng.gen_bool(0.8) {
                segs.push((l, phrase(&mut rng, 4)));
            }
        }
        let _ = db.insert(RecordDraft::new(segs.iter().map(|(l, s)| (*l, s.as_str()))));
    }
    let stored: Vec<String> = db.records().filter_map(|r| r.segment(en)).map(str::to_string).collect();
    let server = Server::start(db.clone());
    let client = reqwest::blocking::Client::new();
    let mut units = 0;
    for i in 0..20 {
        // One paragraph per line of text, mostly taken from the database.
        let paragraphs: Vec<String> = (0..rng.gen_range(1..8))
            .map(|_| if rng.gen_bool(0.7) { stored.choose(&mut rng).unwrap().clone() } else { phrase(&mut rng, 4) })
            .collect();
        let body = paragraphs.join("\n\n");
        let threshold = *[0.5, 0.7, 0.9, 1.0].choose(&mut rng).unwrap();
        let langs = [vec![en, es], vec![en, fr], vec![en, es, fr]].choose(&mut rng).unwrap().clone();
        let r = client
            .post(format!("{}/documents?lang=en&threshold={threshold}", server.base))
            .body(body.clone())
            .send()
            .map_err(|e| e.to_string())?;
        ensure(r.status() == 201, || format!("submission {i}: status {}", r.status()))?;
        let uri = r.headers()["location"].to_str().unwrap().to_string();
        let list: Vec<&str> = langs.iter().map(LanguageTag::as_str).collect();
        let r = client.get(format!("{}{uri}?langs={}&format=tmx", server.base, list.join(","))).send().map_err(|e| e.to_string())?;
        ensure(r.status() == 200, || format!("extraction {i}: status {}", r.status()))?;
        let served = r.text().map_err(|e| e.to_string())?;

        let doc = segment_text(&body, en, &SegmentationPolicy::default(), SegmentKind::Sentence).unwrap();
        let targets: BTreeSet<LanguageTag> = langs.iter().copied().collect();
        let local = export_tmx(&extract_tm(&db, &doc, &targets, threshold), &langs);
        // Neither side writes timestamps, so no normalization is needed.
        ensure(served == local, || format!("submission {i}: served TMX differs from the library"))?;
        units += served.matches("<tu ").count();
    }
    drop(server);
    ensure(units > 0, || "no submission matched anything".into())?;
    Ok(format!("20 submissions, {units} translation units, byte-identical TMX"))
}

fn scenario_med() -> Vec<u8> {
    let text = "Hello world. White cat.\n\nGood night. See you tomorrow.";
    let st = segment_text(text, tag("en"), &SegmentationPolicy::default(), SegmentKind::Sentence).unwrap();
    let mut med = Dossier::new("scenario", [tag("en"), tag("es")]).unwrap();
    med.set_header("title", "Headless scenario").unwrap();
    med.add_parallel(ParallelFile {
        lang: tag("en"),
        name: "letter.txt".into(),
        content: Content::Embedded(text.as_bytes().to_vec()),
        segmentation: Some(st),
    })
    .unwrap();
    med.set_entirety(tag("en"), EntiretySet::single(Entirety::Complete));
    med.pack()
}

fn end_to_end() -> Check {
    let server = Server::start(sample_table().with_base("http://example.com"));
    let client = reqwest::blocking::Client::new();
    let get_json = |path: &str| -> Result<Value, String> {
        client.get(format!("{}{path}", server.base)).send().and_then(|r| r.json()).map_err(|e| e.to_string())
    };
    let records = |v: &Value| v.as_array().and_then(|a| a.first()).and_then(|t| t["records"].as_u64()).unwrap_or(0);
    let before = records(&get_json("/tables")?);

    let med = scenario_med();
    ensure(validate(&med).is_empty(), || "input dossier is not clean".into())?;
    let r = client.post(format!("{}/sessions?source=en&target=es", server.base)).body(med).send().map_err(|e| e.to_string())?;
    ensure(r.status() == 201, || format!("session: status {}", r.status()))?;
    let id = r.json::<Value>().map_err(|e| e.to_string())?["id"].as_str().unwrap().to_string();

    let rows = get_json(&format!("/sessions/{id}/segments"))?;
    let rows = rows.as_array().ok_or("segments is not a list")?.clone();
    ensure(rows.len() == 4, || format!("{} rows", rows.len()))?;
    let mut suggested = 0;
    for row in &rows {
        let n = row["n"].as_u64().unwrap();
        let body = match row["suggestions"].as_array().and_then(|s| s.first()) {
            Some(s) => {
                suggested += 1;
                json!({"text": format!("{}.", s["text"].as_str().unwrap()), "state": "confirmed", "record": s["record"]})
            }
            None => json!({"text": format!("[es] {}", row["source"].as_str().unwrap()), "state": "confirmed"}),
        };
        let r = client.put(format!("{}/sessions/{id}/segments/{n}", server.base)).json(&body).send().map_err(|e| e.to_string())?;
        ensure(r.status() == 200, || format!("row {n}: status {}", r.status()))?;
    }
    let r = client.post(format!("{}/sessions/{id}/complete", server.base)).send().map_err(|e| e.to_string())?;
    ensure(r.status() == 200, || format!("complete: status {}", r.status()))?;
    let out = r.bytes().map_err(|e| e.to_string())?.to_vec();

    let diagnostics = validate(&out);
    ensure(diagnostics.is_empty(), || format!("returned dossier: {diagnostics:?}"))?;
    let returned = Dossier::unpack(&out).map_err(|e| e.to_string())?;
    let entirety = returned.entirety().get(&tag("es")).cloned();
    ensure(entirety == Some(EntiretySet::single(Entirety::Complete)), || format!("es entirety {entirety:?}"))?;
    let after = records(&get_json("/tables")?);
    ensure(after == before + rows.len() as u64, || format!("database went from {before} to {after} records"))?;
    ensure(server.state.database().map(|t| t.len() as u64) == Some(after), || "state and /tables disagree".into())?;
    Ok(format!("4 rows confirmed ({suggested} from suggestions), es complete, database {before} -> {after}"))
}

fn main() {
    let s = Duration::from_secs;
    let results = [
        run("sample-table", s(1), sample_table_fidelity),
        run("granularity-lattice", s(1), lattice),
        run("losslessness", s(30), losslessness),
        run("round-trips", s(60), round_trips),
        run("fuzzy-oracle", s(60), fuzzy_oracle),
        run("generate-harvest-duality", s(30), duality),
        run("med-lint-corpus", s(10), lint_corpus),
        run("server-library-tmx", s(30), server_library),
        run("end-to-end-session", s(60), end_to_end),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
