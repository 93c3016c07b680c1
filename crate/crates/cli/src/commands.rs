use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{self, IsTerminal, Read, Write};
use std::net::SocketAddr;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use partext_core::gentext::{generate_all_in, generate_in, parse_template, Tables};
use partext_core::lingstore::{
    export_csv, export_tmx, harvest, import_csv, import_tmx, load_table, save_table, CsvHeader, LinguisticTable,
};
use partext_core::medbox::{generate_index, validate, validate_dir, LintDiagnostic, Severity};
use partext_core::segcore::write_sidecar;
use partext_core::{
    align, check_labelling, segment_marked, segment_text, Dossier, FileLanguageMetadata, LanguageTag, ParallelTexts,
    SegmentKind, SegmentationPolicy, SegmentedText,
};
use partext_server::{AppState, ServerConfig};

use crate::{
    AlignArgs, Cli, Command, Exchange, ExportArgs, GenerateArgs, HarvestArgs, ImportArgs, LangcheckArgs, MedCommand,
    SegmentArgs, ServeArgs, VersionArgs,
};

/// Porcelain fields may not contain tabs or line breaks.
fn field(s: &str) -> String {
    s.replace('\\', "\\\\").replace('\t', "\\t").replace('\n', "\\n").replace('\r', "\\r")
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    if path == Path::new("-") {
        let mut buf = Vec::new();
        io::stdin().read_to_end(&mut buf).context("reading standard input")?;
        return Ok(buf);
    }
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn read_text(path: &Path) -> Result<String> {
    String::from_utf8(read_bytes(path)?).map_err(|_| anyhow!("{} is not UTF-8", path.display()))
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = io::stdout().lock();
            match out.write_all(bytes).and_then(|_| out.flush()) {
                Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
                _ => Ok(()),
            }
        }
    }
}

fn print_lines(lines: &[String]) -> Result<()> {
    let text: String = lines.iter().map(|l| format!("{l}\n")).collect();
    write_output(None, text.as_bytes())
}

fn is_markup(path: &Path) -> bool {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    matches!(ext.as_str(), "html" | "htm" | "xhtml" | "xml")
}

fn segment_input(
    path: &Path,
    lang: Option<LanguageTag>,
    level: SegmentKind,
    markup: bool,
    separator: Option<char>,
) -> Result<SegmentedText> {
    let text = read_text(path)?;
    if markup || is_markup(path) {
        let st = segment_marked(&text).with_context(|| format!("segmenting {}", path.display()))?;
        return Ok(match lang {
            Some(l) => st.with_language(l),
            None => st,
        });
    }
    let lang = lang.context("--lang is required for plain text")?;
    let mut policy = SegmentationPolicy::default();
    if let Some(c) = separator {
        policy = policy.with_separator(c);
    }
    segment_text(&text, lang, &policy, level).with_context(|| format!("segmenting {}", path.display()))
}

fn table_or_new(dir: &Path, name: Option<&str>, base: Option<&str>) -> Result<LinguisticTable> {
    if dir.join("manifest.json").exists() {
        return load_table(dir).with_context(|| format!("loading {}", dir.display()));
    }
    let name = match name {
        Some(n) => n.to_string(),
        None => dir.file_name().and_then(|n| n.to_str()).context("cannot name the table after its directory")?.to_string(),
    };
    let mut table = LinguisticTable::new(name);
    table.set_base(base.map(str::to_string));
    Ok(table)
}

fn load(dir: &Path) -> Result<LinguisticTable> {
    load_table(dir).with_context(|| format!("loading {}", dir.display()))
}

fn save(table: &LinguisticTable, dir: &Path) -> Result<()> {
    save_table(table, dir).with_context(|| format!("saving {}", dir.display()))
}

pub fn run(cli: Cli) -> Result<ExitCode> {
    let porcelain = cli.porcelain;
    match cli.command {
        Command::Segment(a) => segment(a, porcelain),
        Command::Align(a) => align_cmd(a, porcelain),
        Command::Harvest(a) => harvest_cmd(a, porcelain),
        Command::Tmx(Exchange::Import(a)) => import(a, Format::Tmx, porcelain),
        Command::Tmx(Exchange::Export(a)) => export(a, Format::Tmx),
        Command::Csv(Exchange::Import(a)) => import(a, Format::Csv, porcelain),
        Command::Csv(Exchange::Export(a)) => export(a, Format::Csv),
        Command::Generate(a) => generate(a, porcelain),
        Command::Med(m) => med(m, porcelain),
        Command::Langcheck(a) => langcheck(a, porcelain),
        Command::Serve(a) => serve(a),
    }
}

fn segment(a: SegmentArgs, porcelain: bool) -> Result<ExitCode> {
    let st = segment_input(&a.input, a.lang, a.level, a.markup, a.separator)?;
    if a.sidecar {
        write_output(None, write_sidecar(&st).as_bytes())?;
        return Ok(ExitCode::SUCCESS);
    }
    let lines: Vec<String> = st
        .root()
        .walk()
        .into_iter()
        .map(|(path, seg)| {
            let text = st.text_of(seg);
            if porcelain {
                format!("{path}\t{}\t{}\t{}\t{}", seg.kind, seg.span.start, seg.span.end, field(&text))
            } else {
                format!("{}{path} {}: {}", "  ".repeat(path.0.len()), seg.kind, field(&text))
            }
        })
        .collect();
    print_lines(&lines)?;
    Ok(ExitCode::SUCCESS)
}

fn parse_versions(v: &VersionArgs) -> Result<BTreeMap<LanguageTag, SegmentedText>> {
    let mut out = BTreeMap::new();
    for spec in &v.versions {
        let (lang, file) = spec.split_once('=').with_context(|| format!("{spec:?} is not LANG=FILE"))?;
        let lang = LanguageTag::parse(lang)?;
        let st = segment_input(Path::new(file), Some(lang), v.level, false, None)?;
        if out.insert(lang, st).is_some() {
            bail!("{lang} is given twice");
        }
    }
    Ok(out)
}

fn aligned(v: &VersionArgs, source: Option<&str>) -> Result<ParallelTexts> {
    let pt = align(parse_versions(v)?, v.level)?;
    Ok(match source {
        Some(s) => pt.with_source(s),
        None => pt,
    })
}

fn align_cmd(a: AlignArgs, porcelain: bool) -> Result<ExitCode> {
    let pt = aligned(&a.versions, a.source.as_deref())?;
    if let Some(path) = &a.med {
        let med = Dossier::from_parallel_texts(a.id.clone(), &pt)?;
        write_output(Some(path), &med.pack())?;
        return Ok(ExitCode::SUCCESS);
    }
    let mut lines = Vec::new();
    for i in 0..pt.groups().len() {
        if !porcelain {
            lines.push(format!("#{i} ({})", pt.kind()));
        }
        for (lang, text) in pt.group_texts(i) {
            lines.push(if porcelain { format!("{i}\t{lang}\t{}", field(&text)) } else { format!("  {lang}: {}", field(&text)) });
        }
    }
    print_lines(&lines)?;
    Ok(ExitCode::SUCCESS)
}

fn harvest_cmd(a: HarvestArgs, porcelain: bool) -> Result<ExitCode> {
    let mut table = table_or_new(&a.table, a.name.as_deref(), a.base.as_deref())?;
    let pt = match &a.med {
        Some(path) => {
            let med = Dossier::unpack(&read_bytes(path)?)?;
            let pt = med.parallel_texts()?.context("the dossier has no segmented versions")?;
            match &a.source {
                Some(s) => pt.with_source(s.clone()),
                None if pt.source().is_none() => pt.with_source(format!("med:{}", med.id())),
                None => pt,
            }
        }
        None => aligned(&a.versions, a.source.as_deref())?,
    };
    let added = harvest(&pt, &mut table);
    save(&table, &a.table)?;
    let line = if porcelain {
        format!("{added}\t{}", table.len())
    } else {
        format!("added {added} records, {} in {}", table.len(), table.name())
    };
    print_lines(&[line])?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Clone, Copy)]
enum Format {
    Tmx,
    Csv,
}

fn import(a: ImportArgs, format: Format, porcelain: bool) -> Result<ExitCode> {
    let text = read_text(&a.input)?;
    let mut table = match format {
        Format::Tmx => import_tmx(&text)?,
        Format::Csv => {
            let header = if a.langs.is_empty() { CsvHeader::Present } else { CsvHeader::Given(a.langs.clone()) };
            let mut t = import_csv(&text, header)?;
            let dir_name = a.table.file_name().and_then(|n| n.to_str()).map(str::to_string);
            t.rename(dir_name.unwrap_or_else(|| t.name().to_string()));
            t
        }
    };
    if let Some(name) = &a.name {
        table.rename(name.clone());
    }
    if a.base.is_some() {
        table.set_base(a.base.clone());
    }
    save(&table, &a.table)?;
    let line = if porcelain { format!("{}\t{}", table.name(), table.len()) } else { format!("imported {} records into {}", table.len(), table.name()) };
    print_lines(&[line])?;
    Ok(ExitCode::SUCCESS)
}

fn export(a: ExportArgs, format: Format) -> Result<ExitCode> {
    let table = load(&a.table)?;
    let langs: Vec<LanguageTag> = if a.langs.is_empty() { table.languages().into_iter().collect() } else { a.langs };
    let text = match format {
        Format::Tmx => export_tmx(&table, &langs),
        Format::Csv => export_csv(&table, &langs),
    };
    write_output(a.output.as_deref(), text.as_bytes())?;
    Ok(ExitCode::SUCCESS)
}

fn generate(a: GenerateArgs, porcelain: bool) -> Result<ExitCode> {
    let mut tmpl = parse_template(&read_text(&a.template)?)?;
    if tmpl.name.is_empty() {
        tmpl.name = a.template.file_stem().and_then(|s| s.to_str()).unwrap_or("template").to_string();
    }
    let table = load(&a.table)?;
    let others = a.with.iter().map(|d| load(d)).collect::<Result<Vec<_>>>()?;
    let refs: Vec<&LinguisticTable> = others.iter().collect();
    let tables = Tables::new(&table, &refs);

    if let Some(lang) = a.lang {
        let st = generate_in(&tmpl, &tables, lang)?;
        write_output(a.output.as_deref(), st.source().as_bytes())?;
        return Ok(ExitCode::SUCCESS);
    }
    let langs: BTreeSet<LanguageTag> = a.langs.iter().copied().collect();
    let generation = generate_all_in(&tmpl, &tables, &langs)?;
    for f in &generation.failures {
        eprintln!("warning: {f}");
    }
    if let Some(path) = &a.med {
        let med = Dossier::from_parallel_texts(tmpl.name.clone(), &generation.texts)?;
        write_output(Some(path), &med.pack())?;
        return Ok(ExitCode::SUCCESS);
    }
    let mut lines = Vec::new();
    for (lang, st) in generation.texts.versions() {
        let entirety = generation.texts.entirety().get(lang).map(|e| e.to_string()).unwrap_or_default();
        if porcelain {
            lines.push(format!("{lang}\t{entirety}\t{}", field(st.source())));
        } else {
            lines.push(format!("[{lang}, {entirety}]"));
            lines.push(st.source().to_string());
        }
    }
    let text: String = lines.iter().map(|l| format!("{l}\n")).collect();
    write_output(a.output.as_deref(), text.as_bytes())?;
    Ok(ExitCode::SUCCESS)
}

fn report(diags: &[LintDiagnostic], porcelain: bool) -> Result<ExitCode> {
    let lines: Vec<String> = diags
        .iter()
        .map(|d| {
            if porcelain {
                let path = d.path.as_deref().unwrap_or("");
                format!("{}\t{}\t{}\t{}", d.severity, d.defect.code(), field(path), field(&d.message))
            } else {
                d.to_string()
            }
        })
        .collect();
    print_lines(&lines)?;
    let failed = diags.iter().any(|d| d.severity == Severity::Error);
    Ok(if failed { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn med(m: MedCommand, porcelain: bool) -> Result<ExitCode> {
    match m {
        MedCommand::Pack { dir, output } => {
            let med = Dossier::read_dir(&dir).with_context(|| format!("reading {}", dir.display()))?;
            write_output(Some(&output), &med.pack())?;
        }
        MedCommand::Unpack { file, output } => {
            let med = Dossier::unpack(&read_bytes(&file)?)?;
            med.write_dir(&output).with_context(|| format!("writing {}", output.display()))?;
        }
        MedCommand::Validate { path } => {
            let diags = if path.is_dir() { validate_dir(&path) } else { validate(&read_bytes(&path)?) };
            return report(&diags, porcelain);
        }
        MedCommand::Index { file, output } => {
            let med = Dossier::unpack(&read_bytes(&file)?)?;
            write_output(output.as_deref(), generate_index(&med).as_bytes())?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn langcheck(a: LangcheckArgs, porcelain: bool) -> Result<ExitCode> {
    let st = segment_marked(&read_text(&a.input)?).with_context(|| format!("reading {}", a.input.display()))?;
    let meta = FileLanguageMetadata::new(a.declared, None)?;
    let diags = check_labelling(&meta, &st.observed_languages());
    let lines: Vec<String> = diags
        .iter()
        .map(|d| {
            if porcelain {
                let kind = serde_json::to_value(d).ok().and_then(|v| v["kind"].as_str().map(str::to_string)).unwrap_or_default();
                format!("{kind}\t{}", field(&d.to_string()))
            } else {
                d.to_string()
            }
        })
        .collect();
    print_lines(&lines)?;
    Ok(if diags.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn serve(a: ServeArgs) -> Result<ExitCode> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(io::stderr)
        .with_ansi(io::stderr().is_terminal())
        .init();
    let mut config = ServerConfig::new(&a.data_dir);
    config.database = a.database;
    config.threshold = a.threshold;
    let state = AppState::open(config).with_context(|| format!("opening {}", a.data_dir.display()))?;
    for dir in &a.import {
        state.register_table(load(dir)?).map_err(|e| anyhow!("{}: {}", dir.display(), e.message))?;
    }
    let addr: SocketAddr = format!("{}:{}", a.host, a.port).parse().context("bad --host or --port")?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(partext_server::serve(state, addr))?;
    Ok(ExitCode::SUCCESS)
}
