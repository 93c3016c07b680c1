//! `.seg` sidecar files: a segmentation stored next to its untouched text.
//!
//! ```text
//! #partext-segmentation 1
//! language en
//! format plain
//! separator 1e
//! neutral 0
//! 0 file 0 30 programmatic - -
//! 1 paragraph 0 30 programmatic - -
//! ```
//!
//! Fields are tab-separated. Segment lines are in preorder: depth, kind, start, end, origin, record
//! URI and language (`-` when absent).

use super::{Origin, SegError, Segment, SegmentKind, SegmentedText, SourceFormat, Span};
use crate::langtags::LanguageTag;

const MAGIC: &str = "#partext-segmentation 1";

fn escape_field(s: &str) -> String {
    s.replace('\\', "\\\\").replace('\t', "\\t").replace('\n', "\\n").replace('\r', "\\r")
}

fn unescape_field(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('t') => out.push('\t'),
                Some('n') => out.push('\n'),
                Some('r') => out.push('\r'),
                Some(other) => out.push(other),
                None => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}

pub fn write_sidecar(st: &SegmentedText) -> String {
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    out.push_str(&format!("language\t{}\n", st.language()));
    let format = match st.format() {
        SourceFormat::Plain => "plain",
        SourceFormat::Markup => "markup",
    };
    out.push_str(&format!("format\t{format}\n"));
    match st.separator() {
        Some(c) => out.push_str(&format!("separator\t{:x}\n", c as u32)),
        None => out.push_str("separator\t-\n"),
    }
    out.push_str(&format!("neutral\t{}\n", u8::from(st.is_neutral())));
    for (path, seg) in st.root().walk() {
        let origin = match seg.origin {
            Origin::Programmatic => "programmatic",
            Origin::Manual => "manual",
        };
        let uri = seg.record_uri.as_deref().map(escape_field).unwrap_or_else(|| "-".into());
        let lang = seg.lang.map(|l| l.to_string()).unwrap_or_else(|| "-".into());
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{origin}\t{uri}\t{lang}\n",
            path.0.len(),
            seg.kind,
            seg.span.start,
            seg.span.end
        ));
    }
    out
}

fn corrupt(line: usize, msg: impl std::fmt::Display) -> SegError {
    SegError::InvalidTree(format!("sidecar line {line}: {msg}"))
}

fn header<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>, key: &str) -> Result<&'a str, SegError> {
    let (n, line) = lines.next().ok_or_else(|| corrupt(0, format!("missing {key} line")))?;
    line.strip_prefix(key)
        .and_then(|r| r.strip_prefix('\t'))
        .ok_or_else(|| corrupt(n, format!("expected {key}")))
}

/// Rebuilds a segmented text from its sidecar and source text. The tree is
/// checked against the source as if it had been built by hand.
pub fn read_sidecar(sidecar: &str, source: String) -> Result<SegmentedText, SegError> {
    let mut lines = sidecar.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.is_empty());
    match lines.next() {
        Some((_, MAGIC)) => {}
        _ => return Err(corrupt(1, "not a segmentation sidecar")),
    }
    let language = LanguageTag::parse(header(&mut lines, "language")?)?;
    let format = match header(&mut lines, "format")? {
        "plain" => SourceFormat::Plain,
        "markup" => SourceFormat::Markup,
        other => return Err(corrupt(3, format!("unknown format {other:?}"))),
    };
    let separator = match header(&mut lines, "separator")? {
        "-" => None,
        hex => Some(
            u32::from_str_radix(hex, 16)
                .ok()
                .and_then(char::from_u32)
                .ok_or_else(|| corrupt(4, format!("bad separator {hex:?}")))?,
        ),
    };
    let neutral = match header(&mut lines, "neutral")? {
        "0" => false,
        "1" => true,
        other => return Err(corrupt(5, format!("bad neutral flag {other:?}"))),
    };

    // Stack of open segments by depth; closed into their parent when a
    // shallower or equal depth appears.
    let mut stack: Vec<Segment> = Vec::new();
    let mut seen_root = false;
    fn fold(stack: &mut Vec<Segment>, depth: usize) {
        while stack.len() > depth {
            let seg = stack.pop().expect("non-empty");
            stack.last_mut().expect("depth is at least one").children.push(seg);
        }
    }
    for (n, line) in lines {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 7 {
            return Err(corrupt(n, format!("expected 7 fields, found {}", f.len())));
        }
        let depth: usize = f[0].parse().map_err(|_| corrupt(n, "bad depth"))?;
        let kind: SegmentKind = f[1].parse().map_err(|_| corrupt(n, format!("unknown kind {:?}", f[1])))?;
        let start: usize = f[2].parse().map_err(|_| corrupt(n, "bad start offset"))?;
        let end: usize = f[3].parse().map_err(|_| corrupt(n, "bad end offset"))?;
        let origin = match f[4] {
            "programmatic" => Origin::Programmatic,
            "manual" => Origin::Manual,
            other => return Err(corrupt(n, format!("unknown origin {other:?}"))),
        };
        let mut seg = Segment::new(kind, Span::new(start, end));
        seg.origin = origin;
        if f[5] != "-" {
            seg.record_uri = Some(unescape_field(f[5]));
        }
        if f[6] != "-" {
            seg.lang = Some(LanguageTag::parse(f[6])?);
        }
        if depth == 0 {
            if seen_root {
                return Err(corrupt(n, "second root segment"));
            }
            seen_root = true;
            stack.push(seg);
            continue;
        }
        if stack.is_empty() || depth > stack.len() {
            return Err(corrupt(n, format!("depth {depth} skips a level")));
        }
        fold(&mut stack, depth);
        stack.push(seg);
    }
    if !seen_root {
        return Err(corrupt(0, "no segments"));
    }
    fold(&mut stack, 1);
    let root = stack.pop().expect("root present");
    let st = SegmentedText::from_parts(language, source, format, separator, root)?;
    if neutral {
        return Ok(SegmentedText::neutral(st.source().to_string()));
    }
    Ok(st)
}
