//! Marked text: plain text with record identifiers inline.
//!
//! ```text
//! #base http://example.com
//! #lang es
//! <<r1|Hola mundo>> y <<|texto sin registro>>.
//! ```
//!
//! The `#lang` line is optional. A marker opens with `<<`, carries an
//! optional `rN`, a `|`, the segment text and closes with `>>`.
//!
//! Escaping works on runs of equal characters. A literal run of `m` angle
//! brackets is written as `4*(m/2) + m%2` characters, i.e. every pair is
//! doubled and a lone bracket stays single; a run whose length is 2 or 3
//! modulo 4 therefore contains a marker delimiter, which is always at the
//! end of the run. Literal `|` is always doubled. When text following a
//! marker starts with `>`, a single `|` is written right after `>>` to keep
//! the two runs apart.

use super::StoreError;
use crate::langtags::LanguageTag;
use crate::segcore::{Segment, SegmentKind, SegmentedText, SourceFormat, Span};

fn push_escaped(out: &mut String, text: &str) {
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '<' | '>' => {
                let mut m = 1;
                while chars.peek() == Some(&c) {
                    chars.next();
                    m += 1;
                }
                for _ in 0..4 * (m / 2) + m % 2 {
                    out.push(c);
                }
            }
            '|' => out.push_str("||"),
            c => out.push(c),
        }
    }
}

fn record_id_of<'a>(uri: &'a str, base: &str) -> Result<&'a str, StoreError> {
    let rest = uri.strip_prefix(base).and_then(|r| r.strip_prefix('/'));
    match rest {
        Some(rid) if rid.len() > 1 && rid.starts_with('r') && rid[1..].bytes().all(|b| b.is_ascii_digit()) => Ok(rid),
        _ => {
            let found = uri.rsplit_once('/').map(|(b, _)| b).unwrap_or("").to_string();
            Err(StoreError::MixedBases { expected: base.to_string(), found })
        }
    }
}

/// Writes the leaves of `doc` as markers and everything between them as
/// escaped plain text. Every record URI must be `<base>/rN`.
pub fn emit_marked_text(doc: &SegmentedText, base: &str) -> Result<String, StoreError> {
    let base = base.trim_end_matches('/');
    let source = doc.source();
    let mut out = format!("#base {base}\n");
    if doc.language().is_standard() || doc.language().is_neutral() {
        out.push_str(&format!("#lang {}\n", doc.language()));
    }
    let leaves: Vec<&Segment> = if doc.root().is_leaf() {
        Vec::new()
    } else {
        doc.leaves().into_iter().map(|(_, s)| s).collect()
    };
    let mut cursor = 0;
    let mut after_marker = false;
    for leaf in leaves {
        let residue = &source[cursor..leaf.span.start];
        if after_marker && residue.starts_with('>') {
            out.push('|');
        }
        push_escaped(&mut out, residue);
        out.push_str("<<");
        if let Some(uri) = &leaf.record_uri {
            out.push_str(record_id_of(uri, base)?);
        }
        out.push('|');
        push_escaped(&mut out, &source[leaf.span.start..leaf.span.end]);
        out.push_str(">>");
        cursor = leaf.span.end;
        after_marker = true;
    }
    let residue = &source[cursor..];
    if after_marker && residue.starts_with('>') {
        out.push('|');
    }
    push_escaped(&mut out, residue);
    Ok(out)
}

fn malformed(position: usize, message: impl Into<String>) -> StoreError {
    StoreError::MalformedMarkup { position, message: message.into() }
}

fn literal_len(n: usize) -> usize {
    2 * (n / 4) + n % 4
}

/// Parses marked text into a flat text: one file segment whose children are
/// the markers, as sentences.
pub fn parse_marked_text(text: &str) -> Result<SegmentedText, StoreError> {
    let (first, mut body_start) = match text.find('\n') {
        Some(i) => (&text[..i], i + 1),
        None => (text, text.len()),
    };
    let base = first
        .strip_prefix("#base ")
        .map(|b| b.trim_end_matches('\r').trim_end_matches('/'))
        .ok_or_else(|| malformed(0, "first line must be `#base <uri>`"))?;
    let mut language = LanguageTag::UNDETERMINED;
    if let Some(rest) = text[body_start..].strip_prefix("#lang ") {
        let end = rest.find('\n').unwrap_or(rest.len());
        language = LanguageTag::parse(rest[..end].trim_end_matches('\r'))
            .map_err(|e| malformed(body_start, e.to_string()))?;
        body_start += "#lang ".len() + end + usize::from(end < rest.len());
    }

    let body = &text[body_start..];
    let bytes = body.as_bytes();
    let mut source = String::with_capacity(body.len());
    let mut children: Vec<Segment> = Vec::new();
    // Start offset in `source` and URI of the marker being read.
    let mut open: Option<(usize, Option<String>)> = None;
    let mut i = 0;
    let mut after_close = false;
    while i < bytes.len() {
        let at = body_start + i;
        let c = bytes[i];
        if !matches!(c, b'<' | b'>' | b'|') {
            let ch = body[i..].chars().next().expect("in bounds");
            source.push(ch);
            i += ch.len_utf8();
            after_close = false;
            continue;
        }
        let mut n = 1;
        while i + n < bytes.len() && bytes[i + n] == c {
            n += 1;
        }
        i += n;
        match (c, open.is_some()) {
            (b'<', false) => {
                let has_marker = n % 4 >= 2;
                let lit = literal_len(if has_marker { n - 2 } else { n });
                source.extend(std::iter::repeat_n('<', lit));
                if has_marker {
                    let rest = &body[i..];
                    let bar = rest.find('|').ok_or_else(|| malformed(at, "marker without `|`"))?;
                    let rid = &rest[..bar];
                    let uri = if rid.is_empty() {
                        None
                    } else if rid.len() > 1 && rid.starts_with('r') && rid[1..].bytes().all(|b| b.is_ascii_digit()) {
                        Some(format!("{base}/{rid}"))
                    } else {
                        return Err(malformed(at, format!("bad record identifier {rid:?}")));
                    };
                    i += bar + 1;
                    open = Some((source.len(), uri));
                }
            }
            (b'>', true) => {
                let has_close = n % 4 >= 2;
                let lit = literal_len(if has_close { n - 2 } else { n });
                source.extend(std::iter::repeat_n('>', lit));
                if has_close {
                    let (start, uri) = open.take().expect("inside a marker");
                    let mut seg = Segment::new(SegmentKind::Sentence, Span::new(start, source.len()));
                    seg.record_uri = uri;
                    children.push(seg);
                    if bytes.get(i) == Some(&b'|') {
                        let mut bars = 0;
                        while bytes.get(i + bars) == Some(&b'|') {
                            bars += 1;
                        }
                        if bars % 2 == 1 {
                            i += 1;
                        }
                    }
                    after_close = true;
                    continue;
                }
            }
            (b'|', _) => {
                if n % 2 == 1 {
                    return Err(malformed(at, "unescaped `|`"));
                }
                source.extend(std::iter::repeat_n('|', n / 2));
            }
            (b'<', true) if n % 4 >= 2 => return Err(malformed(at, "markers cannot nest")),
            (b'>', false) if n % 4 >= 2 && !after_close => return Err(malformed(at, "`>>` outside a marker")),
            (b'>', false) if n % 4 >= 2 => return Err(malformed(at, "text after a marker starting with `>` needs `|`")),
            (ch, _) => source.extend(std::iter::repeat_n(ch as char, literal_len(n))),
        }
        after_close = false;
    }
    if open.is_some() {
        return Err(malformed(text.len(), "unterminated marker"));
    }
    let len = source.len();
    let root = Segment::new(SegmentKind::File, Span::new(0, len)).with_children(children);
    SegmentedText::from_parts(language, source, SourceFormat::Plain, None, root)
        .map_err(|e| malformed(body_start, e.to_string()))
}
