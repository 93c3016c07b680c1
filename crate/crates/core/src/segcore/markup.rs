//! Segmentation of markup-based documents.
//!
//! The dialect is XML (or well-formed XHTML) where element names decide the
//! segment kind:
//!
//! | elements                                             | kind         |
//! |------------------------------------------------------|--------------|
//! | document element                                     | file         |
//! | `p`, `h1`..`h6`, `li`, `blockquote`, `pre`, `td`, `th`, `dd`, `dt` | paragraph |
//! | `s`                                                  | sentence     |
//! | `seg`                                                | sub-sentence |
//!
//! Any other element is transparent. `xml:lang` (or `lang`) switches the
//! processing language, `rid="r1"` identifies a record and the base URI
//! comes from `xml:base`/`base` on the document element or an HTML
//! `<base href>`.

use super::{SegError, Segment, SegmentKind, SegmentedText, SourceFormat, Span};
use crate::langtags::LanguageTag;
use crate::xml::{unescape, Token, Tokenizer, XmlError};

pub(crate) fn element_kind(name: &str) -> Option<SegmentKind> {
    match name {
        "p" | "h1" | "h2" | "h3" | "h4" | "h5" | "h6" | "li" | "blockquote" | "pre" | "td" | "th" | "dd" | "dt" => {
            Some(SegmentKind::Paragraph)
        }
        "s" => Some(SegmentKind::Sentence),
        "seg" => Some(SegmentKind::SubSentence),
        _ => None,
    }
}

/// Elements whose text is not natural-language content.
fn is_opaque(name: &str) -> bool {
    matches!(name, "head" | "script" | "style")
}

pub(crate) struct Attrs {
    pub lang: Option<LanguageTag>,
    pub rid: Option<String>,
    pub base: Option<String>,
    pub href: Option<String>,
}

pub(crate) fn read_attrs(attrs: &[(&str, String)], position: usize) -> Result<Attrs, SegError> {
    let mut out = Attrs { lang: None, rid: None, base: None, href: None };
    for (key, value) in attrs {
        match *key {
            "xml:lang" | "lang" => {
                let tag = LanguageTag::parse(value)
                    .map_err(|err| malformed(position, format!("bad language attribute: {err}")))?;
                out.lang = Some(tag);
            }
            "rid" | "data-rid" => out.rid = Some(value.clone()),
            "xml:base" | "base" => out.base = Some(value.clone()),
            "href" => out.href = Some(value.clone()),
            _ => {}
        }
    }
    Ok(out)
}

fn malformed(position: usize, message: impl Into<String>) -> SegError {
    SegError::MalformedMarkup { position, message: message.into() }
}

impl From<XmlError> for SegError {
    fn from(e: XmlError) -> Self {
        malformed(e.position, e.message)
    }
}

pub(crate) fn record_uri(base: Option<&str>, rid: &str) -> String {
    match base {
        Some(b) => format!("{}/{}", b.trim_end_matches('/'), rid),
        None => rid.to_string(),
    }
}

struct Frame {
    segment: Option<Segment>,
    lang: Option<LanguageTag>,
}

/// Parses a marked document; segments are taken verbatim from elements.
pub fn segment_marked(document: &str) -> Result<SegmentedText, SegError> {
    let mut root = Segment::new(SegmentKind::File, Span::new(0, document.len()));
    let mut stack: Vec<Frame> = Vec::new();
    let mut seen_root = false;
    let mut base: Option<String> = None;
    let mut language = LanguageTag::UNDETERMINED;

    for token in Tokenizer::new(document) {
        match token? {
            Token::Start { attrs, span, .. } | Token::Empty { attrs, span, .. } if !seen_root => {
                seen_root = true;
                let attrs = read_attrs(&attrs, span.start)?;
                if let Some(l) = attrs.lang {
                    language = l;
                    root.lang = Some(l);
                }
                base = attrs.base;
                if let Some(rid) = attrs.rid {
                    root.record_uri = Some(record_uri(base.as_deref(), &rid));
                }
                stack.push(Frame { segment: None, lang: root.lang });
            }
            Token::Start { name, attrs, span } => {
                let frame = open_frame(name, &attrs, span.start, span.end, &stack, &root, &mut base)?;
                stack.push(frame);
            }
            Token::Empty { name, attrs, span } => {
                let frame = open_frame(name, &attrs, span.start, span.end, &stack, &root, &mut base)?;
                close_frame(frame, span.end, &mut stack, &mut root);
            }
            Token::End { span, .. } => {
                let frame = stack.pop().ok_or_else(|| malformed(span.start, "unexpected end tag"))?;
                close_frame(frame, span.start, &mut stack, &mut root);
            }
            _ => {}
        }
    }
    SegmentedText::from_parts(language, document.to_string(), SourceFormat::Markup, None, root)
}

fn open_frame(
    name: &str,
    attrs: &[(&str, String)],
    before: usize,
    after: usize,
    stack: &[Frame],
    root: &Segment,
    base: &mut Option<String>,
) -> Result<Frame, SegError> {
    let attrs = read_attrs(attrs, before)?;
    if name == "base" && base.is_none() {
        *base = attrs.href.clone();
    }
    let inherited = stack.last().map(|f| f.lang).unwrap_or(root.lang);
    let lang = attrs.lang.or(inherited);
    let parent_kind = stack
        .iter()
        .rev()
        .find_map(|f| f.segment.as_ref().map(|s| s.kind))
        .unwrap_or(SegmentKind::File);
    let segment = element_kind(name).filter(|k| *k > parent_kind).map(|kind| {
        let mut seg = Segment::new(kind, Span::new(after, after));
        seg.lang = lang;
        seg.record_uri = attrs.rid.as_deref().map(|rid| record_uri(base.as_deref(), rid));
        seg
    });
    Ok(Frame { segment, lang })
}

fn close_frame(frame: Frame, content_end: usize, stack: &mut [Frame], root: &mut Segment) {
    if let Some(mut seg) = frame.segment {
        seg.span.end = content_end;
        let parent = stack.iter_mut().rev().find_map(|f| f.segment.as_mut());
        match parent {
            Some(p) => p.children.push(seg),
            None => root.children.push(seg),
        }
    }
}

/// Byte ranges of non-whitespace character data outside tags, skipping
/// `head`, `script` and `style`.
pub fn markup_content_ranges(source: &str) -> Vec<Span> {
    let mut out: Vec<Span> = Vec::new();
    let mut opaque_depth = 0usize;
    let push_text = |out: &mut Vec<Span>, start: usize, end: usize| {
        for (i, c) in source[start..end].char_indices() {
            if !c.is_whitespace() {
                let s = start + i;
                match out.last_mut() {
                    Some(last) if last.end == s => last.end = s + c.len_utf8(),
                    _ => out.push(Span::new(s, s + c.len_utf8())),
                }
            }
        }
    };
    for token in Tokenizer::new(source) {
        let Ok(token) = token else { break };
        match token {
            Token::Start { name, .. } => {
                if opaque_depth > 0 || is_opaque(name) {
                    opaque_depth += 1;
                }
            }
            Token::End { .. } => opaque_depth = opaque_depth.saturating_sub(1),
            Token::Text { span, .. } | Token::CData { span, .. } if opaque_depth == 0 => {
                push_text(&mut out, span.start, span.end)
            }
            _ => {}
        }
    }
    out
}

/// Drops tags, comments and processing instructions from a fragment and
/// decodes entities and CDATA sections.
pub fn strip_markup(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut text = String::new();
    let mut rest = raw;
    let flush = |text: &mut String, out: &mut String| {
        if !text.is_empty() {
            match unescape(text) {
                Ok(s) => out.push_str(&s),
                Err(_) => out.push_str(text),
            }
            text.clear();
        }
    };
    while let Some(lt) = rest.find('<') {
        text.push_str(&rest[..lt]);
        rest = &rest[lt..];
        if let Some(body) = rest.strip_prefix("<![CDATA[") {
            flush(&mut text, &mut out);
            let end = body.find("]]>").unwrap_or(body.len());
            out.push_str(&body[..end]);
            rest = body.get(end + 3..).unwrap_or("");
        } else if let Some(body) = rest.strip_prefix("<!--") {
            let end = body.find("-->").map(|e| e + 3).unwrap_or(body.len());
            rest = &body[end..];
        } else {
            let end = rest.find('>').map(|e| e + 1).unwrap_or(rest.len());
            rest = &rest[end..];
        }
    }
    text.push_str(rest);
    flush(&mut text, &mut out);
    out
}
