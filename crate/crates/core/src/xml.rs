//! Minimal well-formedness-checking XML tokenizer.
//!
//! Enough for marked documents and TMX: elements, attributes, text, CDATA,
//! comments, processing instructions and a DOCTYPE. Only the five predefined
//! entities and numeric character references are recognised. Positions are
//! byte offsets into the input.

use std::borrow::Cow;
use std::ops::Range;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct XmlError {
    pub position: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Token<'a> {
    Start { name: &'a str, attrs: Vec<(&'a str, String)>, span: Range<usize> },
    Empty { name: &'a str, attrs: Vec<(&'a str, String)>, span: Range<usize> },
    End { name: &'a str, span: Range<usize> },
    /// Raw character data, entities still escaped.
    Text { raw: &'a str, span: Range<usize> },
    /// CDATA content; `span` covers the content only.
    CData { text: &'a str, span: Range<usize> },
    Misc,
}

pub(crate) struct Tokenizer<'a> {
    src: &'a str,
    pos: usize,
    open: Vec<&'a str>,
    seen_root: bool,
    finished: bool,
}

fn err<T>(position: usize, message: impl Into<String>) -> Result<T, XmlError> {
    Err(XmlError { position, message: message.into() })
}

fn is_name_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == ':'
}

fn is_name_char(c: char) -> bool {
    is_name_start(c) || c.is_numeric() || matches!(c, '-' | '.' | '\u{B7}')
}

impl<'a> Tokenizer<'a> {
    pub fn new(src: &'a str) -> Self {
        Tokenizer { src, pos: 0, open: Vec::new(), seen_root: false, finished: false }
    }


    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let rest = self.rest();
        self.pos += rest.len() - rest.trim_start_matches([' ', '\t', '\r', '\n']).len();
    }

    fn name(&mut self) -> Result<&'a str, XmlError> {
        let rest = self.rest();
        let mut chars = rest.char_indices();
        match chars.next() {
            Some((_, c)) if is_name_start(c) => {}
            _ => return err(self.pos, "expected a name"),
        }
        let end = chars.find(|(_, c)| !is_name_char(*c)).map(|(i, _)| i).unwrap_or(rest.len());
        self.pos += end;
        Ok(&rest[..end])
    }

    fn until(&mut self, pat: &str, what: &str) -> Result<Range<usize>, XmlError> {
        match self.rest().find(pat) {
            Some(i) => {
                let r = self.pos..self.pos + i;
                self.pos += i + pat.len();
                Ok(r)
            }
            None => err(self.pos, format!("unterminated {what}")),
        }
    }

    fn tag(&mut self, start: usize) -> Result<Token<'a>, XmlError> {
        self.pos += 1;
        let name = self.name()?;
        let mut attrs: Vec<(&'a str, String)> = Vec::new();
        loop {
            let before_ws = self.pos;
            self.skip_ws();
            let rest = self.rest();
            if rest.starts_with("/>") {
                self.pos += 2;
                return self.element(name, attrs, start, true);
            }
            if rest.starts_with('>') {
                self.pos += 1;
                return self.element(name, attrs, start, false);
            }
            if rest.is_empty() {
                return err(start, format!("unterminated tag <{name}>"));
            }
            if self.pos == before_ws {
                return err(self.pos, "expected whitespace before attribute");
            }
            let at = self.pos;
            let key = self.name()?;
            self.skip_ws();
            if !self.rest().starts_with('=') {
                return err(self.pos, format!("attribute {key} has no value"));
            }
            self.pos += 1;
            self.skip_ws();
            let quote = match self.rest().chars().next() {
                Some(q @ ('"' | '\'')) => q,
                _ => return err(self.pos, "attribute value must be quoted"),
            };
            self.pos += 1;
            let range = self.until(if quote == '"' { "\"" } else { "'" }, "attribute value")?;
            let raw = &self.src[range.clone()];
            if let Some(i) = raw.find('<') {
                return err(range.start + i, "'<' in attribute value");
            }
            let value = unescape(raw).map_err(|e| XmlError { position: range.start + e.position, ..e })?;
            if attrs.iter().any(|(k, _)| *k == key) {
                return err(at, format!("duplicate attribute {key}"));
            }
            attrs.push((key, value.into_owned()));
        }
    }

    fn element(
        &mut self,
        name: &'a str,
        attrs: Vec<(&'a str, String)>,
        start: usize,
        empty: bool,
    ) -> Result<Token<'a>, XmlError> {
        if self.open.is_empty() {
            if self.seen_root {
                return err(start, "more than one document element");
            }
            self.seen_root = true;
        }
        let span = start..self.pos;
        if empty {
            Ok(Token::Empty { name, attrs, span })
        } else {
            self.open.push(name);
            Ok(Token::Start { name, attrs, span })
        }
    }

    fn step(&mut self) -> Result<Option<Token<'a>>, XmlError> {
        let start = self.pos;
        let rest = self.rest();
        if rest.is_empty() {
            if let Some(open) = self.open.last() {
                return err(self.src.len(), format!("unclosed element <{open}>"));
            }
            if !self.seen_root {
                return err(0, "no document element");
            }
            return Ok(None);
        }
        if !rest.starts_with('<') {
            let end = rest.find('<').unwrap_or(rest.len());
            let raw = &rest[..end];
            self.pos += end;
            if self.open.is_empty() && !raw.trim_matches([' ', '\t', '\r', '\n']).is_empty() {
                return err(start, "text outside the document element");
            }
            if let Some(i) = raw.find("]]>") {
                return err(start + i, "']]>' in text");
            }
            unescape(raw).map_err(|e| XmlError { position: start + e.position, ..e })?;
            return Ok(Some(Token::Text { raw, span: start..self.pos }));
        }
        if rest.starts_with("<!--") {
            self.pos += 4;
            self.until("-->", "comment")?;
            return Ok(Some(Token::Misc));
        }
        if rest.starts_with("<![CDATA[") {
            if self.open.is_empty() {
                return err(start, "CDATA outside the document element");
            }
            self.pos += 9;
            let r = self.until("]]>", "CDATA section")?;
            return Ok(Some(Token::CData { text: &self.src[r.clone()], span: r }));
        }
        if rest.starts_with("<?") {
            self.pos += 2;
            self.until("?>", "processing instruction")?;
            return Ok(Some(Token::Misc));
        }
        if rest.starts_with("<!DOCTYPE") {
            if self.seen_root {
                return err(start, "DOCTYPE after the document element");
            }
            let mut depth = 0i32;
            for (i, c) in rest.char_indices() {
                match c {
                    '[' => depth += 1,
                    ']' => depth -= 1,
                    '>' if depth <= 0 => {
                        self.pos += i + 1;
                        return Ok(Some(Token::Misc));
                    }
                    _ => {}
                }
            }
            return err(start, "unterminated DOCTYPE");
        }
        if rest.starts_with("</") {
            self.pos += 2;
            let name = self.name()?;
            self.skip_ws();
            if !self.rest().starts_with('>') {
                return err(self.pos, "expected '>'");
            }
            self.pos += 1;
            return match self.open.pop() {
                Some(open) if open == name => Ok(Some(Token::End { name, span: start..self.pos })),
                Some(open) => err(start, format!("end tag </{name}> does not match <{open}>")),
                None => err(start, format!("unexpected end tag </{name}>")),
            };
        }
        self.tag(start).map(Some)
    }
}

impl<'a> Iterator for Tokenizer<'a> {
    type Item = Result<Token<'a>, XmlError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.finished {
            return None;
        }
        match self.step() {
            Ok(Some(t)) => Some(Ok(t)),
            Ok(None) => {
                self.finished = true;
                None
            }
            Err(e) => {
                self.finished = true;
                Some(Err(e))
            }
        }
    }
}

/// Decodes predefined entities and character references.
pub(crate) fn unescape(raw: &str) -> Result<Cow<'_, str>, XmlError> {
    if !raw.contains('&') {
        return Ok(Cow::Borrowed(raw));
    }
    let mut out = String::with_capacity(raw.len());
    let mut rest = raw;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        let offset = raw.len() - rest.len() + amp;
        let tail = &rest[amp + 1..];
        let semi = match tail.find(';') {
            Some(s) if s <= 12 => s,
            _ => return err(offset, "unterminated entity reference"),
        };
        let name = &tail[..semi];
        let c = match name {
            "amp" => '&',
            "lt" => '<',
            "gt" => '>',
            "quot" => '"',
            "apos" => '\'',
            _ => {
                let code = if let Some(hex) = name.strip_prefix("#x") {
                    u32::from_str_radix(hex, 16).ok()
                } else if let Some(dec) = name.strip_prefix('#') {
                    dec.parse::<u32>().ok()
                } else {
                    None
                };
                match code.and_then(char::from_u32) {
                    Some(c) if c != '\0' => c,
                    _ => return err(offset, format!("unknown entity &{name};")),
                }
            }
        };
        out.push(c);
        rest = &tail[semi + 1..];
    }
    out.push_str(rest);
    Ok(Cow::Owned(out))
}

/// Escapes text for element content or double-quoted attribute values.
/// Carriage returns are written as references so they survive parsing.
pub(crate) fn escape(text: &str) -> Cow<'_, str> {
    if !text.contains(['&', '<', '>', '"', '\r']) {
        return Cow::Borrowed(text);
    }
    let mut out = String::with_capacity(text.len() + 8);
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\r' => out.push_str("&#13;"),
            c => out.push(c),
        }
    }
    Cow::Owned(out)
}
