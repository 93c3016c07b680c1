//! Manual corrections to a programmatic segmentation.
//!
//! Edits never discard existing segments; the touched segments are marked
//! [`Origin::Manual`] so that later processing can keep them.

use super::{Origin, SegError, Segment, SegmentPath, SegmentedText, Span};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ManualEdit {
    /// Split the addressed segment in two at byte offset `at`.
    Split { path: SegmentPath, at: usize },
    /// Merge the addressed segment with its next sibling.
    Merge { path: SegmentPath },
    /// Move the boundary between the addressed segment and its next sibling
    /// to byte offset `to`.
    MoveBoundary { path: SegmentPath, to: usize },
}

fn invalid(msg: impl Into<String>) -> SegError {
    SegError::InvalidEdit(msg.into())
}

fn split_children(children: Vec<Segment>, at: usize) -> Result<(Vec<Segment>, Vec<Segment>), SegError> {
    let mut left = Vec::new();
    let mut right = Vec::new();
    for child in children {
        if child.span.end <= at {
            left.push(child);
        } else if child.span.start >= at {
            right.push(child);
        } else {
            return Err(invalid(format!(
                "offset {at} falls inside child segment {}..{}",
                child.span.start, child.span.end
            )));
        }
    }
    Ok((left, right))
}

/// Applies one edit, returning a new text; the input is untouched.
pub fn apply_manual_edit(st: &SegmentedText, edit: &ManualEdit) -> Result<SegmentedText, SegError> {
    let source = st.source();
    let mut root = st.root().clone();
    let (path, index) = match edit {
        ManualEdit::Split { path, .. } | ManualEdit::Merge { path } | ManualEdit::MoveBoundary { path, .. } => {
            let (last, parent) = path.0.split_last().ok_or_else(|| invalid("the file segment cannot be edited"))?;
            (parent.to_vec(), *last)
        }
    };
    let parent = root.get_mut(&path).ok_or_else(|| invalid("no segment at that path"))?;
    if index >= parent.children.len() {
        return Err(invalid("no segment at that path"));
    }

    match edit {
        ManualEdit::Split { at, .. } => {
            let at = *at;
            let target = &parent.children[index];
            if at <= target.span.start || at >= target.span.end || !source.is_char_boundary(at) {
                return Err(invalid(format!(
                    "split offset {at} is not a character boundary strictly inside {}..{}",
                    target.span.start, target.span.end
                )));
            }
            let target = parent.children.remove(index);
            let (left_children, right_children) = split_children(target.children, at)?;
            let left = Segment {
                kind: target.kind,
                span: Span::new(target.span.start, at),
                children: left_children,
                record_uri: target.record_uri.clone(),
                origin: Origin::Manual,
                lang: target.lang,
            };
            let right = Segment {
                kind: target.kind,
                span: Span::new(at, target.span.end),
                children: right_children,
                record_uri: None,
                origin: Origin::Manual,
                lang: target.lang,
            };
            parent.children.insert(index, right);
            parent.children.insert(index, left);
        }
        ManualEdit::Merge { .. } => {
            if index + 1 >= parent.children.len() {
                return Err(invalid("no next sibling to merge with"));
            }
            if parent.children[index].kind != parent.children[index + 1].kind {
                return Err(invalid("cannot merge segments of different kinds"));
            }
            let second = parent.children.remove(index + 1);
            let first = &mut parent.children[index];
            first.span.end = second.span.end;
            first.children.extend(second.children);
            if first.record_uri != second.record_uri {
                first.record_uri = None;
            }
            if first.lang != second.lang {
                first.lang = None;
            }
            first.origin = Origin::Manual;
        }
        ManualEdit::MoveBoundary { to, .. } => {
            let to = *to;
            if index + 1 >= parent.children.len() {
                return Err(invalid("no next sibling to move the boundary against"));
            }
            let left_start = parent.children[index].span.start;
            let right_end = parent.children[index + 1].span.end;
            if to <= left_start || to >= right_end || !source.is_char_boundary(to) {
                return Err(invalid(format!("boundary {to} must lie strictly inside {left_start}..{right_end}")));
            }
            let right = parent.children.remove(index + 1);
            let left = parent.children.remove(index);
            let mut all = left.children;
            all.extend(right.children);
            let (lc, rc) = split_children(all, to)?;
            let left = Segment { span: Span::new(left_start, to), children: lc, origin: Origin::Manual, ..left };
            let right = Segment { span: Span::new(to, right_end), children: rc, origin: Origin::Manual, ..right };
            parent.children.insert(index, right);
            parent.children.insert(index, left);
        }
    }
    st.replace_root(root)
}
