//! Textual annotation editing. Predictions are spliced into the original
//! source at the recorded slot offsets; everything else keeps its original
//! formatting byte for byte.

use crate::frontend::SlotInfo;

enum Edit {
    /// Replace `[start, end)` with text.
    Replace {
        start: usize,
        end: usize,
        text: String,
    },
    Insert {
        at: usize,
        text: String,
    },
}

impl Edit {
    fn position(&self) -> usize {
        match self {
            Edit::Replace { start, .. } => *start,
            Edit::Insert { at, .. } => *at,
        }
    }
}

fn apply(source: &str, mut edits: Vec<Edit>) -> String {
    edits.sort_by_key(|e| std::cmp::Reverse(e.position()));
    let mut out = source.to_string();
    for edit in edits {
        match edit {
            Edit::Replace { start, end, text } => out.replace_range(start..end, &text),
            Edit::Insert { at, text } => out.insert_str(at, &text),
        }
    }
    out
}

/// Extends an annotation deletion backwards over the whitespace that
/// separated it from the name.
fn with_leading_space(source: &str, start: usize) -> usize {
    let bytes = source.as_bytes();
    let mut s = start;
    while s > 0 && (bytes[s - 1] == b' ' || bytes[s - 1] == b'\t') {
        s -= 1;
    }
    s
}

/// Sets each slot's annotation to the paired type name (`None` removes it).
pub fn rewrite_annotations(source: &str, slots: &[SlotInfo], types: &[Option<&str>]) -> String {
    let edits = slots
        .iter()
        .zip(types)
        .filter_map(|(slot, ty)| match (slot.annotation_span, ty) {
            (Some(span), Some(ty)) => Some(Edit::Replace {
                start: span.start,
                end: span.end,
                text: format!(": {ty}"),
            }),
            (Some(span), None) => Some(Edit::Replace {
                start: with_leading_space(source, span.start),
                end: span.end,
                text: String::new(),
            }),
            (None, Some(ty)) => Some(Edit::Insert {
                at: slot.insert_offset,
                text: format!(": {ty}"),
            }),
            (None, None) => None,
        })
        .collect();
    apply(source, edits)
}

/// Removes every annotation from the source text.
pub fn strip_source(source: &str, slots: &[SlotInfo]) -> String {
    rewrite_annotations(source, slots, &vec![None; slots.len()])
}
