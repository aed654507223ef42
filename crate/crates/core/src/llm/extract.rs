use crate::sandbox::{definition_count, SnippetSpec};

const OPEN: &str = "<LLMTransfer>";
const CLOSE: &str = "</LLMTransfer>";

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExtractionResult {
    Parsed { snippet: SnippetSpec },
    NoTag,
    MultipleTags,
    EmptyBody,
}

impl ExtractionResult {
    pub fn kind(&self) -> &'static str {
        match self {
            ExtractionResult::Parsed { .. } => "parsed",
            ExtractionResult::NoTag => "no-tag",
            ExtractionResult::MultipleTags => "multiple-tags",
            ExtractionResult::EmptyBody => "empty-body",
        }
    }
}

/// Pulls the first `<LLMTransfer>…</LLMTransfer>` block out of a completion.
///
/// A block that nests another opening tag, or defines `LLMTransfer` more
/// than once, is `MultipleTags`. A block without any definition is
/// `EmptyBody`.
pub fn extract_ktm(text: &str, language: &str) -> ExtractionResult {
    let Some(open) = text.find(OPEN) else {
        return ExtractionResult::NoTag;
    };
    let after = &text[open + OPEN.len()..];
    let Some(close) = after.find(CLOSE) else {
        return ExtractionResult::NoTag;
    };
    let inner = &after[..close];
    if inner.contains(OPEN) {
        return ExtractionResult::MultipleTags;
    }
    let body = strip_fences(inner);
    match definition_count(body) {
        0 => ExtractionResult::EmptyBody,
        1 => ExtractionResult::Parsed {
            snippet: SnippetSpec::new(body, language),
        },
        _ => ExtractionResult::MultipleTags,
    }
}

fn strip_fences(inner: &str) -> &str {
    let mut s = inner.trim();
    if s.starts_with("```") {
        s = match s.find('\n') {
            Some(nl) => &s[nl + 1..],
            None => "",
        };
    }
    let t = s.trim_end();
    if let Some(stripped) = t.strip_suffix("```") {
        s = stripped;
    }
    s.trim()
}
