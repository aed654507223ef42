use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Name every candidate transfer function must define.
pub const FUNCTION_NAME: &str = "LLMTransfer";

/// Source code of one candidate transfer model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnippetSpec {
    /// First 16 hex digits of the SHA-256 of `source`.
    pub id: String,
    pub source: String,
    /// Leading "Design Thought" comment; empty when absent.
    pub annotation: String,
    /// Tag selecting the runner, e.g. `python`.
    pub language: String,
}

impl SnippetSpec {
    pub fn new(source: impl Into<String>, language: impl Into<String>) -> Self {
        let source = source.into();
        SnippetSpec {
            id: content_id(&source),
            annotation: extract_annotation(&source),
            language: language.into(),
            source,
        }
    }

    pub fn has_annotation(&self) -> bool {
        !self.annotation.is_empty()
    }
}

pub fn content_id(source: &str) -> String {
    let digest = Sha256::digest(source.as_bytes());
    hex::encode(&digest[..8])
}

fn definition_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\b(?:def|fn|function)\s+LLMTransfer\s*[(<]").unwrap())
}

/// Number of `LLMTransfer` definitions in `source`.
pub fn definition_count(source: &str) -> usize {
    definition_regex().find_iter(source).count()
}

/// Extracts the "Design Thought" annotation: either the run of comment
/// lines starting at the first line mentioning it, or the docstring that
/// contains it. Whitespace is collapsed to single spaces.
pub fn extract_annotation(source: &str) -> String {
    let lower = source.to_ascii_lowercase();
    let Some(pos) = lower.find("design thought") else {
        return String::new();
    };
    let line_start = source[..pos].rfind('\n').map_or(0, |i| i + 1);
    let first_line = source[line_start..].lines().next().unwrap_or("");
    let trimmed = first_line.trim_start();

    let text = if trimmed.starts_with('#') || trimmed.starts_with("//") {
        let mut parts = Vec::new();
        for line in source[line_start..].lines() {
            let t = line.trim_start();
            let body = if let Some(b) = t.strip_prefix('#') {
                b
            } else if let Some(b) = t.strip_prefix("//") {
                b
            } else {
                break;
            };
            parts.push(body.trim().to_string());
        }
        parts.join(" ")
    } else {
        // Docstring or block comment: from the title up to the closing delimiter.
        let rest = &source[pos..];
        let end = ["\"\"\"", "'''", "*/"]
            .iter()
            .filter_map(|d| rest.find(d))
            .min()
            .unwrap_or(rest.len());
        rest[..end].to_string()
    };
    let start = text.to_ascii_lowercase().find("design thought").unwrap_or(0);
    text[start..].split_whitespace().collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comment_annotation() {
        let src = "import numpy as np\n# Design Thought: exchange elites\n#   across similar tasks.\ndef LLMTransfer(p, f, lo, hi, NT, seed):\n    return []\n";
        let s = SnippetSpec::new(src, "python");
        assert_eq!(s.annotation, "Design Thought: exchange elites across similar tasks.");
        assert_eq!(s.id.len(), 16);
        assert_eq!(definition_count(src), 1);
    }

    #[test]
    fn docstring_annotation() {
        let src = "def LLMTransfer(p, f, lo, hi, NT, seed):\n    \"\"\"Design Thought: map\n    good solutions.\"\"\"\n    return []\n";
        assert_eq!(extract_annotation(src), "Design Thought: map good solutions.");
    }

    #[test]
    fn missing_annotation_is_empty() {
        let s = SnippetSpec::new("def LLMTransfer(a):\n  pass\n", "python");
        assert!(!s.has_annotation());
    }

    #[test]
    fn counts_definitions() {
        assert_eq!(definition_count("def LLMTransfer(x): pass\ndef LLMTransfer(y): pass"), 2);
        assert_eq!(definition_count("LLMTransfer(x)"), 0);
        assert_eq!(definition_count("fn LLMTransfer<T>(x: T) {}"), 1);
    }

    #[test]
    fn id_depends_on_content() {
        assert_eq!(content_id("a"), content_id("a"));
        assert_ne!(content_id("a"), content_id("b"));
    }
}
