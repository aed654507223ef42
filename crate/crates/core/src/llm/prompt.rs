use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

use regex::{Captures, Regex};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sandbox::SnippetSpec;

/// Rendered system and user messages for one completion.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub kind: PromptKind,
    pub system: String,
    pub user: String,
    /// Placeholder name (without `#`) → substituted text.
    pub placeholders: BTreeMap<String, String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptKind {
    Init,
    Generation,
    Mutation,
}

/// The six template texts. Built-in copies are compiled in; a directory
/// with the same file names can override them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PromptTemplates {
    pub system: String,
    pub fscot: String,
    pub format: String,
    pub init_user: String,
    pub generation_user: String,
    pub mutation_user: String,
}

const FILES: [&str; 6] = [
    "system.txt",
    "fscot.txt",
    "format.txt",
    "init_user.txt",
    "generation_user.txt",
    "mutation_user.txt",
];

impl Default for PromptTemplates {
    fn default() -> Self {
        PromptTemplates {
            system: include_str!("../../prompts/system.txt").to_string(),
            fscot: include_str!("../../prompts/fscot.txt").to_string(),
            format: include_str!("../../prompts/format.txt").to_string(),
            init_user: include_str!("../../prompts/init_user.txt").to_string(),
            generation_user: include_str!("../../prompts/generation_user.txt").to_string(),
            mutation_user: include_str!("../../prompts/mutation_user.txt").to_string(),
        }
    }
}

impl PromptTemplates {
    pub fn from_dir(dir: &Path) -> Result<Self> {
        let mut texts = Vec::with_capacity(FILES.len());
        for name in FILES {
            let path = dir.join(name);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| Error::config(format!("prompt template {}: {e}", path.display())))?;
            texts.push(text);
        }
        let mut it = texts.into_iter();
        let mut next = || it.next().unwrap();
        Ok(PromptTemplates {
            system: next(),
            fscot: next(),
            format: next(),
            init_user: next(),
            generation_user: next(),
            mutation_user: next(),
        })
    }

    fn bundle(&self, kind: PromptKind, user_template: &str, values: BTreeMap<String, String>) -> Result<PromptBundle> {
        Ok(PromptBundle {
            kind,
            system: self.system.trim_end().to_string(),
            user: substitute(user_template.trim_end(), &values)?,
            placeholders: values,
        })
    }

    fn common(&self) -> BTreeMap<String, String> {
        let mut v = BTreeMap::new();
        v.insert("FORMAT".to_string(), self.format.trim_end().to_string());
        v.insert("FSCOT".to_string(), self.fscot.trim_end().to_string());
        v
    }

    pub fn render_init(&self) -> Result<PromptBundle> {
        self.bundle(PromptKind::Init, &self.init_user, self.common())
    }

    /// `parents` are `(snippet, s, t)`; blocks are emitted worst `s` first.
    pub fn render_generation(&self, parents: &[(SnippetSpec, f64, f64)]) -> Result<PromptBundle> {
        if parents.is_empty() {
            return Err(Error::invalid("generation prompt needs at least one parent"));
        }
        let mut order: Vec<&(SnippetSpec, f64, f64)> = parents.iter().collect();
        order.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
        let blocks: Vec<String> = order
            .iter()
            .map(|(snippet, s, t)| {
                format!(
                    "{}\nThe averaged normalized objective value is {s:.4} and the running time is {t:.4}.",
                    wrap_in_tags(&snippet.source)
                )
            })
            .collect();
        let mut values = BTreeMap::new();
        values.insert("N".to_string(), parents.len().to_string());
        values.insert("MLIST".to_string(), blocks.join("\n"));
        self.bundle(PromptKind::Generation, &self.generation_user, values)
    }

    pub fn render_mutation(&self, ktm: &SnippetSpec) -> Result<PromptBundle> {
        let mut values = self.common();
        values.insert("KTM".to_string(), ktm.source.trim().to_string());
        self.bundle(PromptKind::Mutation, &self.mutation_user, values)
    }
}

/// `<LLMTransfer>\n{source}\n</LLMTransfer>`.
pub fn wrap_in_tags(source: &str) -> String {
    format!("<LLMTransfer>\n{}\n</LLMTransfer>", source.trim())
}

fn placeholder_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"#([A-Z][A-Z_]*)#").unwrap())
}

/// Replaces every `#NAME#` of the template in a single pass so that
/// substituted text (which may itself contain `#`) is never rescanned.
fn substitute(template: &str, values: &BTreeMap<String, String>) -> Result<String> {
    let mut missing = None;
    let out = placeholder_regex().replace_all(template, |c: &Captures| match values.get(&c[1]) {
        Some(v) => v.clone(),
        None => {
            missing.get_or_insert_with(|| c[1].to_string());
            c[0].to_string()
        }
    });
    match missing {
        Some(name) => Err(Error::config(format!("unresolved placeholder #{name}#"))),
        None => Ok(out.into_owned()),
    }
}
