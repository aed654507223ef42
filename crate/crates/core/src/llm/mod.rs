//! Prompt rendering, completion backends and snippet extraction.

mod backend;
mod extract;
mod prompt;

pub use backend::{
    build_backend, BackendKind, GeneratorBackend, GeneratorOptions, LlmBackend, LlmConfig, RemoteBackend,
    ScriptedBackend,
};
pub use extract::{extract_ktm, ExtractionResult};
pub use prompt::{wrap_in_tags, PromptBundle, PromptKind, PromptTemplates};
