//! Layered configuration: TOML file, then `KTM_*` environment variables,
//! then command-line flags. Env and flags are resolved together by clap;
//! this module holds the file layer and the merge helpers.

use std::path::{Path, PathBuf};

use anyhow::Context;
use ktmforge::benchmark::GeneratorConfig;
use ktmforge::emto::EmtoConfig;
use ktmforge::llm::LlmConfig;
use ktmforge::sandbox::SandboxConfig;
use ktmforge::search::Dominance;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub log_level: Option<String>,
    pub benchmark: BenchmarkSection,
    pub emto: Option<EmtoConfig>,
    pub calibration: CalibrationSection,
    pub search: SearchSection,
    pub llm: LlmConfig,
    pub sandbox: SandboxSection,
    pub compare: CompareSection,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkSection {
    pub preset: Option<String>,
    /// Explicit generator settings, used when no preset is named.
    pub generator: Option<GeneratorConfig>,
    pub file: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationSection {
    pub runs: Option<usize>,
    pub seeds: Option<Vec<u64>>,
    pub file: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSection {
    pub n_ktm: Option<usize>,
    pub g_ktm: Option<usize>,
    pub init_attempt_cap: Option<usize>,
    pub completion_retries: Option<u32>,
    pub dominance: Option<Dominance>,
    pub eval_seeds: Option<Vec<u64>>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SandboxSection {
    /// `python`, `replay`, or a command line containing `{source}`.
    pub runner: Option<String>,
    /// Full sandbox settings; `runner` still overrides the runner table.
    pub settings: Option<SandboxConfig>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSection {
    pub methods: Option<Vec<String>>,
    pub runs: Option<usize>,
}

pub fn load(path: Option<&Path>) -> anyhow::Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

/// First present value: flag/env, then file.
pub fn pick<T: Clone>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}
