use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use rand::seq::IndexedRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::prompt::{wrap_in_tags, PromptBundle};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    Remote,
    Scripted,
    Generator,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmConfig {
    pub backend: BackendKind,
    /// Chat-completions URL (remote backend).
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Extra attempts after a failed request, and after an unusable completion.
    pub retries: u32,
    pub timeout_ms: u64,
    /// First backoff delay; doubles on every retry.
    pub backoff_ms: u64,
    /// Directory of response files (scripted backend).
    pub playlist: Option<PathBuf>,
    pub generator: GeneratorOptions,
    /// Language tag attached to extracted snippets.
    pub language: String,
    /// Directory overriding the built-in prompt templates.
    pub prompt_dir: Option<PathBuf>,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            backend: BackendKind::Generator,
            endpoint: String::new(),
            model: String::new(),
            api_key_env: "KTM_LLM_API_KEY".to_string(),
            temperature: 0.5,
            max_tokens: 4000,
            retries: 3,
            timeout_ms: 120_000,
            backoff_ms: 1_000,
            playlist: None,
            generator: GeneratorOptions::default(),
            language: "python".to_string(),
            prompt_dir: None,
        }
    }
}

impl LlmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(Error::config(format!("temperature {} outside [0, 2]", self.temperature)));
        }
        if self.max_tokens == 0 {
            return Err(Error::config("max_tokens must be positive"));
        }
        match self.backend {
            BackendKind::Remote if self.endpoint.is_empty() || self.model.is_empty() => {
                Err(Error::config("remote backend needs an endpoint and a model"))
            }
            BackendKind::Scripted if self.playlist.is_none() => Err(Error::config("scripted backend needs a playlist directory")),
            BackendKind::Generator => self.generator.validate(),
            _ => Ok(()),
        }
    }
}

/// Source of completions.
///
/// `cursor` exposes the only mutable state (the call counter) so that a
/// checkpointed search can resume exactly where it stopped.
pub trait LlmBackend: Send + Sync {
    fn name(&self) -> &'static str;
    fn complete(&self, bundle: &PromptBundle) -> Result<String>;
    fn cursor(&self) -> u64;
    fn set_cursor(&self, cursor: u64);
}

pub fn build_backend(cfg: &LlmConfig, seed: u64) -> Result<Box<dyn LlmBackend>> {
    cfg.validate()?;
    Ok(match cfg.backend {
        BackendKind::Remote => Box::new(RemoteBackend::new(cfg.clone())?),
        BackendKind::Scripted => Box::new(ScriptedBackend::from_dir(cfg.playlist.as_deref().expect("validated"))?),
        BackendKind::Generator => Box::new(GeneratorBackend::new(seed, cfg.generator.clone())),
    })
}

/// Replays response files in lexicographic file-name order, cycling when
/// the list is exhausted.
pub struct ScriptedBackend {
    responses: Vec<(String, String)>,
    cursor: AtomicU64,
}

impl ScriptedBackend {
    pub fn from_dir(dir: &Path) -> Result<Self> {
        let entries = std::fs::read_dir(dir).map_err(|e| Error::config(format!("playlist {}: {e}", dir.display())))?;
        let mut files: Vec<PathBuf> = entries
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.is_file())
            .collect();
        files.sort();
        let mut responses = Vec::with_capacity(files.len());
        for f in files {
            let text = std::fs::read_to_string(&f)?;
            let name = f.file_name().unwrap_or_default().to_string_lossy().into_owned();
            responses.push((name, text));
        }
        Self::from_responses(responses)
    }

    pub fn from_responses(responses: Vec<(String, String)>) -> Result<Self> {
        if responses.is_empty() {
            return Err(Error::config("scripted playlist is empty"));
        }
        Ok(ScriptedBackend {
            responses,
            cursor: AtomicU64::new(0),
        })
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

impl LlmBackend for ScriptedBackend {
    fn name(&self) -> &'static str {
        "scripted"
    }

    fn complete(&self, _bundle: &PromptBundle) -> Result<String> {
        let i = self.cursor.fetch_add(1, Ordering::SeqCst) as usize;
        Ok(self.responses[i % self.responses.len()].1.clone())
    }

    fn cursor(&self) -> u64 {
        self.cursor.load(Ordering::SeqCst)
    }

    fn set_cursor(&self, cursor: u64) {
        self.cursor.store(cursor, Ordering::SeqCst);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorOptions {
    /// Well-behaved transfer behaviors to draw from.
    pub behaviors: Vec<String>,
    /// Probability that a completion holds a failing snippet.
    pub failure_rate: f64,
    /// Probability that a completion has no usable tagged block.
    pub garbage_rate: f64,
    /// Range of `log10(work units)` reported by generated snippets.
    pub log_work: (f64, f64),
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        GeneratorOptions {
            behaviors: vec!["elite-exchange".into(), "echo-best".into(), "random".into()],
            failure_rate: 0.0,
            garbage_rate: 0.0,
            log_work: (2.0, 5.0),
        }
    }
}

impl GeneratorOptions {
    fn validate(&self) -> Result<()> {
        if self.behaviors.is_empty() {
            return Err(Error::config("generator needs at least one behavior"));
        }
        for b in &self.behaviors {
            if healthy_body(b).is_none() {
                return Err(Error::config(format!("unknown generator behavior {b:?}")));
            }
        }
        for p in [self.failure_rate, self.garbage_rate] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config("generator rates must lie in [0, 1]"));
            }
        }
        if !(self.log_work.0 <= self.log_work.1) {
            return Err(Error::config("generator log_work range is empty"));
        }
        Ok(())
    }
}

/// Offline backend producing valid, parameterized snippets for the replay
/// runner. Completion `k` depends only on `(seed, k)`.
pub struct GeneratorBackend {
    seed: u64,
    options: GeneratorOptions,
    cursor: AtomicU64,
}

impl GeneratorBackend {
    pub fn new(seed: u64, options: GeneratorOptions) -> Self {
        GeneratorBackend {
            seed,
            options,
            cursor: AtomicU64::new(0),
        }
    }

    /// The completion the backend returns for call index `k`.
    pub fn completion_at(&self, k: u64) -> String {
        let mut r = rng::stream(self.seed, rng::STREAM_GENERATOR + k);
        if r.random::<f64>() < self.options.garbage_rate {
            return GARBAGE.choose(&mut r).unwrap().to_string();
        }
        let source = if r.random::<f64>() < self.options.failure_rate {
            let (behavior, body) = *HOSTILE.choose(&mut r).unwrap();
            format!(
                "# replay: {behavior}\n# Design Thought: {} variant {k}.\nimport numpy as np\n\n\n{SIGNATURE}\n{body}",
                THOUGHTS.choose(&mut r).unwrap()
            )
        } else {
            let behavior = self.options.behaviors.choose(&mut r).unwrap().clone();
            let (lo, hi) = self.options.log_work;
            let work = 10f64.powf(lo + r.random::<f64>() * (hi - lo)).round() as u64;
            let step = (r.random::<f64>() * 100.0).round() / 100.0;
            let thought = format!(
                "{} {} {}",
                THOUGHTS.choose(&mut r).unwrap(),
                QUALIFIERS.choose(&mut r).unwrap(),
                behavior_phrase(&behavior)
            );
            format!(
                "# replay: {behavior} work={work}\n# Design Thought: {thought}.\nimport numpy as np\n\n\n{SIGNATURE}\n    step = {step}\n{}",
                healthy_body(&behavior).expect("validated behavior")
            )
        };
        format!("Here is the requested function.\n{}\n", wrap_in_tags(&source))
    }
}

impl LlmBackend for GeneratorBackend {
    fn name(&self) -> &'static str {
        "generator"
    }

    fn complete(&self, _bundle: &PromptBundle) -> Result<String> {
        let k = self.cursor.fetch_add(1, Ordering::SeqCst);
        Ok(self.completion_at(k))
    }

    fn cursor(&self) -> u64 {
        self.cursor.load(Ordering::SeqCst)
    }

    fn set_cursor(&self, cursor: u64) {
        self.cursor.store(cursor, Ordering::SeqCst);
    }
}

const SIGNATURE: &str = "def LLMTransfer(populations, fitnesses, lower_bounds, upper_bounds, NT, seed):";

const THOUGHTS: &[&str] = &[
    "Measure task similarity from sampled elite solutions and",
    "Pair each target problem with a randomly chosen source problem and",
    "Normalize every population into the unified unit space and",
    "Rank solutions by fitness to reduce negative transfer and",
    "Use an adaptive transfer strength that",
];

const QUALIFIERS: &[&str] = &["then", "carefully", "efficiently", "explicitly", "implicitly"];

fn behavior_phrase(behavior: &str) -> &'static str {
    match behavior {
        "elite-exchange" => "exchange elite solutions between similar problems",
        "echo-best" => "reinject the best solutions of each problem",
        "random" => "sample uniform exploratory solutions within the bounds",
        _ => "transfer solutions",
    }
}

fn healthy_body(behavior: &str) -> Option<&'static str> {
    Some(match behavior {
        "echo-best" => ECHO_BODY,
        "elite-exchange" => EXCHANGE_BODY,
        "random" => RANDOM_BODY,
        _ => return None,
    })
}

const ECHO_BODY: &str = "    out = []
    for pop, fit in zip(populations, fitnesses):
        order = np.argsort(np.asarray(fit), kind=\"stable\")
        out.append([list(map(float, pop[order[k % len(order)]])) for k in range(NT)])
    return out";

const EXCHANGE_BODY: &str = "    numt = len(populations)
    orders = [np.argsort(np.asarray(f), kind=\"stable\") for f in fitnesses]
    out = []
    for i in range(numt):
        lo_t, hi_t = np.asarray(lower_bounds[i]), np.asarray(upper_bounds[i])
        rows = []
        for k in range(NT):
            j = (i + 1 + k % max(numt - 1, 1)) % numt
            src = np.asarray(populations[j][orders[j][(k // max(numt - 1, 1)) % len(orders[j])]])
            u = (src - np.asarray(lower_bounds[j])) / (np.asarray(upper_bounds[j]) - np.asarray(lower_bounds[j]))
            rows.append((lo_t + u * (hi_t - lo_t)).tolist())
        out.append(rows)
    return out";

const RANDOM_BODY: &str = "    rng = np.random.default_rng(seed)
    return [
        rng.uniform(np.asarray(lo), np.asarray(hi), size=(NT, len(lo))).tolist()
        for lo, hi in zip(lower_bounds, upper_bounds)
    ]";

const HOSTILE: &[(&str, &str)] = &[
    ("infinite-loop", "    while True:\n        pass"),
    ("crash", "    def deeper(x):\n        return deeper(x + 1) + 1\n    return deeper(0)"),
    ("nan", "    return [[[float(\"nan\")] * len(lo) for _ in range(NT)] for lo in lower_bounds]"),
    ("wrong-shape", "    return [[list(row[:-1]) for row in pop[:NT]] for pop in populations]"),
    ("runtime-error", "    return np.asarray(populations[0]) @ np.asarray(populations[0])"),
    ("exit-code code=7", "    raise SystemExit(7)"),
];

const GARBAGE: &[&str] = &[
    "I am sorry, but I cannot help with that request.",
    "<LLMTransfer>\nx = 1\n</LLMTransfer>",
    "def LLMTransfer(populations, fitnesses, lower_bounds, upper_bounds, NT, seed):\n    return populations",
];

/// Chat-completions client with exponential-backoff retries.
pub struct RemoteBackend {
    cfg: LlmConfig,
    api_key: String,
    agent: ureq::Agent,
    calls: AtomicU64,
}

impl RemoteBackend {
    pub fn new(cfg: LlmConfig) -> Result<Self> {
        let api_key = std::env::var(&cfg.api_key_env)
            .map_err(|_| Error::config(format!("environment variable {} with the API key is not set", cfg.api_key_env)))?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(cfg.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(RemoteBackend {
            cfg,
            api_key,
            agent,
            calls: AtomicU64::new(0),
        })
    }

    fn attempt(&self, body: &str) -> std::result::Result<String, (bool, String)> {
        let mut resp = self
            .agent
            .post(&self.cfg.endpoint)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .header("Content-Type", "application/json")
            .send(body)
            .map_err(|e| (true, e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| (true, e.to_string()))?;
        if !(200..300).contains(&status) {
            let retryable = status == 429 || status >= 500;
            let head: String = text.chars().take(200).collect();
            return Err((retryable, format!("HTTP {status}: {head}")));
        }
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| (false, format!("invalid JSON: {e}")))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| (false, "response has no choices[0].message.content".to_string()))
    }
}

impl LlmBackend for RemoteBackend {
    fn name(&self) -> &'static str {
        "remote"
    }

    fn complete(&self, bundle: &PromptBundle) -> Result<String> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let body = serde_json::json!({
            "model": self.cfg.model,
            "temperature": self.cfg.temperature,
            "max_tokens": self.cfg.max_tokens,
            "messages": [
                {"role": "system", "content": bundle.system},
                {"role": "user", "content": bundle.user},
            ],
        })
        .to_string();
        let mut last = String::new();
        for attempt in 0..=self.cfg.retries {
            match self.attempt(&body) {
                Ok(content) => return Ok(content),
                Err((retryable, msg)) => {
                    log::warn!("completion attempt {} failed: {msg}", attempt + 1);
                    last = msg;
                    if !retryable {
                        break;
                    }
                    if attempt < self.cfg.retries {
                        let delay = self.cfg.backoff_ms.saturating_mul(1 << attempt.min(16));
                        std::thread::sleep(Duration::from_millis(delay));
                    }
                }
            }
        }
        Err(Error::Transport(last))
    }

    fn cursor(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }

    fn set_cursor(&self, cursor: u64) {
        self.calls.store(cursor, Ordering::SeqCst);
    }
}
