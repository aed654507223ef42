use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::archive::ParetoArchive;
use super::candidate::{CandidateKtm, Evaluation, Lineage, Operator};
use super::evaluate::CandidateEvaluator;
use super::events::{EventBody, EventLog, PopulationEntry};
use super::pareto::Dominance;
use super::select::{assign_ranks, dynamic_parent_count, remove_worst, roulette_select};
use crate::error::{Error, Result};
use crate::llm::{extract_ktm, ExtractionResult, LlmBackend, PromptBundle, PromptTemplates};
use crate::rng::{self, Rng, RNG_ALGORITHM};
use crate::sandbox::{static_screen, ScreenOutcome, SnippetSpec};

pub const CHECKPOINT_FORMAT: &str = "ktmforge-search-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    /// Number of generations.
    pub g_ktm: usize,
    /// Population size.
    pub n_ktm: usize,
    /// Completions allowed for filling the initial population; `None` means `3·n_ktm`.
    pub init_attempt_cap: Option<usize>,
    /// Extra completions requested when a response has no usable snippet.
    pub completion_retries: u32,
    pub dominance: Dominance,
    /// Benchmark the evaluator must be bound to.
    pub benchmark_id: String,
    pub seed: u64,
    pub language: String,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            g_ktm: 10,
            n_ktm: 10,
            init_attempt_cap: None,
            completion_retries: 2,
            dominance: Dominance::Strict,
            benchmark_id: String::new(),
            seed: 0,
            language: "python".to_string(),
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_ktm < 4 {
            return Err(Error::config("n_ktm must be at least 4"));
        }
        if self.g_ktm < 1 {
            return Err(Error::config("g_ktm must be at least 1"));
        }
        Ok(())
    }

    pub fn mutation_threshold(&self) -> f64 {
        1.0 / self.n_ktm as f64
    }

    pub fn attempt_cap(&self) -> usize {
        self.init_attempt_cap.unwrap_or(3 * self.n_ktm)
    }

    /// Upper bound on fresh evaluations when initialization needs no re-prompts.
    pub fn max_evaluations(&self) -> usize {
        self.n_ktm + self.g_ktm * self.n_ktm
    }
}

#[derive(Clone, Debug, Default)]
pub struct SearchOptions {
    /// Directory for `events.jsonl` and `checkpoints/`; `None` keeps the log in memory.
    pub out_dir: Option<PathBuf>,
    /// Continue from the latest checkpoint in `out_dir` if there is one.
    pub resume: bool,
    /// Stop (without the final event) once this generation has completed.
    pub stop_after: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationSummary {
    pub gen: usize,
    #[serde(with = "super::floats")]
    pub min_s: f64,
    #[serde(with = "super::floats")]
    pub min_t: f64,
    pub population: Vec<PopulationEntry>,
}

pub struct SearchState {
    pub config: SearchConfig,
    pub population: Vec<CandidateKtm>,
    /// Last completed generation (0 after initialization).
    pub generation: usize,
    pub rng: Rng,
    pub archive: ParetoArchive,
    /// Snippet id → evaluation, so repeated snippets are evaluated once.
    pub cache: BTreeMap<String, Evaluation>,
    pub history: Vec<GenerationSummary>,
    pub next_serial: u64,
    pub evaluations: usize,
    pub skipped: usize,
    pub log: EventLog,
}

impl SearchState {
    fn fresh(config: SearchConfig, log: EventLog) -> Self {
        SearchState {
            rng: rng::stream(config.seed, rng::STREAM_SEARCH),
            config,
            population: Vec::new(),
            generation: 0,
            archive: ParetoArchive::default(),
            cache: BTreeMap::new(),
            history: Vec::new(),
            next_serial: 0,
            evaluations: 0,
            skipped: 0,
            log,
        }
    }

    pub fn valid_count(&self) -> usize {
        self.population.iter().filter(|c| c.is_valid()).count()
    }

    fn summary(&self) -> GenerationSummary {
        let min = |f: fn(&CandidateKtm) -> f64| self.population.iter().map(f).fold(f64::INFINITY, f64::min);
        GenerationSummary {
            gen: self.generation,
            min_s: min(|c| c.s),
            min_t: min(|c| c.t),
            population: self
                .population
                .iter()
                .map(|c| PopulationEntry {
                    id: c.id.clone(),
                    s: c.s,
                    t: c.t,
                    front_rank: c.front_rank,
                })
                .collect(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    rng_algorithm: String,
    config: SearchConfig,
    generation: usize,
    population: Vec<CandidateKtm>,
    archive: ParetoArchive,
    rng: Rng,
    backend_cursor: u64,
    next_serial: u64,
    next_seq: u64,
    cache: BTreeMap<String, Evaluation>,
    history: Vec<GenerationSummary>,
    evaluations: usize,
    skipped: usize,
}

pub struct SearchOutcome {
    pub state: SearchState,
    /// Valid members of the final first front, by ascending `s`.
    pub front: Vec<CandidateKtm>,
    /// Minimum-`s` member of `front`.
    pub headline: Option<CandidateKtm>,
    /// False when `stop_after` interrupted the run.
    pub completed: bool,
}

fn digest(text: &str) -> String {
    hex::encode(&Sha256::digest(text.as_bytes())[..8])
}

pub fn checkpoint_path(out_dir: &Path, generation: usize) -> PathBuf {
    out_dir.join("checkpoints").join(format!("gen-{generation:04}.json"))
}

/// Highest-numbered checkpoint in `out_dir`, if any.
pub fn latest_checkpoint(out_dir: &Path) -> Option<PathBuf> {
    let dir = out_dir.join("checkpoints");
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .ok()?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("gen-") && n.ends_with(".json"))
        })
        .collect();
    files.sort();
    files.pop()
}

struct Searcher<'a> {
    backend: &'a dyn LlmBackend,
    evaluator: &'a dyn CandidateEvaluator,
    templates: &'a PromptTemplates,
    out_dir: Option<&'a Path>,
}

impl Searcher<'_> {
    /// Prompts until a snippet is extracted or the retries run out.
    fn obtain(&self, st: &mut SearchState, bundle: &PromptBundle, parents: &[String]) -> Result<Option<SnippetSpec>> {
        let gen = st.generation;
        st.log.emit(
            gen,
            EventBody::Prompt {
                kind: bundle.kind,
                parents: parents.to_vec(),
                digest: digest(&format!("{}\n{}", bundle.system, bundle.user)),
            },
        )?;
        for _ in 0..=st.config.completion_retries {
            let text = match self.backend.complete(bundle) {
                Ok(t) => t,
                Err(Error::Transport(msg)) => {
                    st.log.emit(
                        gen,
                        EventBody::Completion {
                            chars: 0,
                            digest: String::new(),
                            error: Some(msg),
                        },
                    )?;
                    return Ok(None);
                }
                Err(e) => return Err(e),
            };
            st.log.emit(
                gen,
                EventBody::Completion {
                    chars: text.chars().count(),
                    digest: digest(&text),
                    error: None,
                },
            )?;
            let result = extract_ktm(&text, &st.config.language);
            let snippet = match &result {
                ExtractionResult::Parsed { snippet } => Some(snippet.clone()),
                _ => None,
            };
            st.log.emit(
                gen,
                EventBody::Extraction {
                    result: result.kind().to_string(),
                    snippet: snippet.as_ref().map(|s| s.id.clone()),
                    annotation: snippet.as_ref().filter(|s| s.has_annotation()).map(|s| s.annotation.clone()),
                },
            )?;
            if snippet.is_some() {
                return Ok(snippet);
            }
        }
        Ok(None)
    }

    fn evaluate(&self, st: &mut SearchState, snippet: &SnippetSpec) -> Result<Evaluation> {
        let gen = st.generation;
        if let Some(e) = st.cache.get(&snippet.id).cloned() {
            st.log.emit(
                gen,
                EventBody::Objectives {
                    snippet: snippet.id.clone(),
                    s: e.s,
                    t: e.t,
                    cached: true,
                    wall_clock_secs: 0.0,
                },
            )?;
            return Ok(e);
        }
        let eval = match static_screen(&snippet.source) {
            ScreenOutcome::Reject { reason } => Evaluation::penalized("rejected", reason),
            ScreenOutcome::Pass => self.evaluator.evaluate(snippet)?,
        };
        st.evaluations += 1;
        st.log.emit(
            gen,
            EventBody::Verdict {
                snippet: snippet.id.clone(),
                kind: eval.verdict.kind.clone(),
                message: eval.verdict.message.clone(),
            },
        )?;
        st.log.emit(
            gen,
            EventBody::Objectives {
                snippet: snippet.id.clone(),
                s: eval.s,
                t: eval.t,
                cached: false,
                wall_clock_secs: eval.wall_clock_secs,
            },
        )?;
        st.cache.insert(snippet.id.clone(), eval.clone());
        Ok(eval)
    }

    fn add(&self, st: &mut SearchState, snippet: SnippetSpec, eval: &Evaluation, lineage: Lineage) -> Result<()> {
        let c = CandidateKtm::new(st.next_serial, snippet, eval, st.generation, lineage);
        st.next_serial += 1;
        let body = match c.lineage.operator {
            Operator::Init => EventBody::Init {
                candidate: c.id.clone(),
                snippet: c.snippet.id.clone(),
            },
            op => EventBody::Insert {
                candidate: c.id.clone(),
                snippet: c.snippet.id.clone(),
                operator: op,
                parents: c.lineage.parents.clone(),
            },
        };
        st.log.emit(st.generation, body)?;
        st.archive.offer(&c, st.config.dominance);
        st.population.push(c);
        Ok(())
    }

    fn remove(&self, st: &mut SearchState) -> Result<()> {
        let removed = remove_worst(&mut st.population, st.config.dominance);
        st.log.emit(
            st.generation,
            EventBody::Removal {
                candidate: removed.id,
                front_rank: removed.front_rank,
                crowding: removed.crowding,
                birth_gen: removed.birth_gen,
            },
        )
    }

    fn emit_sort(&self, st: &mut SearchState) -> Result<()> {
        let fronts = assign_ranks(&mut st.population, st.config.dominance);
        let ids = fronts
            .iter()
            .map(|f| f.iter().map(|&i| st.population[i].id.clone()).collect())
            .collect();
        st.log.emit(st.generation, EventBody::Sort { fronts: ids })
    }

    /// One init attempt: a screened, evaluated snippet, or `None`.
    fn init_candidate(&self, st: &mut SearchState, bundle: &PromptBundle) -> Result<Option<(SnippetSpec, Evaluation)>> {
        let Some(snippet) = self.obtain(st, bundle, &[])? else {
            st.skipped += 1;
            st.log.emit(st.generation, EventBody::Skip { reason: "no usable completion".into() })?;
            return Ok(None);
        };
        if let ScreenOutcome::Reject { reason } = static_screen(&snippet.source) {
            st.log.emit(
                st.generation,
                EventBody::Verdict {
                    snippet: snippet.id.clone(),
                    kind: "rejected".into(),
                    message: reason,
                },
            )?;
            return Ok(None);
        }
        let eval = self.evaluate(st, &snippet)?;
        Ok(Some((snippet, eval)))
    }

    fn initialize(&self, st: &mut SearchState) -> Result<()> {
        let n = st.config.n_ktm;
        let cap = st.config.attempt_cap();
        let bundle = self.templates.render_init()?;
        let lineage = Lineage {
            operator: Operator::Init,
            parents: vec![],
        };
        let mut attempts = 0;
        while st.population.len() < n {
            if attempts >= cap {
                return Err(Error::config(format!(
                    "initialization produced {} of {n} candidates in {attempts} attempts",
                    st.population.len()
                )));
            }
            attempts += 1;
            if let Some((snippet, eval)) = self.init_candidate(st, &bundle)? {
                self.add(st, snippet, &eval, lineage.clone())?;
            }
        }
        // Selection needs two valid parents; keep replacing penalized members.
        while st.valid_count() < 2 {
            if attempts >= cap {
                return Err(Error::config(format!(
                    "initialization found {} valid candidates in {attempts} attempts; at least 2 are required",
                    st.valid_count()
                )));
            }
            attempts += 1;
            if let Some((snippet, eval)) = self.init_candidate(st, &bundle)? {
                self.add(st, snippet, &eval, lineage.clone())?;
                self.remove(st)?;
            }
        }
        self.emit_sort(st)
    }

    fn iteration(&self, st: &mut SearchState) -> Result<()> {
        let n = st.config.n_ktm;
        let ns = dynamic_parent_count(&mut st.rng, n);
        let picked = roulette_select(&st.population, ns, &mut st.rng)?;
        let parents: Vec<(SnippetSpec, f64, f64)> = picked
            .iter()
            .map(|&i| {
                let c = &st.population[i];
                (c.snippet.clone(), c.s, c.t)
            })
            .collect();
        let parent_ids: Vec<String> = picked.iter().map(|&i| st.population[i].id.clone()).collect();
        let bundle = self.templates.render_generation(&parents)?;
        let Some(mut child) = self.obtain(st, &bundle, &parent_ids)? else {
            st.skipped += 1;
            return st.log.emit(
                st.generation,
                EventBody::Skip {
                    reason: "no usable completion for the generation prompt".into(),
                },
            );
        };
        let mut operator = Operator::Generation;
        if st.rng.random::<f64>() < st.config.mutation_threshold() {
            let bundle = self.templates.render_mutation(&child)?;
            match self.obtain(st, &bundle, &parent_ids)? {
                Some(m) => {
                    child = m;
                    operator = Operator::Mutation;
                }
                None => st.log.emit(
                    st.generation,
                    EventBody::Skip {
                        reason: "mutation produced no usable snippet; keeping the generated one".into(),
                    },
                )?,
            }
        }
        let eval = self.evaluate(st, &child)?;
        self.add(
            st,
            child,
            &eval,
            Lineage {
                operator,
                parents: parent_ids,
            },
        )?;
        self.remove(st)?;
        self.emit_sort(st)
    }

    fn checkpoint(&self, st: &SearchState) -> Result<()> {
        let Some(dir) = self.out_dir else {
            return Ok(());
        };
        let ck = Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            rng_algorithm: RNG_ALGORITHM.into(),
            config: st.config.clone(),
            generation: st.generation,
            population: st.population.clone(),
            archive: st.archive.clone(),
            rng: st.rng.clone(),
            backend_cursor: self.backend.cursor(),
            next_serial: st.next_serial,
            next_seq: st.log.next_seq(),
            cache: st.cache.clone(),
            history: st.history.clone(),
            evaluations: st.evaluations,
            skipped: st.skipped,
        };
        let path = checkpoint_path(dir, st.generation);
        std::fs::create_dir_all(path.parent().unwrap())?;
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, serde_json::to_string(&ck).expect("checkpoint serializes"))?;
        std::fs::rename(&tmp, &path)?;
        Ok(())
    }

    fn restore(&self, cfg: &SearchConfig, path: &Path, log_path: &Path) -> Result<SearchState> {
        let text = std::fs::read_to_string(path)?;
        let head: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::from_json(e, &text))?;
        if head["format"] != CHECKPOINT_FORMAT {
            return Err(Error::Parse {
                offset: 0,
                message: format!("{} is not a search checkpoint", path.display()),
            });
        }
        let version = head["version"].as_u64().unwrap_or(0) as u32;
        if version > CHECKPOINT_VERSION {
            return Err(Error::Version {
                found: version,
                supported: CHECKPOINT_VERSION,
            });
        }
        let ck: Checkpoint = serde_json::from_str(&text).map_err(|e| Error::from_json(e, &text))?;
        let mut saved = ck.config.clone();
        saved.g_ktm = cfg.g_ktm;
        if &saved != cfg {
            return Err(Error::config("checkpoint was written with a different search configuration"));
        }
        self.backend.set_cursor(ck.backend_cursor);
        let log = EventLog::resume(log_path, ck.next_seq)?;
        Ok(SearchState {
            config: cfg.clone(),
            population: ck.population,
            generation: ck.generation,
            rng: ck.rng,
            archive: ck.archive,
            cache: ck.cache,
            history: ck.history,
            next_serial: ck.next_serial,
            evaluations: ck.evaluations,
            skipped: ck.skipped,
            log,
        })
    }

    fn end_generation(&self, st: &mut SearchState) -> Result<()> {
        let summary = st.summary();
        st.log.emit(
            st.generation,
            EventBody::GenerationEnd {
                min_s: summary.min_s,
                min_t: summary.min_t,
                population: summary.population.clone(),
            },
        )?;
        st.history.push(summary);
        self.checkpoint(st)
    }
}

/// Runs the whole search: initialization, then `g_ktm` generations of
/// `n_ktm` select → generate → (maybe) mutate → evaluate → insert →
/// remove-worst iterations.
pub fn run_search(
    cfg: &SearchConfig,
    backend: &dyn LlmBackend,
    evaluator: &dyn CandidateEvaluator,
    templates: &PromptTemplates,
    opts: &SearchOptions,
) -> Result<SearchOutcome> {
    cfg.validate()?;
    if evaluator.benchmark_id() != cfg.benchmark_id {
        return Err(Error::config(format!(
            "search targets benchmark {:?} but the evaluator is bound to {:?}",
            cfg.benchmark_id,
            evaluator.benchmark_id()
        )));
    }
    let searcher = Searcher {
        backend,
        evaluator,
        templates,
        out_dir: opts.out_dir.as_deref(),
    };
    let log_path = opts.out_dir.as_ref().map(|d| d.join("events.jsonl"));
    if let Some(d) = &opts.out_dir {
        std::fs::create_dir_all(d)?;
    }

    let resume_from = if opts.resume {
        opts.out_dir.as_deref().and_then(latest_checkpoint)
    } else {
        None
    };
    let mut st = match (resume_from, &log_path) {
        (Some(ck), Some(lp)) => {
            log::info!("resuming from {}", ck.display());
            searcher.restore(cfg, &ck, lp)?
        }
        _ => {
            let log = match &log_path {
                Some(p) => EventLog::create(p)?,
                None => EventLog::in_memory(),
            };
            let mut st = SearchState::fresh(cfg.clone(), log);
            st.log.emit(
                0,
                EventBody::Start {
                    n_ktm: cfg.n_ktm,
                    g_ktm: cfg.g_ktm,
                    seed: cfg.seed,
                    benchmark: cfg.benchmark_id.clone(),
                    backend: backend.name().to_string(),
                },
            )?;
            searcher.initialize(&mut st)?;
            searcher.end_generation(&mut st)?;
            st
        }
    };

    while st.generation < cfg.g_ktm {
        if opts.stop_after.is_some_and(|k| st.generation >= k) {
            return Ok(finish(st, false));
        }
        st.generation += 1;
        for _ in 0..cfg.n_ktm {
            searcher.iteration(&mut st)?;
            debug_assert_eq!(st.population.len(), cfg.n_ktm);
        }
        searcher.end_generation(&mut st)?;
    }

    let outcome = finish(st, true);
    let mut st = outcome.state;
    st.log.emit(
        st.generation,
        EventBody::End {
            headline: outcome.headline.as_ref().map(|c| c.id.clone()),
            front: outcome.front.iter().map(|c| c.id.clone()).collect(),
            evaluations: st.evaluations,
        },
    )?;
    Ok(SearchOutcome { state: st, ..outcome })
}

fn finish(mut st: SearchState, completed: bool) -> SearchOutcome {
    assign_ranks(&mut st.population, st.config.dominance);
    let mut front: Vec<CandidateKtm> = st
        .population
        .iter()
        .filter(|c| c.front_rank == 1 && c.is_valid())
        .cloned()
        .collect();
    front.sort_by(|a, b| a.s.partial_cmp(&b.s).unwrap().then(a.serial.cmp(&b.serial)));
    let headline = front.first().cloned();
    SearchOutcome {
        state: st,
        front,
        headline,
        completed,
    }
}
