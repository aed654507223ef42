//! Helpers shared by the search-level integration tests.
#![allow(dead_code)]

use std::sync::atomic::{AtomicU64, Ordering};

use ktmforge::error::{Error, Result};
use ktmforge::llm::{wrap_in_tags, LlmBackend, PromptBundle};
use ktmforge::sandbox::SnippetSpec;
use ktmforge::search::{Evaluation, FnEvaluator};

/// Snippet whose objectives are read back by [`tagged_evaluator`].
pub fn tagged_source(label: &str, s: f64, t: f64) -> String {
    format!(
        "# Design Thought: {label} adaptive transfer of elite solutions.\n# objectives s={s} t={t}\n\
         def LLMTransfer(populations, fitness, lower, upper, nt):\n    return [p[:nt] for p in populations]\n"
    )
}

pub fn penalized_source(label: &str) -> String {
    format!(
        "# Design Thought: {label} broken transfer.\n# objectives penalize\n\
         def LLMTransfer(populations, fitness, lower, upper, nt):\n    raise ValueError('no')\n"
    )
}

pub fn respond(source: &str) -> String {
    format!("Here is the design.\n{}\nNo further explanation.", wrap_in_tags(source))
}

pub fn tagged_evaluator(benchmark: &str) -> FnEvaluator<impl Fn(&SnippetSpec) -> Evaluation + Send + Sync> {
    FnEvaluator::new(benchmark, |snip: &SnippetSpec| {
        let line = snip
            .source
            .lines()
            .find_map(|l| l.strip_prefix("# objectives "))
            .expect("tagged snippet");
        if line.trim() == "penalize" {
            return Evaluation::penalized("runtime-error", "scripted failure");
        }
        let mut s = f64::NAN;
        let mut t = f64::NAN;
        for kv in line.split_whitespace() {
            match kv.split_once('=') {
                Some(("s", v)) => s = v.parse().unwrap(),
                Some(("t", v)) => t = v.parse().unwrap(),
                _ => {}
            }
        }
        Evaluation::valid(s, t)
    })
}

/// Backend whose `k`-th completion is `f(k)`, or a transport error when
/// `f` returns `None`.
pub struct FnBackend<F> {
    pub f: F,
    cursor: AtomicU64,
}

impl<F: Fn(u64) -> Option<String> + Send + Sync> FnBackend<F> {
    pub fn new(f: F) -> Self {
        FnBackend {
            f,
            cursor: AtomicU64::new(0),
        }
    }
}

impl<F: Fn(u64) -> Option<String> + Send + Sync> LlmBackend for FnBackend<F> {
    fn name(&self) -> &'static str {
        "fn"
    }

    fn complete(&self, _bundle: &PromptBundle) -> Result<String> {
        let k = self.cursor.fetch_add(1, Ordering::SeqCst);
        (self.f)(k).ok_or_else(|| Error::Transport(format!("call {k} refused")))
    }

    fn cursor(&self) -> u64 {
        self.cursor.load(Ordering::SeqCst)
    }

    fn set_cursor(&self, cursor: u64) {
        self.cursor.store(cursor, Ordering::SeqCst);
    }
}

/// Pseudo-random but reproducible objectives for completion `k`.
pub fn hashed_objectives(k: u64) -> (f64, f64) {
    let h = k.wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(17);
    let s = 0.3 + (h % 1000) as f64 / 1000.0;
    let t = 1.0 + ((h >> 20) % 1000) as f64 / 100.0;
    (s, t)
}

/// Strict-strict dominance written out independently of the library.
pub fn oracle_dominates(x: (f64, f64), y: (f64, f64)) -> bool {
    x.0 < y.0 && x.1 < y.1
}

/// O(n²) peeling: front 1 is everything no remaining point dominates.
pub fn oracle_ranks(points: &[(f64, f64)]) -> Vec<usize> {
    let n = points.len();
    let mut rank = vec![0usize; n];
    let mut left: Vec<usize> = (0..n).collect();
    let mut r = 1;
    while !left.is_empty() {
        let front: Vec<usize> = left
            .iter()
            .copied()
            .filter(|&i| !left.iter().any(|&j| oracle_dominates(points[j], points[i])))
            .collect();
        assert!(!front.is_empty(), "dominance cycle");
        for &i in &front {
            rank[i] = r;
        }
        left.retain(|i| !front.contains(i));
        r += 1;
    }
    rank
}
