use std::sync::Arc;

use super::candidate::Evaluation;
use crate::benchmark::BenchmarkInstance;
use crate::emto::{run_emto, CalibrationTable, EmtoConfig};
use crate::error::{Error, Result};
use crate::sandbox::{static_screen, SandboxConfig, SandboxedSnippet, ScreenOutcome, SnippetSpec};

/// Turns a snippet into objectives. `Err` is reserved for host-side
/// problems; snippet failures come back as penalized evaluations.
pub trait CandidateEvaluator: Send + Sync {
    fn benchmark_id(&self) -> &str;
    fn evaluate(&self, snippet: &SnippetSpec) -> Result<Evaluation>;
}

/// Runs the multi-task GA with the snippet as transfer model on every
/// evaluation seed and averages `s` and `t`.
pub struct EmtoEvaluator {
    pub benchmark: Arc<BenchmarkInstance<f64>>,
    pub emto: EmtoConfig,
    pub calibration: CalibrationTable<f64>,
    pub sandbox: SandboxConfig,
    pub seeds: Vec<u64>,
}

impl EmtoEvaluator {
    pub fn new(
        benchmark: Arc<BenchmarkInstance<f64>>,
        emto: EmtoConfig,
        calibration: CalibrationTable<f64>,
        sandbox: SandboxConfig,
        seeds: Vec<u64>,
    ) -> Result<Self> {
        emto.validate()?;
        if seeds.is_empty() {
            return Err(Error::config("at least one evaluation seed is required"));
        }
        if calibration.benchmark_id != benchmark.id || calibration.f_min.len() != benchmark.numt() {
            return Err(Error::config(format!(
                "calibration is for {:?} ({} tasks) but the benchmark is {:?} ({} tasks)",
                calibration.benchmark_id,
                calibration.f_min.len(),
                benchmark.id,
                benchmark.numt()
            )));
        }
        sandbox.validate_for(benchmark.numt(), emto.nt, benchmark.dim())?;
        Ok(EmtoEvaluator {
            benchmark,
            emto,
            calibration,
            sandbox,
            seeds,
        })
    }
}

impl CandidateEvaluator for EmtoEvaluator {
    fn benchmark_id(&self) -> &str {
        &self.benchmark.id
    }

    fn evaluate(&self, snippet: &SnippetSpec) -> Result<Evaluation> {
        if let ScreenOutcome::Reject { reason } = static_screen(&snippet.source) {
            return Ok(Evaluation::penalized("rejected", reason));
        }
        let model = SandboxedSnippet::new(snippet.clone(), self.sandbox.clone());
        let (mut s, mut t, mut wall) = (0.0, 0.0, 0.0);
        for &seed in &self.seeds {
            match run_emto(&self.benchmark, &self.emto, &model, &self.calibration, seed) {
                Ok(r) => {
                    s += r.score;
                    t += r.time;
                    wall += r.wall_clock_secs;
                }
                Err(Error::TransferFailed { kind, message }) if kind == "configuration" => {
                    return Err(Error::Config(message));
                }
                Err(Error::TransferFailed { kind, message }) => return Ok(Evaluation::penalized(kind, message)),
                Err(e) => return Err(e),
            }
        }
        let n = self.seeds.len() as f64;
        let mut eval = Evaluation::valid(s / n, t / n);
        eval.wall_clock_secs = wall;
        Ok(eval)
    }
}

/// Evaluator backed by a closure, for tests and dry runs.
pub struct FnEvaluator<F> {
    pub benchmark_id: String,
    pub f: F,
}

impl<F> FnEvaluator<F>
where
    F: Fn(&SnippetSpec) -> Evaluation + Send + Sync,
{
    pub fn new(benchmark_id: impl Into<String>, f: F) -> Self {
        FnEvaluator {
            benchmark_id: benchmark_id.into(),
            f,
        }
    }
}

impl<F> CandidateEvaluator for FnEvaluator<F>
where
    F: Fn(&SnippetSpec) -> Evaluation + Send + Sync,
{
    fn benchmark_id(&self) -> &str {
        &self.benchmark_id
    }

    fn evaluate(&self, snippet: &SnippetSpec) -> Result<Evaluation> {
        Ok((self.f)(snippet))
    }
}
