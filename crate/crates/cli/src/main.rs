//! `ktmforge` command-line interface.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Exit status for command-line misuse.
pub const EXIT_USAGE: u8 = 64;

#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Parser, Debug)]
#[command(name = "ktmforge", version, about = "Search for knowledge-transfer models with an LLM in the loop")]
pub struct Cli {
    /// TOML configuration file (lowest precedence).
    #[arg(long, global = true, env = "KTM_CONFIG")]
    pub config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true, env = "KTM_SEED")]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, env = "KTM_OUT")]
    pub out: Option<PathBuf>,
    /// Log filter, e.g. `info` or `ktmforge=debug`.
    #[arg(long, global = true, env = "KTM_LOG_LEVEL")]
    pub log_level: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a benchmark instance from a preset.
    GenerateBenchmark(GenerateArgs),
    /// Compute the solo-GA reference values used for normalization.
    Calibrate(CalibrateArgs),
    /// Run the transfer-model search.
    Search(SearchArgs),
    /// Evaluate one transfer method on a benchmark.
    Evaluate(EvaluateArgs),
    /// Compare several methods over repeated runs.
    Compare(CompareArgs),
    /// Turn search event logs into plot-ready data.
    Report(ReportArgs),
    /// Built-in replay runner used by the sandbox for generated snippets.
    #[command(hide = true)]
    ReplayRunner { source: Option<String> },
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    /// Preset name: B1..B10, B1-mini..B10-mini, sphere-cluster-mini.
    #[arg(long, env = "KTM_PRESET")]
    pub preset: Option<String>,
    #[arg(short = 'o', long)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum EmtoPreset {
    Full,
    Mini,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum CostArg {
    WallClock,
    WorkUnits,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum BackendArg {
    Remote,
    Scripted,
    Generator,
}

#[derive(Args, Debug)]
pub struct CalibrateArgs {
    #[arg(long, env = "KTM_BENCHMARK")]
    pub benchmark: Option<PathBuf>,
    /// GA setting; defaults to `mini` for `*-mini` benchmarks, else `full`.
    #[arg(long, value_enum)]
    pub emto: Option<EmtoPreset>,
    /// Number of solo runs; seeds are `seed, seed+1, ...`.
    #[arg(long)]
    pub runs: Option<usize>,
    /// Explicit seed list (overrides --runs).
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    #[arg(short = 'o', long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct EvalInputs {
    #[arg(long, env = "KTM_BENCHMARK")]
    pub benchmark: Option<PathBuf>,
    #[arg(long, env = "KTM_CALIBRATION")]
    pub calibration: Option<PathBuf>,
    /// Snippet runner: `python`, `replay`, or a command containing `{source}`.
    #[arg(long, env = "KTM_RUNNER")]
    pub runner: Option<String>,
    /// Running-time objective; `work-units` makes runs reproducible.
    #[arg(long, value_enum)]
    pub cost_model: Option<CostArg>,
    /// Per-invocation sandbox timeout.
    #[arg(long)]
    pub timeout_ms: Option<u64>,
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    #[command(flatten)]
    pub inputs: EvalInputs,
    #[arg(long, value_enum, env = "KTM_BACKEND")]
    pub backend: Option<BackendArg>,
    /// Directory of scripted responses.
    #[arg(long, env = "KTM_PLAYLIST")]
    pub playlist: Option<PathBuf>,
    #[arg(long, env = "KTM_LLM_ENDPOINT")]
    pub endpoint: Option<String>,
    #[arg(long, env = "KTM_LLM_MODEL")]
    pub model: Option<String>,
    #[arg(long)]
    pub n_ktm: Option<usize>,
    #[arg(long)]
    pub g_ktm: Option<usize>,
    /// Seeds each candidate is evaluated on (default: the master seed).
    #[arg(long, value_delimiter = ',')]
    pub eval_seeds: Option<Vec<u64>>,
    /// Continue the run in this directory from its latest checkpoint.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Stop after this generation (a later --resume continues).
    #[arg(long)]
    pub stop_after: Option<usize>,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub inputs: EvalInputs,
    /// `vcm`, `smm`, `noop`, or a snippet file.
    #[arg(long)]
    pub method: String,
    #[arg(long)]
    pub runs: Option<usize>,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    #[command(flatten)]
    pub inputs: EvalInputs,
    /// Methods in column order: baseline names or snippet files.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    /// Independent runs per method; seeds are `seed, seed+1, ...`.
    #[arg(long)]
    pub runs: Option<usize>,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Event logs or search output directories.
    #[arg(required = true)]
    pub logs: Vec<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    if let Command::ReplayRunner { source } = cli.command {
        return ktmforge::sandbox::replay::replay_main(source);
    }
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
