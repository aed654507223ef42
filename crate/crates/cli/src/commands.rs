use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use ktmforge::benchmark::{generate_benchmark, load_benchmark, save_benchmark, GeneratorConfig};
use ktmforge::emto::{calibrate_fmin, load_calibration, run_emto, save_calibration, CostModel, EmtoConfig};
use ktmforge::llm::{build_backend, BackendKind, PromptTemplates};
use ktmforge::report::{compare_methods, report_from_events, table_csv, table_text, write_report};
use ktmforge::sandbox::{SandboxConfig, SandboxedSnippet, SnippetSpec, SOURCE_PLACEHOLDER};
use ktmforge::search::{read_events, run_search, EmtoEvaluator, SearchConfig, SearchOptions};
use ktmforge::transfer::{baseline, TransferModel, BASELINE_NAMES};
use ktmforge::{Benchmark, Calibration};
use serde_json::json;

use crate::config::{self, pick, FileConfig};
use crate::manifest::{sidecar, RunManifest};
use crate::{usage, BackendArg, CalibrateArgs, Cli, Command, CompareArgs, CostArg, EmtoPreset, EvalInputs};
use crate::{EvaluateArgs, GenerateArgs, ReportArgs, SearchArgs};

struct Ctx {
    file: FileConfig,
    seed: u64,
    out: Option<PathBuf>,
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let file = config::load(cli.config.as_deref())?;
    let level = pick(cli.log_level.clone(), file.log_level.clone()).unwrap_or_else(|| "warn".into());
    let _ = env_logger::Builder::new().parse_filters(&level).try_init();
    let ctx = Ctx {
        seed: pick(cli.seed, file.seed).unwrap_or(0),
        out: pick(cli.out.clone(), file.out.clone()),
        file,
    };
    match cli.command {
        Command::GenerateBenchmark(a) => generate(&ctx, a),
        Command::Calibrate(a) => calibrate(&ctx, a),
        Command::Search(a) => search(&ctx, a),
        Command::Evaluate(a) => evaluate(&ctx, a),
        Command::Compare(a) => compare(&ctx, a),
        Command::Report(a) => report(&ctx, a),
        Command::ReplayRunner { .. } => unreachable!("handled before dispatch"),
    }
}

fn is_mini(id: &str) -> bool {
    id.ends_with("-mini")
}

fn generate(ctx: &Ctx, a: GenerateArgs) -> anyhow::Result<()> {
    let output = pick(a.output, ctx.file.benchmark.file.clone()).ok_or_else(|| usage("missing output file (-o)"))?;
    let gen_cfg = match pick(a.preset, ctx.file.benchmark.preset.clone()) {
        Some(name) => GeneratorConfig::preset(&name).ok_or_else(|| {
            usage(format!(
                "unknown preset {name:?}; known presets: {}",
                GeneratorConfig::preset_names().join(", ")
            ))
        })?,
        None => ctx
            .file
            .benchmark
            .generator
            .clone()
            .ok_or_else(|| usage("name a --preset or give [benchmark.generator] in the config"))?,
    };
    let inst: Benchmark = generate_benchmark(&gen_cfg, ctx.seed)?;
    if let Some(dir) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    save_benchmark(&inst, &output)?;
    let mut m = RunManifest::new("generate-benchmark", ctx.seed, json!({ "generator": gen_cfg }));
    m.seeds = vec![ctx.seed];
    m.write(&sidecar(&output), std::slice::from_ref(&output))?;
    println!("wrote {} ({} tasks, dim {})", output.display(), inst.numt(), inst.dim());
    Ok(())
}

fn benchmark_path(ctx: &Ctx, flag: Option<PathBuf>) -> anyhow::Result<PathBuf> {
    pick(flag, ctx.file.benchmark.file.clone()).ok_or_else(|| usage("missing --benchmark"))
}

fn load_bench(path: &Path) -> anyhow::Result<Benchmark> {
    load_benchmark(path).with_context(|| format!("loading benchmark {}", path.display()))
}

fn calibrate(ctx: &Ctx, a: CalibrateArgs) -> anyhow::Result<()> {
    let bpath = benchmark_path(ctx, a.benchmark)?;
    let bench = load_bench(&bpath)?;
    let output = pick(a.output, ctx.file.calibration.file.clone()).ok_or_else(|| usage("missing output file (-o)"))?;
    let emto = match (a.emto, &ctx.file.emto) {
        (Some(EmtoPreset::Full), _) => EmtoConfig::full(),
        (Some(EmtoPreset::Mini), _) => EmtoConfig::mini(),
        (None, Some(e)) => e.clone(),
        (None, None) if is_mini(&bench.id) => EmtoConfig::mini(),
        (None, None) => EmtoConfig::full(),
    };
    let seeds = match pick(a.seeds, ctx.file.calibration.seeds.clone()) {
        Some(s) => s,
        None => {
            let runs = pick(a.runs, ctx.file.calibration.runs).unwrap_or(10);
            (0..runs as u64).map(|i| ctx.seed + i).collect()
        }
    };
    if seeds.is_empty() {
        return Err(usage("calibration needs at least one run"));
    }
    let table: Calibration = calibrate_fmin(&bench, &emto, &seeds)?;
    if let Some(dir) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    save_calibration(&table, &output)?;
    let mut m = RunManifest::new("calibrate", ctx.seed, json!({ "emto": emto }));
    m.seeds = seeds;
    m.input(&bpath)?;
    m.write(&sidecar(&output), std::slice::from_ref(&output))?;
    println!("wrote {} ({} tasks)", output.display(), table.f_min.len());
    Ok(())
}

/// Loaded benchmark, calibration and the GA / sandbox settings derived from them.
struct EvalSetup {
    bench_path: PathBuf,
    calib_path: PathBuf,
    bench: Arc<Benchmark>,
    calib: Calibration,
    emto: EmtoConfig,
    sandbox: SandboxConfig,
}

fn runner_command(spec: &str) -> anyhow::Result<Vec<String>> {
    Ok(match spec {
        "python" => SandboxConfig::default().runners["python"].clone(),
        "replay" => {
            let exe = std::env::current_exe().context("locating the ktmforge executable")?;
            vec![exe.to_string_lossy().into_owned(), "replay-runner".into(), SOURCE_PLACEHOLDER.into()]
        }
        cmd => {
            let parts: Vec<String> = cmd.split_whitespace().map(String::from).collect();
            if parts.is_empty() {
                return Err(usage("empty --runner command"));
            }
            parts
        }
    })
}

fn eval_setup(ctx: &Ctx, inputs: &EvalInputs, default_runner: &str) -> anyhow::Result<EvalSetup> {
    let bench_path = benchmark_path(ctx, inputs.benchmark.clone())?;
    let calib_path = pick(inputs.calibration.clone(), ctx.file.calibration.file.clone())
        .ok_or_else(|| usage("missing --calibration"))?;
    let bench = load_bench(&bench_path)?;
    let calib: Calibration =
        load_calibration(&calib_path).with_context(|| format!("loading calibration {}", calib_path.display()))?;
    if calib.benchmark_id != bench.id {
        bail!("calibration {} is for benchmark {:?}, not {:?}", calib_path.display(), calib.benchmark_id, bench.id);
    }
    // Scores are only meaningful under the GA setting the calibration used.
    let mut emto = calib.config.clone();
    if let Some(c) = inputs.cost_model {
        emto.cost_model = match c {
            CostArg::WallClock => CostModel::WallClock,
            CostArg::WorkUnits => CostModel::WorkUnits,
        };
    }
    let mut sandbox = ctx.file.sandbox.settings.clone().unwrap_or_else(|| {
        if is_mini(&bench.id) {
            SandboxConfig::mini()
        } else {
            SandboxConfig::default()
        }
    });
    let runner = pick(inputs.runner.clone(), ctx.file.sandbox.runner.clone()).unwrap_or_else(|| default_runner.into());
    sandbox.runners.insert("python".into(), runner_command(&runner)?);
    if let Some(t) = inputs.timeout_ms {
        sandbox.timeout_ms = t;
    }
    Ok(EvalSetup {
        bench_path,
        calib_path,
        bench: Arc::new(bench),
        calib,
        emto,
        sandbox,
    })
}

fn resolve_method(name: &str, sandbox: &SandboxConfig) -> anyhow::Result<Box<dyn TransferModel<f64>>> {
    if let Some(m) = baseline::<f64>(name) {
        return Ok(m);
    }
    let path = Path::new(name);
    if path.is_file() {
        let source = std::fs::read_to_string(path)?;
        return Ok(Box::new(SandboxedSnippet::new(SnippetSpec::new(source, "python"), sandbox.clone())));
    }
    Err(usage(format!(
        "unknown method {name:?}; registered methods: {}, or a path to a snippet file",
        BASELINE_NAMES.join(", ")
    )))
}

fn search(ctx: &Ctx, a: SearchArgs) -> anyhow::Result<()> {
    let resume = a.resume.is_some();
    let out = a
        .resume
        .clone()
        .or_else(|| ctx.out.clone())
        .ok_or_else(|| usage("search needs --out (or --resume <dir>)"))?;

    let mut llm = ctx.file.llm.clone();
    if let Some(b) = a.backend {
        llm.backend = match b {
            BackendArg::Remote => BackendKind::Remote,
            BackendArg::Scripted => BackendKind::Scripted,
            BackendArg::Generator => BackendKind::Generator,
        };
    }
    if a.playlist.is_some() {
        llm.playlist = a.playlist.clone();
    }
    if let Some(e) = a.endpoint.clone() {
        llm.endpoint = e;
    }
    if let Some(m) = a.model.clone() {
        llm.model = m;
    }
    let default_runner = if llm.backend == BackendKind::Generator { "replay" } else { "python" };
    let setup = eval_setup(ctx, &a.inputs, default_runner)?;
    let s = &ctx.file.search;
    let defaults = SearchConfig::default();
    let cfg = SearchConfig {
        g_ktm: pick(a.g_ktm, s.g_ktm).unwrap_or(defaults.g_ktm),
        n_ktm: pick(a.n_ktm, s.n_ktm).unwrap_or(defaults.n_ktm),
        init_attempt_cap: s.init_attempt_cap,
        completion_retries: s.completion_retries.unwrap_or(llm.retries),
        dominance: s.dominance.unwrap_or_default(),
        benchmark_id: setup.bench.id.clone(),
        seed: ctx.seed,
        language: llm.language.clone(),
    };
    cfg.validate()?;
    let eval_seeds = pick(a.eval_seeds.clone(), s.eval_seeds.clone()).unwrap_or_else(|| vec![ctx.seed]);
    let backend = build_backend(&llm, ctx.seed)?;
    let templates = match &llm.prompt_dir {
        Some(d) => PromptTemplates::from_dir(d)?,
        None => PromptTemplates::default(),
    };
    let evaluator = EmtoEvaluator::new(
        setup.bench.clone(),
        setup.emto.clone(),
        setup.calib.clone(),
        setup.sandbox.clone(),
        eval_seeds.clone(),
    )?;
    let opts = SearchOptions {
        out_dir: Some(out.clone()),
        resume,
        stop_after: a.stop_after,
    };
    let outcome = run_search(&cfg, backend.as_ref(), &evaluator, &templates, &opts)?;

    let mut artifacts = vec![out.join("events.jsonl")];
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(out.join("checkpoints"))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    dirs.sort();
    artifacts.extend(dirs);
    if outcome.completed {
        let snip_dir = out.join("snippets");
        std::fs::create_dir_all(&snip_dir)?;
        for c in &outcome.front {
            let p = snip_dir.join(format!("{}.py", c.id));
            std::fs::write(&p, &c.snippet.source)?;
            artifacts.push(p);
        }
        let front = json!({
            "headline": outcome.headline.as_ref().map(|c| &c.id),
            "evaluations": outcome.state.evaluations,
            "front": outcome.front,
        });
        let p = out.join("front.json");
        std::fs::write(&p, serde_json::to_string_pretty(&front)? + "\n")?;
        artifacts.push(p);
    }
    let mut m = RunManifest::new(
        "search",
        ctx.seed,
        json!({ "search": cfg, "llm": llm, "emto": setup.emto, "sandbox": setup.sandbox }),
    );
    m.seeds = eval_seeds;
    m.input(&setup.bench_path)?;
    m.input(&setup.calib_path)?;
    m.write(&out.join("manifest.json"), &artifacts)?;

    match (&outcome.headline, outcome.completed) {
        (Some(h), true) => println!(
            "search finished: {} evaluations, front of {}, headline {} (s = {:.6}, t = {:.6})",
            outcome.state.evaluations,
            outcome.front.len(),
            h.id,
            h.s,
            h.t
        ),
        (None, true) => println!("search finished without a valid candidate"),
        (_, false) => println!("search stopped after generation {}", outcome.state.generation),
    }
    Ok(())
}

fn run_seeds(ctx: &Ctx, runs: usize) -> anyhow::Result<Vec<u64>> {
    if runs < 1 {
        return Err(usage("at least one run (seed) is required"));
    }
    Ok((0..runs as u64).map(|i| ctx.seed + i).collect())
}

fn evaluate(ctx: &Ctx, a: EvaluateArgs) -> anyhow::Result<()> {
    let setup = eval_setup(ctx, &a.inputs, "python")?;
    let model = resolve_method(&a.method, &setup.sandbox)?;
    let seeds = run_seeds(ctx, a.runs.unwrap_or(1))?;
    let mut runs = Vec::new();
    for &seed in &seeds {
        let r = run_emto(&setup.bench, &setup.emto, model.as_ref(), &setup.calib, seed)?;
        runs.push(json!({
            "seed": seed,
            "s": r.score,
            "t": r.time,
            "transfer_events": r.transfer_events,
            "injected": r.injected,
            "clipped": r.clipped,
        }));
    }
    let n = runs.len() as f64;
    let mean = |k: &str| runs.iter().map(|r| r[k].as_f64().unwrap()).sum::<f64>() / n;
    let summary = json!({
        "benchmark": setup.bench.id,
        "method": a.method,
        "mean_s": mean("s"),
        "mean_t": mean("t"),
        "runs": runs,
    });
    let text = serde_json::to_string_pretty(&summary)? + "\n";
    print!("{text}");
    if let Some(out) = &ctx.out {
        std::fs::create_dir_all(out)?;
        let p = out.join("evaluation.json");
        std::fs::write(&p, &text)?;
        let mut m = RunManifest::new("evaluate", ctx.seed, json!({ "emto": setup.emto, "method": a.method }));
        m.seeds = seeds;
        m.input(&setup.bench_path)?;
        m.input(&setup.calib_path)?;
        m.write(&out.join("manifest.json"), &[p])?;
    }
    Ok(())
}

fn compare(ctx: &Ctx, a: CompareArgs) -> anyhow::Result<()> {
    let setup = eval_setup(ctx, &a.inputs, "python")?;
    let names = pick(a.methods, ctx.file.compare.methods.clone()).unwrap_or_else(|| vec!["vcm".into(), "smm".into()]);
    if names.is_empty() {
        return Err(usage("no methods to compare"));
    }
    let methods = names
        .iter()
        .map(|n| Ok((n.clone(), resolve_method(n, &setup.sandbox)?)))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let seeds = run_seeds(ctx, pick(a.runs, ctx.file.compare.runs).unwrap_or(10))?;
    let (row, runs) = compare_methods(&setup.bench, &setup.emto, &setup.calib, &methods, &seeds)?;
    let rows = [row];
    let text = table_text(&rows);
    print!("{text}");
    if let Some(out) = &ctx.out {
        std::fs::create_dir_all(out)?;
        let files = [
            (out.join("table.csv"), table_csv(&rows)),
            (out.join("table.txt"), text.clone()),
            (out.join("runs.json"), serde_json::to_string_pretty(&runs)? + "\n"),
        ];
        for (p, body) in &files {
            std::fs::write(p, body)?;
        }
        let mut m = RunManifest::new("compare", ctx.seed, json!({ "emto": setup.emto, "methods": names }));
        m.seeds = seeds;
        m.input(&setup.bench_path)?;
        m.input(&setup.calib_path)?;
        let artifacts: Vec<PathBuf> = files.iter().map(|f| f.0.clone()).collect();
        m.write(&out.join("manifest.json"), &artifacts)?;
    }
    Ok(())
}

fn report(ctx: &Ctx, a: ReportArgs) -> anyhow::Result<()> {
    let out = ctx.out.clone().ok_or_else(|| usage("report needs --out"))?;
    let mut reports = Vec::new();
    let mut m = RunManifest::new("report", ctx.seed, json!({}));
    for p in &a.logs {
        let (log, label) = if p.is_dir() {
            (p.join("events.jsonl"), p.file_name().unwrap_or_default().to_string_lossy().into_owned())
        } else {
            (p.clone(), p.file_stem().unwrap_or_default().to_string_lossy().into_owned())
        };
        let events = read_events(&log).with_context(|| format!("reading {}", log.display()))?;
        if events.is_empty() {
            log::warn!("{} holds no events", log.display());
            eprintln!("warning: {} holds no events", log.display());
        }
        m.input(&log)?;
        reports.push(report_from_events(&label, &events));
    }
    let written = write_report(&reports, &out)?;
    m.write(&out.join("manifest.json"), &written)?;
    for w in &written {
        println!("wrote {}", w.display());
    }
    Ok(())
}
