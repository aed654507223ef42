use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ktmforge::benchmark::{generate_benchmark, load_benchmark, BaseFunctionId, GeneratorConfig};
use ktmforge::search::comparable_lines;
use ktmforge::Benchmark;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ktmforge"));
    for (k, _) in std::env::vars() {
        if k.starts_with("KTM_") {
            c.env_remove(k);
        }
    }
    c
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let o = run(dir, args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn playlist() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/playlist")
}

/// B1-mini benchmark plus a two-run calibration in `dir`.
fn prepared() -> tempfile::TempDir {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["generate-benchmark", "--preset", "B1-mini", "--seed", "4", "-o", "b.json"]);
    ok(d.path(), &["calibrate", "--benchmark", "b.json", "--runs", "2", "-o", "c.json"]);
    d
}

fn scripted_search(dir: &Path, out: &str, extra: &[&str]) -> Output {
    let pl = playlist();
    let mut args = vec![
        "search",
        "--benchmark",
        "b.json",
        "--calibration",
        "c.json",
        "--backend",
        "scripted",
        "--playlist",
        pl.to_str().unwrap(),
        "--runner",
        "replay",
        "--cost-model",
        "work-units",
        "--n-ktm",
        "4",
        "--g-ktm",
        "4",
        "--seed",
        "3",
    ];
    args.extend_from_slice(extra);
    if !extra.contains(&"--resume") {
        args.extend_from_slice(&["--out", out]);
    }
    run(dir, &args)
}

#[test]
fn generate_b2_has_fifty_rosenbrock_tasks() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["generate-benchmark", "--preset", "B2", "--seed", "11", "-o", "b2.json"]);
    let b: Benchmark = load_benchmark(&d.path().join("b2.json")).unwrap();
    assert_eq!(b.numt(), 50);
    assert!(b.tasks.iter().all(|t| t.base_fn() == BaseFunctionId::Rosenbrock));
    assert!(d.path().join("b2.json.manifest.json").is_file());

    ok(d.path(), &["generate-benchmark", "--preset", "B1-mini", "-o", "m.json"]);
    let m: Benchmark = load_benchmark(&d.path().join("m.json")).unwrap();
    assert_eq!((m.numt(), m.dim()), (5, 10));
}

#[test]
fn usage_errors_exit_64() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["generate-benchmark", "--preset", "B1"]);
    assert_eq!(o.status.code(), Some(64));
    let o = run(d.path(), &["generate-benchmark", "--preset", "B42", "-o", "x.json"]);
    assert_eq!(o.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&o.stderr).contains("B10-mini"));
    let o = run(d.path(), &["no-such-verb"]);
    assert_eq!(o.status.code(), Some(64));
    let o = run(d.path(), &["--help"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn seed_precedence_file_env_flag() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("cfg.toml"), "seed = 1\n[benchmark]\npreset = \"B3-mini\"\n").unwrap();
    let cfg = GeneratorConfig::preset("B3-mini").unwrap();
    let load = |name: &str| load_benchmark::<f64>(&d.path().join(name)).unwrap();

    ok(d.path(), &["--config", "cfg.toml", "generate-benchmark", "-o", "file.json"]);
    assert_eq!(load("file.json"), generate_benchmark(&cfg, 1).unwrap());

    let o = bin()
        .current_dir(d.path())
        .env("KTM_SEED", "2")
        .args(["--config", "cfg.toml", "generate-benchmark", "-o", "env.json"])
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(load("env.json"), generate_benchmark(&cfg, 2).unwrap());

    let o = bin()
        .current_dir(d.path())
        .env("KTM_SEED", "2")
        .args(["--config", "cfg.toml", "--seed", "3", "generate-benchmark", "-o", "flag.json"])
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(load("flag.json"), generate_benchmark(&cfg, 3).unwrap());
}

#[test]
fn calibrate_is_deterministic_and_reports_missing_input() {
    let d = prepared();
    ok(d.path(), &["calibrate", "--benchmark", "b.json", "--runs", "2", "-o", "again.json"]);
    assert_eq!(
        std::fs::read(d.path().join("c.json")).unwrap(),
        std::fs::read(d.path().join("again.json")).unwrap()
    );
    let o = run(d.path(), &["calibrate", "--benchmark", "missing.json", "-o", "x.json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn scripted_search_is_deterministic() {
    let d = prepared();
    for out in ["r1", "r2"] {
        let o = scripted_search(d.path(), out, &[]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = comparable_lines(&d.path().join("r1/events.jsonl")).unwrap();
    let b = comparable_lines(&d.path().join("r2/events.jsonl")).unwrap();
    assert_eq!(a, b);
    assert_eq!(
        std::fs::read(d.path().join("r1/front.json")).unwrap(),
        std::fs::read(d.path().join("r2/front.json")).unwrap()
    );
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("r1/manifest.json")).unwrap()).unwrap();
    for art in manifest["artifacts"].as_array().unwrap() {
        assert!(d.path().join("r1").join(art.as_str().unwrap()).exists(), "{art}");
    }
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 2);
}

#[test]
fn resume_after_stop_equals_uninterrupted() {
    let d = prepared();
    assert!(scripted_search(d.path(), "full", &[]).status.success());
    assert!(scripted_search(d.path(), "split", &["--stop-after", "2"]).status.success());
    assert!(!d.path().join("split/front.json").exists());
    let o = scripted_search(d.path(), "", &["--resume", "split"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        comparable_lines(&d.path().join("full/events.jsonl")).unwrap(),
        comparable_lines(&d.path().join("split/events.jsonl")).unwrap()
    );
    assert_eq!(
        std::fs::read(d.path().join("full/front.json")).unwrap(),
        std::fs::read(d.path().join("split/front.json")).unwrap()
    );
}

#[test]
fn remote_backend_without_key_names_the_variable() {
    let d = prepared();
    let o = run(
        d.path(),
        &[
            "search",
            "--benchmark",
            "b.json",
            "--calibration",
            "c.json",
            "--backend",
            "remote",
            "--endpoint",
            "http://127.0.0.1:9/v1/chat/completions",
            "--model",
            "m",
            "--out",
            "r",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("KTM_LLM_API_KEY"));
}

#[test]
fn compare_table_and_noop_exactness() {
    let d = prepared();
    let text = ok(
        d.path(),
        &[
            "compare", "--benchmark", "b.json", "--calibration", "c.json", "--methods", "vcm,smm,noop", "--runs", "2",
            "--cost-model", "work-units", "--out", "cmp",
        ],
    );
    let header = text.lines().next().unwrap();
    for col in ["Problem", "VCM Nor.V", "VCM Time", "SMM Nor.V", "SMM Time", "NOOP Nor.V", "NOOP Time"] {
        assert!(header.contains(col), "{header}");
    }
    assert!(text.contains("**"));
    let csv = std::fs::read_to_string(d.path().join("cmp/table.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "Problem,VCM Nor.V,VCM Time,SMM Nor.V,SMM Time,NOOP Nor.V,NOOP Time");
    let cells: Vec<&str> = lines.next().unwrap().split(',').collect();
    // The calibration runs used seeds 0 and 1, the compare runs as well.
    assert_eq!(cells[5].parse::<f64>().unwrap(), 1.0);

    let o = run(d.path(), &["compare", "--benchmark", "b.json", "--calibration", "c.json", "--methods", "nope"]);
    assert_eq!(o.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&o.stderr).contains("vcm, smm, noop"));
    let o = run(d.path(), &["compare", "--benchmark", "b.json", "--calibration", "c.json", "--runs", "0"]);
    assert_eq!(o.status.code(), Some(64));
}

#[test]
fn evaluate_prints_summary() {
    let d = prepared();
    let text = ok(d.path(), &["evaluate", "--benchmark", "b.json", "--calibration", "c.json", "--method", "noop", "--runs", "2"]);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["mean_s"].as_f64().unwrap(), 1.0);
    let snippet = playlist().join("01_echo.txt");
    let o = run(
        d.path(),
        &[
            "evaluate", "--benchmark", "b.json", "--calibration", "c.json", "--runner", "replay", "--method",
            snippet.to_str().unwrap(),
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn report_from_run_directory() {
    let d = prepared();
    assert!(scripted_search(d.path(), "r", &[]).status.success());
    ok(d.path(), &["report", "r", "--out", "rep"]);
    let gens = std::fs::read_to_string(d.path().join("rep/generations.csv")).unwrap();
    let best: Vec<f64> = gens
        .lines()
        .skip(1)
        .filter(|l| l.split(',').nth(2) == Some("s"))
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(best.len(), 5);
    for w in best.windows(2) {
        assert!(w[1] <= w[0]);
    }
    let first = std::fs::read(d.path().join("rep/terms.csv")).unwrap();
    std::fs::remove_dir_all(d.path().join("rep")).unwrap();
    ok(d.path(), &["report", "r", "--out", "rep"]);
    assert_eq!(first, std::fs::read(d.path().join("rep/terms.csv")).unwrap());
}

#[test]
fn report_edge_cases() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("empty.jsonl"), "").unwrap();
    let o = run(d.path(), &["report", "empty.jsonl", "--out", "rep"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no events"));

    std::fs::write(d.path().join("bad.jsonl"), "{\"seq\":0,\"gen\":0,\"event\":\"skip\",\"reason\":\"x\"}\n{oops\n").unwrap();
    let o = run(d.path(), &["report", "bad.jsonl", "--out", "rep2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}
