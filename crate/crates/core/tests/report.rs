mod common;

use common::*;
use ktmforge::error::Error;
use ktmforge::llm::PromptTemplates;
use ktmforge::report::*;
use ktmforge::search::{read_events, run_search, SearchConfig, SearchOptions};

fn monotone_run(dir: &std::path::Path) {
    let cfg = SearchConfig {
        n_ktm: 4,
        g_ktm: 5,
        seed: 1,
        benchmark_id: "bench".into(),
        ..SearchConfig::default()
    };
    let backend = FnBackend::new(|k| Some(respond(&tagged_source(&format!("step {k}"), 1.0 / (k as f64 + 2.0), 3.0))));
    let opts = SearchOptions {
        out_dir: Some(dir.to_path_buf()),
        ..Default::default()
    };
    run_search(&cfg, &backend, &tagged_evaluator("bench"), &PromptTemplates::default(), &opts).unwrap();
}

#[test]
fn monotone_run_has_non_increasing_best() {
    let dir = tempfile::tempdir().unwrap();
    monotone_run(dir.path());
    let events = read_events(&dir.path().join("events.jsonl")).unwrap();
    let r = report_from_events("monotone", &events);
    assert!(r.completed);
    assert_eq!(r.generations.len(), 6);
    let best: Vec<f64> = r.generations.iter().map(|g| g.s.unwrap().best).collect();
    for w in best.windows(2) {
        assert!(w[1] <= w[0], "{best:?}");
    }
    assert_eq!(r.front.iter().filter(|p| p.headline).count(), 1);
    // Each generation's annotations carry the "step" label.
    for g in &r.terms {
        assert!(g.counts.iter().any(|(t, _)| t == "step"), "gen {}", g.gen);
        assert!(g.counts.iter().all(|(t, _)| t != "of" && t != "design"));
    }
}

#[test]
fn report_files_are_reproducible_from_the_log() {
    let dir = tempfile::tempdir().unwrap();
    monotone_run(dir.path());
    let events = read_events(&dir.path().join("events.jsonl")).unwrap();
    let out = dir.path().join("report");
    let read_all = |files: &[std::path::PathBuf]| files.iter().map(|f| std::fs::read(f).unwrap()).collect::<Vec<_>>();
    let first = write_report(&[report_from_events("run", &events)], &out).unwrap();
    let a = read_all(&first);
    std::fs::remove_dir_all(&out).unwrap();
    let second = write_report(&[report_from_events("run", &events)], &out).unwrap();
    assert_eq!(a, read_all(&second));
    let gens = std::fs::read_to_string(out.join("generations.csv")).unwrap();
    assert!(gens.starts_with("run,gen,objective,population,penalized,min,q1,median,q3,max,mean,best\n"));
    assert_eq!(gens.lines().count(), 1 + 2 * 6);
}

#[test]
fn corrupt_line_is_reported_with_its_number() {
    let dir = tempfile::tempdir().unwrap();
    monotone_run(dir.path());
    let path = dir.path().join("events.jsonl");
    let mut lines: Vec<String> = std::fs::read_to_string(&path).unwrap().lines().map(String::from).collect();
    lines[6] = "{not json".into();
    std::fs::write(&path, lines.join("\n")).unwrap();
    match read_events(&path) {
        Err(Error::Parse { message, .. }) => assert!(message.contains("line 7"), "{message}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn empty_log_gives_empty_report() {
    let r = report_from_events("empty", &[]);
    assert!(r.generations.is_empty() && r.front.is_empty() && r.terms.is_empty());
    assert!(!r.completed);
    assert_eq!(generations_csv(&[r]).lines().count(), 1);
}

#[test]
fn tokenizer_example() {
    let c = count_terms(["Design Thought: adaptive transfer of solutions"]);
    let want: std::collections::BTreeMap<String, usize> =
        [("adaptive", 1), ("transfer", 1), ("solutions", 1)].iter().map(|(k, v)| (k.to_string(), *v)).collect();
    assert_eq!(c, want);
}
