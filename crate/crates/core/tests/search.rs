mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::*;
use ktmforge::error::Error;
use ktmforge::llm::PromptTemplates;
use ktmforge::rng;
use ktmforge::sandbox::SnippetSpec;
use ktmforge::search::*;
use proptest::prelude::*;
use rand::Rng;

fn cfg(n: usize, g: usize, seed: u64) -> SearchConfig {
    SearchConfig {
        n_ktm: n,
        g_ktm: g,
        seed,
        benchmark_id: "bench".into(),
        ..SearchConfig::default()
    }
}

fn hashed_backend() -> FnBackend<impl Fn(u64) -> Option<String> + Send + Sync> {
    FnBackend::new(|k| {
        let (s, t) = hashed_objectives(k);
        Some(respond(&tagged_source(&format!("v{k}"), s, t)))
    })
}

fn run(c: &SearchConfig, backend: &dyn ktmforge::llm::LlmBackend, opts: &SearchOptions) -> SearchOutcome {
    run_search(c, backend, &tagged_evaluator("bench"), &PromptTemplates::default(), opts).unwrap()
}

fn value() -> impl Strategy<Value = f64> {
    prop_oneof![
        8 => (0u8..6).prop_map(|v| v as f64 * 0.25),
        1 => Just(f64::INFINITY),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn nds_matches_brute_force(points in prop::collection::vec((value(), value()), 2..50)) {
        // Penalized members carry infinity in both objectives.
        let points: Vec<(f64, f64)> = points
            .into_iter()
            .map(|(s, t)| if s.is_infinite() || t.is_infinite() { (f64::INFINITY, f64::INFINITY) } else { (s, t) })
            .collect();
        let fronts = fast_nondominated_sort(&points, Dominance::Strict);
        let want = oracle_ranks(&points);
        let mut seen = vec![0usize; points.len()];
        for (r, front) in fronts.iter().enumerate() {
            for &i in front {
                seen[i] = r + 1;
            }
        }
        prop_assert_eq!(seen, want);
    }
}

#[test]
fn dominance_on_exhaustive_grid() {
    let grid: Vec<(f64, f64)> = (0..5).flat_map(|s| (0..5).map(move |t| (s as f64, t as f64))).collect();
    for &a in &grid {
        for &b in &grid {
            assert_eq!(dominates(a, b, Dominance::Strict), oracle_dominates(a, b), "{a:?} {b:?}");
        }
    }
    assert!(dominates((0.4, 8.0), (0.5, 10.0), Dominance::Strict));
    assert!(!dominates((0.4, 8.0), (0.4, 10.0), Dominance::Strict));
    assert!(dominates((0.4, 8.0), (0.4, 10.0), Dominance::Weak));
    assert!(dominates((9.0, 9.0), (f64::INFINITY, f64::INFINITY), Dominance::Strict));
}

#[test]
fn nds_worked_examples() {
    let f = fast_nondominated_sort(&[(0.2, 5.0), (0.5, 3.0), (0.6, 9.0)], Dominance::Strict);
    assert_eq!(f, vec![vec![0, 1], vec![2]]);
    let f = fast_nondominated_sort(&[(0.3, 3.0), (0.1, 1.0), (0.2, 2.0)], Dominance::Strict);
    assert_eq!(f, vec![vec![1], vec![2], vec![0]]);
}

#[test]
fn crowding_of_collinear_points() {
    let pts = [(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)];
    let d = crowding_distance(&pts, &[0, 1, 2]);
    assert!(d[0].is_infinite() && d[2].is_infinite());
    // Each objective contributes (2 - 0) / (2 - 0).
    assert_eq!(d[1], 2.0);
    let d = crowding_distance(&pts, &[0, 2]);
    assert!(d.iter().all(|v| v.is_infinite()));
}

#[test]
fn parent_count_support_and_uniformity() {
    let mut r = rng::stream(1, rng::STREAM_SEARCH);
    let mut counts = BTreeMap::new();
    let draws = 10_000;
    for _ in 0..draws {
        *counts.entry(dynamic_parent_count(&mut r, 10)).or_insert(0usize) += 1;
    }
    assert_eq!(counts.keys().copied().collect::<Vec<_>>(), vec![2, 3, 4, 5]);
    let p = 0.25;
    let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
    for (&v, &c) in &counts {
        assert!((c as f64 - draws as f64 * p).abs() < 5.0 * sigma, "value {v}: {c}");
    }
    for _ in 0..100 {
        assert_eq!(dynamic_parent_count(&mut r, 4), 2);
    }
}

#[test]
fn mutation_rate_within_five_sigma() {
    let c = cfg(10, 1, 0);
    let mut r = rng::stream(2, rng::STREAM_SEARCH);
    let trials = 10_000;
    let fired = (0..trials).filter(|_| r.random::<f64>() < c.mutation_threshold()).count();
    let p = 0.1;
    let sigma = (trials as f64 * p * (1.0 - p)).sqrt();
    assert!((fired as f64 - trials as f64 * p).abs() < 5.0 * sigma, "{fired}");
}

fn candidate(serial: u64, s: f64, t: f64) -> CandidateKtm {
    let snip = SnippetSpec::new(tagged_source(&format!("c{serial}"), s, t), "python");
    let eval = if s.is_finite() { Evaluation::valid(s, t) } else { Evaluation::penalized("timeout", "") };
    CandidateKtm::new(
        serial,
        snip,
        &eval,
        0,
        Lineage {
            operator: Operator::Init,
            parents: vec![],
        },
    )
}

#[test]
fn roulette_frequencies_match_rank_weights() {
    // Fronts: {0, 1} rank 1, {2} rank 2, {3} rank 3, plus a penalized member.
    let mut pop = vec![
        candidate(0, 0.1, 1.0),
        candidate(1, 0.2, 0.5),
        candidate(2, 0.3, 2.0),
        candidate(3, 0.5, 3.0),
        candidate(4, f64::INFINITY, f64::INFINITY),
    ];
    assign_ranks(&mut pop, Dominance::Strict);
    let weights = [3.0, 3.0, 2.0, 1.0, 0.0];
    let total: f64 = weights.iter().sum();
    let mut r = rng::stream(3, 0);
    let draws = 20_000;
    let mut counts = [0usize; 5];
    for _ in 0..draws {
        counts[roulette_select(&pop, 1, &mut r).unwrap()[0]] += 1;
    }
    for i in 0..5 {
        let p = weights[i] / total;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        assert!((counts[i] as f64 - draws as f64 * p).abs() <= 5.0 * sigma, "{i}: {counts:?}");
    }
    // Without replacement: every draw of k = 4 holds distinct valid members.
    for _ in 0..200 {
        let pick = roulette_select(&pop, 4, &mut r).unwrap();
        let set: BTreeSet<_> = pick.iter().collect();
        assert_eq!(set.len(), 4);
        assert!(!pick.contains(&4));
    }
}

#[test]
fn remove_worst_keeps_extremes() {
    let mut pop = vec![
        candidate(0, 0.1, 4.0),
        candidate(1, 0.2, 3.0),
        candidate(2, 0.25, 2.9),
        candidate(3, 0.4, 1.0),
    ];
    // Interior crowding: k1 = 0.15/0.3 + 1.1/3, k2 = 0.2/0.3 + 2/3.
    let removed = remove_worst(&mut pop, Dominance::Strict);
    assert_eq!(removed.id, "k0001");
    let mut pop = vec![candidate(0, 0.1, 4.0), candidate(1, f64::INFINITY, f64::INFINITY), candidate(2, 0.4, 1.0)];
    assert_eq!(remove_worst(&mut pop, Dominance::Strict).id, "k0001");
}

#[test]
fn scripted_runs_are_deterministic() {
    let c = cfg(6, 4, 9);
    let logs: Vec<_> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            let opts = SearchOptions {
                out_dir: Some(dir.path().to_path_buf()),
                ..Default::default()
            };
            run(&c, &hashed_backend(), &opts);
            comparable_lines(&dir.path().join("events.jsonl")).unwrap()
        })
        .collect();
    assert!(logs[0].len() > 50);
    assert_eq!(logs[0], logs[1]);
}

#[test]
fn monotone_playlist_gives_strictly_decreasing_best() {
    let c = cfg(5, 6, 2);
    let backend = FnBackend::new(|k| Some(respond(&tagged_source(&format!("m{k}"), 1.0 / (k as f64 + 2.0), 5.0))));
    let out = run(&c, &backend, &SearchOptions::default());
    let best: Vec<f64> = out.state.history.iter().map(|h| h.min_s).collect();
    assert_eq!(best.len(), 7);
    for w in best.windows(2) {
        assert!(w[1] < w[0], "{best:?}");
    }
}

#[test]
fn invariants_hold_every_generation() {
    let c = cfg(10, 10, 4);
    let out = run(&c, &hashed_backend(), &SearchOptions::default());
    assert!(out.completed);
    assert_eq!(out.state.history.len(), 11);
    for h in &out.state.history {
        assert_eq!(h.population.len(), 10);
    }
    for w in out.state.history.windows(2) {
        assert!(w[1].min_s <= w[0].min_s);
        assert!(w[1].min_t <= w[0].min_t);
    }
    // Budget bound: 10 + 10 × 10 fresh evaluations at most.
    assert!(out.state.evaluations <= 110, "{}", out.state.evaluations);
    assert!(out.state.evaluations >= 100);

    let archive = &out.state.archive.members;
    assert!(!archive.is_empty());
    for a in archive {
        for b in archive {
            assert!(!oracle_dominates(a.objectives(), b.objectives()));
        }
    }
    let headline = out.headline.unwrap();
    assert_eq!(headline.front_rank, 1);
    assert!(out.front.iter().all(|c| c.s >= headline.s));
    let min_s = out.state.population.iter().map(|c| c.s).fold(f64::INFINITY, f64::min);
    assert_eq!(headline.s, min_s);
}

#[test]
fn lineage_replays_to_init_events() {
    let c = cfg(6, 5, 11);
    let out = run(&c, &hashed_backend(), &SearchOptions::default());
    let mut known = BTreeSet::new();
    let mut last_seq = None;
    for e in out.state.log.events() {
        if let Some(prev) = last_seq {
            assert_eq!(e.seq, prev + 1);
        }
        last_seq = Some(e.seq);
        match &e.body {
            EventBody::Init { candidate, .. } => {
                known.insert(candidate.clone());
            }
            EventBody::Insert { candidate, parents, .. } => {
                assert!(!parents.is_empty());
                for p in parents {
                    assert!(known.contains(p), "{p} used before it was introduced");
                }
                known.insert(candidate.clone());
            }
            _ => {}
        }
    }
    for cand in &out.state.population {
        assert!(known.contains(&cand.id));
        for p in &cand.lineage.parents {
            assert!(known.contains(p));
        }
    }
}

#[test]
fn resume_matches_uninterrupted_run() {
    let c = cfg(6, 6, 21);
    let full = tempfile::tempdir().unwrap();
    let a = run(
        &c,
        &hashed_backend(),
        &SearchOptions {
            out_dir: Some(full.path().into()),
            ..Default::default()
        },
    );

    let split = tempfile::tempdir().unwrap();
    let first = run(
        &c,
        &hashed_backend(),
        &SearchOptions {
            out_dir: Some(split.path().into()),
            stop_after: Some(3),
            ..Default::default()
        },
    );
    assert!(!first.completed);
    assert_eq!(first.state.generation, 3);
    let b = run(
        &c,
        &hashed_backend(),
        &SearchOptions {
            out_dir: Some(split.path().into()),
            resume: true,
            ..Default::default()
        },
    );
    assert!(b.completed);
    assert_eq!(a.state.population, b.state.population);
    assert_eq!(a.state.history, b.state.history);
    assert_eq!(
        comparable_lines(&full.path().join("events.jsonl")).unwrap(),
        comparable_lines(&split.path().join("events.jsonl")).unwrap()
    );
    assert!(latest_checkpoint(split.path()).unwrap().ends_with("gen-0006.json"));
}

#[test]
fn all_penalized_init_keeps_prompting() {
    let c = cfg(4, 2, 5);
    let backend = FnBackend::new(|k| {
        let src = if k < 4 {
            penalized_source(&format!("p{k}"))
        } else {
            let (s, t) = hashed_objectives(k);
            tagged_source(&format!("v{k}"), s, t)
        };
        Some(respond(&src))
    });
    let out = run(&c, &backend, &SearchOptions::default());
    assert!(out.completed);
    assert!(out.state.history[0].population.len() == 4);
    assert!(out.state.population.iter().filter(|c| c.is_valid()).count() >= 2);
    let init_removals = out
        .state
        .log
        .events()
        .iter()
        .filter(|e| e.gen == 0 && matches!(e.body, EventBody::Removal { .. }))
        .count();
    assert!(init_removals >= 2);
}

#[test]
fn init_gives_up_at_the_attempt_cap() {
    let c = SearchConfig {
        init_attempt_cap: Some(6),
        ..cfg(4, 1, 0)
    };
    let backend = FnBackend::new(|k| Some(respond(&penalized_source(&format!("p{k}")))));
    let err = run_search(&c, &backend, &tagged_evaluator("bench"), &PromptTemplates::default(), &SearchOptions::default())
        .err()
        .unwrap();
    assert!(matches!(err, Error::Config(_)), "{err}");
}

#[test]
fn transport_failures_skip_iterations() {
    let c = cfg(4, 3, 8);
    let backend = FnBackend::new(|k| {
        if k >= 4 && k % 3 == 0 {
            return None;
        }
        let (s, t) = hashed_objectives(k);
        Some(respond(&tagged_source(&format!("v{k}"), s, t)))
    });
    let out = run(&c, &backend, &SearchOptions::default());
    assert!(out.completed);
    assert!(out.state.skipped > 0);
    assert!(out.state.history.iter().all(|h| h.population.len() == 4));
}

#[test]
fn garbage_completions_are_retried() {
    let c = cfg(4, 2, 1);
    let backend = FnBackend::new(|k| {
        if k % 2 == 1 {
            return Some("I cannot help with that.".to_string());
        }
        let (s, t) = hashed_objectives(k);
        Some(respond(&tagged_source(&format!("v{k}"), s, t)))
    });
    let out = run(&c, &backend, &SearchOptions::default());
    assert!(out.completed);
    let no_tag = out
        .state
        .log
        .events()
        .iter()
        .filter(|e| matches!(&e.body, EventBody::Extraction { result, .. } if result == "no-tag"))
        .count();
    assert!(no_tag > 0);
}

#[test]
fn duplicates_are_evaluated_once() {
    let c = cfg(4, 3, 3);
    let backend = FnBackend::new(|k| Some(respond(&tagged_source(&format!("d{}", k % 5), 0.5 + (k % 5) as f64 * 0.1, 2.0))));
    let out = run(&c, &backend, &SearchOptions::default());
    assert_eq!(out.state.evaluations, 5);
    assert_eq!(out.state.cache.len(), 5);
}

#[test]
fn benchmark_mismatch_is_a_configuration_error() {
    let c = cfg(4, 1, 0);
    let err = run_search(
        &c,
        &hashed_backend(),
        &tagged_evaluator("other"),
        &PromptTemplates::default(),
        &SearchOptions::default(),
    )
    .err()
    .unwrap();
    assert!(matches!(err, Error::Config(_)));
    assert!(cfg(3, 1, 0).validate().is_err());
    assert!(cfg(4, 0, 0).validate().is_err());
}

#[test]
fn screen_rejections_are_penalized_during_generations() {
    let c = cfg(4, 2, 6);
    let backend = FnBackend::new(|k| {
        let (s, t) = hashed_objectives(k);
        let mut src = tagged_source(&format!("v{k}"), s, t);
        if k >= 4 && k % 2 == 0 {
            src = src.replace("return", "import socket\n    return");
        }
        Some(respond(&src))
    });
    let out = run(&c, &backend, &SearchOptions::default());
    let rejected = out
        .state
        .log
        .events()
        .iter()
        .filter(|e| matches!(&e.body, EventBody::Verdict { kind, .. } if kind == "rejected"))
        .count();
    assert!(rejected > 0);
    assert!(out.state.population.iter().all(|c| c.is_valid() || c.verdict.kind == "rejected"));
}
