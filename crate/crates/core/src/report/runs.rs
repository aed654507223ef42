use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::stats::{summarize, Quantiles};
use super::terms::{count_terms, ranked};
use crate::error::Result;
use crate::search::{Event, EventBody, PopulationEntry};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub gen: usize,
    pub population: usize,
    pub penalized: usize,
    pub s: Option<Quantiles>,
    pub t: Option<Quantiles>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontPoint {
    pub id: String,
    pub s: f64,
    pub t: f64,
    pub headline: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationTerms {
    pub gen: usize,
    /// `(term, count)`, most frequent first.
    pub counts: Vec<(String, usize)>,
}

/// Everything the report derives from one event log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub label: String,
    pub completed: bool,
    pub evaluations: Option<usize>,
    pub generations: Vec<GenerationStats>,
    pub front: Vec<FrontPoint>,
    pub terms: Vec<GenerationTerms>,
}

fn generation_stats(gen: usize, pop: &[PopulationEntry]) -> GenerationStats {
    let valid: Vec<&PopulationEntry> = pop.iter().filter(|e| e.s.is_finite() && e.t.is_finite()).collect();
    let best = valid
        .iter()
        .min_by(|a, b| a.s.partial_cmp(&b.s).unwrap().then_with(|| a.t.partial_cmp(&b.t).unwrap()));
    let s: Vec<f64> = valid.iter().map(|e| e.s).collect();
    let t: Vec<f64> = valid.iter().map(|e| e.t).collect();
    GenerationStats {
        gen,
        population: pop.len(),
        penalized: pop.len() - valid.len(),
        s: best.and_then(|b| summarize(&s, b.s)),
        t: best.and_then(|b| summarize(&t, b.t)),
    }
}

pub fn report_from_events(label: &str, events: &[Event]) -> RunReport {
    let mut generations = Vec::new();
    let mut last_pop: Vec<PopulationEntry> = Vec::new();
    let mut annotations: BTreeMap<String, String> = BTreeMap::new();
    let mut born: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    let mut end = None;

    for e in events {
        match &e.body {
            EventBody::Extraction {
                snippet: Some(id),
                annotation: Some(a),
                ..
            } => {
                annotations.insert(id.clone(), a.clone());
            }
            EventBody::Init { snippet, .. } | EventBody::Insert { snippet, .. } => {
                born.entry(e.gen).or_default().push(snippet.clone());
            }
            EventBody::GenerationEnd { population, .. } => {
                generations.push(generation_stats(e.gen, population));
                last_pop = population.clone();
            }
            EventBody::End { headline, front, evaluations } => {
                end = Some((headline.clone(), front.clone(), *evaluations));
            }
            _ => {}
        }
    }

    let front = match &end {
        Some((headline, ids, _)) => ids
            .iter()
            .filter_map(|id| last_pop.iter().find(|p| &p.id == id))
            .map(|p| FrontPoint {
                id: p.id.clone(),
                s: p.s,
                t: p.t,
                headline: headline.as_ref() == Some(&p.id),
            })
            .collect(),
        None => {
            let mut pts: Vec<FrontPoint> = last_pop
                .iter()
                .filter(|p| p.front_rank == 1 && p.s.is_finite())
                .map(|p| FrontPoint {
                    id: p.id.clone(),
                    s: p.s,
                    t: p.t,
                    headline: false,
                })
                .collect();
            pts.sort_by(|a, b| a.s.partial_cmp(&b.s).unwrap());
            if let Some(first) = pts.first_mut() {
                first.headline = true;
            }
            pts
        }
    };

    let terms = born
        .iter()
        .map(|(&gen, snippets)| GenerationTerms {
            gen,
            counts: ranked(&count_terms(snippets.iter().filter_map(|s| annotations.get(s).map(String::as_str)))),
        })
        .collect();

    RunReport {
        label: label.to_string(),
        completed: end.is_some(),
        evaluations: end.map(|e| e.2),
        generations,
        front,
        terms,
    }
}

fn csv_field(v: &str) -> String {
    if v.contains([',', '"', '\n']) {
        format!("\"{}\"", v.replace('"', "\"\""))
    } else {
        v.to_string()
    }
}

pub fn generations_csv(reports: &[RunReport]) -> String {
    let mut out = String::from("run,gen,objective,population,penalized,min,q1,median,q3,max,mean,best\n");
    for r in reports {
        for g in &r.generations {
            for (name, q) in [("s", &g.s), ("t", &g.t)] {
                let cells = match q {
                    Some(q) => format!("{},{},{},{},{},{},{}", q.min, q.q1, q.median, q.q3, q.max, q.mean, q.best),
                    None => ",,,,,,".to_string(),
                };
                let _ = writeln!(out, "{},{},{name},{},{},{cells}", csv_field(&r.label), g.gen, g.population, g.penalized);
            }
        }
    }
    out
}

pub fn front_csv(reports: &[RunReport]) -> String {
    let mut out = String::from("run,id,s,t,headline\n");
    for r in reports {
        for p in &r.front {
            let _ = writeln!(out, "{},{},{},{},{}", csv_field(&r.label), p.id, p.s, p.t, p.headline);
        }
    }
    out
}

pub fn terms_csv(reports: &[RunReport]) -> String {
    let mut out = String::from("run,gen,term,count\n");
    for r in reports {
        for g in &r.terms {
            for (term, count) in &g.counts {
                let _ = writeln!(out, "{},{},{term},{count}", csv_field(&r.label), g.gen);
            }
        }
    }
    out
}

/// Writes `generations.csv`, `front.csv`, `terms.csv` and `report.json`.
pub fn write_report(reports: &[RunReport], out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let files = [
        ("generations.csv", generations_csv(reports)),
        ("front.csv", front_csv(reports)),
        ("terms.csv", terms_csv(reports)),
        (
            "report.json",
            serde_json::to_string_pretty(reports).expect("report serializes") + "\n",
        ),
    ];
    let mut written = Vec::new();
    for (name, body) in files {
        let p = out_dir.join(name);
        std::fs::write(&p, body)?;
        written.push(p);
    }
    Ok(written)
}
