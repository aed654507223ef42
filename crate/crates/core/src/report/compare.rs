use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benchmark::BenchmarkInstance;
use crate::emto::{run_emto, CalibrationTable, EmtoConfig, EmtoRunResult};
use crate::error::{Error, Result};
use crate::transfer::TransferModel;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodCell {
    pub method: String,
    /// Mean normalized value over the recorded runs.
    pub nor_v: f64,
    /// Mean running time in seconds.
    pub time: f64,
    pub runs: usize,
    pub best_nor_v: bool,
    pub best_time: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub benchmark: String,
    pub cells: Vec<MethodCell>,
}

impl ComparisonRow {
    /// Means per method from `(s, t)` samples; winners are flagged per
    /// column independently and ties are all flagged.
    pub fn from_samples(benchmark: &str, samples: &[(String, Vec<(f64, f64)>)]) -> Result<Self> {
        let mut cells = Vec::with_capacity(samples.len());
        for (method, runs) in samples {
            if runs.is_empty() {
                return Err(Error::invalid(format!("method {method} has no runs")));
            }
            let n = runs.len() as f64;
            cells.push(MethodCell {
                method: method.clone(),
                nor_v: runs.iter().map(|r| r.0).sum::<f64>() / n,
                time: runs.iter().map(|r| r.1).sum::<f64>() / n,
                runs: runs.len(),
                best_nor_v: false,
                best_time: false,
            });
        }
        let min_v = cells.iter().map(|c| c.nor_v).fold(f64::INFINITY, f64::min);
        let min_t = cells.iter().map(|c| c.time).fold(f64::INFINITY, f64::min);
        for c in &mut cells {
            c.best_nor_v = c.nor_v == min_v;
            c.best_time = c.time == min_t;
        }
        Ok(ComparisonRow {
            benchmark: benchmark.to_string(),
            cells,
        })
    }
}

/// Runs every method on every seed (in parallel) and returns the row plus
/// the individual runs, ordered method-major.
pub fn compare_methods(
    bench: &BenchmarkInstance<f64>,
    emto: &EmtoConfig,
    calib: &CalibrationTable<f64>,
    methods: &[(String, Box<dyn TransferModel<f64>>)],
    seeds: &[u64],
) -> Result<(ComparisonRow, Vec<EmtoRunResult<f64>>)> {
    if seeds.is_empty() {
        return Err(Error::invalid("compare needs at least one seed"));
    }
    let jobs: Vec<(usize, u64)> = (0..methods.len())
        .flat_map(|m| seeds.iter().map(move |&s| (m, s)))
        .collect();
    let runs: Vec<EmtoRunResult<f64>> = jobs
        .par_iter()
        .map(|&(m, seed)| run_emto(bench, emto, methods[m].1.as_ref(), calib, seed))
        .collect::<Result<_>>()?;
    let samples: Vec<(String, Vec<(f64, f64)>)> = methods
        .iter()
        .enumerate()
        .map(|(m, (name, _))| {
            let pts = runs[m * seeds.len()..(m + 1) * seeds.len()]
                .iter()
                .map(|r| (r.score, r.time))
                .collect();
            (name.clone(), pts)
        })
        .collect();
    Ok((ComparisonRow::from_samples(&bench.id, &samples)?, runs))
}

fn method_label(m: &str) -> String {
    match m {
        "vcm" | "smm" | "noop" => m.to_uppercase(),
        other => other.to_string(),
    }
}

/// Wide CSV: one line per benchmark, `Nor.V` and `Time` per method.
pub fn table_csv(rows: &[ComparisonRow]) -> String {
    let mut out = String::new();
    let Some(first) = rows.first() else {
        return out;
    };
    out.push_str("Problem");
    for c in &first.cells {
        let m = method_label(&c.method);
        let _ = write!(out, ",{m} Nor.V,{m} Time");
    }
    out.push('\n');
    for r in rows {
        out.push_str(&r.benchmark);
        for c in &r.cells {
            let _ = write!(out, ",{},{}", c.nor_v, c.time);
        }
        out.push('\n');
    }
    out
}

/// Aligned text table; per-column winners are wrapped in `**`.
pub fn table_text(rows: &[ComparisonRow]) -> String {
    let Some(first) = rows.first() else {
        return String::new();
    };
    let mut grid: Vec<Vec<String>> = Vec::new();
    let mut head = vec!["Problem".to_string()];
    for c in &first.cells {
        let m = method_label(&c.method);
        head.push(format!("{m} Nor.V"));
        head.push(format!("{m} Time"));
    }
    grid.push(head);
    let bold = |s: String, b: bool| if b { format!("**{s}**") } else { s };
    for r in rows {
        let mut line = vec![r.benchmark.clone()];
        for c in &r.cells {
            line.push(bold(format!("{:.4}", c.nor_v), c.best_nor_v));
            line.push(bold(format!("{:.4}", c.time), c.best_time));
        }
        grid.push(line);
    }
    let widths: Vec<usize> = (0..grid[0].len())
        .map(|j| grid.iter().map(|l| l[j].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, line) in grid.iter().enumerate() {
        let cells: Vec<String> = line
            .iter()
            .enumerate()
            .map(|(j, c)| if j == 0 { format!("{c:<w$}", w = widths[j]) } else { format!("{c:>w$}", w = widths[j]) })
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
        if i == 0 {
            let _ = writeln!(out, "{}", widths.iter().map(|&w| "-".repeat(w)).collect::<Vec<_>>().join("  "));
        }
    }
    out
}
