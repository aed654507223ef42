use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benchmark::BenchmarkInstance;
use crate::emto::calibration::{normalized_score, CalibrationTable};
use crate::emto::ga::{
    best_fitness, initial_population, make_offspring, survive, GaParams, Individual,
};
use crate::error::{Error, Result};
use crate::rng::{self, Rng};
use crate::scalar::Scalar;
use crate::transfer::{TaskSnapshot, TransferModel, TransferSnapshot};

/// Seconds charged per work unit under [`CostModel::WorkUnits`].
pub const WORK_UNIT_SECONDS: f64 = 1e-4;

/// How the running-time objective `t` is measured.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostModel {
    /// Wall-clock seconds of the whole multi-task run.
    #[default]
    WallClock,
    /// Deterministic proxy: (fitness evaluations + transfer work units)
    /// × [`WORK_UNIT_SECONDS`].
    WorkUnits,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmtoConfig {
    pub pop_size: usize,
    pub generations: usize,
    /// Generations between transfer events.
    pub transfer_interval: usize,
    /// Transfer solutions requested per task and event.
    pub nt: usize,
    pub ga: GaParams,
    pub cost_model: CostModel,
}

impl Default for EmtoConfig {
    fn default() -> Self {
        Self::full()
    }
}

impl EmtoConfig {
    /// 100 individuals × 100 generations = 10,000 evaluations per task.
    pub fn full() -> Self {
        EmtoConfig {
            pop_size: 100,
            generations: 100,
            transfer_interval: 10,
            nt: 10,
            ga: GaParams::default(),
            cost_model: CostModel::WallClock,
        }
    }

    /// Desk-scale setting used by the `*-mini` presets.
    pub fn mini() -> Self {
        EmtoConfig {
            pop_size: 40,
            generations: 50,
            transfer_interval: 5,
            nt: 5,
            ga: GaParams::default(),
            cost_model: CostModel::WallClock,
        }
    }

    /// Fitness evaluations per task; the initial population counts as the
    /// first generation.
    pub fn budget(&self) -> u64 {
        (self.pop_size * self.generations) as u64
    }

    pub fn validate(&self) -> Result<()> {
        if self.pop_size < 2 {
            return Err(Error::config("pop_size must be at least 2"));
        }
        if self.generations == 0 {
            return Err(Error::config("generations must be positive"));
        }
        if self.transfer_interval == 0 {
            return Err(Error::config("transfer_interval must be positive"));
        }
        if self.nt == 0 || self.nt > self.pop_size {
            return Err(Error::config("nt must lie in 1..=pop_size"));
        }
        Ok(())
    }

    fn is_transfer_generation(&self, generation: usize) -> bool {
        generation % self.transfer_interval == 0
    }
}

/// Per-task trajectories of a run without the score.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SoloRun<T: Scalar> {
    pub seed: u64,
    /// Best fitness after every generation, per task.
    pub trajectories: Vec<Vec<T>>,
    pub final_best: Vec<T>,
    pub evaluations: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EmtoRunResult<T: Scalar> {
    pub benchmark_id: String,
    pub transfer: String,
    pub seed: u64,
    pub trajectories: Vec<Vec<T>>,
    pub final_best: Vec<T>,
    /// Mean over tasks of `final_best / f_min`.
    pub score: T,
    /// Running-time objective in seconds under `cost_model`.
    pub time: f64,
    pub cost_model: CostModel,
    pub wall_clock_secs: f64,
    pub evaluations: Vec<u64>,
    pub transfer_events: usize,
    pub injected: usize,
    pub clipped: usize,
    pub transfer_work_units: u64,
}

struct TaskState<T> {
    pop: Vec<Individual<T>>,
    rng: Rng,
    trajectory: Vec<T>,
    evaluations: u64,
    pending: Vec<Vec<T>>,
}

struct CoreRun<T> {
    states: Vec<TaskState<T>>,
    transfer_events: usize,
    injected: usize,
    clipped: usize,
    work_units: u64,
}

fn run_core<T: Scalar>(
    bench: &BenchmarkInstance<T>,
    cfg: &EmtoConfig,
    transfer: Option<&dyn TransferModel<T>>,
    seed: u64,
) -> Result<CoreRun<T>> {
    cfg.validate()?;
    if bench.tasks.is_empty() {
        return Err(Error::invalid("benchmark has no tasks"));
    }
    let mut states: Vec<TaskState<T>> = bench
        .tasks
        .par_iter()
        .enumerate()
        .map(|(i, task)| {
            let mut rng = rng::ga_stream(seed, i);
            let pop = initial_population(task, cfg.pop_size, &mut rng);
            let best = best_fitness(&pop);
            TaskState {
                pop,
                rng,
                trajectory: vec![best],
                evaluations: cfg.pop_size as u64,
                pending: Vec::new(),
            }
        })
        .collect();

    let mut transfer_rng = rng::stream(seed, rng::STREAM_TRANSFER);
    let mut run = CoreRun {
        states: Vec::new(),
        transfer_events: 0,
        injected: 0,
        clipped: 0,
        work_units: 0,
    };

    for generation in 2..=cfg.generations {
        states
            .par_iter_mut()
            .zip(bench.tasks.par_iter())
            .for_each(|(s, task)| {
                s.pending = make_offspring(
                    &s.pop,
                    task.lower(),
                    task.upper(),
                    &cfg.ga,
                    cfg.pop_size,
                    &mut s.rng,
                );
            });

        if let Some(model) = transfer.filter(|_| cfg.is_transfer_generation(generation)) {
            run.transfer_events += 1;
            let snapshot = TransferSnapshot {
                nt: cfg.nt,
                tasks: states
                    .iter()
                    .zip(&bench.tasks)
                    .map(|(s, task)| TaskSnapshot {
                        population: s.pop.iter().map(|i| i.genotype.clone()).collect(),
                        fitness: s.pop.iter().map(|i| i.fitness).collect(),
                        lower: task.lower().to_vec(),
                        upper: task.upper().to_vec(),
                    })
                    .collect(),
            };
            let mut result = model
                .transfer(&snapshot, &mut transfer_rng)
                .map_err(|f| Error::TransferFailed {
                    kind: f.kind,
                    message: f.message,
                })?;
            run.work_units += result.work_units;
            if let Some(w) = &result.warning {
                log::warn!("transfer model {}: {w}", model.name());
            }
            let nothing = result.transfers.len() == snapshot.numt()
                && result.transfers.iter().all(Vec::is_empty);
            if !nothing {
                run.clipped += result.conform(&snapshot).map_err(|v| Error::TransferFailed {
                    kind: "shape-error".into(),
                    message: v.to_string(),
                })?;
                for ((s, rows), snap) in states.iter_mut().zip(result.transfers).zip(&snapshot.tasks) {
                    let novel: Vec<Vec<T>> = rows
                        .into_iter()
                        .filter(|r| !snap.population.iter().any(|p| p == r))
                        .take(cfg.nt)
                        .collect();
                    let keep = s.pending.len() - novel.len();
                    s.pending.truncate(keep);
                    run.injected += novel.len();
                    s.pending.extend(novel);
                }
            }
        }

        states
            .par_iter_mut()
            .zip(bench.tasks.par_iter())
            .for_each(|(s, task)| {
                let offspring: Vec<Individual<T>> = std::mem::take(&mut s.pending)
                    .into_iter()
                    .map(|genotype| {
                        let fitness = task.fitness(&genotype);
                        Individual { genotype, fitness }
                    })
                    .collect();
                s.evaluations += offspring.len() as u64;
                let parents = std::mem::take(&mut s.pop);
                s.pop = survive(parents, offspring, cfg.pop_size);
                s.trajectory.push(best_fitness(&s.pop));
            });
    }

    debug_assert!(states.iter().all(|s| s.evaluations == cfg.budget()));
    run.states = states;
    Ok(run)
}

/// Runs the base GA on every task independently (no transfer).
pub fn run_solo<T: Scalar>(
    bench: &BenchmarkInstance<T>,
    cfg: &EmtoConfig,
    seed: u64,
) -> Result<SoloRun<T>> {
    let run = run_core(bench, cfg, None, seed)?;
    Ok(SoloRun {
        seed,
        final_best: run.states.iter().map(|s| *s.trajectory.last().unwrap()).collect(),
        evaluations: run.states.iter().map(|s| s.evaluations).collect(),
        trajectories: run.states.into_iter().map(|s| s.trajectory).collect(),
    })
}

/// Runs all tasks with a transfer event every `transfer_interval`
/// generations. Transferred solutions take the place of the last GA
/// offspring of that generation so the budget is unchanged; solutions that
/// duplicate a current population member are dropped without evaluation.
///
/// A failing transfer model aborts the run with [`Error::TransferFailed`].
pub fn run_emto<T: Scalar>(
    bench: &BenchmarkInstance<T>,
    cfg: &EmtoConfig,
    transfer: &dyn TransferModel<T>,
    calib: &CalibrationTable<T>,
    seed: u64,
) -> Result<EmtoRunResult<T>> {
    if calib.f_min.len() != bench.numt() {
        return Err(Error::config(format!(
            "calibration covers {} tasks, benchmark has {}",
            calib.f_min.len(),
            bench.numt()
        )));
    }
    let started = Instant::now();
    let run = run_core(bench, cfg, Some(transfer), seed)?;
    let wall = started.elapsed().as_secs_f64();

    let final_best: Vec<T> = run.states.iter().map(|s| *s.trajectory.last().unwrap()).collect();
    let score = normalized_score(&final_best, calib)?;
    let evaluations: Vec<u64> = run.states.iter().map(|s| s.evaluations).collect();
    let time = match cfg.cost_model {
        CostModel::WallClock => wall,
        CostModel::WorkUnits => {
            (evaluations.iter().sum::<u64>() + run.work_units) as f64 * WORK_UNIT_SECONDS
        }
    };
    Ok(EmtoRunResult {
        benchmark_id: bench.id.clone(),
        transfer: transfer.name().to_string(),
        seed,
        trajectories: run.states.into_iter().map(|s| s.trajectory).collect(),
        final_best,
        score,
        time,
        cost_model: cfg.cost_model,
        wall_clock_secs: wall,
        evaluations,
        transfer_events: run.transfer_events,
        injected: run.injected,
        clipped: run.clipped,
        transfer_work_units: run.work_units,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmark::{generate_benchmark, GeneratorConfig};
    use crate::emto::calibration::calibrate_fmin;
    use crate::transfer::{NoopTransfer, TransferFailure, TransferResult, VcmTransfer};

    fn small_cfg() -> EmtoConfig {
        EmtoConfig {
            pop_size: 12,
            generations: 10,
            transfer_interval: 3,
            nt: 3,
            ..EmtoConfig::mini()
        }
    }

    fn bench() -> BenchmarkInstance<f64> {
        let mut cfg = GeneratorConfig::preset("B4-mini").unwrap();
        cfg.numt = 3;
        cfg.dim = 4;
        generate_benchmark(&cfg, 2).unwrap()
    }

    #[test]
    fn config_validation() {
        assert_eq!(EmtoConfig::full().budget(), 10_000);
        assert!(EmtoConfig { nt: 0, ..small_cfg() }.validate().is_err());
        assert!(EmtoConfig { nt: 13, ..small_cfg() }.validate().is_err());
        assert!(EmtoConfig { pop_size: 1, nt: 1, ..small_cfg() }.validate().is_err());
        assert!(EmtoConfig { transfer_interval: 0, ..small_cfg() }.validate().is_err());
    }

    #[test]
    fn noop_matches_solo_bitwise() {
        let b = bench();
        let cfg = small_cfg();
        let solo = run_solo(&b, &cfg, 5).unwrap();
        let calib = calibrate_fmin(&b, &cfg, &[5]).unwrap();
        let emto = run_emto(&b, &cfg, &NoopTransfer, &calib, 5).unwrap();
        assert_eq!(solo.trajectories, emto.trajectories);
        assert_eq!(emto.score, 1.0);
        assert_eq!(emto.injected, 0);
        assert_eq!(emto.transfer_events, 3);
    }

    #[test]
    fn budget_is_exact_with_injection() {
        let b = bench();
        let cfg = small_cfg();
        let calib = calibrate_fmin(&b, &cfg, &[1]).unwrap();
        let r = run_emto(&b, &cfg, &VcmTransfer::default(), &calib, 1).unwrap();
        assert!(r.injected > 0);
        assert!(r.evaluations.iter().all(|&e| e == cfg.budget()));
        for t in &r.trajectories {
            assert_eq!(t.len(), cfg.generations);
            assert!(t.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    struct Failing;
    impl TransferModel<f64> for Failing {
        fn name(&self) -> &str {
            "failing"
        }
        fn transfer(
            &self,
            _: &TransferSnapshot<f64>,
            _: &mut Rng,
        ) -> std::result::Result<TransferResult<f64>, TransferFailure> {
            Err(TransferFailure {
                kind: "timeout".into(),
                message: "gave up".into(),
            })
        }
    }

    #[test]
    fn transfer_failure_aborts_run() {
        let b = bench();
        let cfg = small_cfg();
        let calib = calibrate_fmin(&b, &cfg, &[1]).unwrap();
        match run_emto(&b, &cfg, &Failing, &calib, 1) {
            Err(Error::TransferFailed { kind, .. }) => assert_eq!(kind, "timeout"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn calibration_must_cover_tasks() {
        let b = bench();
        let cfg = small_cfg();
        let mut calib = calibrate_fmin(&b, &cfg, &[1]).unwrap();
        calib.f_min.pop();
        assert!(matches!(
            run_emto(&b, &cfg, &NoopTransfer, &calib, 1),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn work_unit_time_is_deterministic() {
        let b = bench();
        let cfg = EmtoConfig {
            cost_model: CostModel::WorkUnits,
            ..small_cfg()
        };
        let calib = calibrate_fmin(&b, &cfg, &[1]).unwrap();
        let a = run_emto(&b, &cfg, &VcmTransfer::default(), &calib, 3).unwrap();
        let c = run_emto(&b, &cfg, &VcmTransfer::default(), &calib, 3).unwrap();
        assert_eq!(a.time, c.time);
        assert_eq!(a.score, c.score);
        let expected = (3 * cfg.budget() + a.transfer_work_units) as f64 * WORK_UNIT_SECONDS;
        assert_eq!(a.time, expected);
    }
}
