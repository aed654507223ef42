//! Multi-objective search over knowledge-transfer models for evolutionary
//! multi-task optimization.
//!
//! The pipeline: [`benchmark`] builds shifted and rotated task sets,
//! [`emto`] runs one GA per task with periodic transfer events,
//! [`transfer`] holds the baseline transfer models, [`sandbox`] runs
//! untrusted snippet code as a transfer model, [`llm`] renders prompts and
//! talks to completion backends, [`search`] evolves snippets against
//! normalized fitness and running time, and [`report`] turns event logs into
//! plot-ready data.
//!
//! Numerical code is generic over [`scalar::Scalar`] (`f32` or `f64`); the
//! aliases below fix `f64`, which is what the search and the CLI use.

pub mod benchmark;
pub mod emto;
pub mod error;
pub mod linalg;
pub mod llm;
pub mod report;
pub mod rng;
pub mod sandbox;
pub mod scalar;
pub mod search;
pub mod transfer;

pub type Task = benchmark::TaskDefinition<f64>;
pub type Benchmark = benchmark::BenchmarkInstance<f64>;
pub type RunResult = emto::EmtoRunResult<f64>;
pub type Calibration = emto::CalibrationTable<f64>;
pub type Snapshot = transfer::TransferSnapshot<f64>;

pub use error::{Error, Result};
