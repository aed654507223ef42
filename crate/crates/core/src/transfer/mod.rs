//! Knowledge-transfer models: the contract shared by the hand-crafted
//! baselines and sandboxed snippets.

mod noop;
mod smm;
mod vcm;

use std::fmt;

use crate::rng::Rng;
use crate::scalar::{clamp, Scalar};

pub use noop::NoopTransfer;
pub use smm::{solution_map, SmmTransfer, SMM_RIDGE};
pub use vcm::{sbx_component, VcmTransfer};

/// One task's state at a transfer event.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskSnapshot<T> {
    /// `pop_size × dim`, one row per individual.
    pub population: Vec<Vec<T>>,
    pub fitness: Vec<T>,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Scalar> TaskSnapshot<T> {
    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Row indices sorted by ascending fitness (stable).
    pub fn ranked(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.fitness.len()).collect();
        idx.sort_by(|&a, &b| {
            self.fitness[a]
                .partial_cmp(&self.fitness[b])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        idx
    }

    /// Maps a native vector into `[0, 1]^dim`.
    pub fn encode(&self, x: &[T]) -> Vec<T> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&l, &u))| (v - l) / (u - l))
            .collect()
    }

    /// Maps a unified-space vector back into this task's box, clipping.
    pub fn decode(&self, u: &[T]) -> Vec<T> {
        u.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&l, &hi))| clamp(l + v * (hi - l), l, hi))
            .collect()
    }
}

/// Populations of every task plus the number of solutions requested per task.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferSnapshot<T> {
    pub tasks: Vec<TaskSnapshot<T>>,
    pub nt: usize,
}

impl<T: Scalar> TransferSnapshot<T> {
    pub fn numt(&self) -> usize {
        self.tasks.len()
    }

    /// Converts every value to another scalar type (used at the f64 wire boundary).
    pub fn map_scalar<U: Scalar>(&self) -> TransferSnapshot<U> {
        let conv = |v: &Vec<T>| v.iter().map(|x| U::lit(x.to_f64_lossy())).collect::<Vec<U>>();
        TransferSnapshot {
            nt: self.nt,
            tasks: self
                .tasks
                .iter()
                .map(|t| TaskSnapshot {
                    population: t.population.iter().map(conv).collect(),
                    fitness: conv(&t.fitness),
                    lower: conv(&t.lower),
                    upper: conv(&t.upper),
                })
                .collect(),
        }
    }
}

/// Solutions produced by one transfer event, in each task's native space.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TransferResult<T> {
    /// `numt × nt × dim`.
    pub transfers: Vec<Vec<Vec<T>>>,
    /// Model-reported cost, used by the deterministic cost model.
    pub work_units: u64,
    /// Values that had to be clipped into bounds.
    pub clipped: usize,
    pub warning: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ShapeViolation {
    TaskCount { expected: usize, found: usize },
    SolutionCount { task: usize, expected: usize, found: usize },
    Dimension { task: usize, expected: usize, found: usize },
    NonFinite { task: usize },
}

impl fmt::Display for ShapeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShapeViolation::TaskCount { expected, found } => {
                write!(f, "expected {expected} task lists, found {found}")
            }
            ShapeViolation::SolutionCount { task, expected, found } => {
                write!(f, "task {task}: expected {expected} solutions, found {found}")
            }
            ShapeViolation::Dimension { task, expected, found } => {
                write!(f, "task {task}: expected dimension {expected}, found {found}")
            }
            ShapeViolation::NonFinite { task } => write!(f, "task {task}: non-finite value"),
        }
    }
}

impl<T: Scalar> TransferResult<T> {
    /// Checks the `numt × nt × dim` shape and finiteness, then clips every
    /// value into its task's box. Returns the number of clipped values.
    pub fn conform(&mut self, snapshot: &TransferSnapshot<T>) -> Result<usize, ShapeViolation> {
        if self.transfers.len() != snapshot.numt() {
            return Err(ShapeViolation::TaskCount {
                expected: snapshot.numt(),
                found: self.transfers.len(),
            });
        }
        let mut clipped = 0;
        for (i, (rows, task)) in self.transfers.iter_mut().zip(&snapshot.tasks).enumerate() {
            if rows.len() != snapshot.nt {
                return Err(ShapeViolation::SolutionCount {
                    task: i,
                    expected: snapshot.nt,
                    found: rows.len(),
                });
            }
            for row in rows.iter_mut() {
                if row.len() != task.dim() {
                    return Err(ShapeViolation::Dimension {
                        task: i,
                        expected: task.dim(),
                        found: row.len(),
                    });
                }
                if row.iter().any(|v| !v.is_finite()) {
                    return Err(ShapeViolation::NonFinite { task: i });
                }
                for (v, (&l, &u)) in row.iter_mut().zip(task.lower.iter().zip(&task.upper)) {
                    if *v < l || *v > u {
                        *v = clamp(*v, l, u);
                        clipped += 1;
                    }
                }
            }
        }
        self.clipped += clipped;
        Ok(clipped)
    }
}

/// Why a transfer invocation produced no usable result.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransferFailure {
    /// Short machine-readable class, e.g. `timeout` or `shape-error`.
    pub kind: String,
    pub message: String,
}

impl fmt::Display for TransferFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

/// A knowledge-transfer model invoked once per transfer event for all tasks.
///
/// Implementations must draw randomness only from `rng` so a run is fully
/// determined by its seed.
pub trait TransferModel<T: Scalar>: Send + Sync {
    fn name(&self) -> &str;

    fn transfer(
        &self,
        snapshot: &TransferSnapshot<T>,
        rng: &mut Rng,
    ) -> Result<TransferResult<T>, TransferFailure>;
}

/// Names accepted by [`baseline`].
pub const BASELINE_NAMES: [&str; 3] = ["vcm", "smm", "noop"];

pub fn baseline<T: Scalar>(name: &str) -> Option<Box<dyn TransferModel<T>>> {
    match name {
        "vcm" => Some(Box::new(VcmTransfer::default())),
        "smm" => Some(Box::new(SmmTransfer::default())),
        "noop" => Some(Box::new(NoopTransfer)),
        _ => None,
    }
}
