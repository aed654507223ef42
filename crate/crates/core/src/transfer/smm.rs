//! Solution mapping: a closed-form least-squares linear map between the
//! rank-aligned populations of a source and a target task.

use super::{TransferFailure, TransferModel, TransferResult, TransferSnapshot};
use crate::linalg::{Matrix, Singular};
use crate::rng::Rng;
use crate::scalar::{clamp, Scalar};

pub const SMM_RIDGE: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct SmmTransfer {
    pub ridge: f64,
}

impl Default for SmmTransfer {
    fn default() -> Self {
        SmmTransfer { ridge: SMM_RIDGE }
    }
}

/// Least-squares map `M = P·Qᵀ·(Q·Qᵀ + ridge·I)⁻¹` where `Q` and `P` hold the
/// source and target solutions as columns. Inputs are given row-wise: row
/// `i` of `source` is paired with row `i` of `target`.
///
/// Returns a `target_dim × source_dim` matrix so that `M · q ≈ p`.
pub fn solution_map<T: Scalar>(
    target: &[Vec<T>],
    source: &[Vec<T>],
    ridge: T,
) -> Result<Matrix<T>, Singular> {
    assert_eq!(target.len(), source.len(), "paired sample counts differ");
    let q_rows = Matrix::from_rows(source);
    let p_rows = Matrix::from_rows(target);
    // Q·Qᵀ and P·Qᵀ with solutions as columns equal Qrᵀ·Qr and Prᵀ·Qr.
    let mut gram = q_rows.transpose().matmul(&q_rows);
    gram.add_diagonal(ridge);
    let cross = p_rows.transpose().matmul(&q_rows);
    // M·A = B  ⇔  A·Mᵀ = Bᵀ (A symmetric).
    let mt = gram.solve(&cross.transpose())?;
    Ok(mt.transpose())
}

impl<T: Scalar> TransferModel<T> for SmmTransfer {
    fn name(&self) -> &str {
        "smm"
    }

    fn transfer(
        &self,
        snapshot: &TransferSnapshot<T>,
        _rng: &mut Rng,
    ) -> Result<TransferResult<T>, TransferFailure> {
        let numt = snapshot.numt();
        if numt < 2 {
            return Ok(TransferResult {
                transfers: vec![Vec::new(); numt],
                warning: Some("smm needs at least two tasks; nothing transferred".into()),
                ..Default::default()
            });
        }
        let ranked: Vec<Vec<usize>> = snapshot.tasks.iter().map(|t| t.ranked()).collect();
        let encoded: Vec<Vec<Vec<T>>> = snapshot
            .tasks
            .iter()
            .zip(&ranked)
            .map(|(t, order)| order.iter().map(|&i| t.encode(&t.population[i])).collect())
            .collect();

        let mut transfers = Vec::with_capacity(numt);
        let mut warnings = Vec::new();
        let mut work = 0u64;
        for (j, target) in snapshot.tasks.iter().enumerate() {
            let k = (0..numt)
                .filter(|&k| k != j)
                .min_by(|&a, &b| {
                    let da = rank_aligned_distance(&encoded[j], &encoded[a]);
                    let db = rank_aligned_distance(&encoded[j], &encoded[b]);
                    da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal)
                })
                .expect("at least two tasks");
            let source = &snapshot.tasks[k];
            let n = ranked[j].len().min(ranked[k].len());
            let p: Vec<Vec<T>> = ranked[j][..n]
                .iter()
                .map(|&i| target.population[i].clone())
                .collect();
            let q: Vec<Vec<T>> = ranked[k][..n]
                .iter()
                .map(|&i| source.population[i].clone())
                .collect();
            let map = match solution_map(&p, &q, T::lit(self.ridge)) {
                Ok(m) if m.as_slice().iter().all(|v| v.is_finite()) => m,
                _ => {
                    warnings.push(format!("task {j}: singular mapping, using identity"));
                    identity_like(target.dim(), source.dim())
                }
            };
            let (dt, ds) = (target.dim(), source.dim());
            work += (n * ds * ds + n * dt * ds + ds * ds * ds) as u64;

            let rows = (0..snapshot.nt)
                .map(|i| {
                    let src = &source.population[ranked[k][i % ranked[k].len()]];
                    map.mul_vec(src)
                        .into_iter()
                        .zip(target.lower.iter().zip(&target.upper))
                        .map(|(v, (&l, &u))| if v.is_finite() { clamp(v, l, u) } else { l })
                        .collect()
                })
                .collect();
            transfers.push(rows);
        }
        Ok(TransferResult {
            transfers,
            work_units: work,
            clipped: 0,
            warning: (!warnings.is_empty()).then(|| warnings.join("; ")),
        })
    }
}

fn rank_aligned_distance<T: Scalar>(a: &[Vec<T>], b: &[Vec<T>]) -> T {
    let n = a.len().min(b.len());
    if n == 0 {
        return T::infinity();
    }
    let total: T = a
        .iter()
        .zip(b)
        .take(n)
        .map(|(x, y)| {
            x.iter()
                .zip(y)
                .map(|(&u, &v)| (u - v) * (u - v))
                .sum::<T>()
                .sqrt()
        })
        .sum();
    total / T::from_usize_lossy(n)
}

fn identity_like<T: Scalar>(rows: usize, cols: usize) -> Matrix<T> {
    let mut m = Matrix::zeros(rows, cols);
    for i in 0..rows.min(cols) {
        m[(i, i)] = T::one();
    }
    m
}
