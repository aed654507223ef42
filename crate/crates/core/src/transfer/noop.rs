use super::{TransferFailure, TransferModel, TransferResult, TransferSnapshot};
use crate::rng::Rng;
use crate::scalar::Scalar;

/// Returns copies of each task's `nt` best individuals. Under the engine's
/// duplicate filter this injects nothing, so a run with this model is
/// identical to a solo run with the same seed.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoopTransfer;

impl<T: Scalar> TransferModel<T> for NoopTransfer {
    fn name(&self) -> &str {
        "noop"
    }

    fn transfer(
        &self,
        snapshot: &TransferSnapshot<T>,
        _rng: &mut Rng,
    ) -> Result<TransferResult<T>, TransferFailure> {
        let transfers = snapshot
            .tasks
            .iter()
            .map(|t| {
                let ranked = t.ranked();
                (0..snapshot.nt)
                    .map(|i| t.population[ranked[i % ranked.len()]].clone())
                    .collect()
            })
            .collect();
        let work = snapshot.tasks.iter().map(|t| t.dim() * snapshot.nt).sum::<usize>();
        Ok(TransferResult {
            transfers,
            work_units: work as u64,
            ..Default::default()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::transfer::TaskSnapshot;

    #[test]
    fn returns_best_rows() {
        let snap = TransferSnapshot {
            nt: 2,
            tasks: vec![TaskSnapshot {
                population: vec![vec![3.0], vec![1.0], vec![2.0]],
                fitness: vec![9.0, 1.0, 4.0],
                lower: vec![-5.0],
                upper: vec![5.0],
            }],
        };
        let out = NoopTransfer.transfer(&snap, &mut rng::stream(0, 0)).unwrap();
        assert_eq!(out.transfers, vec![vec![vec![1.0], vec![2.0]]]);
    }
}
