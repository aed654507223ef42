//! Vertical crossover across task populations in a unified `[0, 1]` space.

use rand::Rng as _;

use super::{TransferFailure, TransferModel, TransferResult, TransferSnapshot};
use crate::rng::Rng;
use crate::scalar::{clamp, Scalar};

/// For each target task: pick a random other task as source, then `nt`
/// times cross a binary-tournament target parent with a random top-half
/// source parent by SBX in unified space and decode the child into the
/// target's box.
#[derive(Clone, Debug)]
pub struct VcmTransfer {
    pub eta: f64,
}

impl Default for VcmTransfer {
    fn default() -> Self {
        VcmTransfer { eta: 15.0 }
    }
}

/// Bounded simulated binary crossover for one coordinate given a uniform
/// draw `u ∈ [0, 1)`. Returns the two children (lower-side, upper-side).
/// Parents closer than 1e-14 are returned unchanged.
pub fn sbx_component<T: Scalar>(a: T, b: T, lo: T, hi: T, eta: T, u: T) -> (T, T) {
    if (a - b).abs() <= T::lit(1e-14) {
        return (a, b);
    }
    let one = T::one();
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    let (y1, y2) = if a < b { (a, b) } else { (b, a) };
    let delta = y2 - y1;
    let expo = one / (eta + one);

    let spread = |beta: T| -> T {
        let alpha = two - beta.powf(-(eta + one));
        if u <= one / alpha {
            (u * alpha).powf(expo)
        } else {
            (one / (two - u * alpha)).powf(expo)
        }
    };

    let betaq1 = spread(one + two * (y1 - lo) / delta);
    let c1 = half * ((y1 + y2) - betaq1 * delta);
    let betaq2 = spread(one + two * (hi - y2) / delta);
    let c2 = half * ((y1 + y2) + betaq2 * delta);
    (clamp(c1, lo, hi), clamp(c2, lo, hi))
}

fn tournament<T: Scalar>(fitness: &[T], rng: &mut Rng) -> usize {
    let a = rng.random_range(0..fitness.len());
    let b = rng.random_range(0..fitness.len());
    if fitness[b] < fitness[a] {
        b
    } else {
        a
    }
}

impl<T: Scalar> TransferModel<T> for VcmTransfer {
    fn name(&self) -> &str {
        "vcm"
    }

    fn transfer(
        &self,
        snapshot: &TransferSnapshot<T>,
        rng: &mut Rng,
    ) -> Result<TransferResult<T>, TransferFailure> {
        let numt = snapshot.numt();
        if numt < 2 {
            return Ok(TransferResult {
                transfers: vec![Vec::new(); numt],
                warning: Some("vcm needs at least two tasks; nothing transferred".into()),
                ..Default::default()
            });
        }
        let eta = T::lit(self.eta);
        let zero = T::zero();
        let one = T::one();
        let mut transfers = Vec::with_capacity(numt);
        let mut work = 0u64;
        for (j, target) in snapshot.tasks.iter().enumerate() {
            let r = rng.random_range(0..numt - 1);
            let k = if r >= j { r + 1 } else { r };
            let source = &snapshot.tasks[k];
            let ranked = source.ranked();
            let top = &ranked[..(ranked.len() / 2).max(1)];

            let mut rows = Vec::with_capacity(snapshot.nt);
            for _ in 0..snapshot.nt {
                let tp = tournament(&target.fitness, rng);
                let sp = top[rng.random_range(0..top.len())];
                let a = target.encode(&target.population[tp]);
                let b = source.encode(&source.population[sp]);
                let mut child = a.clone();
                for (d, c) in child.iter_mut().enumerate() {
                    let Some(&bd) = b.get(d) else { continue };
                    let u = T::lit(rng.random::<f64>());
                    let (c1, c2) = sbx_component(a[d], bd, zero, one, eta, u);
                    *c = if rng.random::<bool>() { c1 } else { c2 };
                }
                rows.push(target.decode(&child));
                work += child.len() as u64;
            }
            transfers.push(rows);
        }
        Ok(TransferResult {
            transfers,
            work_units: work,
            ..Default::default()
        })
    }
}
