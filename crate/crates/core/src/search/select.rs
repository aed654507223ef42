use rand::Rng as _;

use super::candidate::CandidateKtm;
use super::pareto::{crowding_distance, fast_nondominated_sort, Dominance};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Uniform draw from `{2, …, ⌊n_ktm/2⌋}`.
pub fn dynamic_parent_count(rng: &mut Rng, n_ktm: usize) -> usize {
    assert!(n_ktm >= 4, "n_ktm must be at least 4");
    rng.random_range(2..=n_ktm / 2)
}

/// Recomputes `front_rank` (1-based) and `crowding` for every member.
pub fn assign_ranks(pop: &mut [CandidateKtm], mode: Dominance) -> Vec<Vec<usize>> {
    let points: Vec<(f64, f64)> = pop.iter().map(CandidateKtm::objectives).collect();
    let fronts = fast_nondominated_sort(&points, mode);
    for (r, front) in fronts.iter().enumerate() {
        let cd = crowding_distance(&points, front);
        for (&i, &d) in front.iter().zip(&cd) {
            pop[i].front_rank = r + 1;
            pop[i].crowding = d;
        }
    }
    fronts
}

/// Roulette weight per member: `R_max − front_rank + 1`, where `R_max` is
/// the worst front holding a valid candidate; penalized members get 0.
/// Ranks must be current.
pub fn rank_weights(pop: &[CandidateKtm]) -> Vec<f64> {
    let r_max = pop
        .iter()
        .filter(|c| c.is_valid())
        .map(|c| c.front_rank)
        .max()
        .unwrap_or(0);
    pop.iter()
        .map(|c| {
            if c.is_valid() && c.front_rank <= r_max {
                (r_max - c.front_rank + 1) as f64
            } else {
                0.0
            }
        })
        .collect()
}

/// Draws `k` distinct members without replacement, proportional to
/// [`rank_weights`]. `k` is reduced to the number of valid members.
pub fn roulette_select(pop: &[CandidateKtm], k: usize, rng: &mut Rng) -> Result<Vec<usize>> {
    let mut weights = rank_weights(pop);
    let available = weights.iter().filter(|&&w| w > 0.0).count();
    if available == 0 {
        return Err(Error::config("roulette selection over a population with zero total weight"));
    }
    let k = if k > available {
        log::warn!("requested {k} parents but only {available} valid candidates");
        available
    } else {
        k
    };
    let mut chosen = Vec::with_capacity(k);
    for _ in 0..k {
        let total: f64 = weights.iter().sum();
        let mut r = rng.random::<f64>() * total;
        let mut pick = None;
        for (i, &w) in weights.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            pick = Some(i);
            if r < w {
                break;
            }
            r -= w;
        }
        let i = pick.expect("positive total weight");
        weights[i] = 0.0;
        chosen.push(i);
    }
    Ok(chosen)
}

/// Removes and returns the worst member: last front, then smallest
/// crowding distance, then oldest `birth_gen`, then lowest serial.
pub fn remove_worst(pop: &mut Vec<CandidateKtm>, mode: Dominance) -> CandidateKtm {
    assert!(!pop.is_empty());
    let fronts = assign_ranks(pop, mode);
    let last = fronts.last().expect("non-empty population");
    let &victim = last
        .iter()
        .min_by(|&&a, &&b| {
            let (ca, cb) = (&pop[a], &pop[b]);
            ca.crowding
                .partial_cmp(&cb.crowding)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(ca.birth_gen.cmp(&cb.birth_gen))
                .then(ca.serial.cmp(&cb.serial))
        })
        .unwrap();
    let removed = pop.remove(victim);
    assign_ranks(pop, mode);
    removed
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::sandbox::SnippetSpec;
    use crate::search::candidate::{Evaluation, Lineage, Operator};

    fn cand(serial: u64, s: f64, t: f64, birth: usize) -> CandidateKtm {
        let eval = if s.is_finite() {
            Evaluation::valid(s, t)
        } else {
            Evaluation::penalized("timeout", "")
        };
        CandidateKtm::new(
            serial,
            SnippetSpec::new(format!("def LLMTransfer(x):\n    return {serial}"), "python"),
            &eval,
            birth,
            Lineage {
                operator: Operator::Init,
                parents: vec![],
            },
        )
    }

    #[test]
    fn parent_count_support() {
        let mut r = rng::stream(1, 0);
        for _ in 0..100 {
            assert_eq!(dynamic_parent_count(&mut r, 4), 2);
            assert!((2..=5).contains(&dynamic_parent_count(&mut r, 10)));
        }
    }

    #[test]
    fn weights_follow_fronts() {
        let mut pop = vec![cand(0, 0.1, 2.0, 0), cand(1, 0.2, 1.0, 0), cand(2, 0.3, 3.0, 0)];
        assign_ranks(&mut pop, Dominance::Strict);
        assert_eq!(rank_weights(&pop), vec![2.0, 2.0, 1.0]);
        pop.push(cand(3, f64::INFINITY, f64::INFINITY, 0));
        assign_ranks(&mut pop, Dominance::Strict);
        assert_eq!(rank_weights(&pop), vec![2.0, 2.0, 1.0, 0.0]);
    }

    #[test]
    fn roulette_is_distinct_and_skips_penalized() {
        let mut pop = vec![cand(0, 0.1, 2.0, 0), cand(1, f64::INFINITY, f64::INFINITY, 0), cand(2, 0.2, 1.0, 0)];
        assign_ranks(&mut pop, Dominance::Strict);
        let mut r = rng::stream(2, 0);
        for _ in 0..50 {
            let mut got = roulette_select(&pop, 3, &mut r).unwrap();
            got.sort();
            assert_eq!(got, vec![0, 2]);
        }
        let mut bad = vec![cand(0, f64::INFINITY, f64::INFINITY, 0)];
        assign_ranks(&mut bad, Dominance::Strict);
        assert!(roulette_select(&bad, 1, &mut r).is_err());
    }

    #[test]
    fn removes_dominated_then_penalized_then_oldest() {
        let mut pop = vec![cand(0, 0.1, 1.0, 0), cand(1, 0.5, 5.0, 0), cand(2, 0.2, 0.5, 1)];
        assert_eq!(remove_worst(&mut pop, Dominance::Strict).serial, 1);

        let mut pop = vec![cand(0, 0.1, 1.0, 0), cand(1, f64::INFINITY, f64::INFINITY, 2), cand(2, 0.5, 5.0, 0)];
        assert_eq!(remove_worst(&mut pop, Dominance::Strict).serial, 1);

        let mut pop = vec![
            cand(0, 0.1, 1.0, 0),
            cand(5, f64::INFINITY, f64::INFINITY, 3),
            cand(4, f64::INFINITY, f64::INFINITY, 2),
        ];
        assert_eq!(remove_worst(&mut pop, Dominance::Strict).serial, 4);
    }

    #[test]
    fn single_front_keeps_extremes() {
        let mut pop = vec![cand(0, 0.0, 4.0, 0), cand(1, 1.0, 3.0, 0), cand(2, 1.2, 1.5, 0), cand(3, 4.0, 0.0, 0)];
        let removed = remove_worst(&mut pop, Dominance::Strict);
        // member 1: (1.2-0)/4 + (4-1.5)/4 = 0.925; member 2: (4-1)/4 + (3-0)/4 = 1.5
        assert_eq!(removed.serial, 1);
    }
}
