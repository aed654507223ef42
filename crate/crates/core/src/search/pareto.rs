//! Dominance, non-dominated sorting and crowding distance on `(s, t)`,
//! both minimized.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dominance {
    /// `x` dominates `y` iff `x` is strictly better in both objectives.
    #[default]
    Strict,
    /// Usual Pareto dominance: no worse in both, strictly better in one.
    Weak,
}

/// True iff `x` dominates `y`.
pub fn dominates(x: (f64, f64), y: (f64, f64), mode: Dominance) -> bool {
    match mode {
        Dominance::Strict => x.0 < y.0 && x.1 < y.1,
        Dominance::Weak => x.0 <= y.0 && x.1 <= y.1 && (x.0 < y.0 || x.1 < y.1),
    }
}

/// Partitions point indices into fronts; front 0 is non-dominated.
pub fn fast_nondominated_sort(points: &[(f64, f64)], mode: Dominance) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut dominated_by_count = vec![0usize; n];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            if i != j && dominates(points[i], points[j], mode) {
                dominates_list[i].push(j);
                dominated_by_count[j] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominates_list[i] {
                dominated_by_count[j] -= 1;
                if dominated_by_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance of each member of `front` (same order as `front`).
///
/// Per objective, the two extreme members get `+∞` and interior members
/// add the gap between their neighbours divided by the objective's range.
/// An objective whose range is zero or non-finite contributes nothing.
pub fn crowding_distance(points: &[(f64, f64)], front: &[usize]) -> Vec<f64> {
    let n = front.len();
    let mut dist = vec![0.0; n];
    for m in 0..2 {
        let value = |k: usize| if m == 0 { points[front[k]].0 } else { points[front[k]].1 };
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| value(a).partial_cmp(&value(b)).unwrap_or(std::cmp::Ordering::Equal));
        if n == 0 {
            continue;
        }
        let range = value(order[n - 1]) - value(order[0]);
        if !(range.is_finite() && range > 0.0) {
            continue;
        }
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        for w in 1..n.saturating_sub(1) {
            let k = order[w];
            if dist[k].is_finite() {
                dist[k] += (value(order[w + 1]) - value(order[w - 1])) / range;
            }
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strict_dominance_examples() {
        assert!(dominates((0.4, 8.0), (0.5, 10.0), Dominance::Strict));
        assert!(!dominates((0.4, 8.0), (0.4, 10.0), Dominance::Strict));
        assert!(!dominates((0.4, 10.0), (0.4, 8.0), Dominance::Strict));
        assert!(dominates((0.4, 8.0), (0.4, 10.0), Dominance::Weak));
        let inf = (f64::INFINITY, f64::INFINITY);
        assert!(dominates((1e300, 1e300), inf, Dominance::Strict));
        assert!(!dominates(inf, inf, Dominance::Strict));
        assert!(!dominates(inf, inf, Dominance::Weak));
    }

    #[test]
    fn sorts_example_population() {
        let pts = [(0.2, 5.0), (0.5, 3.0), (0.6, 9.0)];
        assert_eq!(fast_nondominated_sort(&pts, Dominance::Strict), vec![vec![0, 1], vec![2]]);
        let chain = [(0.3, 3.0), (0.1, 1.0), (0.2, 2.0)];
        assert_eq!(fast_nondominated_sort(&chain, Dominance::Strict), vec![vec![1], vec![2], vec![0]]);
    }

    #[test]
    fn crowding_examples() {
        let pts = [(0.0, 2.0), (1.0, 1.0), (2.0, 0.0)];
        let d = crowding_distance(&pts, &[0, 1, 2]);
        assert!(d[0].is_infinite() && d[2].is_infinite());
        // Neighbour gap 2 over range 2, in each objective.
        assert!((d[1] - 2.0).abs() < 1e-12);
        let two = crowding_distance(&pts, &[0, 2]);
        assert!(two.iter().all(|v| v.is_infinite()));
        let same = [(1.0, 1.0); 4];
        assert_eq!(crowding_distance(&same, &[0, 1, 2, 3]), vec![0.0; 4]);
    }
}
