//! Real-coded GA: binary tournament, bounded SBX, polynomial mutation and
//! elitist (μ+λ) survival.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::benchmark::TaskDefinition;
use crate::rng::Rng;
use crate::scalar::{clamp, Scalar};
use crate::transfer::sbx_component;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaParams {
    pub sbx_eta: f64,
    pub crossover_prob: f64,
    /// Probability that a coordinate takes part in crossover.
    pub sbx_var_prob: f64,
    pub mutation_eta: f64,
    /// Per-gene mutation probability; `None` means `1/dim`.
    pub mutation_prob: Option<f64>,
    pub tournament_size: usize,
}

impl Default for GaParams {
    fn default() -> Self {
        GaParams {
            sbx_eta: 15.0,
            crossover_prob: 0.9,
            sbx_var_prob: 0.5,
            mutation_eta: 20.0,
            mutation_prob: None,
            tournament_size: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Individual<T> {
    pub genotype: Vec<T>,
    pub fitness: T,
}

pub fn best_fitness<T: Scalar>(pop: &[Individual<T>]) -> T {
    pop.iter().map(|i| i.fitness).fold(T::infinity(), T::min)
}

/// Uniform random population inside the task's box, evaluated.
pub fn initial_population<T: Scalar>(
    task: &TaskDefinition<T>,
    pop_size: usize,
    rng: &mut Rng,
) -> Vec<Individual<T>> {
    (0..pop_size)
        .map(|_| {
            let genotype: Vec<T> = task
                .lower()
                .iter()
                .zip(task.upper())
                .map(|(&l, &u)| l + T::lit(rng.random::<f64>()) * (u - l))
                .collect();
            let fitness = task.fitness(&genotype);
            Individual { genotype, fitness }
        })
        .collect()
}

fn tournament<T: Scalar>(pop: &[Individual<T>], size: usize, rng: &mut Rng) -> usize {
    let mut best = rng.random_range(0..pop.len());
    for _ in 1..size.max(1) {
        let c = rng.random_range(0..pop.len());
        if pop[c].fitness < pop[best].fitness {
            best = c;
        }
    }
    best
}

/// Polynomial mutation of one coordinate given a uniform draw `u`.
pub fn polynomial_mutation_component<T: Scalar>(y: T, lo: T, hi: T, eta: T, u: T) -> T {
    let one = T::one();
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    let range = hi - lo;
    let delta1 = (y - lo) / range;
    let delta2 = (hi - y) / range;
    let pow = one / (eta + one);
    let deltaq = if u < half {
        let xy = one - delta1;
        let val = two * u + (one - two * u) * xy.powf(eta + one);
        val.powf(pow) - one
    } else {
        let xy = one - delta2;
        let val = two * (one - u) + two * (u - half) * xy.powf(eta + one);
        one - val.powf(pow)
    };
    clamp(y + deltaq * range, lo, hi)
}

/// Creates `count` children (unevaluated) from `pop`.
pub fn make_offspring<T: Scalar>(
    pop: &[Individual<T>],
    lower: &[T],
    upper: &[T],
    params: &GaParams,
    count: usize,
    rng: &mut Rng,
) -> Vec<Vec<T>> {
    let dim = lower.len();
    let sbx_eta = T::lit(params.sbx_eta);
    let pm_eta = T::lit(params.mutation_eta);
    let pm_prob = params.mutation_prob.unwrap_or(1.0 / dim as f64);
    let mut children = Vec::with_capacity(count + 1);
    while children.len() < count {
        let a = &pop[tournament(pop, params.tournament_size, rng)].genotype;
        let b = &pop[tournament(pop, params.tournament_size, rng)].genotype;
        let mut c1 = a.clone();
        let mut c2 = b.clone();
        if rng.random::<f64>() < params.crossover_prob {
            for d in 0..dim {
                if rng.random::<f64>() >= params.sbx_var_prob {
                    continue;
                }
                let u = T::lit(rng.random::<f64>());
                let (x1, x2) = sbx_component(a[d], b[d], lower[d], upper[d], sbx_eta, u);
                if rng.random::<bool>() {
                    c1[d] = x2;
                    c2[d] = x1;
                } else {
                    c1[d] = x1;
                    c2[d] = x2;
                }
            }
        }
        for child in [&mut c1, &mut c2] {
            for d in 0..dim {
                if rng.random::<f64>() < pm_prob {
                    let u = T::lit(rng.random::<f64>());
                    child[d] = polynomial_mutation_component(child[d], lower[d], upper[d], pm_eta, u);
                }
            }
        }
        children.push(c1);
        children.push(c2);
    }
    children.truncate(count);
    children
}

/// Keeps the best `pop_size` of parents ∪ offspring. Ties keep the earlier
/// entry (parents before offspring).
pub fn survive<T: Scalar>(
    mut parents: Vec<Individual<T>>,
    offspring: Vec<Individual<T>>,
    pop_size: usize,
) -> Vec<Individual<T>> {
    parents.extend(offspring);
    parents.sort_by(|a, b| {
        a.fitness
            .partial_cmp(&b.fitness)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    parents.truncate(pop_size);
    parents
}

/// One full generation: `pop.len()` new evaluations.
pub fn ga_generation<T: Scalar>(
    pop: Vec<Individual<T>>,
    task: &TaskDefinition<T>,
    params: &GaParams,
    rng: &mut Rng,
) -> Vec<Individual<T>> {
    let n = pop.len();
    let offspring = make_offspring(&pop, task.lower(), task.upper(), params, n, rng)
        .into_iter()
        .map(|genotype| {
            let fitness = task.fitness(&genotype);
            Individual { genotype, fitness }
        })
        .collect();
    survive(pop, offspring, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmark::{generate_benchmark, GeneratorConfig};
    use crate::rng;

    fn sphere_task() -> TaskDefinition<f64> {
        let mut cfg = GeneratorConfig::preset("B1-mini").unwrap();
        cfg.numt = 1;
        generate_benchmark(&cfg, 1).unwrap().tasks.remove(0)
    }

    #[test]
    fn identical_population_still_valid() {
        let task = sphere_task();
        let g = vec![10.0; task.dim()];
        let f = task.fitness(&g);
        let pop = vec![
            Individual {
                genotype: g.clone(),
                fitness: f
            };
            20
        ];
        let mut r = rng::stream(0, 0);
        let next = ga_generation(pop, &task, &GaParams::default(), &mut r);
        assert_eq!(next.len(), 20);
        assert!(best_fitness(&next) <= f);
        assert!(next.iter().all(|i| task.contains(&i.genotype)));
    }

    #[test]
    fn deterministic_given_seed() {
        let task = sphere_task();
        let run = || {
            let mut r = rng::stream(4, 2);
            let mut pop = initial_population(&task, 16, &mut r);
            for _ in 0..5 {
                pop = ga_generation(pop, &task, &GaParams::default(), &mut r);
            }
            pop
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn mutation_stays_in_bounds() {
        for &u in &[0.0, 0.01, 0.49, 0.5, 0.51, 0.99] {
            for &y in &[-1.0, -0.3, 0.0, 0.9, 1.0] {
                let v = polynomial_mutation_component(y, -1.0f64, 1.0, 20.0, u);
                assert!((-1.0..=1.0).contains(&v), "u={u} y={y} v={v}");
            }
        }
        // u = 0.5 is the identity point of the operator.
        let v = polynomial_mutation_component(0.2f64, -1.0, 1.0, 20.0, 0.5);
        assert!((v - 0.2).abs() < 1e-12);
    }

    #[test]
    fn best_is_monotone() {
        let task = sphere_task();
        let mut r = rng::stream(8, 0);
        let mut pop = initial_population(&task, 20, &mut r);
        let mut prev = best_fitness(&pop);
        for _ in 0..30 {
            pop = ga_generation(pop, &task, &GaParams::default(), &mut r);
            let b = best_fitness(&pop);
            assert!(b <= prev);
            prev = b;
        }
    }
}
