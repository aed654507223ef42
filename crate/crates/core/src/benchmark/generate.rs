use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::benchmark::functions::BaseFunctionId;
use crate::benchmark::task::TaskDefinition;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::{self, Rng};
use crate::scalar::Scalar;

/// Fraction of each coordinate range in which optima are placed.
const INTERIOR_FRACTION: f64 = 0.8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum BoundsPolicy {
    /// Conventional box of each base function.
    PerFunction,
    /// One box shared by every task.
    Fixed { lower: f64, upper: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub id: String,
    pub pset: Vec<BaseFunctionId>,
    pub numt: usize,
    pub dim: usize,
    pub bounds: BoundsPolicy,
    /// When set, all optima are drawn around one shared center, each
    /// coordinate within `±cluster_spread/2` of the box width. Produces
    /// high-similarity instances.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_spread: Option<f64>,
}

/// Base-function sets of the ten 50-task benchmarks, as function codes.
const PRESET_PSETS: [&[u8]; 10] = [
    &[1],
    &[2],
    &[4],
    &[1, 2, 3],
    &[4, 5, 6],
    &[2, 5, 7],
    &[3, 4, 6],
    &[2, 3, 4, 5, 6],
    &[2, 3, 4, 5, 6, 7],
    &[3, 4, 5, 6, 7],
];

/// Name of the high-similarity desk-scale preset (5 shifted Sphere tasks in 10-D).
pub const SPHERE_CLUSTER_MINI: &str = "sphere-cluster-mini";

impl GeneratorConfig {
    /// Looks up `B1`..`B10`, their `-mini` variants (5 tasks, 10-D) and
    /// [`SPHERE_CLUSTER_MINI`].
    pub fn preset(name: &str) -> Option<Self> {
        if name == SPHERE_CLUSTER_MINI {
            return Some(GeneratorConfig {
                id: name.to_string(),
                pset: vec![BaseFunctionId::Sphere],
                numt: 5,
                dim: 10,
                bounds: BoundsPolicy::PerFunction,
                cluster_spread: Some(0.02),
            });
        }
        let (base, mini) = match name.strip_suffix("-mini") {
            Some(b) => (b, true),
            None => (name, false),
        };
        let index: usize = base.strip_prefix('B')?.parse().ok()?;
        let codes = PRESET_PSETS.get(index.checked_sub(1)?)?;
        let pset = codes
            .iter()
            .map(|&c| BaseFunctionId::from_code(c).expect("preset codes are valid"))
            .collect();
        let (numt, dim) = if mini { (5, 10) } else { (50, 50) };
        Some(GeneratorConfig {
            id: name.to_string(),
            pset,
            numt,
            dim,
            bounds: BoundsPolicy::PerFunction,
            cluster_spread: None,
        })
    }

    pub fn preset_names() -> Vec<String> {
        let mut names = Vec::new();
        for i in 1..=10 {
            names.push(format!("B{i}"));
        }
        for i in 1..=10 {
            names.push(format!("B{i}-mini"));
        }
        names.push(SPHERE_CLUSTER_MINI.to_string());
        names
    }

    fn bounds_for(&self, f: BaseFunctionId) -> (f64, f64) {
        match self.bounds {
            BoundsPolicy::PerFunction => f.default_bounds(),
            BoundsPolicy::Fixed { lower, upper } => (lower, upper),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.pset.is_empty() {
            return Err(Error::invalid("pset must be non-empty"));
        }
        if self.numt == 0 {
            return Err(Error::invalid("numt must be at least 1"));
        }
        if self.dim < 2 {
            return Err(Error::invalid("dim must be at least 2"));
        }
        if let BoundsPolicy::Fixed { lower, upper } = self.bounds {
            if !(lower < upper) || !lower.is_finite() || !upper.is_finite() {
                return Err(Error::invalid("fixed bounds must satisfy lower < upper"));
            }
        }
        if let Some(spread) = self.cluster_spread {
            if !(spread >= 0.0 && spread < INTERIOR_FRACTION) {
                return Err(Error::invalid("cluster_spread must lie in [0, 0.8)"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkInstance<T: Scalar> {
    pub id: String,
    pub seed: u64,
    pub pset: Vec<BaseFunctionId>,
    pub tasks: Vec<TaskDefinition<T>>,
}

impl<T: Scalar> BenchmarkInstance<T> {
    pub fn numt(&self) -> usize {
        self.tasks.len()
    }

    pub fn dim(&self) -> usize {
        self.tasks.first().map_or(0, TaskDefinition::dim)
    }
}

/// Generates an instance from `config`, fully determined by `seed`.
///
/// Draw order per task: `dim²` standard normals (row-major) for the
/// rotation, then `dim` uniforms for the optimum location. Clustered
/// configs draw `dim` uniforms for the shared center before the first task.
pub fn generate_benchmark<T: Scalar>(config: &GeneratorConfig, seed: u64) -> Result<BenchmarkInstance<T>> {
    config.validate()?;
    let mut rng = rng::stream(seed, rng::STREAM_BENCHMARK);
    let dim = config.dim;

    // Center in unit coordinates for clustered instances.
    let center: Option<Vec<f64>> = config.cluster_spread.map(|spread| {
        let lo = 0.5 - (INTERIOR_FRACTION - spread) / 2.0;
        let hi = 0.5 + (INTERIOR_FRACTION - spread) / 2.0;
        (0..dim).map(|_| lo + rng.random::<f64>() * (hi - lo)).collect()
    });

    let mut tasks = Vec::with_capacity(config.numt);
    for i in 0..config.numt {
        let base = config.pset[i % config.pset.len()];
        let (lo, hi) = config.bounds_for(base);
        let rotation = random_rotation::<T>(dim, &mut rng);

        let unit_optimum: Vec<f64> = match (&center, config.cluster_spread) {
            (Some(c), Some(spread)) => c
                .iter()
                .map(|&ci| ci + (rng.random::<f64>() - 0.5) * spread)
                .collect(),
            _ => {
                let margin = (1.0 - INTERIOR_FRACTION) / 2.0;
                (0..dim)
                    .map(|_| margin + rng.random::<f64>() * INTERIOR_FRACTION)
                    .collect()
            }
        };
        let optimum: Vec<T> = unit_optimum
            .iter()
            .map(|&u| T::lit(lo + u * (hi - lo)))
            .collect();

        // z* · Rᵀ = x* + shift
        let z_star = vec![T::lit(base.optimum_coordinate()); dim];
        let back = rotation.mul_vec(&z_star);
        let shift: Vec<T> = back.iter().zip(&optimum).map(|(&b, &x)| b - x).collect();

        tasks.push(TaskDefinition::new(
            base,
            shift,
            rotation,
            vec![T::lit(lo); dim],
            vec![T::lit(hi); dim],
            optimum,
        )?);
    }

    Ok(BenchmarkInstance {
        id: config.id.clone(),
        seed,
        pset: config.pset.clone(),
        tasks,
    })
}

/// Haar-distributed rotation: Gram-Schmidt on a Gaussian matrix, then the
/// first column is negated if needed so the determinant is +1.
pub fn random_rotation<T: Scalar>(dim: usize, rng: &mut Rng) -> Matrix<T> {
    loop {
        let data: Vec<T> = (0..dim * dim)
            .map(|_| T::lit(rng.sample::<f64, _>(StandardNormal)))
            .collect();
        let mut m = Matrix::from_row_major(dim, dim, data);
        if m.orthonormalize_columns().is_err() {
            continue;
        }
        if m.determinant() < T::zero() {
            for r in 0..dim {
                m[(r, 0)] = -m[(r, 0)];
            }
        }
        return m;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_have_expected_shapes() {
        let b1 = GeneratorConfig::preset("B1").unwrap();
        assert_eq!((b1.numt, b1.dim), (50, 50));
        assert_eq!(b1.pset, vec![BaseFunctionId::Sphere]);
        let b9 = GeneratorConfig::preset("B9-mini").unwrap();
        assert_eq!((b9.numt, b9.dim), (5, 10));
        assert_eq!(b9.pset.len(), 6);
        assert!(GeneratorConfig::preset("B11").is_none());
        assert!(GeneratorConfig::preset("B0").is_none());
        assert!(GeneratorConfig::preset("X1").is_none());
        assert_eq!(GeneratorConfig::preset_names().len(), 21);
    }

    #[test]
    fn b4_cycles_pset() {
        let cfg = GeneratorConfig::preset("B4-mini").unwrap();
        let inst = generate_benchmark::<f64>(&cfg, 3).unwrap();
        let got: Vec<_> = inst.tasks.iter().map(|t| t.base_fn()).collect();
        use BaseFunctionId::*;
        assert_eq!(got, vec![Sphere, Rosenbrock, Ackley, Sphere, Rosenbrock]);
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = GeneratorConfig::preset("B6-mini").unwrap();
        let a = generate_benchmark::<f64>(&cfg, 11).unwrap();
        let b = generate_benchmark::<f64>(&cfg, 11).unwrap();
        let c = generate_benchmark::<f64>(&cfg, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn rotations_are_proper() {
        let mut rng = rng::stream(1, 99);
        for d in [2, 3, 10, 25] {
            let r = random_rotation::<f64>(d, &mut rng);
            assert!(r.orthogonality_residual() < 1e-12);
            assert!((r.determinant() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let mut cfg = GeneratorConfig::preset("B1-mini").unwrap();
        cfg.dim = 1;
        assert!(generate_benchmark::<f64>(&cfg, 0).is_err());
        cfg.dim = 4;
        cfg.numt = 0;
        assert!(generate_benchmark::<f64>(&cfg, 0).is_err());
        cfg.numt = 2;
        cfg.pset.clear();
        assert!(generate_benchmark::<f64>(&cfg, 0).is_err());
    }

    #[test]
    fn cluster_preset_keeps_optima_close() {
        let cfg = GeneratorConfig::preset(SPHERE_CLUSTER_MINI).unwrap();
        let inst = generate_benchmark::<f64>(&cfg, 5).unwrap();
        let first = inst.tasks[0].optimum().to_vec();
        for t in &inst.tasks[1..] {
            for (a, b) in t.optimum().iter().zip(&first) {
                assert!((a - b).abs() <= 0.02 * 200.0);
            }
        }
    }

    #[test]
    fn f32_instances_generate() {
        let cfg = GeneratorConfig::preset("B5-mini").unwrap();
        let inst = generate_benchmark::<f32>(&cfg, 2).unwrap();
        assert_eq!(inst.numt(), 5);
        assert_eq!(inst.dim(), 10);
    }
}
