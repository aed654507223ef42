//! Versioned JSON persistence for benchmark instances.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::benchmark::functions::BaseFunctionId;
use crate::benchmark::generate::BenchmarkInstance;
use crate::benchmark::task::TaskDefinition;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::RNG_ALGORITHM;
use crate::scalar::Scalar;

pub const BENCHMARK_FORMAT: &str = "ktmforge-benchmark";
pub const BENCHMARK_FORMAT_VERSION: u32 = 1;

/// Array with explicit shape; `data` is row-major.
#[derive(Serialize, Deserialize)]
struct Array {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Array {
    fn vector<T: Scalar>(v: &[T]) -> Self {
        Array {
            shape: vec![v.len()],
            data: v.iter().map(|x| x.to_f64_lossy()).collect(),
        }
    }

    fn matrix<T: Scalar>(m: &Matrix<T>) -> Self {
        Array {
            shape: vec![m.rows(), m.cols()],
            data: m.as_slice().iter().map(|x| x.to_f64_lossy()).collect(),
        }
    }

    fn check(&self, expected: &[usize], what: &str) -> Result<()> {
        let n: usize = self.shape.iter().product();
        if self.shape != expected || n != self.data.len() {
            return Err(Error::invalid(format!(
                "{what}: shape {:?} with {} values, expected shape {expected:?}",
                self.shape,
                self.data.len()
            )));
        }
        Ok(())
    }

    fn into_scalars<T: Scalar>(self) -> Vec<T> {
        self.data.into_iter().map(T::lit).collect()
    }
}

#[derive(Serialize, Deserialize)]
struct TaskRecord {
    base_fn: BaseFunctionId,
    shift: Array,
    rotation: Array,
    lower: Array,
    upper: Array,
    optimum: Array,
}

#[derive(Serialize, Deserialize)]
struct BenchmarkFile {
    format: String,
    format_version: u32,
    id: String,
    seed: u64,
    rng: String,
    pset: Vec<BaseFunctionId>,
    numt: usize,
    dim: usize,
    tasks: Vec<TaskRecord>,
}

#[derive(Deserialize)]
struct Header {
    format: Option<String>,
    format_version: Option<u32>,
}

pub fn benchmark_to_json<T: Scalar>(instance: &BenchmarkInstance<T>) -> String {
    let file = BenchmarkFile {
        format: BENCHMARK_FORMAT.to_string(),
        format_version: BENCHMARK_FORMAT_VERSION,
        id: instance.id.clone(),
        seed: instance.seed,
        rng: RNG_ALGORITHM.to_string(),
        pset: instance.pset.clone(),
        numt: instance.numt(),
        dim: instance.dim(),
        tasks: instance
            .tasks
            .iter()
            .map(|t| TaskRecord {
                base_fn: t.base_fn(),
                shift: Array::vector(t.shift()),
                rotation: Array::matrix(t.rotation()),
                lower: Array::vector(t.lower()),
                upper: Array::vector(t.upper()),
                optimum: Array::vector(t.optimum()),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("benchmark serializes")
}

pub fn benchmark_from_json<T: Scalar>(text: &str) -> Result<BenchmarkInstance<T>> {
    let header: Header = serde_json::from_str(text).map_err(|e| Error::from_json(e, text))?;
    match header.format.as_deref() {
        Some(BENCHMARK_FORMAT) => {}
        other => {
            return Err(Error::Parse {
                offset: 0,
                message: format!("not a benchmark file (format tag {other:?})"),
            })
        }
    }
    let version = header.format_version.unwrap_or(0);
    if version == 0 || version > BENCHMARK_FORMAT_VERSION {
        return Err(Error::Version {
            found: version,
            supported: BENCHMARK_FORMAT_VERSION,
        });
    }
    let file: BenchmarkFile = serde_json::from_str(text).map_err(|e| Error::from_json(e, text))?;
    if file.rng != RNG_ALGORITHM {
        return Err(Error::invalid(format!("unsupported rng algorithm {:?}", file.rng)));
    }
    if file.tasks.len() != file.numt {
        return Err(Error::invalid(format!(
            "numt is {} but {} tasks are stored",
            file.numt,
            file.tasks.len()
        )));
    }
    let d = file.dim;
    let mut tasks = Vec::with_capacity(file.tasks.len());
    for (i, rec) in file.tasks.into_iter().enumerate() {
        let ctx = |f: &str| format!("task {i} {f}");
        rec.shift.check(&[d], &ctx("shift"))?;
        rec.rotation.check(&[d, d], &ctx("rotation"))?;
        rec.lower.check(&[d], &ctx("lower"))?;
        rec.upper.check(&[d], &ctx("upper"))?;
        rec.optimum.check(&[d], &ctx("optimum"))?;
        tasks.push(TaskDefinition::new(
            rec.base_fn,
            rec.shift.into_scalars(),
            Matrix::from_row_major(d, d, rec.rotation.into_scalars()),
            rec.lower.into_scalars(),
            rec.upper.into_scalars(),
            rec.optimum.into_scalars(),
        )?);
    }
    Ok(BenchmarkInstance {
        id: file.id,
        seed: file.seed,
        pset: file.pset,
        tasks,
    })
}

pub fn save_benchmark<T: Scalar>(instance: &BenchmarkInstance<T>, path: &Path) -> Result<()> {
    fs::write(path, benchmark_to_json(instance))?;
    Ok(())
}

pub fn load_benchmark<T: Scalar>(path: &Path) -> Result<BenchmarkInstance<T>> {
    let text = fs::read_to_string(path)?;
    benchmark_from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmark::generate::{generate_benchmark, GeneratorConfig};

    fn sample() -> BenchmarkInstance<f64> {
        generate_benchmark(&GeneratorConfig::preset("B8-mini").unwrap(), 21).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let inst = sample();
        let back: BenchmarkInstance<f64> = benchmark_from_json(&benchmark_to_json(&inst)).unwrap();
        assert_eq!(inst, back);
    }

    #[test]
    fn truncated_file_is_parse_error() {
        let text = benchmark_to_json(&sample());
        let cut = &text[..text.len() / 2];
        match benchmark_from_json::<f64>(cut) {
            Err(Error::Parse { offset, .. }) => assert!(offset <= cut.len()),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn future_version_rejected() {
        let text = benchmark_to_json(&sample()).replacen(
            "\"format_version\": 1",
            "\"format_version\": 7",
            1,
        );
        assert!(matches!(
            benchmark_from_json::<f64>(&text),
            Err(Error::Version { found: 7, supported: 1 })
        ));
    }

    #[test]
    fn wrong_format_tag_rejected() {
        assert!(matches!(
            benchmark_from_json::<f64>("{\"format\":\"other\",\"format_version\":1}"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn shape_mismatch_rejected() {
        let text = benchmark_to_json(&sample()).replacen("\"dim\": 10", "\"dim\": 9", 1);
        assert!(matches!(
            benchmark_from_json::<f64>(&text),
            Err(Error::InvalidArgument(_))
        ));
    }
}
