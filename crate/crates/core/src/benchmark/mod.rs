//! Multi-task single-objective benchmark construction.

mod functions;
mod generate;
mod io;
mod task;

pub use functions::{BaseFunctionId, SCHWEFEL_OFFSET, SCHWEFEL_OPTIMUM};
pub use generate::{
    generate_benchmark, random_rotation, BenchmarkInstance, BoundsPolicy, GeneratorConfig,
    SPHERE_CLUSTER_MINI,
};
pub use io::{
    benchmark_from_json, benchmark_to_json, load_benchmark, save_benchmark, BENCHMARK_FORMAT,
    BENCHMARK_FORMAT_VERSION,
};
pub use task::TaskDefinition;
