//! Multi-task runs of the base GA with periodic knowledge transfer.

mod calibration;
mod engine;
mod ga;

pub use calibration::{
    calibrate_fmin, calibration_from_json, calibration_to_json, load_calibration,
    normalized_score, save_calibration, CalibrationTable, FMIN_FLOOR,
};
pub use engine::{run_emto, run_solo, CostModel, EmtoConfig, EmtoRunResult, SoloRun, WORK_UNIT_SECONDS};
pub use ga::{
    best_fitness, ga_generation, initial_population, make_offspring,
    polynomial_mutation_component, survive, GaParams, Individual,
};
