use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::benchmark::BenchmarkInstance;
use crate::emto::engine::{run_solo, EmtoConfig};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Lower floor applied to every `f_min` entry.
pub const FMIN_FLOOR: f64 = 1e-12;

pub const CALIBRATION_FORMAT: &str = "ktmforge-calibration";
pub const CALIBRATION_FORMAT_VERSION: u32 = 1;

/// Mean final best fitness of the solo GA per task.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct CalibrationTable<T: Scalar> {
    pub benchmark_id: String,
    pub f_min: Vec<T>,
    pub runs: usize,
    pub seeds: Vec<u64>,
    pub floor: f64,
    pub config: EmtoConfig,
}

pub fn calibrate_fmin<T: Scalar>(
    bench: &BenchmarkInstance<T>,
    cfg: &EmtoConfig,
    seeds: &[u64],
) -> Result<CalibrationTable<T>> {
    if seeds.is_empty() {
        return Err(Error::invalid("calibration needs at least one seed"));
    }
    let mut sums = vec![T::zero(); bench.numt()];
    for &seed in seeds {
        let run = run_solo(bench, cfg, seed)?;
        for (s, b) in sums.iter_mut().zip(run.final_best) {
            *s = *s + b;
        }
    }
    let n = T::from_usize_lossy(seeds.len());
    let floor = T::lit(FMIN_FLOOR);
    let f_min = sums
        .into_iter()
        .map(|s| {
            let m = s / n;
            if m < floor {
                floor
            } else {
                m
            }
        })
        .collect();
    Ok(CalibrationTable {
        benchmark_id: bench.id.clone(),
        f_min,
        runs: seeds.len(),
        seeds: seeds.to_vec(),
        floor: FMIN_FLOOR,
        config: cfg.clone(),
    })
}

/// Arithmetic mean over tasks of `best / f_min`.
pub fn normalized_score<T: Scalar>(final_best: &[T], calib: &CalibrationTable<T>) -> Result<T> {
    if final_best.len() != calib.f_min.len() {
        return Err(Error::config(format!(
            "calibration has {} entries for {} tasks",
            calib.f_min.len(),
            final_best.len()
        )));
    }
    if final_best.is_empty() {
        return Err(Error::config("no tasks to score"));
    }
    let total: T = final_best
        .iter()
        .zip(&calib.f_min)
        .map(|(&b, &f)| b / f)
        .sum();
    Ok(total / T::from_usize_lossy(final_best.len()))
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "")]
struct CalibrationFile<T: Scalar> {
    format: String,
    format_version: u32,
    #[serde(flatten)]
    table: CalibrationTable<T>,
}

pub fn calibration_to_json<T: Scalar>(table: &CalibrationTable<T>) -> String {
    serde_json::to_string_pretty(&CalibrationFile {
        format: CALIBRATION_FORMAT.into(),
        format_version: CALIBRATION_FORMAT_VERSION,
        table: table.clone(),
    })
    .expect("calibration serializes")
}

pub fn calibration_from_json<T: Scalar>(text: &str) -> Result<CalibrationTable<T>> {
    #[derive(Deserialize)]
    struct Header {
        format: Option<String>,
        format_version: Option<u32>,
    }
    let h: Header = serde_json::from_str(text).map_err(|e| Error::from_json(e, text))?;
    if h.format.as_deref() != Some(CALIBRATION_FORMAT) {
        return Err(Error::Parse {
            offset: 0,
            message: "not a calibration file".into(),
        });
    }
    let v = h.format_version.unwrap_or(0);
    if v == 0 || v > CALIBRATION_FORMAT_VERSION {
        return Err(Error::Version {
            found: v,
            supported: CALIBRATION_FORMAT_VERSION,
        });
    }
    let file: CalibrationFile<T> = serde_json::from_str(text).map_err(|e| Error::from_json(e, text))?;
    if file.table.f_min.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("calibration contains non-finite f_min"));
    }
    Ok(file.table)
}

pub fn save_calibration<T: Scalar>(table: &CalibrationTable<T>, path: &Path) -> Result<()> {
    fs::write(path, calibration_to_json(table))?;
    Ok(())
}

pub fn load_calibration<T: Scalar>(path: &Path) -> Result<CalibrationTable<T>> {
    calibration_from_json(&fs::read_to_string(path)?)
}
