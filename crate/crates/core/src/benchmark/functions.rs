//! The seven continuous base functions used to build multi-task benchmarks.
//!
//! All are minimization problems with global minimum value 0. Parameters
//! follow the usual CEC conventions: Ackley (20, 0.2, 2π), Rastrigin A=10,
//! Weierstrass (a=0.5, b=3, k_max=20), Griewank divisor 4000, and the
//! bounded Schwefel 2.26 variant whose out-of-domain branch keeps values
//! non-negative under rotation.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Offset of the Schwefel function: max of `y·sin(√y)` on `[0, 500]`.
pub const SCHWEFEL_OFFSET: f64 = 418.982_887_272_433_9;
/// Coordinate of the Schwefel optimum.
pub const SCHWEFEL_OPTIMUM: f64 = 420.968_746_227_503_6;

const WEIERSTRASS_A: f64 = 0.5;
const WEIERSTRASS_B: f64 = 3.0;
const WEIERSTRASS_KMAX: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum BaseFunctionId {
    Sphere,
    Rosenbrock,
    Ackley,
    Rastrigin,
    Griewank,
    Weierstrass,
    Schwefel,
}

impl BaseFunctionId {
    pub const ALL: [BaseFunctionId; 7] = [
        BaseFunctionId::Sphere,
        BaseFunctionId::Rosenbrock,
        BaseFunctionId::Ackley,
        BaseFunctionId::Rastrigin,
        BaseFunctionId::Griewank,
        BaseFunctionId::Weierstrass,
        BaseFunctionId::Schwefel,
    ];

    /// Stable code 1..=7 (`p1`..`p7`).
    pub fn code(self) -> u8 {
        self as u8 + 1
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get((code as usize).checked_sub(1)?).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            BaseFunctionId::Sphere => "sphere",
            BaseFunctionId::Rosenbrock => "rosenbrock",
            BaseFunctionId::Ackley => "ackley",
            BaseFunctionId::Rastrigin => "rastrigin",
            BaseFunctionId::Griewank => "griewank",
            BaseFunctionId::Weierstrass => "weierstrass",
            BaseFunctionId::Schwefel => "schwefel",
        }
    }

    /// Conventional search box `[lo, hi]` applied to every coordinate.
    pub fn default_bounds(self) -> (f64, f64) {
        match self {
            BaseFunctionId::Sphere
            | BaseFunctionId::Rosenbrock
            | BaseFunctionId::Rastrigin
            | BaseFunctionId::Griewank => (-100.0, 100.0),
            BaseFunctionId::Ackley | BaseFunctionId::Weierstrass => (-50.0, 50.0),
            BaseFunctionId::Schwefel => (-500.0, 500.0),
        }
    }

    /// Per-coordinate value of the minimizer in the base function's own
    /// coordinates.
    pub fn optimum_coordinate(self) -> f64 {
        match self {
            BaseFunctionId::Rosenbrock => 1.0,
            BaseFunctionId::Schwefel => SCHWEFEL_OPTIMUM,
            _ => 0.0,
        }
    }

    pub fn evaluate<T: Scalar>(self, z: &[T]) -> Result<T> {
        if z.is_empty() {
            return Err(Error::invalid("base function input must be non-empty"));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("base function input must be finite"));
        }
        Ok(self.evaluate_unchecked(z))
    }

    /// Evaluates without validating the input; callers guarantee `z` is
    /// non-empty and finite.
    pub fn evaluate_unchecked<T: Scalar>(self, z: &[T]) -> T {
        match self {
            BaseFunctionId::Sphere => sphere(z),
            BaseFunctionId::Rosenbrock => rosenbrock(z),
            BaseFunctionId::Ackley => ackley(z),
            BaseFunctionId::Rastrigin => rastrigin(z),
            BaseFunctionId::Griewank => griewank(z),
            BaseFunctionId::Weierstrass => weierstrass(z),
            BaseFunctionId::Schwefel => schwefel(z),
        }
    }
}

impl fmt::Display for BaseFunctionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl From<BaseFunctionId> for u8 {
    fn from(id: BaseFunctionId) -> u8 {
        id.code()
    }
}

impl TryFrom<u8> for BaseFunctionId {
    type Error = String;

    fn try_from(code: u8) -> std::result::Result<Self, String> {
        Self::from_code(code).ok_or_else(|| format!("unknown base function code {code}"))
    }
}

fn sphere<T: Scalar>(z: &[T]) -> T {
    z.iter().map(|&v| v * v).sum()
}

fn rosenbrock<T: Scalar>(z: &[T]) -> T {
    let hundred = T::lit(100.0);
    z.windows(2)
        .map(|w| {
            let a = w[1] - w[0] * w[0];
            let b = w[0] - T::one();
            hundred * a * a + b * b
        })
        .sum()
}

fn ackley<T: Scalar>(z: &[T]) -> T {
    let d = T::from_usize_lossy(z.len());
    let two_pi = T::TAU();
    let sq = z.iter().map(|&v| v * v).sum::<T>() / d;
    let cs = z.iter().map(|&v| (two_pi * v).cos()).sum::<T>() / d;
    -T::lit(20.0) * (-T::lit(0.2) * sq.sqrt()).exp() - cs.exp() + T::lit(20.0) + T::E()
}

fn rastrigin<T: Scalar>(z: &[T]) -> T {
    let ten = T::lit(10.0);
    let two_pi = T::TAU();
    z.iter()
        .map(|&v| v * v - ten * (two_pi * v).cos() + ten)
        .sum()
}

fn griewank<T: Scalar>(z: &[T]) -> T {
    let sum = z.iter().map(|&v| v * v).sum::<T>() / T::lit(4000.0);
    let prod = z
        .iter()
        .enumerate()
        .fold(T::one(), |acc, (i, &v)| {
            acc * (v / T::from_usize_lossy(i + 1).sqrt()).cos()
        });
    T::one() + sum - prod
}

fn weierstrass<T: Scalar>(z: &[T]) -> T {
    let a = T::lit(WEIERSTRASS_A);
    let b = T::lit(WEIERSTRASS_B);
    let half = T::lit(0.5);
    let two_pi = T::TAU();
    let mut total = T::zero();
    let mut base = T::zero();
    let mut ak = T::one();
    let mut bk = T::one();
    for _ in 0..=WEIERSTRASS_KMAX {
        let mut inner = T::zero();
        for &v in z {
            inner = inner + (two_pi * bk * (v + half)).cos();
        }
        total = total + ak * inner;
        base = base + ak * (two_pi * bk * half).cos();
        ak = ak * a;
        bk = bk * b;
    }
    total - T::from_usize_lossy(z.len()) * base
}

fn schwefel<T: Scalar>(z: &[T]) -> T {
    let d = T::from_usize_lossy(z.len());
    let edge = T::lit(500.0);
    let penalty_scale = T::lit(1.0e4) * d;
    let g = |v: T| -> T {
        if v.abs() <= edge {
            v * v.abs().sqrt().sin()
        } else {
            // Reflect back into the domain and add a quadratic penalty.
            let folded = edge - (v.abs() % edge);
            let overshoot = v.abs() - edge;
            let term = folded * folded.abs().sqrt().sin();
            let term = if v > T::zero() { term } else { -term };
            term - overshoot * overshoot / penalty_scale
        }
    };
    T::lit(SCHWEFEL_OFFSET) * d - z.iter().map(|&v| g(v)).sum::<T>()
}
