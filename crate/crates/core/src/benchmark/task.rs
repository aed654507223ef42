use crate::benchmark::functions::BaseFunctionId;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// One shifted and rotated single-objective task:
/// `f(x) = base((x + shift) · rotation)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskDefinition<T: Scalar> {
    base_fn: BaseFunctionId,
    shift: Vec<T>,
    rotation: Matrix<T>,
    lower: Vec<T>,
    upper: Vec<T>,
    optimum: Vec<T>,
}

impl<T: Scalar> TaskDefinition<T> {
    /// Validates and builds a task. `optimum` is the decision vector the
    /// generator placed the base function's minimizer at.
    pub fn new(
        base_fn: BaseFunctionId,
        shift: Vec<T>,
        rotation: Matrix<T>,
        lower: Vec<T>,
        upper: Vec<T>,
        optimum: Vec<T>,
    ) -> Result<Self> {
        let dim = shift.len();
        if dim == 0 {
            return Err(Error::invalid("task dimension must be positive"));
        }
        if rotation.rows() != dim || rotation.cols() != dim {
            return Err(Error::invalid(format!(
                "rotation is {}x{}, expected {dim}x{dim}",
                rotation.rows(),
                rotation.cols()
            )));
        }
        for (name, v) in [("lower", &lower), ("upper", &upper), ("optimum", &optimum)] {
            if v.len() != dim {
                return Err(Error::invalid(format!("{name} has length {}, expected {dim}", v.len())));
            }
        }
        let all_finite = shift
            .iter()
            .chain(rotation.as_slice())
            .chain(&lower)
            .chain(&upper)
            .chain(&optimum)
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::invalid("task data must be finite"));
        }
        if lower.iter().zip(&upper).any(|(l, u)| l >= u) {
            return Err(Error::invalid("lower bound must be below upper bound"));
        }
        if optimum
            .iter()
            .zip(lower.iter().zip(&upper))
            .any(|(x, (l, u))| x < l || x > u)
        {
            return Err(Error::invalid("optimum lies outside the search box"));
        }
        let tol = orthogonality_tolerance::<T>(dim);
        let residual = rotation.orthogonality_residual();
        if !(residual < tol) {
            return Err(Error::invalid(format!(
                "rotation is not orthogonal (residual {residual})"
            )));
        }
        Ok(TaskDefinition {
            base_fn,
            shift,
            rotation,
            lower,
            upper,
            optimum,
        })
    }

    pub fn base_fn(&self) -> BaseFunctionId {
        self.base_fn
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    pub fn shift(&self) -> &[T] {
        &self.shift
    }

    pub fn rotation(&self) -> &Matrix<T> {
        &self.rotation
    }

    pub fn lower(&self) -> &[T] {
        &self.lower
    }

    pub fn upper(&self) -> &[T] {
        &self.upper
    }

    /// Decision vector at which the task attains the base minimum.
    pub fn optimum(&self) -> &[T] {
        &self.optimum
    }

    /// `z = (x + shift) · rotation`.
    pub fn transform(&self, x: &[T]) -> Vec<T> {
        let shifted: Vec<T> = x.iter().zip(&self.shift).map(|(&a, &b)| a + b).collect();
        self.rotation.vec_mul(&shifted)
    }

    pub fn evaluate(&self, x: &[T]) -> Result<T> {
        if x.len() != self.dim() {
            return Err(Error::invalid(format!(
                "decision vector has length {}, task dimension is {}",
                x.len(),
                self.dim()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("decision vector must be finite"));
        }
        Ok(self.fitness(x))
    }

    /// Unchecked evaluation for the optimizer's hot path; `x` must have the
    /// task's dimension and finite entries.
    #[inline]
    pub fn fitness(&self, x: &[T]) -> T {
        debug_assert_eq!(x.len(), self.dim());
        self.base_fn.evaluate_unchecked(&self.transform(x))
    }

    pub fn contains(&self, x: &[T]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| v >= l && v <= u)
    }
}

pub(crate) fn orthogonality_tolerance<T: Scalar>(dim: usize) -> T {
    T::lit(1e-9).max(T::epsilon() * T::lit(64.0) * T::from_usize_lossy(dim))
}
