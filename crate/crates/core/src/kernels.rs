//! Kernel functions and Gram matrices for the kernel-generated surfaces
//! `K(xᵀ, Cᵀ)u + b = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{NhcaError, Result};
use crate::numerics::{dot, squared_distance, Matrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec<T> {
    Linear,
    Rbf { gamma: T },
}

impl<T: Scalar> KernelSpec<T> {
    pub fn rbf(gamma: T) -> Result<Self> {
        let spec = KernelSpec::Rbf { gamma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Rbf { gamma } if gamma > T::zero() && gamma.is_finite() => Ok(()),
            KernelSpec::Rbf { gamma } => Err(NhcaError::InvalidParameter(format!(
                "rbf gamma must be positive and finite, got {gamma}"
            ))),
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, KernelSpec::Linear)
    }

    #[inline]
    pub fn eval(&self, x: &[T], c: &[T]) -> T {
        match *self {
            KernelSpec::Linear => dot(x, c),
            KernelSpec::Rbf { gamma } => (-gamma * squared_distance(x, c)).exp(),
        }
    }
}

/// `K(X, C)`: entry `(i, j)` is `k(xᵢ, cⱼ)`.
pub fn gram<T: Scalar>(x: &Matrix<T>, c: &Matrix<T>, spec: &KernelSpec<T>) -> Result<Matrix<T>> {
    spec.validate()?;
    if x.cols() != c.cols() {
        return Err(NhcaError::DimensionMismatch(format!(
            "kernel inputs have {} and {} columns",
            x.cols(),
            c.cols()
        )));
    }
    x.ensure_finite("kernel input")?;
    c.ensure_finite("kernel reference")?;
    let mut out = Matrix::zeros(x.rows(), c.rows());
    for (i, xi) in x.row_iter().enumerate() {
        let row = out.row_mut(i);
        for (o, cj) in row.iter_mut().zip(c.row_iter()) {
            *o = spec.eval(xi, cj);
        }
    }
    Ok(out)
}

/// One row of `K(xᵀ, Cᵀ)` for a single sample.
pub fn gram_row<T: Scalar>(x: &[T], c: &Matrix<T>, spec: &KernelSpec<T>) -> Result<Vec<T>> {
    if x.len() != c.cols() {
        return Err(NhcaError::DimensionMismatch(format!(
            "sample has {} features, kernel reference has {}",
            x.len(),
            c.cols()
        )));
    }
    Ok(c.row_iter().map(|cj| spec.eval(x, cj)).collect())
}
