//! Binary nonparallel-hyperplane classifiers.
//!
//! Each trainer produces two planes, one proximal to the positive class
//! (`A`) and one proximal to the negative class (`B`). A sample is assigned
//! to the class of the nearer plane.
//!
//! With a [`KernelSpec::Linear`] kernel in [`HyperParams`] the planes live in
//! input space (`xᵀw + b = 0`). With an RBF kernel both classes are mapped
//! through `K(·, Cᵀ)` with `C = [A; B]` and the planes become kernel
//! surfaces `K(xᵀ, Cᵀ)u + b = 0`. [`fit_kernelized`] forces the kernel path
//! for any kernel, including the linear one.

mod gep;
mod twsvm;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{NhcaError, Result};
use crate::kernels::{gram, gram_row, KernelSpec};
use crate::numerics::{dot, norm2, Matrix};
use crate::scalar::Scalar;

pub use gep::{gepsvm_planes, igepsvm_planes, reggepsvm_planes};
pub use twsvm::{twsvm_plane, TwsvmPlane};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Gepsvm,
    RegGepsvm,
    IGepsvm,
    Twsvm,
}

impl Variant {
    /// Column order used by the benchmark tables.
    pub const ALL: [Variant; 4] = [
        Variant::IGepsvm,
        Variant::Gepsvm,
        Variant::RegGepsvm,
        Variant::Twsvm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Gepsvm => "gepsvm",
            Variant::RegGepsvm => "reggepsvm",
            Variant::IGepsvm => "igepsvm",
            Variant::Twsvm => "twsvm",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Variant::Gepsvm => "GEPSVM",
            Variant::RegGepsvm => "RegGEPSVM",
            Variant::IGepsvm => "IGEPSVM",
            Variant::Twsvm => "TWSVM",
        }
    }

    /// True for the three eigenvalue-based variants.
    pub fn is_gep_family(self) -> bool {
        !matches!(self, Variant::Twsvm)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = NhcaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gepsvm" => Ok(Variant::Gepsvm),
            "reggepsvm" => Ok(Variant::RegGepsvm),
            "igepsvm" => Ok(Variant::IGepsvm),
            "twsvm" => Ok(Variant::Twsvm),
            other => Err(NhcaError::InvalidParameter(format!("unknown variant '{other}'"))),
        }
    }
}

/// Regularization and trade-off parameters for all four variants.
///
/// Only the fields a variant reads matter: `delta` (GEPSVM, IGEPSVM),
/// `nu1`/`nu2` (RegGEPSVM), `nu` (IGEPSVM), `c1`/`c2`/`qp_ridge` (TWSVM).
/// `qp_ridge` is the absolute `ε` added to `HᵀH` before inverting it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct HyperParams<T> {
    pub delta: T,
    pub nu1: T,
    pub nu2: T,
    pub nu: T,
    pub c1: T,
    pub c2: T,
    pub qp_ridge: T,
    pub kernel: KernelSpec<T>,
}

impl<T: Scalar> Default for HyperParams<T> {
    fn default() -> Self {
        Self {
            delta: T::lit(1e-4),
            nu1: T::lit(0.1),
            nu2: T::lit(0.1),
            nu: T::lit(0.1),
            c1: T::one(),
            c2: T::one(),
            qp_ridge: T::lit(1e-7),
            kernel: KernelSpec::Linear,
        }
    }
}

impl<T: Scalar> HyperParams<T> {
    pub fn with_kernel(mut self, kernel: KernelSpec<T>) -> Self {
        self.kernel = kernel;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("delta", self.delta),
            ("nu", self.nu),
            ("c1", self.c1),
            ("c2", self.c2),
            ("qp_ridge", self.qp_ridge),
        ];
        for (name, v) in positive {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(NhcaError::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        for (name, v) in [("nu1", self.nu1), ("nu2", self.nu2)] {
            if !(v >= T::zero()) || !v.is_finite() {
                return Err(NhcaError::InvalidParameter(format!(
                    "{name} must be non-negative and finite, got {v}"
                )));
            }
        }
        self.kernel.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    Input,
    Kernel,
}

/// Reference matrix `C` and kernel of a kernel-space surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct KernelRef<T> {
    pub reference: Matrix<T>,
    pub spec: KernelSpec<T>,
}

/// `xᵀw + b = 0` in input space or `K(xᵀ, Cᵀ)u + b = 0` in kernel space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Hyperplane<T> {
    pub weights: Vec<T>,
    pub offset: T,
    pub kernel_ref: Option<Arc<KernelRef<T>>>,
}

impl<T: Scalar> Hyperplane<T> {
    pub fn input(weights: Vec<T>, offset: T) -> Result<Self> {
        let plane = Self {
            weights,
            offset,
            kernel_ref: None,
        };
        plane.validate()?;
        Ok(plane)
    }

    pub fn kernel(weights: Vec<T>, offset: T, kernel_ref: Arc<KernelRef<T>>) -> Result<Self> {
        let plane = Self {
            weights,
            offset,
            kernel_ref: Some(kernel_ref),
        };
        plane.validate()?;
        Ok(plane)
    }

    /// Splits an augmented vector `z = [w; b]`.
    pub fn from_augmented(z: &[T], kernel_ref: Option<Arc<KernelRef<T>>>) -> Result<Self> {
        let (b, w) = z
            .split_last()
            .ok_or_else(|| NhcaError::DimensionMismatch("empty plane vector".into()))?;
        let plane = Self {
            weights: w.to_vec(),
            offset: *b,
            kernel_ref,
        };
        plane.validate()?;
        Ok(plane)
    }

    pub fn space(&self) -> Space {
        if self.kernel_ref.is_some() {
            Space::Kernel
        } else {
            Space::Input
        }
    }

    /// Number of features a sample must have.
    pub fn input_dim(&self) -> usize {
        match &self.kernel_ref {
            Some(k) => k.reference.cols(),
            None => self.weights.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.iter().any(|w| !w.is_finite()) || !self.offset.is_finite() {
            return Err(NhcaError::NonFinite("hyperplane coefficients"));
        }
        if self.weights.iter().all(|&w| w == T::zero()) {
            return Err(NhcaError::DegenerateData(
                "hyperplane normal vector is zero".into(),
            ));
        }
        if let Some(k) = &self.kernel_ref {
            if k.reference.rows() != self.weights.len() {
                return Err(NhcaError::DimensionMismatch(format!(
                    "{} kernel weights for a reference matrix with {} rows",
                    self.weights.len(),
                    k.reference.rows()
                )));
            }
            k.spec.validate()?;
        }
        Ok(())
    }

    /// `xᵀw + b` (or `K(xᵀ, Cᵀ)u + b`) without normalization.
    pub fn decision_value(&self, x: &[T]) -> Result<T> {
        match &self.kernel_ref {
            None => {
                if x.len() != self.weights.len() {
                    return Err(NhcaError::DimensionMismatch(format!(
                        "sample has {} features, plane expects {}",
                        x.len(),
                        self.weights.len()
                    )));
                }
                Ok(dot(x, &self.weights) + self.offset)
            }
            Some(k) => {
                let row = gram_row(x, &k.reference, &k.spec)?;
                Ok(dot(&row, &self.weights) + self.offset)
            }
        }
    }

    /// The same surface with `(weights, offset)` multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        Self {
            weights: self.weights.iter().map(|&w| w * factor).collect(),
            offset: self.offset * factor,
            kernel_ref: self.kernel_ref.clone(),
        }
    }
}

/// Distance `|xᵀw + b| / ‖w‖₂` of a sample from a plane; in kernel space
/// `|K(xᵀ, Cᵀ)u + b| / ‖u‖₂`.
pub fn signed_distance<T: Scalar>(x: &[T], plane: &Hyperplane<T>) -> Result<T> {
    let value = plane.decision_value(x)?;
    Ok(value.abs() / norm2(&plane.weights))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct BinaryModel<T> {
    pub variant: Variant,
    /// Plane proximal to the positive class.
    pub plane_pos: Hyperplane<T>,
    /// Plane proximal to the negative class.
    pub plane_neg: Hyperplane<T>,
    pub params: HyperParams<T>,
    /// False when a TWSVM dual solve stopped at the iteration cap.
    pub converged: bool,
}

impl<T: Scalar> BinaryModel<T> {
    pub fn space(&self) -> Space {
        self.plane_pos.space()
    }

    pub fn input_dim(&self) -> usize {
        self.plane_pos.input_dim()
    }

    pub fn validate(&self) -> Result<()> {
        self.plane_pos.validate()?;
        self.plane_neg.validate()?;
        if self.plane_pos.space() != self.plane_neg.space() {
            return Err(NhcaError::Format("planes of one model live in different spaces".into()));
        }
        Ok(())
    }
}

/// `+1` when `x` is strictly nearer `plane_pos` or equidistant, `-1` otherwise.
pub fn predict_binary<T: Scalar>(model: &BinaryModel<T>, x: &[T]) -> Result<i8> {
    let d_pos = signed_distance(x, &model.plane_pos)?;
    let d_neg = signed_distance(x, &model.plane_neg)?;
    Ok(if d_neg < d_pos { -1 } else { 1 })
}

pub fn predict_binary_batch<T: Scalar>(model: &BinaryModel<T>, x: &Matrix<T>) -> Result<Vec<i8>> {
    x.row_iter().map(|r| predict_binary(model, r)).collect()
}

fn check_classes<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<()> {
    if a.rows() == 0 {
        return Err(NhcaError::DegenerateClass("positive".into()));
    }
    if b.rows() == 0 {
        return Err(NhcaError::DegenerateClass("negative".into()));
    }
    if a.cols() != b.cols() {
        return Err(NhcaError::DimensionMismatch(format!(
            "classes have {} and {} features",
            a.cols(),
            b.cols()
        )));
    }
    a.ensure_finite("positive class samples")?;
    b.ensure_finite("negative class samples")
}

/// Raw solution in augmented coordinates `z = [w; b]`.
#[derive(Debug, Clone)]
pub(crate) struct AugmentedPlanes<T> {
    pub pos: Vec<T>,
    pub neg: Option<Vec<T>>,
    pub converged: bool,
}

/// Solves the variant's problem(s) on already-mapped class matrices. With
/// `both = false` only the positive-class plane is required.
fn solve_augmented<T: Scalar>(
    variant: Variant,
    a: &Matrix<T>,
    b: &Matrix<T>,
    params: &HyperParams<T>,
    both: bool,
) -> Result<AugmentedPlanes<T>> {
    match variant {
        Variant::Gepsvm => {
            let (pos, neg) = gepsvm_planes(a, b, params.delta, both)?;
            Ok(AugmentedPlanes { pos, neg, converged: true })
        }
        Variant::IGepsvm => {
            let (pos, neg) = igepsvm_planes(a, b, params.delta, params.nu, both)?;
            Ok(AugmentedPlanes { pos, neg, converged: true })
        }
        Variant::RegGepsvm => {
            let (pos, neg) = reggepsvm_planes(a, b, params.nu1, params.nu2)?;
            Ok(AugmentedPlanes {
                pos,
                neg: Some(neg),
                converged: true,
            })
        }
        Variant::Twsvm => {
            let first = twsvm_plane(a, b, params.c1, params.qp_ridge)?;
            let mut converged = first.qp.converged;
            let neg = if both {
                let second = twsvm_plane(b, a, params.c2, params.qp_ridge)?;
                converged &= second.qp.converged;
                Some(second.plane)
            } else {
                None
            };
            Ok(AugmentedPlanes {
                pos: first.plane,
                neg,
                converged,
            })
        }
    }
}

/// Maps both classes into kernel space against `C = [A; B]`.
fn kernel_map<T: Scalar>(
    a: &Matrix<T>,
    b: &Matrix<T>,
    spec: &KernelSpec<T>,
) -> Result<(Matrix<T>, Matrix<T>, Arc<KernelRef<T>>)> {
    let reference = a.vstack(b)?;
    let ka = gram(a, &reference, spec)?;
    let kb = gram(b, &reference, spec)?;
    Ok((
        ka,
        kb,
        Arc::new(KernelRef {
            reference,
            spec: *spec,
        }),
    ))
}

fn fit_in_space<T: Scalar>(
    variant: Variant,
    a: &Matrix<T>,
    b: &Matrix<T>,
    params: &HyperParams<T>,
    kernelized: bool,
) -> Result<BinaryModel<T>> {
    params.validate()?;
    check_classes(a, b)?;
    let (planes, kernel_ref) = if kernelized {
        let (ka, kb, kref) = kernel_map(a, b, &params.kernel)?;
        (solve_augmented(variant, &ka, &kb, params, true)?, Some(kref))
    } else {
        (solve_augmented(variant, a, b, params, true)?, None)
    };
    let neg = planes.neg.expect("both planes requested");
    Ok(BinaryModel {
        variant,
        plane_pos: Hyperplane::from_augmented(&planes.pos, kernel_ref.clone())?,
        plane_neg: Hyperplane::from_augmented(&neg, kernel_ref)?,
        params: *params,
        converged: planes.converged,
    })
}

/// Trains `variant` on positive rows `a` and negative rows `b`. The space
/// follows `params.kernel`: input space for a linear kernel, kernel space
/// otherwise.
pub fn fit_binary<T: Scalar>(
    variant: Variant,
    a: &Matrix<T>,
    b: &Matrix<T>,
    params: &HyperParams<T>,
) -> Result<BinaryModel<T>> {
    fit_in_space(variant, a, b, params, !params.kernel.is_linear())
}

/// Trains in kernel space regardless of the kernel kind.
pub fn fit_kernelized<T: Scalar>(
    variant: Variant,
    a: &Matrix<T>,
    b: &Matrix<T>,
    params: &HyperParams<T>,
) -> Result<BinaryModel<T>> {
    fit_in_space(variant, a, b, params, true)
}

/// Only the plane proximal to `a`, as used by one-against-rest schemes.
/// Returns the plane and whether its solve converged.
pub fn fit_positive_plane<T: Scalar>(
    variant: Variant,
    a: &Matrix<T>,
    b: &Matrix<T>,
    params: &HyperParams<T>,
) -> Result<(Hyperplane<T>, bool)> {
    params.validate()?;
    check_classes(a, b)?;
    if params.kernel.is_linear() {
        let planes = solve_augmented(variant, a, b, params, false)?;
        Ok((Hyperplane::from_augmented(&planes.pos, None)?, planes.converged))
    } else {
        let (ka, kb, kref) = kernel_map(a, b, &params.kernel)?;
        let planes = solve_augmented(variant, &ka, &kb, params, false)?;
        Ok((
            Hyperplane::from_augmented(&planes.pos, Some(kref))?,
            planes.converged,
        ))
    }
}

pub fn fit_gepsvm<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>, params: &HyperParams<T>) -> Result<BinaryModel<T>> {
    fit_binary(Variant::Gepsvm, a, b, params)
}

pub fn fit_reggepsvm<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>, params: &HyperParams<T>) -> Result<BinaryModel<T>> {
    fit_binary(Variant::RegGepsvm, a, b, params)
}

pub fn fit_igepsvm<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>, params: &HyperParams<T>) -> Result<BinaryModel<T>> {
    fit_binary(Variant::IGepsvm, a, b, params)
}

pub fn fit_twsvm<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>, params: &HyperParams<T>) -> Result<BinaryModel<T>> {
    fit_binary(Variant::Twsvm, a, b, params)
}
