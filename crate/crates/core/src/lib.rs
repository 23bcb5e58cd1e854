//! Nonparallel hyperplane classifiers and their multicategory extensions.
//!
//! Four binary trainers (GEPSVM, RegGEPSVM, IGEPSVM, TWSVM) each fit two
//! nonparallel planes, one proximal to each class. Three strategies lift
//! them to `K` classes: one-against-all, a binary tree of class groups and a
//! ternary decision structure.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases at the crate root name the `f64` instantiations used by
//! the benchmark harness.

pub mod classifiers;
pub mod dataio;
pub mod error;
pub mod evaluation;
pub mod kernels;
pub mod multiclass;
pub mod numerics;
pub mod scalar;

pub use classifiers::{
    fit_binary, fit_gepsvm, fit_igepsvm, fit_kernelized, fit_reggepsvm, fit_twsvm,
    predict_binary, signed_distance, BinaryModel, HyperParams, Hyperplane, KernelRef, Space,
    Variant,
};
pub use dataio::{load_csv, scale_fit_transform, DatasetSpec, LabelColumn, Scaling, ScalerState};
pub use error::{NhcaError, Result};
pub use evaluation::{
    accuracy, cross_validate, grid_search, stratified_kfold, CvReport, GridSpec, Protocol,
};
pub use kernels::{gram, KernelSpec};
pub use multiclass::{
    fit_bt, fit_multiclass, fit_oaa, fit_tds, kmeans2, predict_multiclass, LabeledDataset,
    MulticlassModel, Strategy, TreeNode, TreeOptions,
};
pub use numerics::Matrix;
pub use scalar::Scalar;

pub type Matrix64 = Matrix<f64>;
pub type Matrix32 = Matrix<f32>;
pub type HyperParams64 = HyperParams<f64>;
pub type Hyperplane64 = Hyperplane<f64>;
pub type BinaryModel64 = BinaryModel<f64>;
pub type KernelSpec64 = KernelSpec<f64>;
pub type LabeledDataset64 = LabeledDataset<f64>;
pub type MulticlassModel64 = MulticlassModel<f64>;
pub type CvReport64 = CvReport<f64>;
