//! Dense linear algebra and the two optimization kernels the classifiers
//! are built on: symmetric(-definite) eigenproblems and box-constrained QP.
//!
//! Everything here is a pure function of its inputs.

mod eigen;
mod matrix;
mod qp;

pub use eigen::{
    default_ridge, gen_sym_eig, gen_sym_eig_auto, normalize_sign, ridge_solve, sym_eig, Cholesky,
    SymEigResult, RIDGE_GROWTH, RIDGE_LIMIT, RIDGE_START,
};
pub use matrix::{dot, norm2, squared_distance, Matrix};
pub use qp::{
    box_qp_maximize, box_qp_maximize_with, kkt_residual, projected_gradient_norm, BoxQpResult,
    QP_MAX_ITER, QP_TOLERANCE,
};
