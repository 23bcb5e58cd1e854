//! TWSVM: each plane is the solution of a small QP,
//!
//! ```text
//! min ½‖Aw + eb‖² + c eᵀq   s.t.  −(Bw + eb) + q ≥ e,  q ≥ 0
//! ```
//!
//! solved through its Wolfe dual
//!
//! ```text
//! max eᵀα − ½ αᵀ G(HᵀH + εI)⁻¹Gᵀ α   s.t.  0 ≤ α ≤ c
//! ```
//!
//! with `H = [A e]`, `G = [B e]` and the plane recovered as
//! `u = [w; b] = −(HᵀH + εI)⁻¹Gᵀα`.

use crate::error::{NhcaError, Result};
use crate::numerics::{box_qp_maximize, ridge_solve, BoxQpResult, Matrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct TwsvmPlane<T> {
    /// Augmented plane `[w; b]`, proximal to the first class.
    pub plane: Vec<T>,
    pub qp: BoxQpResult<T>,
}

/// Dual matrix `Q = G(HᵀH + εI)⁻¹Gᵀ` together with `(HᵀH + εI)⁻¹Gᵀ`.
pub(crate) fn dual_matrix<T: Scalar>(
    near: &Matrix<T>,
    far: &Matrix<T>,
    ridge: T,
) -> Result<(Matrix<T>, Matrix<T>)> {
    let h = near.augment_ones();
    let g = far.augment_ones();
    let solved = ridge_solve(&h.gram_t(), ridge, &g.transpose())?;
    let mut q = g.matmul(&solved)?;
    let m = q.rows();
    let half = T::lit(0.5);
    for i in 0..m {
        for j in (i + 1)..m {
            let v = (q[(i, j)] + q[(j, i)]) * half;
            q[(i, j)] = v;
            q[(j, i)] = v;
        }
    }
    Ok((q, solved))
}

/// Plane proximal to `near` with a unit margin against `far`, penalty `c`.
pub fn twsvm_plane<T: Scalar>(
    near: &Matrix<T>,
    far: &Matrix<T>,
    c: T,
    ridge: T,
) -> Result<TwsvmPlane<T>> {
    if far.rows() == 0 {
        return Err(NhcaError::DegenerateClass("negative".into()));
    }
    let (q, solved) = dual_matrix(near, far, ridge)?;
    let qp = box_qp_maximize(&q, c)?;
    if !qp.converged {
        log::warn!(
            "twsvm dual stopped after {} iterations without converging",
            qp.iterations
        );
    }
    if qp.alpha.iter().all(|&a| a == T::zero()) {
        return Err(NhcaError::DegenerateClass(
            "all dual multipliers vanished; the plane would be zero".into(),
        ));
    }
    let plane: Vec<T> = solved.mul_vec(&qp.alpha)?.into_iter().map(|x| -x).collect();
    Ok(TwsvmPlane { plane, qp })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn one_dimensional_closed_form() {
        // H = [0 1], G = [1 1]: Q = 1/ε + 1/(1+ε), α* = 1/Q
        let eps = 1e-7;
        let a = Matrix::from_rows(&[[0.0]]).unwrap();
        let b = Matrix::from_rows(&[[1.0]]).unwrap();
        let (q, _) = dual_matrix(&a, &b, eps).unwrap();
        let expected_q = 1.0 / eps + 1.0 / (1.0 + eps);
        assert_relative_eq!(q[(0, 0)], expected_q, max_relative = 1e-9);
        let r = twsvm_plane(&a, &b, 10.0, eps).unwrap();
        assert!(r.qp.converged);
        assert_relative_eq!(r.qp.alpha[0], 1.0 / expected_q, max_relative = 1e-6);
    }

    #[test]
    fn separates_two_vertical_lines() {
        let a: Matrix<f64> = Matrix::from_rows(&[[0.0, 0.0], [0.0, 1.0]]).unwrap();
        let b = Matrix::from_rows(&[[2.0, 0.0], [2.0, 1.0]]).unwrap();
        let r = twsvm_plane(&a, &b, 1.0, 1e-7).unwrap();
        let (w, bias) = (&r.plane[..2], r.plane[2]);
        // A lies on the plane, B on the far side of the unit margin
        for row in a.row_iter() {
            let v = row[0] * w[0] + row[1] * w[1] + bias;
            assert!(v.abs() < 1e-3, "A point off plane: {v}");
        }
        for row in b.row_iter() {
            let v = row[0] * w[0] + row[1] * w[1] + bias;
            assert!(v <= -1.0 + 1e-3, "B point violates margin: {v}");
        }
    }
}
