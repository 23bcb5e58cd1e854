//! Box-constrained concave quadratic maximization
//!
//! ```text
//! maximize   eᵀα − ½ αᵀQα
//! subject to 0 ≤ α ≤ c
//! ```
//!
//! solved by spectral projected gradient ascent: Barzilai–Borwein steps,
//! projection onto the box by clipping, and a nonmonotone backtracking line
//! search over the last few objective values. Every few iterations a
//! conjugate-gradient Newton step on the currently free coordinates is
//! tried as well; it finishes off the flat faces that rank-deficient `Q`
//! (the usual case for the twin-SVM dual) leaves behind.

use std::collections::VecDeque;

use super::matrix::{dot, Matrix};
use crate::error::{NhcaError, Result};
use crate::scalar::Scalar;

pub const QP_TOLERANCE: f64 = 1e-6;
pub const QP_MAX_ITER: usize = 10_000;

const ARMIJO: f64 = 1e-4;
const MEMORY: usize = 10;
const MAX_HALVINGS: usize = 60;
const STEP_MIN: f64 = 1e-30;
const STEP_MAX: f64 = 1e30;
const POLISH_EVERY: usize = 25;

#[derive(Debug, Clone, PartialEq)]
pub struct BoxQpResult<T> {
    /// Lagrange multipliers, each within `[0, c]`.
    pub alpha: Vec<T>,
    /// Dual objective attained at `alpha`.
    pub objective: T,
    pub iterations: usize,
    pub converged: bool,
}

/// KKT residual of `α` for the box QP given the gradient `g = e − Qα`:
/// interior coordinates contribute `|gᵢ|`, coordinates at zero contribute
/// `max(gᵢ, 0)`, coordinates at `c` contribute `max(−gᵢ, 0)`.
pub fn kkt_residual<T: Scalar>(alpha: &[T], grad: &[T], c: T) -> T {
    alpha
        .iter()
        .zip(grad)
        .fold(T::zero(), |worst, (&a, &g)| {
            let r = if a <= T::zero() {
                g.max(T::zero())
            } else if a >= c {
                (-g).max(T::zero())
            } else {
                g.abs()
            };
            worst.max(r)
        })
}

/// Infinity norm of the projected gradient step `P(α + g) − α`.
pub fn projected_gradient_norm<T: Scalar>(alpha: &[T], grad: &[T], c: T) -> T {
    alpha.iter().zip(grad).fold(T::zero(), |worst, (&a, &g)| {
        worst.max((clip(a + g, c) - a).abs())
    })
}

#[inline]
fn clip<T: Scalar>(x: T, c: T) -> T {
    x.max(T::zero()).min(c)
}

fn objective<T: Scalar>(alpha: &[T], q_alpha: &[T]) -> T {
    let half = T::lit(0.5);
    alpha
        .iter()
        .zip(q_alpha)
        .fold(T::zero(), |acc, (&a, &qa)| acc + a - half * a * qa)
}

/// Newton step for the quadratic restricted to the coordinates that are
/// free to move (interior, or at a bound with the gradient pointing
/// inward): approximately solves `Q_FF d = g_F` by conjugate gradients,
/// then backtracks along the projected path. Returns the new point only if
/// it improves the objective.
fn face_newton<T: Scalar>(
    q: &Matrix<T>,
    alpha: &[T],
    grad: &[T],
    f: T,
    c: T,
) -> Result<Option<(Vec<T>, Vec<T>, T)>> {
    let free: Vec<usize> = (0..alpha.len())
        .filter(|&i| {
            let a = alpha[i];
            let g = grad[i];
            !((a <= T::zero() && g <= T::zero()) || (a >= c && g >= T::zero()))
        })
        .collect();
    if free.is_empty() {
        return Ok(None);
    }
    let k = free.len();
    let q_ff = |v: &[T]| -> Vec<T> {
        free.iter()
            .map(|&i| {
                let row = q.row(i);
                free.iter().zip(v).map(|(&j, &x)| row[j] * x).sum()
            })
            .collect()
    };
    let rhs: Vec<T> = free.iter().map(|&i| grad[i]).collect();
    let rhs_norm = dot(&rhs, &rhs);
    let mut d = vec![T::zero(); k];
    let mut r = rhs.clone();
    let mut p = r.clone();
    let mut rr = rhs_norm;
    let tiny = T::epsilon() * T::epsilon() * rhs_norm;
    for _ in 0..k.max(1) * 2 {
        if rr <= tiny {
            break;
        }
        let qp = q_ff(&p);
        let pqp = dot(&p, &qp);
        if pqp <= T::zero() {
            // flat direction: move along it until the box stops us
            for (di, &pi) in d.iter_mut().zip(&p) {
                *di += T::lit(STEP_MAX.sqrt()) * pi;
            }
            break;
        }
        let a = rr / pqp;
        for i in 0..k {
            d[i] += a * p[i];
            r[i] -= a * qp[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..k {
            p[i] = r[i] + beta * p[i];
        }
    }
    let mut lambda = T::one();
    for _ in 0..MAX_HALVINGS {
        let mut cand = alpha.to_vec();
        for (&i, &di) in free.iter().zip(&d) {
            cand[i] = clip(alpha[i] + lambda * di, c);
        }
        let qa = q.mul_vec(&cand)?;
        let f_new = objective(&cand, &qa);
        if f_new > f {
            return Ok(Some((cand, qa, f_new)));
        }
        lambda *= T::lit(0.5);
    }
    Ok(None)
}

/// Maximizes `eᵀα − ½αᵀQα` over `[0, c_upper]^m` starting from `α = 0`.
///
/// A solve that hits the iteration cap is not an error: the best iterate is
/// returned with `converged = false`.
pub fn box_qp_maximize<T: Scalar>(q: &Matrix<T>, c_upper: T) -> Result<BoxQpResult<T>> {
    box_qp_maximize_with(q, c_upper, T::lit(QP_TOLERANCE), QP_MAX_ITER)
}

pub fn box_qp_maximize_with<T: Scalar>(
    q: &Matrix<T>,
    c_upper: T,
    tol: T,
    max_iter: usize,
) -> Result<BoxQpResult<T>> {
    if !q.is_square() {
        return Err(NhcaError::DimensionMismatch(format!(
            "QP matrix must be square, got {}x{}",
            q.rows(),
            q.cols()
        )));
    }
    q.ensure_finite("QP matrix")?;
    if !(c_upper > T::zero()) || !c_upper.is_finite() {
        return Err(NhcaError::InvalidParameter(format!(
            "QP upper bound must be positive and finite, got {c_upper}"
        )));
    }
    let m = q.rows();
    let mut alpha = vec![T::zero(); m];
    if m == 0 {
        return Ok(BoxQpResult {
            alpha,
            objective: T::zero(),
            iterations: 0,
            converged: true,
        });
    }

    let mut q_alpha = vec![T::zero(); m];
    let mut grad = vec![T::one(); m];
    let mut f = T::zero();
    let max_diag = (0..m).fold(T::zero(), |acc, i| acc.max(q[(i, i)]));
    let mut step = if max_diag > T::zero() {
        T::one() / max_diag
    } else {
        T::one()
    };
    let step_min = T::lit(STEP_MIN);
    let step_max = T::lit(STEP_MAX);
    let sigma = T::lit(ARMIJO);

    let mut history: VecDeque<T> = VecDeque::with_capacity(MEMORY);
    history.push_back(f);
    let mut best = (alpha.clone(), f);
    let mut direction = vec![T::zero(); m];

    for iter in 0..max_iter {
        let pg = projected_gradient_norm(&alpha, &grad, c_upper);
        if pg <= tol || kkt_residual(&alpha, &grad, c_upper) <= tol {
            return Ok(BoxQpResult {
                objective: f,
                alpha,
                iterations: iter,
                converged: true,
            });
        }

        for i in 0..m {
            direction[i] = clip(alpha[i] + step * grad[i], c_upper) - alpha[i];
        }
        let q_dir = q.mul_vec(&direction)?;
        let slope = dot(&grad, &direction);
        let curvature = dot(&direction, &q_dir);
        let reference = history.iter().fold(T::neg_infinity(), |a, &b| a.max(b));

        // f(α + λd) = f + λ gᵀd − ½ λ² dᵀQd
        let mut lambda = T::one();
        let half = T::lit(0.5);
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let f_new = f + lambda * slope - half * lambda * lambda * curvature;
            if f_new >= reference + sigma * lambda * slope {
                accepted = true;
                break;
            }
            lambda *= half;
        }
        if !accepted {
            // no ascent left at floating point resolution
            break;
        }

        let mut ss = T::zero();
        for i in 0..m {
            let s = lambda * direction[i];
            alpha[i] = clip(alpha[i] + s, c_upper);
            ss += s * s;
        }
        for i in 0..m {
            q_alpha[i] += lambda * q_dir[i];
        }
        // refresh exactly every so often to keep accumulated drift out
        if iter % 64 == 63 {
            q_alpha = q.mul_vec(&alpha)?;
        }
        for i in 0..m {
            grad[i] = T::one() - q_alpha[i];
        }
        f = objective(&alpha, &q_alpha);
        if f > best.1 {
            best = (alpha.clone(), f);
        }
        if history.len() == MEMORY {
            history.pop_front();
        }
        history.push_back(f);

        let sy = lambda * lambda * curvature;
        step = if sy > T::zero() {
            (ss / sy).max(step_min).min(step_max)
        } else {
            step_max
        };

        if iter % POLISH_EVERY == POLISH_EVERY - 1 {
            if let Some((a, qa, f_new)) = face_newton(q, &alpha, &grad, f, c_upper)? {
                alpha = a;
                q_alpha = qa;
                f = f_new;
                for i in 0..m {
                    grad[i] = T::one() - q_alpha[i];
                }
                if f > best.1 {
                    best = (alpha.clone(), f);
                }
                history.clear();
                history.push_back(f);
            }
        }
    }

    // fall back to the best point seen; re-evaluate its residual exactly
    let (alpha, _) = best;
    let q_alpha = q.mul_vec(&alpha)?;
    let grad: Vec<T> = q_alpha.iter().map(|&x| T::one() - x).collect();
    let objective = objective(&alpha, &q_alpha);
    let converged = projected_gradient_norm(&alpha, &grad, c_upper) <= tol
        || kkt_residual(&alpha, &grad, c_upper) <= tol;
    Ok(BoxQpResult {
        alpha,
        objective,
        iterations: max_iter,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn interior_scalar_optimum() {
        let q = Matrix::from_rows(&[[2.0]]).unwrap();
        let r = box_qp_maximize(&q, 10.0).unwrap();
        assert!(r.converged);
        assert_relative_eq!(r.alpha[0], 0.5, epsilon = 1e-9);
        assert_relative_eq!(r.objective, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn upper_bound_active() {
        let q = Matrix::from_rows(&[[0.1]]).unwrap();
        let r = box_qp_maximize(&q, 1.0).unwrap();
        assert!(r.converged);
        assert_eq!(r.alpha, vec![1.0]);
        assert_relative_eq!(r.objective, 0.95, epsilon = 1e-12);
    }

    #[test]
    fn zero_matrix_runs_to_the_corner() {
        let q = Matrix::<f64>::zeros(3, 3);
        let r = box_qp_maximize(&q, 2.0).unwrap();
        assert!(r.converged);
        assert_eq!(r.alpha, vec![2.0; 3]);
    }

    #[test]
    fn bad_inputs() {
        let rect = Matrix::<f64>::zeros(2, 3);
        assert!(matches!(
            box_qp_maximize(&rect, 1.0),
            Err(NhcaError::DimensionMismatch(_))
        ));
        let nan = Matrix::from_rows(&[[f64::NAN]]).unwrap();
        assert!(matches!(
            box_qp_maximize(&nan, 1.0),
            Err(NhcaError::NonFinite(_))
        ));
        let q = Matrix::from_rows(&[[1.0]]).unwrap();
        assert!(box_qp_maximize(&q, 0.0).is_err());
    }

    #[test]
    fn iteration_cap_reports_not_converged() {
        let q = Matrix::from_rows(&[[1.0, 0.999], [0.999, 1.0]]).unwrap();
        let r = box_qp_maximize_with(&q, 100.0, 1e-14, 1).unwrap();
        assert!(!r.converged);
        assert!(r.alpha.iter().all(|&a| (0.0..=100.0).contains(&a)));
    }
}
