//! Symmetric eigendecomposition (cyclic Jacobi), Cholesky factorization and
//! the symmetric-definite generalized eigenproblem built on top of them.

use std::cmp::Ordering;

use log::debug;

use super::matrix::Matrix;
use crate::error::{NhcaError, Result};
use crate::scalar::Scalar;

const MAX_SWEEPS: usize = 100;
const SYMMETRY_TOL: f64 = 1e-10;

/// Ridge escalation for [`gen_sym_eig_auto`], relative to `trace(H)/dim`.
pub const RIDGE_START: f64 = 1e-8;
pub const RIDGE_LIMIT: f64 = 1e-2;
pub const RIDGE_GROWTH: f64 = 10.0;

/// Full spectrum of a symmetric (or symmetric-definite) eigenproblem.
///
/// Eigenvalues are ascending; column `k` of `eigenvectors` pairs with
/// `eigenvalues[k]` and has unit Euclidean norm.
#[derive(Debug, Clone, PartialEq)]
pub struct SymEigResult<T> {
    pub eigenvalues: Vec<T>,
    pub eigenvectors: Matrix<T>,
}

impl<T: Scalar> SymEigResult<T> {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vector(&self, k: usize) -> Vec<T> {
        self.eigenvectors.column(k)
    }

    /// Eigenvector of the smallest eigenvalue.
    pub fn min_vector(&self) -> Vec<T> {
        self.vector(0)
    }

    /// Eigenvector of the largest eigenvalue.
    pub fn max_vector(&self) -> Vec<T> {
        self.vector(self.dim() - 1)
    }
}

fn check_symmetric<T: Scalar>(s: &Matrix<T>, what: &'static str) -> Result<()> {
    if !s.is_square() {
        return Err(NhcaError::NotSquare {
            rows: s.rows(),
            cols: s.cols(),
        });
    }
    s.ensure_finite(what)?;
    let asym = s.asymmetry();
    if asym > T::lit(SYMMETRY_TOL) {
        return Err(NhcaError::NotSymmetric(asym.to_f64_lossy()));
    }
    Ok(())
}

fn symmetrized<T: Scalar>(s: &Matrix<T>) -> Matrix<T> {
    let n = s.rows();
    let mut out = s.clone();
    let half = T::lit(0.5);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (s[(i, j)] + s[(j, i)]) * half;
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// Flips `v` so that its first significant coefficient is positive.
///
/// "Significant" means larger than `1e-10·max|v|`, which keeps the sign
/// choice stable against rounding noise in coefficients that are zero in
/// exact arithmetic.
pub fn normalize_sign<T: Scalar>(v: &mut [T]) {
    let scale = v.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    if scale == T::zero() {
        return;
    }
    let cutoff = scale * T::lit(1e-10);
    if let Some(&first) = v.iter().find(|x| x.abs() > cutoff) {
        if first < T::zero() {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Eigendecomposition of a symmetric matrix by the cyclic Jacobi method.
pub fn sym_eig<T: Scalar>(s: &Matrix<T>) -> Result<SymEigResult<T>> {
    check_symmetric(s, "sym_eig input")?;
    let n = s.rows();
    let mut a = symmetrized(s);
    let mut vt = Matrix::identity(n);
    if n == 0 {
        return Ok(SymEigResult {
            eigenvalues: Vec::new(),
            eigenvectors: vt,
        });
    }

    let norm = a.frobenius_norm();
    let eps = T::epsilon();
    let target = eps * norm;
    let mut converged = false;
    for sweep in 0..MAX_SWEEPS {
        let off = off_diagonal_norm(&a);
        if off <= target || off == T::zero() {
            converged = true;
            debug!("jacobi converged after {sweep} sweeps (n={n})");
            break;
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                // after a few sweeps drop entries that no longer affect the diagonal
                if sweep > 3 && apq.abs() <= eps * app.abs() && apq.abs() <= eps * aqq.abs() {
                    a[(p, q)] = T::zero();
                    a[(q, p)] = T::zero();
                    continue;
                }
                let theta = (aqq - app) / (apq + apq);
                let t = if theta.is_infinite() {
                    T::zero()
                } else {
                    let sign = if theta >= T::zero() { T::one() } else { -T::one() };
                    sign / (theta.abs() + (theta * theta + T::one()).sqrt())
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let sn = t * c;
                rotate(&mut a, &mut vt, p, q, c, sn);
            }
        }
    }
    if !converged {
        let off = off_diagonal_norm(&a);
        // still acceptable when the residual is tiny relative to the norm
        if off > T::lit(1e-12) * norm.max(T::one()) {
            return Err(NhcaError::EigenFailure(format!(
                "jacobi did not converge in {MAX_SWEEPS} sweeps (off-diagonal norm {off})"
            )));
        }
    }

    let diag: Vec<T> = (0..n).map(|i| a[(i, i)]).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        diag[i]
            .partial_cmp(&diag[j])
            .unwrap_or(Ordering::Equal)
            .then(i.cmp(&j))
    });
    let eigenvalues: Vec<T> = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (k, &src) in order.iter().enumerate() {
        let mut col = vt.row(src).to_vec();
        normalize_sign(&mut col);
        for (i, x) in col.into_iter().enumerate() {
            vectors[(i, k)] = x;
        }
    }
    Ok(SymEigResult {
        eigenvalues,
        eigenvectors: vectors,
    })
}

fn off_diagonal_norm<T: Scalar>(a: &Matrix<T>) -> T {
    let n = a.rows();
    let mut sum = T::zero();
    for i in 0..n {
        for (j, &x) in a.row(i).iter().enumerate() {
            if i != j {
                sum += x * x;
            }
        }
    }
    sum.sqrt()
}

/// Applies `A ← JᵀAJ` and `Vᵀ ← JᵀVᵀ` for the plane rotation annihilating
/// `a[p][q]`. Eigenvectors are kept as the rows of `vt`.
fn rotate<T: Scalar>(a: &mut Matrix<T>, vt: &mut Matrix<T>, p: usize, q: usize, c: T, s: T) {
    let n = a.rows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    {
        let (lo, hi) = a.two_rows_mut(p, q);
        for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
            let apk = *x;
            let aqk = *y;
            *x = c * apk - s * aqk;
            *y = s * apk + c * aqk;
        }
    }
    a[(p, q)] = T::zero();
    a[(q, p)] = T::zero();
    let (vp, vq) = vt.two_rows_mut(p, q);
    for (x, y) in vp.iter_mut().zip(vq.iter_mut()) {
        let a = *x;
        let b = *y;
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Lower-triangular Cholesky factor `L` with `S = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    lower: Matrix<T>,
}

impl<T: Scalar> Cholesky<T> {
    pub fn factor(s: &Matrix<T>) -> Result<Self> {
        if !s.is_square() {
            return Err(NhcaError::NotSquare {
                rows: s.rows(),
                cols: s.cols(),
            });
        }
        s.ensure_finite("cholesky input")?;
        let n = s.rows();
        let max_diag = (0..n).fold(T::zero(), |m, i| m.max(s[(i, i)].abs()));
        let floor = T::epsilon() * T::from_usize(n.max(1)).unwrap() * max_diag;
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let lj = l.row(j)[..j].to_vec();
            let d = s[(j, j)] - lj.iter().map(|&x| x * x).sum::<T>();
            if !(d > floor) || !d.is_finite() {
                return Err(NhcaError::CholeskyFailure { pivot: j });
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in (j + 1)..n {
                let li = &l.row(i)[..j];
                let sum = li.iter().zip(&lj).fold(T::zero(), |acc, (&x, &y)| acc + x * y);
                l[(i, j)] = (s[(i, j)] - sum) / djj;
            }
        }
        Ok(Self { lower: l })
    }

    pub fn lower(&self) -> &Matrix<T> {
        &self.lower
    }

    /// Solves `L y = b` in place.
    pub fn forward_in_place(&self, b: &mut [T]) {
        let l = &self.lower;
        for i in 0..b.len() {
            let row = &l.row(i)[..i];
            let s = row.iter().zip(&b[..i]).fold(T::zero(), |acc, (&x, &y)| acc + x * y);
            b[i] = (b[i] - s) / l[(i, i)];
        }
    }

    /// Solves `Lᵀ x = y` in place.
    pub fn backward_in_place(&self, y: &mut [T]) {
        let l = &self.lower;
        let n = y.len();
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= l[(k, i)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        self.forward_in_place(b);
        self.backward_in_place(b);
    }

    /// Solves `S X = RHS` column by column.
    pub fn solve_matrix(&self, rhs: &Matrix<T>) -> Result<Matrix<T>> {
        let n = self.lower.rows();
        if rhs.rows() != n {
            return Err(NhcaError::DimensionMismatch(format!(
                "right-hand side has {} rows, system has {n}",
                rhs.rows()
            )));
        }
        let mut out = Matrix::zeros(n, rhs.cols());
        let mut col = vec![T::zero(); n];
        for j in 0..rhs.cols() {
            for i in 0..n {
                col[i] = rhs[(i, j)];
            }
            self.solve_in_place(&mut col);
            for i in 0..n {
                out[(i, j)] = col[i];
            }
        }
        Ok(out)
    }
}

/// Solves `(S + ridge·I) X = RHS` through a Cholesky factorization.
pub fn ridge_solve<T: Scalar>(s: &Matrix<T>, ridge: T, rhs: &Matrix<T>) -> Result<Matrix<T>> {
    if !s.is_square() {
        return Err(NhcaError::NotSquare {
            rows: s.rows(),
            cols: s.cols(),
        });
    }
    if rhs.rows() != s.rows() {
        return Err(NhcaError::DimensionMismatch(format!(
            "right-hand side has {} rows, matrix is {}x{}",
            rhs.rows(),
            s.rows(),
            s.cols()
        )));
    }
    rhs.ensure_finite("ridge_solve right-hand side")?;
    let chol = Cholesky::factor(&s.add_diag(ridge))?;
    chol.solve_matrix(rhs)
}

/// Solves `G z = μ (H + ridge·I) z` by reducing to `L⁻¹ G L⁻ᵀ y = μ y`
/// with `H + ridge·I = L Lᵀ` and `z = L⁻ᵀ y`.
///
/// Eigenvalues come back ascending, eigenvectors with unit norm in the
/// original coordinates and the first significant coefficient positive.
pub fn gen_sym_eig<T: Scalar>(g: &Matrix<T>, h: &Matrix<T>, ridge: T) -> Result<SymEigResult<T>> {
    check_symmetric(g, "generalized eigenproblem G")?;
    check_symmetric(h, "generalized eigenproblem H")?;
    if g.rows() != h.rows() {
        return Err(NhcaError::DimensionMismatch(format!(
            "G is {}x{}, H is {}x{}",
            g.rows(),
            g.cols(),
            h.rows(),
            h.cols()
        )));
    }
    let n = g.rows();
    let chol = Cholesky::factor(&symmetrized(h).add_diag(ridge))?;

    // X = L⁻¹ G, then C = L⁻¹ Xᵀ = L⁻¹ G L⁻ᵀ
    let g = symmetrized(g);
    let mut x = Matrix::zeros(n, n);
    let mut col = vec![T::zero(); n];
    for j in 0..n {
        for i in 0..n {
            col[i] = g[(i, j)];
        }
        chol.forward_in_place(&mut col);
        for i in 0..n {
            x[(i, j)] = col[i];
        }
    }
    let mut c = Matrix::zeros(n, n);
    for j in 0..n {
        col.copy_from_slice(x.row(j));
        chol.forward_in_place(&mut col);
        for i in 0..n {
            c[(i, j)] = col[i];
        }
    }
    let c = symmetrized(&c);
    c.ensure_finite("reduced eigenproblem")?;
    let reduced = sym_eig(&c)?;

    let mut vectors = Matrix::zeros(n, n);
    for k in 0..n {
        let mut z = reduced.vector(k);
        chol.backward_in_place(&mut z);
        let norm = super::matrix::norm2(&z);
        if !(norm > T::zero()) || !norm.is_finite() {
            return Err(NhcaError::EigenFailure(
                "degenerate generalized eigenvector".into(),
            ));
        }
        z.iter_mut().for_each(|x| *x /= norm);
        normalize_sign(&mut z);
        for (i, zi) in z.into_iter().enumerate() {
            vectors[(i, k)] = zi;
        }
    }
    Ok(SymEigResult {
        eigenvalues: reduced.eigenvalues,
        eigenvectors: vectors,
    })
}

/// Starting ridge for `H`: `RIDGE_START · trace(H)/dim` (or `RIDGE_START`
/// when the trace vanishes).
pub fn default_ridge<T: Scalar>(h: &Matrix<T>) -> T {
    T::lit(RIDGE_START) * ridge_scale(h)
}

fn ridge_scale<T: Scalar>(h: &Matrix<T>) -> T {
    let dim = T::from_usize(h.rows().max(1)).unwrap();
    let scale = h.trace() / dim;
    if scale > T::zero() && scale.is_finite() {
        scale
    } else {
        T::one()
    }
}

/// [`gen_sym_eig`] with the escalating ridge policy: start at
/// `1e-8·trace(H)/dim` and multiply by ten on every Cholesky failure up to
/// `1e-2·trace(H)/dim`. Returns the decomposition and the ridge used.
pub fn gen_sym_eig_auto<T: Scalar>(g: &Matrix<T>, h: &Matrix<T>) -> Result<(SymEigResult<T>, T)> {
    let scale = ridge_scale(h);
    let mut factor = RIDGE_START;
    loop {
        let ridge = T::lit(factor) * scale;
        match gen_sym_eig(g, h, ridge) {
            Ok(res) => return Ok((res, ridge)),
            Err(NhcaError::CholeskyFailure { pivot }) => {
                if factor * RIDGE_GROWTH > RIDGE_LIMIT * (1.0 + 1e-9) {
                    return Err(NhcaError::CholeskyFailure { pivot });
                }
                debug!("cholesky failed at pivot {pivot} with ridge {ridge}; escalating");
                factor *= RIDGE_GROWTH;
            }
            Err(e) => return Err(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn diagonal_spectrum() {
        let s = Matrix::from_rows(&[[2.0, 0.0], [0.0, 1.0]]).unwrap();
        let r = sym_eig(&s).unwrap();
        assert_eq!(r.eigenvalues, vec![1.0, 2.0]);
        assert_eq!(r.vector(0), vec![0.0, 1.0]);
        assert_eq!(r.vector(1), vec![1.0, 0.0]);
    }

    #[test]
    fn zero_matrix() {
        let r = sym_eig(&Matrix::<f64>::zeros(2, 2)).unwrap();
        assert_eq!(r.eigenvalues, vec![0.0, 0.0]);
    }

    #[test]
    fn two_by_two_closed_form() {
        // eigenvalues of [[a,b],[b,a]] are a∓b with vectors (1,∓1)/√2
        let s: Matrix<f64> = Matrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let r = sym_eig(&s).unwrap();
        assert_relative_eq!(r.eigenvalues[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(r.eigenvalues[1], 3.0, epsilon = 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v0 = r.vector(0);
        assert_relative_eq!(v0[0].abs(), h, epsilon = 1e-14);
        assert_relative_eq!(v0[0], -v0[1], epsilon = 1e-14);
        let v1 = r.vector(1);
        assert_relative_eq!(v1[0], h, epsilon = 1e-14);
        assert_relative_eq!(v1[1], h, epsilon = 1e-14);
    }

    #[test]
    fn input_validation() {
        let rect = Matrix::<f64>::zeros(2, 3);
        assert!(matches!(sym_eig(&rect), Err(NhcaError::NotSquare { .. })));
        let asym = Matrix::from_rows(&[[1.0, 2.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(sym_eig(&asym), Err(NhcaError::NotSymmetric(_))));
        let nan = Matrix::from_rows(&[[f64::NAN, 0.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(sym_eig(&nan), Err(NhcaError::NonFinite(_))));
    }

    #[test]
    fn generalized_identity_h() {
        let g = Matrix::from_rows(&[[2.0, 0.0], [0.0, 2.0]]).unwrap();
        let r = gen_sym_eig(&g, &Matrix::identity(2), 0.0).unwrap();
        assert_eq!(r.eigenvalues, vec![2.0, 2.0]);
    }

    #[test]
    fn generalized_simultaneous_diagonal() {
        let g = Matrix::from_rows(&[[1.0, 0.0], [0.0, 4.0]]).unwrap();
        let h = Matrix::from_rows(&[[1.0, 0.0], [0.0, 2.0]]).unwrap();
        let r = gen_sym_eig(&g, &h, 0.0).unwrap();
        assert_relative_eq!(r.eigenvalues[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(r.eigenvalues[1], 2.0, epsilon = 1e-14);
        assert_eq!(r.vector(0), vec![1.0, 0.0]);
        assert_eq!(r.vector(1), vec![0.0, 1.0]);
    }

    #[test]
    fn cholesky_failure_and_escalation() {
        let g = Matrix::identity(2);
        let h = Matrix::from_rows(&[[1.0, 0.0], [0.0, 0.0]]).unwrap();
        assert!(matches!(
            gen_sym_eig(&g, &h, 0.0),
            Err(NhcaError::CholeskyFailure { pivot: 1 })
        ));
        let (r, ridge) = gen_sym_eig_auto(&g, &h).unwrap();
        assert!(ridge > 0.0);
        // the singular direction of H carries the huge eigenvalue 1/ridge
        assert_relative_eq!(r.eigenvalues[0], 1.0 / (1.0 + ridge), epsilon = 1e-12);
        assert_relative_eq!(r.eigenvalues[1], 1.0 / ridge, max_relative = 1e-10);
    }

    #[test]
    fn ridge_solve_closed_forms() {
        let eps = 1e-7;
        let x = ridge_solve(&Matrix::identity(3), eps, &Matrix::identity(3)).unwrap();
        for i in 0..3 {
            assert_relative_eq!(x[(i, i)], 1.0 / (1.0 + eps), epsilon = 1e-15);
        }
        let s = Matrix::from_rows(&[[0.0, 0.0], [0.0, 1.0]]).unwrap();
        let rhs = Matrix::from_rows(&[[1.0], [1.0]]).unwrap();
        let x = ridge_solve(&s, 1e-4, &rhs).unwrap();
        assert_relative_eq!(x[(0, 0)], 1e4, max_relative = 1e-6);
        assert_relative_eq!(x[(1, 0)], 1.0 / (1.0 + 1e-4), max_relative = 1e-6);
        let bad = Matrix::<f64>::zeros(3, 1);
        assert!(matches!(
            ridge_solve(&s, 1e-4, &bad),
            Err(NhcaError::DimensionMismatch(_))
        ));
    }
}
