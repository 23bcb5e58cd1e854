//! The eigenvalue-based trainers: GEPSVM, RegGEPSVM and IGEPSVM.
//!
//! All three work on the scatter matrices `[A e]ᵀ[A e]` and `[B e]ᵀ[B e]`
//! and return planes as augmented vectors `z = [w; b]`.

use log::debug;

use crate::error::{NhcaError, Result};
use crate::numerics::{gen_sym_eig_auto, normalize_sign, sym_eig, Matrix};
use crate::scalar::Scalar;

fn scatter<T: Scalar>(x: &Matrix<T>) -> Matrix<T> {
    x.augment_ones().gram_t()
}

/// GEPSVM: the plane for `A` minimizes `(‖Aw+eb‖² + δ‖z‖²) / ‖Bw+eb‖²`,
/// i.e. the smallest-eigenvalue eigenvector of `G z = μ H z` with
/// `G = [A e]ᵀ[A e] + δI`, `H = [B e]ᵀ[B e]`. The plane for `B` solves the
/// same problem with the classes swapped.
pub fn gepsvm_planes<T: Scalar>(
    a: &Matrix<T>,
    b: &Matrix<T>,
    delta: T,
    both: bool,
) -> Result<(Vec<T>, Option<Vec<T>>)> {
    let sa = scatter(a);
    let sb = scatter(b);
    let (first, ridge) = gen_sym_eig_auto(&sa.add_diag(delta), &sb)?;
    debug!("gepsvm: mu_min={} ridge={ridge}", first.eigenvalues[0]);
    let neg = if both {
        let (second, _) = gen_sym_eig_auto(&sb.add_diag(delta), &sa)?;
        Some(second.min_vector())
    } else {
        None
    };
    Ok((first.min_vector(), neg))
}

/// RegGEPSVM: one pencil `G* z = λ H* z` with `G* = G + ν₁H`,
/// `H* = H + ν₂G` (`G`, `H` the unregularized scatter matrices of `A` and
/// `B`). Its extreme eigenvectors are the two GEPSVM planes.
///
/// The map `λ ↦ λ*` is increasing when `ν₁ν₂ < 1` and decreasing when
/// `ν₁ν₂ > 1`; in the latter case the roles of the minimum and maximum
/// eigenvectors swap so the first returned plane always stays proximal to
/// `A`.
pub fn reggepsvm_planes<T: Scalar>(
    a: &Matrix<T>,
    b: &Matrix<T>,
    nu1: T,
    nu2: T,
) -> Result<(Vec<T>, Vec<T>)> {
    let det = T::one() - nu1 * nu2;
    if det.abs() <= T::lit(1e-12) {
        return Err(NhcaError::SingularOmega {
            nu1: nu1.to_f64_lossy(),
            nu2: nu2.to_f64_lossy(),
        });
    }
    let g = scatter(a);
    let h = scatter(b);
    // Directions with [A e]z = [B e]z = 0 make the quotient 0/0. They exist
    // whenever there are fewer samples than columns (always in kernel mode),
    // and a ridge would turn them into spurious λ = 0 minima, so the pencil
    // is solved on the range of G + H only.
    let basis = common_range(&g.add_scaled(&h, T::one())?)?;
    let (g, h) = match &basis {
        Some(v) => (congruence(v, &g)?, congruence(v, &h)?),
        None => (g, h),
    };
    let g_star = g.add_scaled(&h, nu1)?;
    let h_star = h.add_scaled(&g, nu2)?;
    let (eig, ridge) = gen_sym_eig_auto(&g_star, &h_star)?;
    debug!(
        "reggepsvm: lambda range [{}, {}] ridge={ridge} reduced={}",
        eig.eigenvalues[0],
        eig.eigenvalues[eig.dim() - 1],
        basis.is_some()
    );
    let (lo, hi) = (eig.min_vector(), eig.max_vector());
    let (lo, hi) = match &basis {
        Some(v) => (lift(v, &lo)?, lift(v, &hi)?),
        None => (lo, hi),
    };
    if det > T::zero() {
        Ok((lo, hi))
    } else {
        Ok((hi, lo))
    }
}

/// Orthonormal basis (as columns) of the numerical range of a PSD matrix,
/// or `None` when it has full rank.
fn common_range<T: Scalar>(s: &Matrix<T>) -> Result<Option<Matrix<T>>> {
    let eig = sym_eig(s)?;
    let n = eig.dim();
    let top = eig.eigenvalues[n - 1];
    // the usual numerical-rank rule: n·ε relative to the largest eigenvalue
    let cutoff = top.max(T::zero()) * T::epsilon() * T::lit(n as f64);
    let keep: Vec<usize> = (0..n).filter(|&k| eig.eigenvalues[k] > cutoff).collect();
    if keep.len() == n || keep.is_empty() {
        return Ok(None);
    }
    let mut data = Vec::with_capacity(n * keep.len());
    for i in 0..n {
        data.extend(keep.iter().map(|&k| eig.eigenvectors[(i, k)]));
    }
    Matrix::from_vec(n, keep.len(), data).map(Some)
}

/// `Vᵀ S V`, symmetrized against rounding.
fn congruence<T: Scalar>(v: &Matrix<T>, s: &Matrix<T>) -> Result<Matrix<T>> {
    let r = v.transpose().matmul(&s.matmul(v)?)?;
    let half = T::lit(0.5);
    let mut out = r.clone();
    for i in 0..r.rows() {
        for j in 0..r.cols() {
            out[(i, j)] = (r[(i, j)] + r[(j, i)]) * half;
        }
    }
    Ok(out)
}

fn lift<T: Scalar>(v: &Matrix<T>, y: &[T]) -> Result<Vec<T>> {
    let mut z = v.mul_vec(y)?;
    let n = z.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt();
    if n > T::zero() {
        z.iter_mut().for_each(|x| *x = *x / n);
    }
    normalize_sign(&mut z);
    Ok(z)
}

/// IGEPSVM: smallest-eigenvalue eigenvector of the standard symmetric
/// problem `((M + δI) − νH) z = λ z` with `M = [A e]ᵀ[A e]`,
/// `H = [B e]ᵀ[B e]`; the second plane swaps `A` and `B`.
pub fn igepsvm_planes<T: Scalar>(
    a: &Matrix<T>,
    b: &Matrix<T>,
    delta: T,
    nu: T,
    both: bool,
) -> Result<(Vec<T>, Option<Vec<T>>)> {
    let sa = scatter(a);
    let sb = scatter(b);
    let first = sym_eig(&sa.add_diag(delta).add_scaled(&sb, -nu)?)?;
    let neg = if both {
        let second = sym_eig(&sb.add_diag(delta).add_scaled(&sa, -nu)?)?;
        Some(second.min_vector())
    } else {
        None
    };
    Ok((first.min_vector(), neg))
}
