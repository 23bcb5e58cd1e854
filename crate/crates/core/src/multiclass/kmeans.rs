//! Two-cluster k-means (Lloyd iterations, k-means++ seeding).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{NhcaError, Result};
use crate::numerics::{squared_distance, Matrix};
use crate::scalar::Scalar;

pub const KMEANS_MAX_ITER: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult<T> {
    /// Cluster index (0 or 1) per row.
    pub assignment: Vec<usize>,
    /// 2×n matrix of cluster centers.
    pub centers: Matrix<T>,
    pub inertia: T,
    pub iterations: usize,
    /// Inertia after every update step, in order.
    pub inertia_history: Vec<T>,
}

impl<T: Scalar> KMeansResult<T> {
    pub fn cluster_sizes(&self) -> [usize; 2] {
        let ones = self.assignment.iter().filter(|&&a| a == 1).count();
        [self.assignment.len() - ones, ones]
    }
}

fn nearest<T: Scalar>(x: &[T], centers: &Matrix<T>) -> (usize, T) {
    let d0 = squared_distance(x, centers.row(0));
    let d1 = squared_distance(x, centers.row(1));
    if d1 < d0 {
        (1, d1)
    } else {
        (0, d0)
    }
}

fn has_two_distinct_rows<T: Scalar>(x: &Matrix<T>) -> bool {
    x.rows() >= 2 && x.row_iter().skip(1).any(|r| r != x.row(0))
}

/// Splits the rows of `x` into two clusters. Deterministic given `seed`.
pub fn kmeans2<T: Scalar>(x: &Matrix<T>, seed: u64) -> Result<KMeansResult<T>> {
    x.ensure_finite("k-means input")?;
    if !has_two_distinct_rows(x) {
        return Err(NhcaError::DegenerateData(
            "k-means needs at least two distinct rows".into(),
        ));
    }
    let m = x.rows();
    let n = x.cols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // k-means++: first center uniform, second proportional to squared distance
    let first = rng.gen_range(0..m);
    let d2: Vec<T> = x
        .row_iter()
        .map(|r| squared_distance(r, x.row(first)))
        .collect();
    let total: T = d2.iter().copied().sum();
    let mut target = T::from_f64(rng.gen::<f64>()).unwrap() * total;
    let mut second = m - 1;
    for (i, &d) in d2.iter().enumerate() {
        if d > T::zero() {
            second = i;
            if target < d {
                break;
            }
            target -= d;
        }
    }
    let mut centers = Matrix::zeros(2, n);
    centers.row_mut(0).copy_from_slice(x.row(first));
    centers.row_mut(1).copy_from_slice(x.row(second));

    let mut assignment = vec![usize::MAX; m];
    let mut history = Vec::new();
    let mut iterations = 0;
    for iter in 0..KMEANS_MAX_ITER {
        iterations = iter + 1;
        let mut changed = false;
        let mut dist = vec![T::zero(); m];
        for (i, r) in x.row_iter().enumerate() {
            let (c, d) = nearest(r, &centers);
            dist[i] = d;
            if assignment[i] != c {
                assignment[i] = c;
                changed = true;
            }
        }
        repair_empty_cluster(&mut assignment, &dist);
        centers = cluster_means(x, &assignment);
        history.push(inertia(x, &assignment, &centers));
        if !changed {
            break;
        }
    }
    let inertia = *history.last().expect("at least one iteration");
    Ok(KMeansResult {
        assignment,
        centers,
        inertia,
        iterations,
        inertia_history: history,
    })
}

/// Moves the point farthest from its center into an empty cluster.
fn repair_empty_cluster<T: Scalar>(assignment: &mut [usize], dist: &[T]) {
    for empty in 0..2 {
        if assignment.iter().all(|&a| a != empty) {
            let far = dist
                .iter()
                .enumerate()
                .fold((0, T::neg_infinity()), |best, (i, &d)| if d > best.1 { (i, d) } else { best })
                .0;
            assignment[far] = empty;
        }
    }
}

fn cluster_means<T: Scalar>(x: &Matrix<T>, assignment: &[usize]) -> Matrix<T> {
    let mut centers = Matrix::zeros(2, x.cols());
    let mut counts = [0usize; 2];
    for (r, &a) in x.row_iter().zip(assignment) {
        counts[a] += 1;
        for (c, &v) in centers.row_mut(a).iter_mut().zip(r) {
            *c += v;
        }
    }
    for (k, &count) in counts.iter().enumerate() {
        let denom = T::from_usize(count.max(1)).unwrap();
        centers.row_mut(k).iter_mut().for_each(|c| *c /= denom);
    }
    centers
}

/// Sum of squared distances of every row to its assigned center.
pub fn inertia<T: Scalar>(x: &Matrix<T>, assignment: &[usize], centers: &Matrix<T>) -> T {
    x.row_iter()
        .zip(assignment)
        .map(|(r, &a)| squared_distance(r, centers.row(a)))
        .sum()
}
