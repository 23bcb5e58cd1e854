use serde::{Deserialize, Serialize};

use crate::error::{NhcaError, Result};
use crate::numerics::Matrix;
use crate::scalar::Scalar;

/// Feature rows with integer class labels in `0..class_count`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct LabeledDataset<T> {
    features: Matrix<T>,
    labels: Vec<usize>,
    class_count: usize,
}

impl<T: Scalar> LabeledDataset<T> {
    /// Checks that labels match the rows and that every class in
    /// `0..class_count` has at least one sample.
    pub fn new(features: Matrix<T>, labels: Vec<usize>, class_count: usize) -> Result<Self> {
        if labels.len() != features.rows() {
            return Err(NhcaError::LengthMismatch(features.rows(), labels.len()));
        }
        if features.rows() == 0 {
            return Err(NhcaError::Empty("dataset"));
        }
        let mut counts = vec![0usize; class_count];
        for &l in &labels {
            if l >= class_count {
                return Err(NhcaError::InvalidParameter(format!(
                    "label {l} outside 0..{class_count}"
                )));
            }
            counts[l] += 1;
        }
        if let Some(missing) = counts.iter().position(|&c| c == 0) {
            return Err(NhcaError::DegenerateClass(format!("class {missing} has no samples")));
        }
        features.ensure_finite("dataset features")?;
        Ok(Self {
            features,
            labels,
            class_count,
        })
    }

    /// Infers `class_count` as one past the largest label.
    pub fn from_labels(features: Matrix<T>, labels: Vec<usize>) -> Result<Self> {
        let k = labels.iter().max().map_or(0, |&m| m + 1);
        Self::new(features, labels, k)
    }

    pub fn features(&self) -> &Matrix<T> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_count(&self) -> usize {
        self.features.cols()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Row indices per class.
    pub fn class_indices(&self) -> Vec<Vec<usize>> {
        let mut idx = vec![Vec::new(); self.class_count];
        for (i, &l) in self.labels.iter().enumerate() {
            idx[l].push(i);
        }
        idx
    }

    /// Rows whose label is in `classes`.
    pub fn rows_of(&self, classes: &[usize]) -> Matrix<T> {
        let idx: Vec<usize> = (0..self.len())
            .filter(|&i| classes.contains(&self.labels[i]))
            .collect();
        self.features.select_rows(&idx)
    }

    /// Subset by row index; keeps the original class numbering, so the
    /// result may leave some classes empty and is not revalidated.
    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            features: self.features.select_rows(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            class_count: self.class_count,
        }
    }

    /// Same labels, replaced features (e.g. after scaling).
    pub fn with_features(&self, features: Matrix<T>) -> Result<Self> {
        Self::new(features, self.labels.clone(), self.class_count)
    }

    /// Mean feature vector per listed class, one row each.
    pub fn class_means(&self, classes: &[usize]) -> Matrix<T> {
        let n = self.feature_count();
        let mut means = Matrix::zeros(classes.len(), n);
        for (k, &c) in classes.iter().enumerate() {
            let mut count = 0usize;
            for (r, &l) in self.features.row_iter().zip(&self.labels) {
                if l == c {
                    count += 1;
                    for (m, &v) in means.row_mut(k).iter_mut().zip(r) {
                        *m += v;
                    }
                }
            }
            let denom = T::from_usize(count.max(1)).unwrap();
            means.row_mut(k).iter_mut().for_each(|m| *m /= denom);
        }
        means
    }
}
