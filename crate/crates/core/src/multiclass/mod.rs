//! Multicategory strategies built from the binary trainers.
//!
//! * **OAA** trains one classifier per class against the rest and keeps the
//!   plane proximal to that class; a sample goes to the nearest plane.
//! * **BT** recursively splits the class set in two with 2-means over class
//!   means and trains one binary model per internal node.
//! * **TDS** clusters the samples of a node into two clusters, calls a class
//!   focused when most of its samples fall into one cluster and ambiguous
//!   otherwise, and trains one plane per group (+1, 0, −1).

mod dataset;
mod kmeans;
mod oaa;
mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classifiers::{signed_distance, BinaryModel, HyperParams, Hyperplane, Variant};
use crate::error::{NhcaError, Result};
use crate::numerics::Matrix;
use crate::scalar::Scalar;

pub use dataset::LabeledDataset;
pub use kmeans::{inertia, kmeans2, KMeansResult, KMEANS_MAX_ITER};
pub use oaa::fit_oaa;
pub use tree::{fit_bt, fit_tds};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_FOCUS_THRESHOLD: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Oaa,
    Bt,
    Tds,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Oaa, Strategy::Bt, Strategy::Tds];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Oaa => "oaa",
            Strategy::Bt => "bt",
            Strategy::Tds => "tds",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = NhcaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "oaa" => Ok(Strategy::Oaa),
            "bt" => Ok(Strategy::Bt),
            "tds" => Ok(Strategy::Tds),
            other => Err(NhcaError::InvalidParameter(format!("unknown strategy '{other}'"))),
        }
    }
}

/// Cluster label of a TDS group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Group {
    #[serde(rename = "+1")]
    Positive,
    #[serde(rename = "0")]
    Ambiguous,
    #[serde(rename = "-1")]
    Negative,
}

impl Group {
    pub fn symbol(self) -> &'static str {
        match self {
            Group::Positive => "+1",
            Group::Ambiguous => "0",
            Group::Negative => "-1",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Branch<T> {
    pub group: Group,
    pub plane: Hyperplane<T>,
    pub child: TreeNode<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", tag = "node", rename_all = "lowercase")]
pub enum TreeNode<T> {
    Leaf {
        class: usize,
    },
    /// BT node: samples nearer `model.plane_pos` descend into `left`.
    Binary {
        classes: Vec<usize>,
        model: BinaryModel<T>,
        left: Box<TreeNode<T>>,
        right: Box<TreeNode<T>>,
    },
    /// TDS node with two or three branches ordered (+1, 0, −1).
    Ternary {
        classes: Vec<usize>,
        branches: Vec<Branch<T>>,
    },
}

impl<T: Scalar> TreeNode<T> {
    pub fn classes(&self) -> Vec<usize> {
        match self {
            TreeNode::Leaf { class } => vec![*class],
            TreeNode::Binary { classes, .. } | TreeNode::Ternary { classes, .. } => classes.clone(),
        }
    }

    pub fn internal_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Binary { left, right, .. } => 1 + left.internal_count() + right.internal_count(),
            TreeNode::Ternary { branches, .. } => {
                1 + branches.iter().map(|b| b.child.internal_count()).sum::<usize>()
            }
        }
    }

    /// Number of decision levels on the longest root-to-leaf path.
    pub fn height(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Binary { left, right, .. } => 1 + left.height().max(right.height()),
            TreeNode::Ternary { branches, .. } => {
                1 + branches.iter().map(|b| b.child.height()).max().unwrap_or(0)
            }
        }
    }

    /// Leaf labels in left-to-right order.
    pub fn leaves(&self) -> Vec<usize> {
        match self {
            TreeNode::Leaf { class } => vec![*class],
            TreeNode::Binary { left, right, .. } => {
                let mut v = left.leaves();
                v.extend(right.leaves());
                v
            }
            TreeNode::Ternary { branches, .. } => {
                branches.iter().flat_map(|b| b.child.leaves()).collect()
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            TreeNode::Leaf { .. } => Ok(()),
            TreeNode::Binary { model, left, right, .. } => {
                model.validate()?;
                left.validate()?;
                right.validate()
            }
            TreeNode::Ternary { branches, .. } => {
                if branches.len() < 2 || branches.len() > 3 {
                    return Err(NhcaError::Format(format!(
                        "ternary node with {} branches",
                        branches.len()
                    )));
                }
                for b in branches {
                    b.plane.validate()?;
                    b.child.validate()?;
                }
                Ok(())
            }
        }
    }

    /// Descends to a leaf; returns the label and the number of decisions.
    fn descend(&self, x: &[T]) -> Result<(usize, usize)> {
        let mut node = self;
        let mut depth = 0;
        loop {
            match node {
                TreeNode::Leaf { class } => return Ok((*class, depth)),
                TreeNode::Binary { model, left, right, .. } => {
                    let label = crate::classifiers::predict_binary(model, x)?;
                    node = if label > 0 { left } else { right };
                }
                TreeNode::Ternary { branches, .. } => {
                    let planes: Vec<&Hyperplane<T>> = branches.iter().map(|b| &b.plane).collect();
                    let k = nearest_plane(&planes, x)?;
                    node = &branches[k].child;
                }
            }
            depth += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", tag = "kind", rename_all = "lowercase")]
pub enum Structure<T> {
    /// One plane per class, proximal to that class.
    Oaa { planes: Vec<Hyperplane<T>> },
    Tree { root: TreeNode<T> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct MulticlassModel<T> {
    pub strategy: Strategy,
    pub variant: Variant,
    pub class_count: usize,
    pub feature_count: usize,
    pub params: HyperParams<T>,
    pub structure: Structure<T>,
    /// False when any underlying TWSVM dual solve hit its iteration cap.
    pub converged: bool,
}

/// Index of the nearest plane; ties go to the lowest index.
pub fn nearest_plane<T: Scalar>(planes: &[&Hyperplane<T>], x: &[T]) -> Result<usize> {
    let mut best = 0;
    let mut best_d = T::infinity();
    for (k, plane) in planes.iter().enumerate() {
        let d = signed_distance(x, plane)?;
        if d < best_d {
            best = k;
            best_d = d;
        }
    }
    Ok(best)
}

impl<T: Scalar> MulticlassModel<T> {
    pub fn predict(&self, x: &[T]) -> Result<usize> {
        self.predict_with_depth(x).map(|(label, _)| label)
    }

    /// Label plus the number of plane comparisons made (OAA counts one).
    pub fn predict_with_depth(&self, x: &[T]) -> Result<(usize, usize)> {
        if x.len() != self.feature_count {
            return Err(NhcaError::DimensionMismatch(format!(
                "sample has {} features, model expects {}",
                x.len(),
                self.feature_count
            )));
        }
        match &self.structure {
            Structure::Oaa { planes } => {
                let refs: Vec<&Hyperplane<T>> = planes.iter().collect();
                Ok((nearest_plane(&refs, x)?, 1))
            }
            Structure::Tree { root } => root.descend(x),
        }
    }

    pub fn predict_batch(&self, x: &Matrix<T>) -> Result<Vec<usize>> {
        x.row_iter().map(|r| self.predict(r)).collect()
    }

    pub fn tree(&self) -> Option<&TreeNode<T>> {
        match &self.structure {
            Structure::Tree { root } => Some(root),
            Structure::Oaa { .. } => None,
        }
    }

    /// Structural checks used after deserialization.
    pub fn validate(&self) -> Result<()> {
        match &self.structure {
            Structure::Oaa { planes } => {
                if planes.len() != self.class_count {
                    return Err(NhcaError::Format(format!(
                        "{} planes for {} classes",
                        planes.len(),
                        self.class_count
                    )));
                }
                for p in planes {
                    p.validate()?;
                    if p.input_dim() != self.feature_count {
                        return Err(NhcaError::Format("plane dimension mismatch".into()));
                    }
                }
            }
            Structure::Tree { root } => {
                root.validate()?;
                let mut leaves = root.leaves();
                leaves.sort_unstable();
                if leaves != (0..self.class_count).collect::<Vec<_>>() {
                    return Err(NhcaError::Format(
                        "tree leaves do not partition the class set".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Human-readable dump of the model structure.
    pub fn describe(&self) -> String {
        let mut out = format!(
            "{} {} model: {} classes, {} features\n",
            self.strategy, self.variant, self.class_count, self.feature_count
        );
        match &self.structure {
            Structure::Oaa { planes } => {
                for (k, p) in planes.iter().enumerate() {
                    out.push_str(&format!(
                        "  class {k}: {:?} plane, {} coefficients\n",
                        p.space(),
                        p.weights.len()
                    ));
                }
            }
            Structure::Tree { root } => describe_node(root, "", "", &mut out),
        }
        out
    }
}

fn fmt_classes(classes: &[usize]) -> String {
    let parts: Vec<String> = classes.iter().map(|c| c.to_string()).collect();
    format!("{{{}}}", parts.join(","))
}

fn describe_node<T: Scalar>(node: &TreeNode<T>, indent: &str, tag: &str, out: &mut String) {
    match node {
        TreeNode::Leaf { class } => out.push_str(&format!("{indent}{tag}leaf {class}\n")),
        TreeNode::Binary { classes, left, right, .. } => {
            out.push_str(&format!("{indent}{tag}split {}\n", fmt_classes(classes)));
            let child = format!("{indent}  ");
            describe_node(left, &child, "+1: ", out);
            describe_node(right, &child, "-1: ", out);
        }
        TreeNode::Ternary { classes, branches } => {
            out.push_str(&format!("{indent}{tag}split {}\n", fmt_classes(classes)));
            let child = format!("{indent}  ");
            for b in branches {
                describe_node(&b.child, &child, &format!("{:>2}: ", b.group.symbol()), out);
            }
        }
    }
}

/// Options shared by the tree strategies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeOptions {
    pub seed: u64,
    /// Fraction of a class that must fall into one cluster for the class to
    /// count as focused (TDS only).
    pub focus_threshold: f64,
}

impl Default for TreeOptions {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            focus_threshold: DEFAULT_FOCUS_THRESHOLD,
        }
    }
}

pub fn fit_multiclass<T: Scalar>(
    strategy: Strategy,
    data: &LabeledDataset<T>,
    variant: Variant,
    params: &HyperParams<T>,
    options: &TreeOptions,
) -> Result<MulticlassModel<T>> {
    match strategy {
        Strategy::Oaa => fit_oaa(data, variant, params),
        Strategy::Bt => fit_bt(data, variant, params, options.seed),
        Strategy::Tds => fit_tds(data, variant, params, options.seed, options.focus_threshold),
    }
}

pub fn predict_multiclass<T: Scalar>(model: &MulticlassModel<T>, x: &[T]) -> Result<usize> {
    model.predict(x)
}
