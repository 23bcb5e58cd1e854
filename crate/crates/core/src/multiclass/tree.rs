use log::debug;
use rayon::prelude::*;

use super::kmeans::kmeans2;
use super::{Branch, Group, LabeledDataset, MulticlassModel, Strategy, Structure, TreeNode};
use crate::classifiers::{fit_binary, fit_positive_plane, HyperParams, Variant};
use crate::error::{NhcaError, Result};
use crate::numerics::squared_distance;
use crate::scalar::Scalar;

fn check_k<T: Scalar>(data: &LabeledDataset<T>) -> Result<()> {
    if data.class_count() < 2 {
        return Err(NhcaError::DegenerateClass(format!(
            "tree strategies need at least 2 classes, got {}",
            data.class_count()
        )));
    }
    Ok(())
}

fn finish<T: Scalar>(
    strategy: Strategy,
    data: &LabeledDataset<T>,
    variant: Variant,
    params: &HyperParams<T>,
    (root, converged): (TreeNode<T>, bool),
) -> MulticlassModel<T> {
    MulticlassModel {
        strategy,
        variant,
        class_count: data.class_count(),
        feature_count: data.feature_count(),
        params: *params,
        structure: Structure::Tree { root },
        converged,
    }
}

/// Splits `classes` in two by 2-means over their class means. When the
/// means coincide the sorted class list is cut in half instead.
fn split_by_means<T: Scalar>(
    data: &LabeledDataset<T>,
    classes: &[usize],
    seed: u64,
) -> (Vec<usize>, Vec<usize>) {
    let means = data.class_means(classes);
    // means equal up to rounding count as coincident
    let scale = T::one() + data.features().max_abs();
    let spread = means
        .row_iter()
        .map(|r| squared_distance(r, means.row(0)))
        .fold(T::zero(), |a, b| a.max(b))
        .sqrt();
    let km = if spread <= T::lit(1e-10) * scale {
        Err(NhcaError::DegenerateData("class means coincide".into()))
    } else {
        kmeans2(&means, seed)
    };
    match km {
        Ok(km) => {
            let mut groups = (Vec::new(), Vec::new());
            for (&c, &a) in classes.iter().zip(&km.assignment) {
                if a == 0 {
                    groups.0.push(c);
                } else {
                    groups.1.push(c);
                }
            }
            groups
        }
        Err(_) => {
            debug!("class means coincide for {classes:?}; halving by index");
            let mut sorted = classes.to_vec();
            sorted.sort_unstable();
            let right = sorted.split_off(sorted.len() / 2);
            (sorted, right)
        }
    }
}

/// Binary tree: each node splits its classes into two groups and trains
/// one binary model with the first group as the positive class.
pub fn fit_bt<T: Scalar>(
    data: &LabeledDataset<T>,
    variant: Variant,
    params: &HyperParams<T>,
    seed: u64,
) -> Result<MulticlassModel<T>> {
    check_k(data)?;
    params.validate()?;
    let all: Vec<usize> = (0..data.class_count()).collect();
    let root = bt_node(data, &all, variant, params, seed)?;
    Ok(finish(Strategy::Bt, data, variant, params, root))
}

fn bt_node<T: Scalar>(
    data: &LabeledDataset<T>,
    classes: &[usize],
    variant: Variant,
    params: &HyperParams<T>,
    seed: u64,
) -> Result<(TreeNode<T>, bool)> {
    if let [class] = classes {
        return Ok((TreeNode::Leaf { class: *class }, true));
    }
    let (g0, g1) = split_by_means(data, classes, seed);
    debug!("bt split {classes:?} -> {g0:?} | {g1:?}");
    let model = fit_binary(variant, &data.rows_of(&g0), &data.rows_of(&g1), params)?;
    let (left, right) = rayon::join(
        || bt_node(data, &g0, variant, params, seed),
        || bt_node(data, &g1, variant, params, seed),
    );
    let (left, lc) = left?;
    let (right, rc) = right?;
    let converged = model.converged && lc && rc;
    Ok((
        TreeNode::Binary {
            classes: classes.to_vec(),
            model,
            left: Box::new(left),
            right: Box::new(right),
        },
        converged,
    ))
}

/// Ternary decision structure: 2-means over the node's samples; classes
/// with at least `focus_threshold` of their samples in one cluster are
/// focused to that cluster's group (+1 or −1), the rest form the
/// ambiguous group 0. One plane per nonempty group, trained against the
/// other groups.
pub fn fit_tds<T: Scalar>(
    data: &LabeledDataset<T>,
    variant: Variant,
    params: &HyperParams<T>,
    seed: u64,
    focus_threshold: f64,
) -> Result<MulticlassModel<T>> {
    check_k(data)?;
    params.validate()?;
    if !(focus_threshold > 0.5 && focus_threshold <= 1.0) {
        return Err(NhcaError::InvalidParameter(format!(
            "focus threshold must lie in (0.5, 1], got {focus_threshold}"
        )));
    }
    let all: Vec<usize> = (0..data.class_count()).collect();
    let root = tds_node(data, &all, variant, params, seed, focus_threshold)?;
    Ok(finish(Strategy::Tds, data, variant, params, root))
}

/// Groups for a TDS node in (+1, 0, −1) order; empty groups are dropped.
pub(crate) fn tds_groups<T: Scalar>(
    data: &LabeledDataset<T>,
    classes: &[usize],
    seed: u64,
    focus_threshold: f64,
) -> Vec<(Group, Vec<usize>)> {
    let idx: Vec<usize> = (0..data.len())
        .filter(|&i| classes.contains(&data.labels()[i]))
        .collect();
    let x = data.features().select_rows(&idx);
    let mut groups = vec![
        (Group::Positive, Vec::new()),
        (Group::Ambiguous, Vec::new()),
        (Group::Negative, Vec::new()),
    ];
    if let Ok(km) = kmeans2(&x, seed) {
        for &c in classes {
            let mut counts = [0usize; 2];
            for (&i, &a) in idx.iter().zip(&km.assignment) {
                if data.labels()[i] == c {
                    counts[a] += 1;
                }
            }
            let total = (counts[0] + counts[1]) as f64;
            let dominant = usize::from(counts[1] > counts[0]);
            let slot = if counts[dominant] as f64 / total >= focus_threshold {
                if dominant == 0 {
                    0
                } else {
                    2
                }
            } else {
                1
            };
            groups[slot].1.push(c);
        }
    }
    groups.retain(|(_, g)| !g.is_empty());
    if groups.len() < 2 {
        debug!("tds made no progress on {classes:?}; splitting by class means");
        let (g0, g1) = split_by_means(data, classes, seed);
        groups = vec![(Group::Positive, g0), (Group::Negative, g1)];
    }
    groups
}

fn tds_node<T: Scalar>(
    data: &LabeledDataset<T>,
    classes: &[usize],
    variant: Variant,
    params: &HyperParams<T>,
    seed: u64,
    threshold: f64,
) -> Result<(TreeNode<T>, bool)> {
    if let [class] = classes {
        return Ok((TreeNode::Leaf { class: *class }, true));
    }
    let groups = tds_groups(data, classes, seed, threshold);
    debug!("tds split {classes:?} -> {groups:?}");
    let branches: Vec<(Branch<T>, bool)> = groups
        .par_iter()
        .map(|(group, members)| {
            let rest: Vec<usize> = classes
                .iter()
                .copied()
                .filter(|c| !members.contains(c))
                .collect();
            let (plane, pc) =
                fit_positive_plane(variant, &data.rows_of(members), &data.rows_of(&rest), params)?;
            let (child, cc) = tds_node(data, members, variant, params, seed, threshold)?;
            Ok((
                Branch {
                    group: *group,
                    plane,
                    child,
                },
                pc && cc,
            ))
        })
        .collect::<Result<_>>()?;
    let converged = branches.iter().all(|(_, c)| *c);
    Ok((
        TreeNode::Ternary {
            classes: classes.to_vec(),
            branches: branches.into_iter().map(|(b, _)| b).collect(),
        },
        converged,
    ))
}
