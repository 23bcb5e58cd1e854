//! Accuracy, stratified folds, grid search and cross-validation.
//!
//! Parameters are tuned once on a stratified 10% validation split taken
//! before cross-validation; the tuned point is then scored with stratified
//! k-fold CV over the full dataset. Feature scaling is always fitted on
//! the training rows of a split only.

use std::time::Instant;

use log::{debug, warn};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{HyperParams, Variant};
use crate::dataio::{Scaling, ScalerState};
use crate::error::{NhcaError, Result};
use crate::kernels::KernelSpec;
use crate::multiclass::{fit_multiclass, LabeledDataset, MulticlassModel, Strategy, TreeOptions};
use crate::scalar::Scalar;

pub const DEFAULT_FOLDS: usize = 5;
pub const VALIDATION_FRACTION: f64 = 0.1;

pub fn accuracy(predicted: &[usize], actual: &[usize]) -> Result<f64> {
    if predicted.len() != actual.len() {
        return Err(NhcaError::LengthMismatch(predicted.len(), actual.len()));
    }
    if predicted.is_empty() {
        return Err(NhcaError::Empty("label vectors"));
    }
    let correct = predicted.iter().zip(actual).filter(|(p, a)| p == a).count();
    Ok(correct as f64 / predicted.len() as f64)
}

/// One-vs-rest counts for a single class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct ClassCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ClassCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// `(TP + TN) / (TP + FP + TN + FN)`.
    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / self.total().max(1) as f64
    }
}

pub fn confusion_counts(predicted: &[usize], actual: &[usize], classes: usize) -> Result<Vec<ClassCounts>> {
    if predicted.len() != actual.len() {
        return Err(NhcaError::LengthMismatch(predicted.len(), actual.len()));
    }
    let mut counts = vec![ClassCounts::default(); classes];
    for (k, c) in counts.iter_mut().enumerate() {
        for (&p, &a) in predicted.iter().zip(actual) {
            match (p == k, a == k) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
    }
    Ok(counts)
}

/// `(train, test)` index lists.
pub type Split = (Vec<usize>, Vec<usize>);

/// Stratified k-fold split: each class is shuffled and dealt round-robin
/// over the folds, continuing where the previous class stopped so fold
/// sizes stay balanced. If the smallest class has fewer than `folds`
/// samples the fold count drops to that size (with a warning).
pub fn stratified_kfold<T: Scalar>(data: &LabeledDataset<T>, folds: usize, seed: u64) -> Result<Vec<Split>> {
    let min_class = data.class_counts().into_iter().min().unwrap_or(0);
    let mut k = folds;
    if min_class < folds {
        warn!("smallest class has {min_class} samples; using {min_class} folds instead of {folds}");
        k = min_class;
    }
    if k < 2 {
        return Err(NhcaError::TooFewSamples(format!(
            "cross-validation needs at least 2 samples per class, smallest class has {min_class}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0usize; data.len()];
    let mut next = 0;
    for mut idx in data.class_indices() {
        idx.shuffle(&mut rng);
        for i in idx {
            fold_of[i] = next;
            next = (next + 1) % k;
        }
    }
    Ok((0..k)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..data.len()).partition(|&i| fold_of[i] == f);
            (train, test)
        })
        .collect())
}

/// Stratified holdout with `max(1, round(fraction · n_c))` validation rows
/// per class (never the whole class).
pub fn stratified_holdout<T: Scalar>(data: &LabeledDataset<T>, fraction: f64, seed: u64) -> Result<Split> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut val = Vec::new();
    for mut idx in data.class_indices() {
        if idx.len() < 2 {
            return Err(NhcaError::TooFewSamples(
                "a validation split needs at least 2 samples per class".into(),
            ));
        }
        idx.shuffle(&mut rng);
        let take = ((fraction * idx.len() as f64).round() as usize).clamp(1, idx.len() - 1);
        val.extend_from_slice(&idx[..take]);
        train.extend_from_slice(&idx[take..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    Ok((train, val))
}

/// Candidate values per hyperparameter. `nu1` and `nu2` are searched tied
/// (`nu2 = nu1`) unless `tie_nu` is false.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub delta: Vec<f64>,
    pub nu: Vec<f64>,
    pub nu1: Vec<f64>,
    pub nu2: Vec<f64>,
    pub tie_nu: bool,
    /// Shared by `c1` and `c2`.
    pub c: Vec<f64>,
    pub gamma: Vec<f64>,
}

fn powers_of_two(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).step_by(2).map(|e| 2f64.powi(e)).collect()
}

impl Default for GridSpec {
    /// `{2⁻⁸, 2⁻⁶, …, 2⁸}` for every parameter and `{2⁻¹⁰, 2⁻⁸, …, 2⁴}`
    /// for the RBF width.
    fn default() -> Self {
        let p = powers_of_two(-8, 8);
        Self {
            delta: p.clone(),
            nu: p.clone(),
            nu1: p.clone(),
            nu2: p.clone(),
            tie_nu: true,
            c: p,
            gamma: powers_of_two(-10, 4),
        }
    }
}

impl GridSpec {
    pub fn singleton<T: Scalar>(params: &HyperParams<T>) -> Self {
        let f = |v: T| vec![v.to_f64_lossy()];
        Self {
            delta: f(params.delta),
            nu: f(params.nu),
            nu1: f(params.nu1),
            nu2: f(params.nu2),
            tie_nu: false,
            c: f(params.c1),
            gamma: match params.kernel {
                KernelSpec::Rbf { gamma } => f(gamma),
                KernelSpec::Linear => vec![1.0],
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, list) in [
            ("delta", &self.delta),
            ("nu", &self.nu),
            ("nu1", &self.nu1),
            ("nu2", &self.nu2),
            ("c", &self.c),
            ("gamma", &self.gamma),
        ] {
            if list.is_empty() || list.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                return Err(NhcaError::InvalidParameter(format!(
                    "grid list '{name}' must be a nonempty list of positive numbers"
                )));
            }
        }
        Ok(())
    }

    /// Grid points relevant to `variant`, in deterministic order. Only the
    /// parameters the variant uses vary; the rest keep `base` values.
    pub fn points<T: Scalar>(&self, variant: Variant, base: &HyperParams<T>) -> Vec<HyperParams<T>> {
        let lit = T::lit;
        let mut core: Vec<HyperParams<T>> = Vec::new();
        match variant {
            Variant::Gepsvm => {
                for &d in &self.delta {
                    core.push(HyperParams { delta: lit(d), ..*base });
                }
            }
            Variant::RegGepsvm => {
                for &a in &self.nu1 {
                    if self.tie_nu {
                        core.push(HyperParams { nu1: lit(a), nu2: lit(a), ..*base });
                    } else {
                        for &b in &self.nu2 {
                            core.push(HyperParams { nu1: lit(a), nu2: lit(b), ..*base });
                        }
                    }
                }
            }
            Variant::IGepsvm => {
                for &n in &self.nu {
                    for &d in &self.delta {
                        core.push(HyperParams { nu: lit(n), delta: lit(d), ..*base });
                    }
                }
            }
            Variant::Twsvm => {
                for &c in &self.c {
                    core.push(HyperParams { c1: lit(c), c2: lit(c), ..*base });
                }
            }
        }
        match base.kernel {
            KernelSpec::Linear => core,
            KernelSpec::Rbf { .. } => self
                .gamma
                .iter()
                .flat_map(|&g| {
                    core.iter()
                        .map(move |p| p.with_kernel(KernelSpec::Rbf { gamma: lit(g) }))
                })
                .collect(),
        }
    }
}

/// Everything about an experiment except the hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Protocol {
    pub variant: Variant,
    pub strategy: Strategy,
    pub tree: TreeOptions,
    pub scaling: Scaling,
    pub folds: usize,
    pub seed: u64,
}

impl Protocol {
    pub fn new(variant: Variant, strategy: Strategy) -> Self {
        Self {
            variant,
            strategy,
            tree: TreeOptions::default(),
            scaling: Scaling::MinMax,
            folds: DEFAULT_FOLDS,
            seed: crate::multiclass::DEFAULT_SEED,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.tree.seed = seed;
        self
    }
}

/// A fitted model with the scaler its inputs need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ScaledModel<T> {
    pub scaler: ScalerState<T>,
    pub model: MulticlassModel<T>,
}

impl<T: Scalar> ScaledModel<T> {
    pub fn predict_batch(&self, x: &crate::numerics::Matrix<T>) -> Result<Vec<usize>> {
        self.model.predict_batch(&self.scaler.transform(x)?)
    }
}

/// Fits scaler and model on `train`.
pub fn fit_scaled<T: Scalar>(
    train: &LabeledDataset<T>,
    protocol: &Protocol,
    params: &HyperParams<T>,
) -> Result<ScaledModel<T>> {
    let scaler = ScalerState::fit(train.features(), protocol.scaling);
    let scaled = LabeledDataset::new(
        scaler.transform(train.features())?,
        train.labels().to_vec(),
        train.class_count(),
    )?;
    let model = fit_multiclass(protocol.strategy, &scaled, protocol.variant, params, &protocol.tree)?;
    Ok(ScaledModel { scaler, model })
}

/// Fits on `train` rows and scores on `test` rows; returns accuracy, fit
/// seconds and whether every QP converged.
fn fit_and_score<T: Scalar>(
    data: &LabeledDataset<T>,
    (train, test): &Split,
    protocol: &Protocol,
    params: &HyperParams<T>,
) -> Result<(f64, f64, bool)> {
    let train_set = data.subset(train);
    let test_set = data.subset(test);
    let start = Instant::now();
    let fitted = fit_scaled(&train_set, protocol, params)?;
    let seconds = start.elapsed().as_secs_f64();
    let predicted = fitted.predict_batch(test_set.features())?;
    Ok((accuracy(&predicted, test_set.labels())?, seconds, fitted.model.converged))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GridResult<T> {
    pub params: HyperParams<T>,
    pub validation_accuracy: f64,
    pub evaluated: usize,
    pub failed: usize,
}

/// Picks the grid point with the best accuracy on a stratified 10%
/// validation split (first point wins ties). A point whose fit errors or
/// whose dual QP stops at the iteration cap is skipped.
pub fn grid_search<T: Scalar>(
    data: &LabeledDataset<T>,
    protocol: &Protocol,
    base: &HyperParams<T>,
    grid: &GridSpec,
) -> Result<GridResult<T>> {
    grid.validate()?;
    let split = stratified_holdout(data, VALIDATION_FRACTION, protocol.seed)?;
    let points = grid.points(protocol.variant, base);
    let scores: Vec<Option<f64>> = points
        .par_iter()
        .map(|p| match fit_and_score(data, &split, protocol, p) {
            Ok((acc, _, true)) => Some(acc),
            Ok((_, _, false)) => {
                debug!("grid point {p:?} skipped: QP hit the iteration cap");
                None
            }
            Err(e) => {
                debug!("grid point {p:?} skipped: {e}");
                None
            }
        })
        .collect();
    let failed = scores.iter().filter(|s| s.is_none()).count();
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.iter().enumerate() {
        if let Some(acc) = *s {
            if best.is_none_or(|(_, b)| acc > b) {
                best = Some((i, acc));
            }
        }
    }
    let Some((i, acc)) = best else {
        return Err(NhcaError::AllPointsFailed(format!(
            "all {} grid points failed for {} {}",
            points.len(),
            protocol.variant,
            protocol.strategy
        )));
    };
    Ok(GridResult {
        params: points[i],
        validation_accuracy: acc,
        evaluated: points.len(),
        failed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CvReport<T> {
    pub per_fold_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
    /// Population standard deviation over folds.
    pub std_dev: f64,
    /// Mean fit seconds per fold.
    pub train_time_seconds: f64,
    pub params_used: HyperParams<T>,
    pub converged: bool,
}

/// Stratified k-fold cross-validation of one configuration. Folds run one
/// after another so fit times are not distorted by sibling folds.
pub fn cross_validate<T: Scalar>(
    data: &LabeledDataset<T>,
    protocol: &Protocol,
    params: &HyperParams<T>,
) -> Result<CvReport<T>> {
    params.validate()?;
    let splits = stratified_kfold(data, protocol.folds, protocol.seed)?;
    let mut accs = Vec::with_capacity(splits.len());
    let mut seconds = 0.0;
    let mut converged = true;
    for split in &splits {
        let (acc, t, c) = fit_and_score(data, split, protocol, params)?;
        accs.push(acc);
        seconds += t;
        converged &= c;
    }
    let k = accs.len() as f64;
    let mean = accs.iter().sum::<f64>() / k;
    let var = accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / k;
    Ok(CvReport {
        per_fold_accuracy: accs,
        mean_accuracy: mean,
        std_dev: var.sqrt(),
        train_time_seconds: seconds / k,
        params_used: *params,
        converged,
    })
}

/// Grid search followed by cross-validation with the tuned point.
pub fn tune_and_validate<T: Scalar>(
    data: &LabeledDataset<T>,
    protocol: &Protocol,
    base: &HyperParams<T>,
    grid: &GridSpec,
) -> Result<(GridResult<T>, CvReport<T>)> {
    let tuned = grid_search(data, protocol, base, grid)?;
    let report = cross_validate(data, protocol, &tuned.params)?;
    Ok((tuned, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Matrix;

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[0, 1, 2], &[0, 1, 2]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 0, 0, 1], &[0, 0, 1, 1]).unwrap(), 0.75);
        assert_eq!(accuracy(&[1, 1], &[0, 0]).unwrap(), 0.0);
        assert!(matches!(accuracy(&[1], &[0, 0]), Err(NhcaError::LengthMismatch(1, 2))));
        assert!(matches!(accuracy(&[], &[]), Err(NhcaError::Empty(_))));
    }

    #[test]
    fn perfect_stratification() {
        let x: Matrix<f64> = Matrix::from_vec(10, 1, (0..10).map(f64::from).collect()).unwrap();
        let d = LabeledDataset::new(x, vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1], 2).unwrap();
        let folds = stratified_kfold(&d, 5, 3).unwrap();
        assert_eq!(folds.len(), 5);
        for (train, test) in &folds {
            assert_eq!(test.len(), 2);
            assert_eq!(train.len(), 8);
            let mut labels: Vec<usize> = test.iter().map(|&i| d.labels()[i]).collect();
            labels.sort_unstable();
            assert_eq!(labels, vec![0, 1]);
        }
    }

    #[test]
    fn fold_count_shrinks_to_smallest_class() {
        let x: Matrix<f64> = Matrix::from_vec(8, 1, (0..8).map(f64::from).collect()).unwrap();
        let d = LabeledDataset::new(x, vec![0, 0, 0, 0, 0, 1, 1, 1], 2).unwrap();
        assert_eq!(stratified_kfold(&d, 5, 1).unwrap().len(), 3);
        let x: Matrix<f64> = Matrix::from_vec(3, 1, vec![0.0, 1.0, 2.0]).unwrap();
        let d = LabeledDataset::new(x, vec![0, 0, 1], 2).unwrap();
        assert!(matches!(stratified_kfold(&d, 5, 1), Err(NhcaError::TooFewSamples(_))));
    }

    #[test]
    fn grid_sizes_per_variant() {
        let g = GridSpec::default();
        let lin = HyperParams::<f64>::default();
        let rbf = lin.with_kernel(KernelSpec::Rbf { gamma: 1.0 });
        assert_eq!(g.points(Variant::Gepsvm, &lin).len(), 9);
        assert_eq!(g.points(Variant::RegGepsvm, &lin).len(), 9);
        assert_eq!(g.points(Variant::IGepsvm, &lin).len(), 81);
        assert_eq!(g.points(Variant::Twsvm, &rbf).len(), 72);
        assert!(g.points(Variant::RegGepsvm, &lin).iter().all(|p| p.nu1 == p.nu2));
    }

    #[test]
    fn confusion_identity() {
        let counts = confusion_counts(&[0, 1, 2, 2], &[0, 2, 2, 1], 3).unwrap();
        assert!(counts.iter().all(|c| c.total() == 4));
        assert_eq!(counts[2], ClassCounts { tp: 1, fp: 1, tn: 1, fn_: 1 });
    }
}
