use rayon::prelude::*;

use super::{LabeledDataset, MulticlassModel, Strategy, Structure};
use crate::classifiers::{fit_positive_plane, HyperParams, Variant};
use crate::error::{NhcaError, Result};
use crate::scalar::Scalar;

/// One classifier per class against the union of the others; only the
/// plane proximal to the class is kept.
pub fn fit_oaa<T: Scalar>(
    data: &LabeledDataset<T>,
    variant: Variant,
    params: &HyperParams<T>,
) -> Result<MulticlassModel<T>> {
    let k = data.class_count();
    if k < 2 {
        return Err(NhcaError::DegenerateClass(format!(
            "one-against-all needs at least 2 classes, got {k}"
        )));
    }
    params.validate()?;
    let fits: Vec<_> = (0..k)
        .into_par_iter()
        .map(|class| {
            let rest: Vec<usize> = (0..k).filter(|&c| c != class).collect();
            fit_positive_plane(variant, &data.rows_of(&[class]), &data.rows_of(&rest), params)
                .map_err(|e| NhcaError::ClassFit {
                    class,
                    source: Box::new(e),
                })
        })
        .collect::<Result<_>>()?;
    let converged = fits.iter().all(|(_, c)| *c);
    Ok(MulticlassModel {
        strategy: Strategy::Oaa,
        variant,
        class_count: k,
        feature_count: data.feature_count(),
        params: *params,
        structure: Structure::Oaa {
            planes: fits.into_iter().map(|(p, _)| p).collect(),
        },
        converged,
    })
}
