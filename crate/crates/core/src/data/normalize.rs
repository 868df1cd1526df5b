use ndarray::{Array1, Axis};
use serde::{Deserialize, Serialize};

use super::OmicsMatrix;

/// Per-column extrema used by [`minmax_normalize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub min: Array1<f64>,
    pub max: Array1<f64>,
}

/// Scale each column to [0, 1] with `(x - min) / (max - min)`.
///
/// Constant columns become all zeros so column indices stay aligned with
/// feature names.
pub fn minmax_normalize(m: &OmicsMatrix) -> (OmicsMatrix, NormalizationStats) {
    let v = m.values();
    let min = v.fold_axis(Axis(0), f64::INFINITY, |a, &x| a.min(x));
    let max = v.fold_axis(Axis(0), f64::NEG_INFINITY, |a, &x| a.max(x));
    let mut out = v.clone();
    for (mut col, (&lo, &hi)) in out.columns_mut().into_iter().zip(min.iter().zip(max.iter())) {
        let range = hi - lo;
        if range > 0.0 {
            col.mapv_inplace(|x| ((x - lo) / range).clamp(0.0, 1.0));
        } else {
            col.fill(0.0);
        }
    }
    let normalized = OmicsMatrix {
        values: out,
        feature_names: m.feature_names.clone(),
        sample_ids: m.sample_ids.clone(),
    };
    (normalized, NormalizationStats { min, max })
}
