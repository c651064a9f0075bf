//! Expression-style preprocessing: per-sample centering and unit pooled
//! variance, plus t-statistic screening.

use super::SimbenchError;
use crate::classifiers::{per_feature_stats, rank_by_magnitude, t_scores, LabeledDataset};
use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

/// Which of the two standardization passes runs first. The source protocol
/// states both "each sample to zero mean" and unit-diagonal pooled
/// covariance without fixing an order; row centering first is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StandardizeOrder {
    RowCenterThenScale,
    ScaleThenRowCenter,
}

/// Everything needed to apply a fitted standardization to new points:
/// retained original feature indices, their multiplicative scales, and the
/// pass order. Features with zero pooled variance are dropped and recorded.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingRecord {
    pub order: StandardizeOrder,
    pub p_original: usize,
    /// Original indices kept, strictly increasing.
    pub kept: Vec<usize>,
    /// Scale applied to each kept feature.
    pub scales: Vec<f64>,
    /// Original indices dropped for zero pooled variance.
    pub dropped: Vec<usize>,
}

impl ScalingRecord {
    /// Transforms one raw sample (length `p_original`) exactly the way the
    /// training data was transformed; returns the kept, scaled coordinates.
    pub fn apply_row(&self, x: ArrayView1<f64>) -> Array1<f64> {
        assert_eq!(x.len(), self.p_original, "point has wrong dimension");
        match self.order {
            StandardizeOrder::RowCenterThenScale => {
                let mean = x.sum() / self.p_original as f64;
                self.kept
                    .iter()
                    .zip(self.scales.iter())
                    .map(|(&j, &s)| (x[j] - mean) * s)
                    .collect()
            }
            StandardizeOrder::ScaleThenRowCenter => {
                let scaled: Array1<f64> = self
                    .kept
                    .iter()
                    .zip(self.scales.iter())
                    .map(|(&j, &s)| x[j] * s)
                    .collect();
                let mean = scaled.sum() / scaled.len().max(1) as f64;
                scaled.mapv(|v| v - mean)
            }
        }
    }
}

fn center_rows(features: &mut Array2<f64>) {
    let p = features.ncols() as f64;
    for mut row in features.rows_mut() {
        let mean = row.sum() / p;
        row.mapv_inplace(|v| v - mean);
    }
}

/// Standardizes expression data: every sample row to zero mean across
/// features, every feature to unit pooled within-class variance (the `1/n`
/// divisor, so the pooled covariance diagonal becomes exactly 1).
/// Zero-variance features are dropped and recorded rather than erroring.
pub fn standardize_expression(
    data: &LabeledDataset,
    order: StandardizeOrder,
) -> Result<(LabeledDataset, ScalingRecord), SimbenchError> {
    let p = data.p();
    let n = data.n() as f64;
    if p == 0 {
        return Err(SimbenchError::InvalidRun("no features".into()));
    }

    let (transformed, kept, scales, dropped) = match order {
        StandardizeOrder::RowCenterThenScale => {
            let mut features = data.features().clone();
            center_rows(&mut features);
            let centered =
                LabeledDataset::new(features.clone(), data.labels().to_vec()).expect("same shape");
            let stats = per_feature_stats(&centered);
            let max_var = stats.within_ss.iter().fold(0.0f64, |m, v| m.max(*v)) / n;
            let mut kept = Vec::new();
            let mut scales = Vec::new();
            let mut dropped = Vec::new();
            for j in 0..p {
                let var = stats.within_ss[j] / n;
                if var <= 1e-12 * max_var.max(1e-300) {
                    dropped.push(j);
                } else {
                    kept.push(j);
                    scales.push(1.0 / var.sqrt());
                }
            }
            let mut out = Array2::zeros((data.n(), kept.len()));
            for (c, (&j, &s)) in kept.iter().zip(scales.iter()).enumerate() {
                for i in 0..data.n() {
                    out[[i, c]] = features[[i, j]] * s;
                }
            }
            (out, kept, scales, dropped)
        }
        StandardizeOrder::ScaleThenRowCenter => {
            let stats = per_feature_stats(data);
            let max_var = stats.within_ss.iter().fold(0.0f64, |m, v| m.max(*v)) / n;
            let mut kept = Vec::new();
            let mut scales = Vec::new();
            let mut dropped = Vec::new();
            for j in 0..p {
                let var = stats.within_ss[j] / n;
                if var <= 1e-12 * max_var.max(1e-300) {
                    dropped.push(j);
                } else {
                    kept.push(j);
                    scales.push(1.0 / var.sqrt());
                }
            }
            let mut out = Array2::zeros((data.n(), kept.len()));
            for (c, (&j, &s)) in kept.iter().zip(scales.iter()).enumerate() {
                for i in 0..data.n() {
                    out[[i, c]] = data.features()[[i, j]] * s;
                }
            }
            center_rows(&mut out);
            (out, kept, scales, dropped)
        }
    };

    let record = ScalingRecord {
        order,
        p_original: p,
        kept,
        scales,
        dropped,
    };
    let out = LabeledDataset::new(transformed, data.labels().to_vec()).expect("same rows");
    Ok((out, record))
}

/// Feature screening: keep either the `k` largest `|t|` (stable ties, lower
/// index first) or every feature whose absolute mean difference exceeds a
/// threshold. Returns the reduced dataset and the kept indices in original
/// coordinates, ascending.
pub fn screen_by_t(
    data: &LabeledDataset,
    rule: ScreenRule,
) -> Result<(LabeledDataset, Vec<usize>), SimbenchError> {
    let kept = match rule {
        ScreenRule::TopK(k) => {
            if k == 0 || k > data.p() {
                return Err(SimbenchError::InvalidRun(format!(
                    "screen size must lie in 1..={}, got {k}",
                    data.p()
                )));
            }
            let t = t_scores(data)?;
            let order = rank_by_magnitude(t.values.view());
            let mut kept: Vec<usize> = order[..k].to_vec();
            kept.sort_unstable();
            kept
        }
        ScreenRule::MeanDiffAbove(thr) => {
            let stats = per_feature_stats(data);
            let kept: Vec<usize> = (0..data.p())
                .filter(|&j| (stats.xbar1[j] - stats.xbar2[j]).abs() > thr)
                .collect();
            if kept.is_empty() {
                return Err(SimbenchError::InvalidRun(format!(
                    "no feature has |mean difference| > {thr}"
                )));
            }
            kept
        }
    };
    Ok((data.restrict_features(&kept), kept))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "value")]
pub enum ScreenRule {
    /// Keep the k features with the largest |t|.
    TopK(usize),
    /// Keep features with |X̄1 - X̄2| above the threshold (the conventional
    /// post-standardization cut).
    MeanDiffAbove(f64),
}
