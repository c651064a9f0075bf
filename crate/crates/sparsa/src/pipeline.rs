//! The real-data path: optional standardization, optional t screening,
//! cross-validated two-stage fit, and a persistable fitted model that knows
//! how to transform and classify raw points.

use crate::classifiers::{classify_tlda, ClassLabel, ClassifierError, LabeledDataset, TldaModel};
use crate::linalg::RngSeed;
use crate::simbench::{
    screen_by_t, standardize_expression, ScalingRecord, ScreenRule, SimbenchError,
    StandardizeOrder,
};
use crate::tuning::{
    cross_validate, CvConfig, LambdaGrid, Recipe, RecipeOutcome, TuningError,
};
use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Tuning(#[from] TuningError),
    #[error(transparent)]
    Simbench(#[from] SimbenchError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error("model file problem: {0}")]
    Model(String),
}

/// Recipe for fitting on real data. The lambda grid is relative to each
/// training set by default; the p0 grid defaults to the size-based rule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitConfig {
    pub standardize: Option<StandardizeOrder>,
    pub screen: Option<ScreenRule>,
    pub folds: usize,
    pub lambda_factors: Option<Vec<f64>>,
    pub p0_grid: Option<Vec<usize>>,
    /// Prior probability of class 1; `None` or 0.5 means no offset.
    pub prior1: Option<f64>,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            standardize: None,
            screen: None,
            folds: 5,
            lambda_factors: None,
            p0_grid: None,
            prior1: None,
        }
    }
}

/// Cross-validation choice recorded in the fitted model. When the classes
/// are too small for any stratified fold count to leave two members per
/// class in every fold training set, tuning is skipped: lambda falls back to
/// the geometric midpoint of the default grid and p0 to the middle of the
/// p0 grid, and `tuned` is false.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvChoice {
    pub lambda_hat: f64,
    pub lambda_adjusted: f64,
    pub p0_hat: usize,
    pub folds: usize,
    pub tuned: bool,
}

/// Largest workable fold count not above `requested`: every class must keep
/// at least two members in each fold training set.
fn feasible_folds(n1: usize, n2: usize, requested: usize) -> Option<usize> {
    for k in (2..=requested.max(2)).rev() {
        let ok = [n1, n2]
            .iter()
            .all(|&c| c >= k && c - c.div_ceil(k) >= 2);
        if ok {
            return Some(k);
        }
    }
    None
}

/// A fully fitted pipeline: the transforms plus the two-stage model, with
/// selected features reported both in fit space and in the original 1-based
/// coordinates. Serializable with a versioned schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FittedPipeline {
    pub schema_version: u32,
    pub p_original: usize,
    pub scaling: Option<ScalingRecord>,
    /// Indices into the post-standardization space kept by screening.
    pub screen_kept: Option<Vec<usize>>,
    pub model: TldaModel,
    pub cv: CvChoice,
    /// Selected features as 1-based positions in the original input.
    pub selected_original: Vec<usize>,
    pub seed: u64,
}

pub const PIPELINE_SCHEMA_VERSION: u32 = 1;

impl FitConfig {
    fn cv_config(&self, n: usize, p: usize, seed: RngSeed) -> CvConfig {
        let mut cfg = CvConfig::default_for(n, p, seed);
        cfg.folds = self.folds;
        if let Some(factors) = &self.lambda_factors {
            cfg.lambda_grid = LambdaGrid::Relative {
                factors: factors.clone(),
            };
        }
        if let Some(grid) = &self.p0_grid {
            cfg.p0_grid = grid.clone();
        }
        cfg
    }

    /// Standardize, screen, cross-validate, refit on everything, and wrap
    /// the result with the records needed to transform raw points.
    pub fn fit(
        &self,
        data: &LabeledDataset,
        seed: RngSeed,
    ) -> Result<FittedPipeline, PipelineError> {
        let p_original = data.p();
        let (standardized, scaling) = match self.standardize {
            Some(order) => {
                let (d, rec) = standardize_expression(data, order)?;
                (d, Some(rec))
            }
            None => (data.clone(), None),
        };
        let (screened, screen_kept) = match self.screen {
            Some(rule) => {
                let (d, kept) = screen_by_t(&standardized, rule)?;
                (d, Some(kept))
            }
            None => (standardized, None),
        };
        let mut cfg = self.cv_config(screened.n(), screened.p(), seed);
        let mom = crate::classifiers::moments(&screened)?;
        let choice = match feasible_folds(screened.n1(), screened.n2(), cfg.folds) {
            Some(k) => {
                cfg.folds = k;
                let cv = cross_validate(&screened, &cfg)?;
                CvChoice {
                    lambda_hat: cv.lambda_hat,
                    lambda_adjusted: cv.lambda_adjusted,
                    p0_hat: cv.p0_hat,
                    folds: k,
                    tuned: true,
                }
            }
            None => {
                let d = mom.mean_difference();
                let dinf = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let lambda = (0.95f64 * 0.02).sqrt() * dinf;
                let p0 = cfg.p0_grid[cfg.p0_grid.len() / 2];
                CvChoice {
                    lambda_hat: lambda,
                    lambda_adjusted: lambda,
                    p0_hat: p0,
                    folds: 0,
                    tuned: false,
                }
            }
        };
        let fit = crate::classifiers::fit_tlda_on_moments(
            &mom,
            choice.lambda_adjusted,
            choice.p0_hat,
            &cfg.solver,
        )?;
        let mut model = fit.model;
        if let Some(pi1) = self.prior1 {
            model = model.with_prior(pi1)?;
        }

        // Map fit-space selection back to original 1-based positions.
        let selected_original = model
            .selected
            .iter()
            .map(|&j| {
                let post_std = match &screen_kept {
                    Some(kept) => kept[j],
                    None => j,
                };
                let orig = match &scaling {
                    Some(rec) => rec.kept[post_std],
                    None => post_std,
                };
                orig + 1
            })
            .collect();

        Ok(FittedPipeline {
            schema_version: PIPELINE_SCHEMA_VERSION,
            p_original,
            scaling,
            screen_kept,
            cv: choice,
            model,
            selected_original,
            seed: seed.0,
        })
    }
}

impl FittedPipeline {
    /// Applies the stored transforms to one raw point and classifies it.
    pub fn predict(&self, x: ArrayView1<f64>) -> Result<ClassLabel, PipelineError> {
        if x.len() != self.p_original {
            return Err(PipelineError::Model(format!(
                "point has {} features but the model was fit on {}",
                x.len(),
                self.p_original
            )));
        }
        let transformed: Array1<f64> = match &self.scaling {
            Some(rec) => rec.apply_row(x),
            None => x.to_owned(),
        };
        let in_fit_space: Array1<f64> = match &self.screen_kept {
            Some(kept) => kept.iter().map(|&j| transformed[j]).collect(),
            None => transformed,
        };
        Ok(classify_tlda(&self.model, in_fit_space.view()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<FittedPipeline, PipelineError> {
        let model: FittedPipeline =
            serde_json::from_str(text).map_err(|e| PipelineError::Model(e.to_string()))?;
        if model.schema_version != PIPELINE_SCHEMA_VERSION {
            return Err(PipelineError::Model(format!(
                "unsupported schema version {} (expected {PIPELINE_SCHEMA_VERSION})",
                model.schema_version
            )));
        }
        Ok(model)
    }
}

/// LOOCV recipe: the whole pipeline (screening included) is refit inside
/// every split by default, so feature selection never sees the held-out
/// sample. `global_screen` pins the screen set from the full data instead,
/// for the cheaper protocol some studies use.
#[derive(Debug, Clone)]
pub struct LoocvPipeline {
    pub config: FitConfig,
    pub global_screen: bool,
    /// Screen set precomputed on the full data (original coordinates);
    /// only used when `global_screen` is set.
    pub fixed_screen: Option<Vec<usize>>,
}

impl Recipe for LoocvPipeline {
    fn fit_and_classify(
        &self,
        train: &LabeledDataset,
        x: ArrayView1<f64>,
        seed: RngSeed,
    ) -> Result<RecipeOutcome, TuningError> {
        let (config, train_view, x_view): (FitConfig, LabeledDataset, Array1<f64>) =
            if self.global_screen {
                let kept = self.fixed_screen.as_ref().ok_or_else(|| {
                    TuningError::InvalidConfig(
                        "global_screen requires a precomputed screen set".into(),
                    )
                })?;
                let mut cfg = self.config.clone();
                cfg.screen = None;
                (
                    cfg,
                    train.restrict_features(kept),
                    kept.iter().map(|&j| x[j]).collect(),
                )
            } else {
                (self.config.clone(), train.clone(), x.to_owned())
            };
        let fitted = config
            .fit(&train_view, seed)
            .map_err(|e| TuningError::CvFailed(e.to_string()))?;
        let predicted = fitted
            .predict(x_view.view())
            .map_err(|e| TuningError::CvFailed(e.to_string()))?;
        Ok(RecipeOutcome {
            predicted,
            selected_count: Some(fitted.model.p0_used),
            lambda: Some(fitted.model.lambda_used),
        })
    }
}
