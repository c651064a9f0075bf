//! Hyperparameter selection: stratified k-fold cross-validation over
//! (lambda, p0) with the sqrt((k-1)/k) sample-size adjustment, and
//! leave-one-out evaluation of full pipelines.
//!
//! The cross-validation score is the misclassification count summed over
//! folds (not fold-averaged rates), so unequal folds are weighted correctly.
//! Ties in the argmin prefer smaller p0, then larger lambda.

use crate::classifiers::{
    self, classify_tlda, fit_tlda_on_moments, moments, ClassLabel, ClassifierError,
    LabeledDataset, TldaFit,
};
use crate::l1solver::{solve_path_with, L1Problem, SolverError, SolverOptions};
use crate::linalg::{NormalStream, RngSeed};
use ndarray::ArrayView1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TuningError {
    #[error("too few samples: {0}")]
    TooFewSamples(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("cross-validation failed: {0}")]
    CvFailed(String),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// The lambda grid: either explicit values used verbatim in every fold, or
/// ratio factors applied to each fold training set's `|X̄1 - X̄2|_inf` (the
/// default, which keeps the grid on the data's own scale).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum LambdaGrid {
    Explicit(Vec<f64>),
    Relative { factors: Vec<f64> },
}

impl LambdaGrid {
    /// 20 log-spaced ratios from 0.95 down to 1/50. The top ratio sits just
    /// inside 1: at exactly `|d|_inf` the l1 estimate is identically zero in
    /// every fold, so that column would be scored under the t-fallback rule
    /// while the adjusted-lambda refit is not degenerate, and the two would
    /// disagree about what the cell means.
    pub fn default_factors() -> Vec<f64> {
        let hi = 0.95f64.ln();
        let lo = (1.0f64 / 50.0).ln();
        (0..20)
            .map(|k| (hi + (lo - hi) * k as f64 / 19.0).exp())
            .collect()
    }

    pub fn default_relative() -> LambdaGrid {
        LambdaGrid::Relative {
            factors: Self::default_factors(),
        }
    }

    fn values(&self) -> &[f64] {
        match self {
            LambdaGrid::Explicit(v) => v,
            LambdaGrid::Relative { factors } => factors,
        }
    }

    fn validate(&self) -> Result<(), TuningError> {
        let v = self.values();
        if v.is_empty() {
            return Err(TuningError::InvalidConfig("empty lambda grid".into()));
        }
        if v.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
            return Err(TuningError::InvalidConfig(
                "lambda grid entries must be finite and nonnegative".into(),
            ));
        }
        if v.windows(2).any(|w| w[0] <= w[1]) {
            return Err(TuningError::InvalidConfig(
                "lambda grid must be strictly descending".into(),
            ));
        }
        Ok(())
    }

    fn len(&self) -> usize {
        self.values().len()
    }
}

/// Default p0 grid `1..=min(max(3 floor(sqrt(n / ln p)), 10), 30, p)`. The
/// upper end triples the theoretical `sqrt(n / log p)` scale for finite
/// samples, with a floor of 10 so small-n expression data can still reach
/// the selection sizes seen in practice.
pub fn default_p0_grid(n: usize, p: usize) -> Vec<usize> {
    if p == 0 {
        return Vec::new();
    }
    let by_theory = if p >= 2 {
        3 * ((n as f64 / (p as f64).ln()).sqrt().floor() as usize)
    } else {
        1
    };
    let hi = by_theory.min(30).max(10).min(p);
    (1..=hi).collect()
}

/// Cross-validation configuration. `adjust_factor` is
/// `sqrt((folds - 1) / folds)`: the grids are tuned on training sets of
/// `(k-1)/k` of the data, and lambda scales like `1/sqrt(n)`.
#[derive(Debug, Clone)]
pub struct CvConfig {
    pub folds: usize,
    pub lambda_grid: LambdaGrid,
    pub p0_grid: Vec<usize>,
    pub seed: RngSeed,
    pub solver: SolverOptions,
}

impl CvConfig {
    pub fn new(
        folds: usize,
        lambda_grid: LambdaGrid,
        p0_grid: Vec<usize>,
        seed: RngSeed,
    ) -> CvConfig {
        CvConfig {
            folds,
            lambda_grid,
            p0_grid,
            seed,
            solver: SolverOptions::default(),
        }
    }

    /// Five folds, the default relative lambda grid, and the default p0 grid
    /// for a dataset of n samples and p features.
    pub fn default_for(n: usize, p: usize, seed: RngSeed) -> CvConfig {
        CvConfig::new(
            5,
            LambdaGrid::default_relative(),
            default_p0_grid(n, p),
            seed,
        )
    }

    pub fn adjust_factor(&self) -> f64 {
        ((self.folds as f64 - 1.0) / self.folds as f64).sqrt()
    }

    fn validate(&self, p: usize) -> Result<(), TuningError> {
        if self.folds < 2 {
            return Err(TuningError::InvalidConfig("folds must be >= 2".into()));
        }
        self.lambda_grid.validate()?;
        if self.p0_grid.is_empty() {
            return Err(TuningError::InvalidConfig("empty p0 grid".into()));
        }
        if self.p0_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(TuningError::InvalidConfig(
                "p0 grid must be strictly ascending".into(),
            ));
        }
        if self.p0_grid[0] < 1 || *self.p0_grid.last().unwrap() > p {
            return Err(TuningError::InvalidConfig(format!(
                "p0 grid must lie in 1..={p}"
            )));
        }
        Ok(())
    }
}

/// One (lambda, p0) cell of the cross-validation table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvCell {
    /// Lambda on the full-data scale (factor times full-data `|d|_inf` for
    /// relative grids).
    pub lambda: f64,
    /// The grid ratio this cell came from, for relative grids.
    pub factor: Option<f64>,
    pub p0: usize,
    pub error_count: usize,
    pub n_evaluated: usize,
    pub mean_error: f64,
    /// Folds whose l1 estimate was identically zero (selection fell back to
    /// t scores); such cells are still scored.
    pub degenerate_folds: usize,
    pub failed: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvResult {
    pub lambda_hat: f64,
    pub p0_hat: usize,
    /// `adjust_factor * lambda_hat`, the value the final refit uses.
    pub lambda_adjusted: f64,
    pub adjust_factor: f64,
    pub table: Vec<CvCell>,
    pub fold_assignments: Vec<usize>,
}

/// Stratified fold assignment: within each class the shuffled members are
/// dealt into folds whose sizes differ by at most one (the first
/// `count mod k` folds take the extra member). Deterministic given the seed.
pub fn stratified_folds(
    data: &LabeledDataset,
    k: usize,
    seed: RngSeed,
) -> Result<Vec<usize>, TuningError> {
    if k < 2 {
        return Err(TuningError::InvalidConfig("folds must be >= 2".into()));
    }
    let mut assignment = vec![0usize; data.n()];
    let mut stream = NormalStream::new(seed.stream(0x0F01D));
    for label in [ClassLabel::One, ClassLabel::Two] {
        let mut rows = data.class_rows(label);
        if rows.len() < k {
            return Err(TuningError::TooFewSamples(format!(
                "class {label} has {} members but {k} folds were requested",
                rows.len()
            )));
        }
        stream.shuffle(&mut rows);
        let q = rows.len() / k;
        let r = rows.len() % k;
        let mut cursor = 0usize;
        for fold in 0..k {
            let take = q + usize::from(fold < r);
            for &row in &rows[cursor..cursor + take] {
                assignment[row] = fold;
            }
            cursor += take;
        }
    }
    Ok(assignment)
}

/// Grid search by stratified k-fold cross-validation: for every
/// (lambda, p0) cell, fit the two-stage classifier on k-1 folds and count
/// misclassifications on the held-out fold; the held-out fold never enters
/// any fit. Failed cells are excluded from the argmin; if every cell fails
/// the whole run fails.
pub fn cross_validate(data: &LabeledDataset, cfg: &CvConfig) -> Result<CvResult, TuningError> {
    cfg.validate(data.p())?;
    let folds = stratified_folds(data, cfg.folds, cfg.seed)?;
    let n_lambda = cfg.lambda_grid.len();
    let n_p0 = cfg.p0_grid.len();

    let mut counts = vec![0usize; n_lambda * n_p0];
    let mut evaluated = vec![0usize; n_lambda * n_p0];
    let mut degenerate = vec![0usize; n_lambda * n_p0];
    let mut failed: Vec<Option<String>> = vec![None; n_lambda * n_p0];
    fn fail_all(failed: &mut [Option<String>], msg: &str) {
        for f in failed.iter_mut() {
            if f.is_none() {
                *f = Some(msg.to_string());
            }
        }
    }

    for fold in 0..cfg.folds {
        let train_rows: Vec<usize> = (0..data.n()).filter(|&i| folds[i] != fold).collect();
        let test_rows: Vec<usize> = (0..data.n()).filter(|&i| folds[i] == fold).collect();
        let train = data.subset_rows(&train_rows);
        let mom = match moments(&train) {
            Ok(m) => m,
            Err(e) => {
                fail_all(&mut failed, &format!("fold {fold}: {e}"));
                continue;
            }
        };
        let d = mom.mean_difference();
        let dinf = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let lambdas: Vec<f64> = match &cfg.lambda_grid {
            LambdaGrid::Explicit(v) => v.clone(),
            LambdaGrid::Relative { factors } => {
                if dinf <= 0.0 {
                    fail_all(&mut failed, &format!("fold {fold}: zero mean difference"));
                    continue;
                }
                factors.iter().map(|f| f * dinf).collect()
            }
        };
        let base = match L1Problem::with_factor(
            mom.pooled_cov.clone(),
            d.clone(),
            lambdas[0],
            mom.cov_factor.clone(),
        ) {
            Ok(p) => p,
            Err(e) => {
                fail_all(&mut failed, &format!("fold {fold}: {e}"));
                continue;
            }
        };
        let sols = match solve_path_with(&base, &lambdas, &cfg.solver) {
            Ok(s) => s,
            Err(e) => {
                fail_all(&mut failed, &format!("fold {fold}: {e}"));
                continue;
            }
        };
        for (li, sol) in sols.iter().enumerate() {
            for (pi, &p0) in cfg.p0_grid.iter().enumerate() {
                let idx = li * n_p0 + pi;
                if failed[idx].is_some() {
                    continue;
                }
                match classifiers::selection_from_solution(
                    &mom,
                    &sol.beta,
                    lambdas[li],
                    p0,
                    sol.status,
                    sol.iterations,
                ) {
                    Ok(fit) => {
                        if fit.model.degenerate_selection {
                            degenerate[idx] += 1;
                        }
                        let wrong = test_rows
                            .iter()
                            .filter(|&&i| classify_tlda(&fit.model, data.row(i)) != data.label(i))
                            .count();
                        counts[idx] += wrong;
                        evaluated[idx] += test_rows.len();
                    }
                    Err(e) => failed[idx] = Some(format!("fold {fold}: {e}")),
                }
            }
        }
    }

    // Lambda on the full-data scale for reporting and the final refit.
    let full_dinf = {
        let stats = classifiers::per_feature_stats(data);
        (&stats.xbar1 - &stats.xbar2)
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    };
    let lambda_at = |li: usize| match &cfg.lambda_grid {
        LambdaGrid::Explicit(v) => v[li],
        LambdaGrid::Relative { factors } => factors[li] * full_dinf,
    };

    let mut table = Vec::with_capacity(n_lambda * n_p0);
    for li in 0..n_lambda {
        let factor = match &cfg.lambda_grid {
            LambdaGrid::Explicit(_) => None,
            LambdaGrid::Relative { factors } => Some(factors[li]),
        };
        for (pi, &p0) in cfg.p0_grid.iter().enumerate() {
            let idx = li * n_p0 + pi;
            table.push(CvCell {
                lambda: lambda_at(li),
                factor,
                p0,
                error_count: counts[idx],
                n_evaluated: evaluated[idx],
                mean_error: if evaluated[idx] > 0 {
                    counts[idx] as f64 / evaluated[idx] as f64
                } else {
                    f64::NAN
                },
                degenerate_folds: degenerate[idx],
                failed: failed[idx].clone(),
            });
        }
    }

    let best = select_best(&table, n_lambda, n_p0)
        .ok_or_else(|| TuningError::CvFailed("every grid cell failed".into()))?;
    let best_cell = &table[best.0 * n_p0 + best.1];
    let lambda_hat = best_cell.lambda;
    let p0_hat = best_cell.p0;
    let adjust_factor = cfg.adjust_factor();
    Ok(CvResult {
        lambda_hat,
        p0_hat,
        lambda_adjusted: adjust_factor * lambda_hat,
        adjust_factor,
        table,
        fold_assignments: folds,
    })
}

/// Argmin by misclassification count; ties prefer smaller p0, then larger
/// lambda (grids are stored in descending lambda order, so a lower lambda
/// index wins). Total whenever at least one cell succeeded.
pub(crate) fn select_best(
    table: &[CvCell],
    n_lambda: usize,
    n_p0: usize,
) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize, usize, usize)> = None; // count, p0, li, pi
    for li in 0..n_lambda {
        for pi in 0..n_p0 {
            let cell = &table[li * n_p0 + pi];
            if cell.failed.is_some() || cell.n_evaluated == 0 {
                continue;
            }
            let key = (cell.error_count, cell.p0, li, pi);
            if best.is_none_or(|b| (key.0, key.1, key.2) < (b.0, b.1, b.2)) {
                best = Some(key);
            }
        }
    }
    best.map(|(_, _, li, pi)| (li, pi))
}

/// Cross-validates, then refits on the full dataset at
/// `(lambda_adjusted, p0_hat)`.
pub fn fit_tlda_cv(
    data: &LabeledDataset,
    cfg: &CvConfig,
) -> Result<(TldaFit, CvResult), TuningError> {
    let cv = cross_validate(data, cfg)?;
    let mom = moments(data)?;
    let fit = fit_tlda_on_moments(&mom, cv.lambda_adjusted, cv.p0_hat, &cfg.solver)?;
    Ok((fit, cv))
}

/// What a pipeline reports for one held-out sample.
#[derive(Debug, Clone)]
pub struct RecipeOutcome {
    pub predicted: ClassLabel,
    pub selected_count: Option<usize>,
    pub lambda: Option<f64>,
}

/// A full classifier recipe (screening, tuning, fitting) rerun from scratch
/// on each leave-one-out training set.
pub trait Recipe: Sync {
    fn fit_and_classify(
        &self,
        train: &LabeledDataset,
        x: ArrayView1<f64>,
        seed: RngSeed,
    ) -> Result<RecipeOutcome, TuningError>;
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitLog {
    pub index: usize,
    pub truth: ClassLabel,
    pub predicted: ClassLabel,
    pub correct: bool,
    pub selected_count: Option<usize>,
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoocvReport {
    pub n: usize,
    pub errors: usize,
    pub error_rate: f64,
    pub mean_selected: f64,
    pub sd_selected: f64,
    pub splits: Vec<SplitLog>,
}

/// Leave-one-out evaluation: each sample is held out once and the full
/// recipe is rerun on the remaining n-1. Split i uses seed `base + i`, so
/// splits are independent and individually reproducible.
pub fn loocv_evaluate<R: Recipe>(
    data: &LabeledDataset,
    recipe: &R,
    seed: RngSeed,
) -> Result<LoocvReport, TuningError>
where
    TuningError: Send,
{
    let n = data.n();
    if n < 3 {
        return Err(TuningError::TooFewSamples(
            "leave-one-out needs at least 3 samples".into(),
        ));
    }
    let splits: Vec<Result<SplitLog, TuningError>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let rows: Vec<usize> = (0..n).filter(|&r| r != i).collect();
            let train = data.subset_rows(&rows);
            let outcome = recipe.fit_and_classify(&train, data.row(i), seed.offset(i as u64))?;
            Ok(SplitLog {
                index: i,
                truth: data.label(i),
                predicted: outcome.predicted,
                correct: outcome.predicted == data.label(i),
                selected_count: outcome.selected_count,
                lambda: outcome.lambda,
            })
        })
        .collect();
    let mut logs = Vec::with_capacity(n);
    for s in splits {
        logs.push(s?);
    }
    let errors = logs.iter().filter(|l| !l.correct).count();
    let counts: Vec<f64> = logs
        .iter()
        .filter_map(|l| l.selected_count.map(|c| c as f64))
        .collect();
    let (mean_selected, sd_selected) = mean_sd(&counts);
    Ok(LoocvReport {
        n,
        errors,
        error_rate: errors as f64 / n as f64,
        mean_selected,
        sd_selected,
        splits: logs,
    })
}

/// Mean and sample standard deviation (n-1 divisor).
pub(crate) fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (xs.len() - 1) as f64;
    (mean, var.sqrt())
}
