//! The two-stage fit: l1 feature selection, then restricted LDA.

use super::{moments, ClassLabel, ClassifierError, FittedLda, LabeledDataset, SampleMoments};
use crate::l1solver::{self, L1Problem, SolveStatus, SolverOptions};
use crate::linalg::spd_solve_or_ridge;
use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

/// A fitted two-stage classifier: the selected index set, the restricted LDA
/// direction `beta* = (S_n)_AA^{-1} (X̄1 - X̄2)_A`, and the mean anchor on
/// the selected coordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TldaModel {
    /// Strictly increasing, zero-based indices into the fit feature space.
    pub selected: Vec<usize>,
    pub beta_star: Array1<f64>,
    pub mu_hat_a_sel: Array1<f64>,
    pub lambda_used: f64,
    pub p0_used: usize,
    /// Classify to class 1 when the score exceeds this; `ln(pi2/pi1)` for
    /// unequal priors, 0 by default.
    pub log_prior_offset: f64,
    /// Set when the l1 estimate was identically zero and selection fell back
    /// to the top-p0 |t| scores.
    pub degenerate_selection: bool,
}

impl TldaModel {
    /// View as a generic fitted linear rule (for rate formulas etc.).
    pub fn as_lda(&self) -> FittedLda {
        FittedLda {
            direction: self.beta_star.clone(),
            mu_hat_a: self.mu_hat_a_sel.clone(),
            feature_set: self.selected.clone(),
        }
    }

    /// Sets the unequal-prior offset `ln(pi2/pi1)` from `pi1` in (0, 1).
    pub fn with_prior(mut self, pi1: f64) -> Result<Self, ClassifierError> {
        if !(pi1 > 0.0 && pi1 < 1.0) {
            return Err(ClassifierError::InvalidSelection(format!(
                "prior must lie in (0, 1), got {pi1}"
            )));
        }
        self.log_prior_offset = ((1.0 - pi1) / pi1).ln();
        Ok(self)
    }
}

/// Fit plus solver diagnostics kept for traces and reports.
#[derive(Debug, Clone)]
pub struct TldaFit {
    pub model: TldaModel,
    /// The full-length l1 estimate the selection was read from.
    pub beta_hat: Array1<f64>,
    pub solver_status: SolveStatus,
    pub solver_iterations: usize,
}

/// Feature indices ordered by decreasing magnitude, ties broken by lower
/// index.
pub fn rank_by_magnitude(values: ArrayView1<f64>) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        values[b]
            .abs()
            .total_cmp(&values[a].abs())
            .then_with(|| a.cmp(&b))
    });
    idx
}

/// Two-stage LDA: solve the l1 program at `lambda`, keep the `p0` largest
/// `|beta_j|`, and fit the restricted LDA direction on those coordinates.
pub fn fit_tlda(
    data: &LabeledDataset,
    lambda: f64,
    p0: usize,
) -> Result<TldaModel, ClassifierError> {
    fit_tlda_detailed(data, lambda, p0).map(|fit| fit.model)
}

/// As [`fit_tlda`], keeping the full l1 estimate and solver diagnostics.
pub fn fit_tlda_detailed(
    data: &LabeledDataset,
    lambda: f64,
    p0: usize,
) -> Result<TldaFit, ClassifierError> {
    let mom = moments(data)?;
    fit_tlda_on_moments(&mom, lambda, p0, &SolverOptions::default())
}

/// The fit from precomputed moments; cross-validation reuses moments and a
/// solved path through this entry point.
pub fn fit_tlda_on_moments(
    mom: &SampleMoments,
    lambda: f64,
    p0: usize,
    opts: &SolverOptions,
) -> Result<TldaFit, ClassifierError> {
    let p = mom.xbar1.len();
    if p0 < 1 || p0 > p {
        return Err(ClassifierError::InvalidSelection(format!(
            "p0 must lie in 1..={p}, got {p0}"
        )));
    }
    let d = mom.mean_difference();
    let problem = L1Problem::with_factor(
        mom.pooled_cov.clone(),
        d,
        lambda,
        mom.cov_factor.clone(),
    )?;
    let sol = l1solver::solve_with(&problem, opts)?;
    selection_from_solution(mom, &sol.beta, lambda, p0, sol.status, sol.iterations)
}

/// Selection and restricted fit from an already-solved l1 estimate.
pub(crate) fn selection_from_solution(
    mom: &SampleMoments,
    beta_hat: &Array1<f64>,
    lambda: f64,
    p0: usize,
    solver_status: SolveStatus,
    solver_iterations: usize,
) -> Result<TldaFit, ClassifierError> {
    let d = mom.mean_difference();
    let dinf = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let bsup = beta_hat.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    // An all-zero estimate carries no magnitude order; fall back to t-score
    // screening and flag the model.
    let degenerate = bsup <= 1e-12 * (1.0 + dinf);
    let order = if degenerate {
        rank_by_magnitude(t_values_from_moments(mom).view())
    } else {
        rank_by_magnitude(beta_hat.view())
    };
    let mut selected: Vec<usize> = order[..p0].to_vec();
    selected.sort_unstable();

    let cov = mom.pooled_cov.restrict(&selected);
    let d_sel: Array1<f64> = selected.iter().map(|&j| d[j]).collect();
    let beta_star = spd_solve_or_ridge(&cov, d_sel.view())?;
    if beta_star.iter().any(|v| !v.is_finite()) {
        return Err(ClassifierError::NonFiniteDirection);
    }
    let mu_hat_a_sel: Array1<f64> = selected.iter().map(|&j| mom.mu_hat_a[j]).collect();
    Ok(TldaFit {
        model: TldaModel {
            selected,
            beta_star,
            mu_hat_a_sel,
            lambda_used: lambda,
            p0_used: p0,
            log_prior_offset: 0.0,
            degenerate_selection: degenerate,
        },
        beta_hat: beta_hat.clone(),
        solver_status,
        solver_iterations,
    })
}

/// Pooled-variance t statistics recovered from moments (the diagonal of the
/// pooled covariance already holds the within-class sums of squares over n).
fn t_values_from_moments(mom: &SampleMoments) -> Array1<f64> {
    let p = mom.xbar1.len();
    let n = mom.n() as f64;
    let inv = 1.0 / mom.n1 as f64 + 1.0 / mom.n2 as f64;
    let mut t = Array1::zeros(p);
    for j in 0..p {
        let s2 = mom.pooled_cov.get(j, j) * n / (n - 2.0);
        let diff = mom.xbar1[j] - mom.xbar2[j];
        t[j] = if s2 <= 0.0 {
            if diff == 0.0 {
                0.0
            } else {
                diff.signum() * f64::INFINITY
            }
        } else {
            diff / (s2 * inv).sqrt()
        };
    }
    t
}

/// Classifies a full-dimensional point: class 1 iff
/// `(x - mu_hat_a)_A' beta* > log_prior_offset`.
pub fn classify_tlda(model: &TldaModel, x: ArrayView1<f64>) -> ClassLabel {
    let score: f64 = model
        .selected
        .iter()
        .enumerate()
        .map(|(k, &j)| (x[j] - model.mu_hat_a_sel[k]) * model.beta_star[k])
        .sum();
    if score > model.log_prior_offset {
        ClassLabel::One
    } else {
        ClassLabel::Two
    }
}
