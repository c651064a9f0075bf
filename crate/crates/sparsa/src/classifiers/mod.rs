//! Classification rules and their theoretical quantities: the oracle Fisher
//! rule, plug-in LDA, naive Bayes, two-sample t statistics, and the
//! two-stage TLDA fit.
//!
//! Conventions shared by every rule here:
//! - the pooled covariance uses the maximum-likelihood `1/n` divisor, not
//!   the `1/(n-2)` of most software defaults;
//! - a classification score of exactly zero goes to class 2 (the indicator
//!   rules use a strict `> 0`).

#[cfg(test)]
mod tests;
mod tlda;

pub use tlda::{
    classify_tlda, fit_tlda, fit_tlda_detailed, fit_tlda_on_moments, rank_by_magnitude, TldaFit,
    TldaModel,
};
pub(crate) use tlda::selection_from_solution;

use crate::l1solver::SolverError;
use crate::linalg::{quad_form, spd_solve, spd_solve_or_ridge, LinalgError, SymMatrix};
use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifierError {
    #[error("each class needs at least 2 samples for pooled moments")]
    DegenerateClass,
    #[error("dataset needs at least {0} samples")]
    TooFewSamples(usize),
    #[error("feature {feature} has zero pooled variance")]
    ZeroVariance { feature: usize },
    #[error("direction has zero variance under the population covariance")]
    ZeroDirection,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid population: {0}")]
    InvalidPopulation(String),
    #[error("invalid feature selection: {0}")]
    InvalidSelection(String),
    #[error("fitted direction has non-finite entries")]
    NonFiniteDirection,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Binary class label; serialized as 1 or 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum ClassLabel {
    One,
    Two,
}

impl ClassLabel {
    pub fn from_u8(v: u8) -> Option<ClassLabel> {
        match v {
            1 => Some(ClassLabel::One),
            2 => Some(ClassLabel::Two),
            _ => None,
        }
    }

    pub fn as_u8(self) -> u8 {
        match self {
            ClassLabel::One => 1,
            ClassLabel::Two => 2,
        }
    }
}

impl From<ClassLabel> for u8 {
    fn from(l: ClassLabel) -> u8 {
        l.as_u8()
    }
}

impl TryFrom<u8> for ClassLabel {
    type Error = String;
    fn try_from(v: u8) -> Result<ClassLabel, String> {
        ClassLabel::from_u8(v).ok_or_else(|| format!("label must be 1 or 2, got {v}"))
    }
}

impl std::fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

/// n x p feature matrix with binary labels; the universal train/test
/// container. Classes may be small at construction time; operations that
/// need within-class spread check counts themselves.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    features: Array2<f64>,
    labels: Vec<ClassLabel>,
    n1: usize,
    n2: usize,
}

impl LabeledDataset {
    pub fn new(features: Array2<f64>, labels: Vec<ClassLabel>) -> Result<Self, ClassifierError> {
        if features.nrows() != labels.len() {
            return Err(ClassifierError::DimensionMismatch(format!(
                "{} feature rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        let n1 = labels.iter().filter(|l| **l == ClassLabel::One).count();
        let n2 = labels.len() - n1;
        Ok(LabeledDataset {
            features,
            labels,
            n1,
            n2,
        })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn p(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[ClassLabel] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.features.row(i)
    }

    pub fn label(&self, i: usize) -> ClassLabel {
        self.labels[i]
    }

    pub fn class_rows(&self, label: ClassLabel) -> Vec<usize> {
        (0..self.n())
            .filter(|&i| self.labels[i] == label)
            .collect()
    }

    pub fn subset_rows(&self, rows: &[usize]) -> LabeledDataset {
        let mut features = Array2::zeros((rows.len(), self.p()));
        let mut labels = Vec::with_capacity(rows.len());
        for (k, &i) in rows.iter().enumerate() {
            features.row_mut(k).assign(&self.features.row(i));
            labels.push(self.labels[i]);
        }
        LabeledDataset::new(features, labels).expect("consistent by construction")
    }

    pub fn restrict_features(&self, cols: &[usize]) -> LabeledDataset {
        let mut features = Array2::zeros((self.n(), cols.len()));
        for (k, &j) in cols.iter().enumerate() {
            features.column_mut(k).assign(&self.features.column(j));
        }
        LabeledDataset {
            features,
            labels: self.labels.clone(),
            n1: self.n1,
            n2: self.n2,
        }
    }
}

/// The two-class Gaussian model (mu1, mu2, Sigma); source of truth for
/// simulation and oracle rates.
#[derive(Debug, Clone)]
pub struct GaussianPopulation {
    mu1: Array1<f64>,
    mu2: Array1<f64>,
    sigma: SymMatrix,
}

impl GaussianPopulation {
    pub fn new(
        mu1: Array1<f64>,
        mu2: Array1<f64>,
        sigma: SymMatrix,
    ) -> Result<Self, ClassifierError> {
        if mu1.len() != mu2.len() || mu1.len() != sigma.dim() {
            return Err(ClassifierError::DimensionMismatch(format!(
                "mu1 {}, mu2 {}, sigma {}x{}",
                mu1.len(),
                mu2.len(),
                sigma.dim(),
                sigma.dim()
            )));
        }
        if mu1 == mu2 {
            return Err(ClassifierError::InvalidPopulation(
                "class means must differ".into(),
            ));
        }
        crate::linalg::cholesky(&sigma)
            .map_err(|_| ClassifierError::InvalidPopulation("sigma must be SPD".into()))?;
        Ok(GaussianPopulation { mu1, mu2, sigma })
    }

    pub fn dim(&self) -> usize {
        self.mu1.len()
    }

    pub fn mu1(&self) -> &Array1<f64> {
        &self.mu1
    }

    pub fn mu2(&self) -> &Array1<f64> {
        &self.mu2
    }

    pub fn sigma(&self) -> &SymMatrix {
        &self.sigma
    }

    /// `(mu1 + mu2) / 2`.
    pub fn mu_a(&self) -> Array1<f64> {
        (&self.mu1 + &self.mu2) / 2.0
    }

    /// `(mu1 - mu2) / 2`.
    pub fn mu_d(&self) -> Array1<f64> {
        (&self.mu1 - &self.mu2) / 2.0
    }

    /// True discriminant direction `beta0 = 2 Sigma^{-1} mu_d`.
    pub fn beta0(&self) -> Result<Array1<f64>, ClassifierError> {
        Ok(spd_solve(&self.sigma, self.mu_d().view())? * 2.0)
    }

    /// `Sigma^{-1} mu_d`, the Fisher direction.
    pub fn fisher_direction(&self) -> Result<Array1<f64>, ClassifierError> {
        Ok(spd_solve(&self.sigma, self.mu_d().view())?)
    }
}

/// Sample estimators: class means, the pooled covariance with `1/n` divisor,
/// and the mean half-sum/half-difference.
#[derive(Debug, Clone)]
pub struct SampleMoments {
    pub xbar1: Array1<f64>,
    pub xbar2: Array1<f64>,
    pub pooled_cov: SymMatrix,
    pub mu_hat_a: Array1<f64>,
    pub mu_hat_d: Array1<f64>,
    /// Within-class-centered rows over sqrt(n), so
    /// `pooled_cov = cov_factor' cov_factor`; lets the l1 solver work in the
    /// n-dimensional range space when n is well below p.
    pub cov_factor: Array2<f64>,
    pub n1: usize,
    pub n2: usize,
}

impl SampleMoments {
    pub fn n(&self) -> usize {
        self.n1 + self.n2
    }

    /// `X̄1 - X̄2 = 2 mu_hat_d`, the l1 program's target.
    pub fn mean_difference(&self) -> Array1<f64> {
        &self.xbar1 - &self.xbar2
    }
}

/// Maximum-likelihood moments of a two-class dataset. Needs two samples per
/// class so the pooled covariance sees within-class spread.
pub fn moments(data: &LabeledDataset) -> Result<SampleMoments, ClassifierError> {
    if data.n1() < 2 || data.n2() < 2 {
        return Err(ClassifierError::DegenerateClass);
    }
    let (n, p) = (data.n(), data.p());
    let mut xbar1 = Array1::<f64>::zeros(p);
    let mut xbar2 = Array1::<f64>::zeros(p);
    for i in 0..n {
        match data.label(i) {
            ClassLabel::One => xbar1 += &data.row(i),
            ClassLabel::Two => xbar2 += &data.row(i),
        }
    }
    xbar1 /= data.n1() as f64;
    xbar2 /= data.n2() as f64;

    let mut centered = Array2::<f64>::zeros((n, p));
    for i in 0..n {
        let mean = match data.label(i) {
            ClassLabel::One => &xbar1,
            ClassLabel::Two => &xbar2,
        };
        let mut row = centered.row_mut(i);
        row.assign(&data.row(i));
        row -= mean;
    }
    let cov_factor = &centered / (n as f64).sqrt();
    let pooled_cov = SymMatrix::from_lower(cov_factor.t().dot(&cov_factor))
        .expect("gram matrices are square");
    let mu_hat_a = (&xbar1 + &xbar2) / 2.0;
    let mu_hat_d = (&xbar1 - &xbar2) / 2.0;
    Ok(SampleMoments {
        xbar1,
        xbar2,
        pooled_cov,
        mu_hat_a,
        mu_hat_d,
        cov_factor,
        n1: data.n1(),
        n2: data.n2(),
    })
}

fn validate_subset(idx: &[usize], p: usize) -> Result<(), ClassifierError> {
    if idx.is_empty() {
        return Err(ClassifierError::InvalidSelection("empty subset".into()));
    }
    if idx.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ClassifierError::InvalidSelection(
            "subset must be strictly increasing".into(),
        ));
    }
    if *idx.last().unwrap() >= p {
        return Err(ClassifierError::InvalidSelection(format!(
            "index {} out of range for p = {p}",
            idx.last().unwrap()
        )));
    }
    Ok(())
}

/// Signal strength `Delta = mu_d' (Sigma_AA)^{-1} mu_d` on the given feature
/// subset (all features when `None`). Restricting to the support of `beta0`
/// leaves Delta unchanged.
pub fn fisher_delta(
    pop: &GaussianPopulation,
    subset: Option<&[usize]>,
) -> Result<f64, ClassifierError> {
    let mu_d = pop.mu_d();
    match subset {
        None => Ok(quad_form(pop.sigma(), mu_d.view())?),
        Some(idx) => {
            validate_subset(idx, pop.dim())?;
            let sub = pop.sigma().restrict(idx);
            let v: Array1<f64> = idx.iter().map(|&j| mu_d[j]).collect();
            Ok(quad_form(&sub, v.view())?)
        }
    }
}

pub(crate) fn std_normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// Theoretical misclassification rate `R = 1 - Phi(sqrt(Delta))` of the
/// oracle rule at signal strength `Delta >= 0`. Lives in (0, 0.5].
pub fn theoretical_rate(delta: f64) -> f64 {
    assert!(delta >= 0.0, "delta must be nonnegative, got {delta}");
    1.0 - std_normal_cdf(delta.sqrt())
}

/// Fisher's rule with known parameters: class 1 iff
/// `(x - mu_a)' Sigma^{-1} mu_d > 0`; ties go to class 2.
pub fn oracle_classify(
    pop: &GaussianPopulation,
    x: ArrayView1<f64>,
) -> Result<ClassLabel, ClassifierError> {
    if x.len() != pop.dim() {
        return Err(ClassifierError::DimensionMismatch(format!(
            "x has length {} but population dimension is {}",
            x.len(),
            pop.dim()
        )));
    }
    let w = pop.fisher_direction()?;
    let score = (&x - &pop.mu_a()).dot(&w);
    Ok(if score > 0.0 {
        ClassLabel::One
    } else {
        ClassLabel::Two
    })
}

/// A fitted linear rule: direction and mean anchor on an explicit feature
/// set (possibly all features).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FittedLda {
    pub direction: Array1<f64>,
    pub mu_hat_a: Array1<f64>,
    pub feature_set: Vec<usize>,
}

/// Plug-in LDA on an optional feature subset: direction
/// `(S_n)_AA^{-1} (mu_hat_d)_A`. Fails with `NotPositiveDefinite` when the
/// restricted pooled covariance is singular (for example `n <= p` on the
/// full feature set).
pub fn fit_lda(
    data: &LabeledDataset,
    subset: Option<&[usize]>,
) -> Result<FittedLda, ClassifierError> {
    let mom = moments(data)?;
    fit_lda_on_moments(&mom, subset, false)
}

/// LDA from precomputed moments; `ridge_fallback` retries a singular
/// restricted covariance with the documented diagonal jitter.
pub fn fit_lda_on_moments(
    mom: &SampleMoments,
    subset: Option<&[usize]>,
    ridge_fallback: bool,
) -> Result<FittedLda, ClassifierError> {
    let p = mom.xbar1.len();
    let (cov, mu_d, mu_a, feature_set): (SymMatrix, Array1<f64>, Array1<f64>, Vec<usize>) =
        match subset {
            None => (
                mom.pooled_cov.clone(),
                mom.mu_hat_d.clone(),
                mom.mu_hat_a.clone(),
                (0..p).collect(),
            ),
            Some(idx) => {
                validate_subset(idx, p)?;
                (
                    mom.pooled_cov.restrict(idx),
                    idx.iter().map(|&j| mom.mu_hat_d[j]).collect(),
                    idx.iter().map(|&j| mom.mu_hat_a[j]).collect(),
                    idx.to_vec(),
                )
            }
        };
    let direction = if ridge_fallback {
        spd_solve_or_ridge(&cov, mu_d.view())?
    } else {
        spd_solve(&cov, mu_d.view())?
    };
    if direction.iter().any(|v| !v.is_finite()) {
        return Err(ClassifierError::NonFiniteDirection);
    }
    Ok(FittedLda {
        direction,
        mu_hat_a: mu_a,
        feature_set,
    })
}

/// Applies a fitted linear rule to a full-dimensional point; ties go to
/// class 2.
pub fn classify_lda(model: &FittedLda, x: ArrayView1<f64>) -> ClassLabel {
    let score: f64 = model
        .feature_set
        .iter()
        .enumerate()
        .map(|(k, &j)| model.direction[k] * (x[j] - model.mu_hat_a[k]))
        .sum();
    if score > 0.0 {
        ClassLabel::One
    } else {
        ClassLabel::Two
    }
}

/// Exact conditional misclassification rate of a fitted linear rule under
/// the true Gaussian model:
/// `[Phi((mu_hat_a - mu1)'w / s) + Phi(-(mu_hat_a - mu2)'w / s)] / 2` with
/// `s = sqrt(w' Sigma w)`, everything restricted to the rule's feature set.
/// Closed form; no Monte Carlo.
pub fn conditional_rate(
    model: &FittedLda,
    pop: &GaussianPopulation,
) -> Result<f64, ClassifierError> {
    let fs = &model.feature_set;
    if fs.iter().any(|&j| j >= pop.dim()) {
        return Err(ClassifierError::DimensionMismatch(
            "feature set exceeds population dimension".into(),
        ));
    }
    let w = &model.direction;
    let mut var = 0.0;
    for (a, &ja) in fs.iter().enumerate() {
        for (b, &jb) in fs.iter().enumerate() {
            var += w[a] * w[b] * pop.sigma().get(ja, jb);
        }
    }
    if var <= 0.0 {
        return Err(ClassifierError::ZeroDirection);
    }
    let sd = var.sqrt();
    let mut a1 = 0.0;
    let mut a2 = 0.0;
    for (k, &j) in fs.iter().enumerate() {
        a1 += (model.mu_hat_a[k] - pop.mu1()[j]) * w[k];
        a2 += (model.mu_hat_a[k] - pop.mu2()[j]) * w[k];
    }
    Ok(0.5 * std_normal_cdf(a1 / sd) + 0.5 * std_normal_cdf(-a2 / sd))
}

/// Naive Bayes / independence rule: LDA with the pooled covariance replaced
/// by its diagonal, so `direction_j = mu_hat_d_j / (S_n)_jj`.
pub fn fit_naive_bayes(data: &LabeledDataset) -> Result<FittedLda, ClassifierError> {
    if data.n1() < 2 || data.n2() < 2 {
        return Err(ClassifierError::DegenerateClass);
    }
    let stats = per_feature_stats(data);
    let n = data.n() as f64;
    let p = data.p();
    let mut direction = Array1::zeros(p);
    for j in 0..p {
        let var = stats.within_ss[j] / n;
        if var <= 0.0 {
            return Err(ClassifierError::ZeroVariance { feature: j });
        }
        direction[j] = 0.5 * (stats.xbar1[j] - stats.xbar2[j]) / var;
    }
    Ok(FittedLda {
        direction,
        mu_hat_a: (&stats.xbar1 + &stats.xbar2) / 2.0,
        feature_set: (0..p).collect(),
    })
}

/// Per-feature two-sample t statistics with pooled variance. A feature that
/// is constant within both classes gets `t = +-inf` when the class means
/// differ and `t = 0` when they are equal; such features are listed in
/// `zero_variance`.
#[derive(Debug, Clone)]
pub struct TScores {
    pub values: Array1<f64>,
    pub zero_variance: Vec<usize>,
}

pub fn t_scores(data: &LabeledDataset) -> Result<TScores, ClassifierError> {
    if data.n() < 3 {
        return Err(ClassifierError::TooFewSamples(3));
    }
    if data.n1() == 0 || data.n2() == 0 {
        return Err(ClassifierError::DegenerateClass);
    }
    let stats = per_feature_stats(data);
    let p = data.p();
    let n = data.n() as f64;
    let inv = 1.0 / data.n1() as f64 + 1.0 / data.n2() as f64;
    let mut values = Array1::zeros(p);
    let mut zero_variance = Vec::new();
    for j in 0..p {
        let s2 = stats.within_ss[j] / (n - 2.0);
        let diff = stats.xbar1[j] - stats.xbar2[j];
        if s2 <= 0.0 {
            zero_variance.push(j);
            values[j] = if diff == 0.0 {
                0.0
            } else {
                diff.signum() * f64::INFINITY
            };
        } else {
            values[j] = diff / (s2 * inv).sqrt();
        }
    }
    Ok(TScores {
        values,
        zero_variance,
    })
}

pub(crate) struct PerFeatureStats {
    pub xbar1: Array1<f64>,
    pub xbar2: Array1<f64>,
    /// Within-class sum of squares per feature (both classes pooled).
    pub within_ss: Array1<f64>,
}

/// O(n p) class means and within-class sums of squares, avoiding the full
/// p x p covariance.
pub(crate) fn per_feature_stats(data: &LabeledDataset) -> PerFeatureStats {
    let p = data.p();
    let mut xbar1 = Array1::<f64>::zeros(p);
    let mut xbar2 = Array1::<f64>::zeros(p);
    for i in 0..data.n() {
        match data.label(i) {
            ClassLabel::One => xbar1 += &data.row(i),
            ClassLabel::Two => xbar2 += &data.row(i),
        }
    }
    if data.n1() > 0 {
        xbar1 /= data.n1() as f64;
    }
    if data.n2() > 0 {
        xbar2 /= data.n2() as f64;
    }
    let mut within_ss = Array1::<f64>::zeros(p);
    for i in 0..data.n() {
        let mean = match data.label(i) {
            ClassLabel::One => &xbar1,
            ClassLabel::Two => &xbar2,
        };
        let row = data.row(i);
        for j in 0..p {
            let dev = row[j] - mean[j];
            within_ss[j] += dev * dev;
        }
    }
    PerFeatureStats {
        xbar1,
        xbar2,
        within_ss,
    }
}
