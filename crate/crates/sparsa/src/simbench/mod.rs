//! Simulation models, replication experiments, and report assembly.
//!
//! Four populations are built in: AR(0.8) and equicorrelation(0.5)
//! covariances with a five-spike discriminant direction, the AR model with a
//! dense leading-block mean, and the equicorrelation model with an
//! approximately sparse direction. Experiments draw training data per
//! replication, tune and fit each requested method, and score it either in
//! closed form (the conditional rate, the default) or on fresh held-out
//! draws.

mod standardize;

pub use standardize::{
    screen_by_t, standardize_expression, ScalingRecord, ScreenRule, StandardizeOrder,
};

use crate::classifiers::{
    self, classify_lda, conditional_rate, fisher_delta, fit_lda_on_moments, fit_naive_bayes,
    moments, rank_by_magnitude, t_scores, theoretical_rate, ClassLabel, ClassifierError,
    FittedLda, GaussianPopulation, LabeledDataset,
};
use crate::linalg::{sample_mvn, RngSeed, SymMatrix};
use crate::tuning::{fit_tlda_cv, mean_sd, stratified_folds, CvConfig, TuningError};
use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimbenchError {
    #[error("invalid model specification: {0}")]
    InvalidSpec(String),
    #[error("invalid run request: {0}")]
    InvalidRun(String),
    #[error("method {method} failed in {failures} of {reps} replications")]
    TooManyFailures {
        method: String,
        failures: usize,
        reps: usize,
    },
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Tuning(#[from] TuningError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum ModelId {
    M1,
    M2,
    M3,
    M4,
}

impl ModelId {
    pub fn from_number(v: u8) -> Option<ModelId> {
        match v {
            1 => Some(ModelId::M1),
            2 => Some(ModelId::M2),
            3 => Some(ModelId::M3),
            4 => Some(ModelId::M4),
            _ => None,
        }
    }

    pub fn number(self) -> u8 {
        match self {
            ModelId::M1 => 1,
            ModelId::M2 => 2,
            ModelId::M3 => 3,
            ModelId::M4 => 4,
        }
    }
}

impl From<ModelId> for u8 {
    fn from(m: ModelId) -> u8 {
        m.number()
    }
}

impl TryFrom<u8> for ModelId {
    type Error = String;
    fn try_from(v: u8) -> Result<ModelId, String> {
        ModelId::from_number(v).ok_or_else(|| format!("model mut be one of 1, 2, 3, 4; got {v}"))
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ModelSpec {
    pub model: ModelId,
    pub p: usize,
    pub n1: usize,
    pub n2: usize,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<(), SimbenchError> {
        match self.model {
            ModelId::M1 | ModelId::M2 => {
                if self.p < 10 || self.p % 10 != 0 {
                    return Err(SimbenchError::InvalidSpec(format!(
                        "models 1 and 2 need p >= 10 and divisible by 10 (spike positions), got p = {}",
                        self.p
                    )));
                }
            }
            ModelId::M3 => {
                if self.p < 5 {
                    return Err(SimbenchError::InvalidSpec(
                        "model 3 needs p >= 5".into(),
                    ));
                }
            }
            ModelId::M4 => {
                if self.p < 6 {
                    return Err(SimbenchError::InvalidSpec(
                        "model 4 needs p >= 6 (nonempty tail)".into(),
                    ));
                }
            }
        }
        if self.n1 < 1 || self.n2 < 1 {
            return Err(SimbenchError::InvalidSpec(
                "class sizes must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// The five-spike direction: value `(-1)^(k+1) (k+1)/4` at 1-based position
/// `(2k-1) p / 10` for k = 1..5 (10, 30, 50, 70, 90 when p = 100).
pub fn spike_beta0(p: usize) -> Array1<f64> {
    let mut b = Array1::zeros(p);
    for k in 1..=5usize {
        let pos = (2 * k - 1) * p / 10;
        b[pos - 1] = if k % 2 == 1 { 1.0 } else { -1.0 } * (k as f64 + 1.0) / 4.0;
    }
    b
}

/// Zero-based spike positions for models 1 and 2.
pub fn spike_support(p: usize) -> Vec<usize> {
    (1..=5usize).map(|k| (2 * k - 1) * p / 10 - 1).collect()
}

fn ar_sigma(p: usize, rho: f64) -> SymMatrix {
    SymMatrix::from_fn(p, |i, j| rho.powi((i as i32 - j as i32).abs()))
}

fn equicorr_sigma(p: usize, rho: f64) -> SymMatrix {
    SymMatrix::from_fn(p, |i, j| if i == j { 1.0 } else { rho })
}

/// Builds the population behind a model specification; `mu2 = 0` throughout
/// and `mu1 = Sigma beta0` wherever the model is defined through its
/// discriminant direction.
pub fn build_population(spec: &ModelSpec) -> Result<GaussianPopulation, SimbenchError> {
    spec.validate()?;
    let p = spec.p;
    let (sigma, mu1) = match spec.model {
        ModelId::M1 => {
            let sigma = ar_sigma(p, 0.8);
            let mu1 = sigma.apply(spike_beta0(p).view());
            (sigma, mu1)
        }
        ModelId::M2 => {
            let sigma = equicorr_sigma(p, 0.5);
            let mu1 = sigma.apply(spike_beta0(p).view());
            (sigma, mu1)
        }
        ModelId::M3 => {
            let sigma = ar_sigma(p, 0.8);
            let mut mu1 = Array1::zeros(p);
            for j in 0..5 {
                mu1[j] = 1.0;
            }
            (sigma, mu1)
        }
        ModelId::M4 => {
            let sigma = equicorr_sigma(p, 0.5);
            let head = [3.0, 1.7, -2.2, -2.1, 2.55];
            let tail = 1.0 / (p - 5) as f64;
            let mut beta0 = Array1::from_elem(p, 0.551 * tail);
            for (j, h) in head.iter().enumerate() {
                beta0[j] = 0.551 * h;
            }
            let mu1 = sigma.apply(beta0.view());
            (sigma, mu1)
        }
    };
    Ok(GaussianPopulation::new(mu1, Array1::zeros(p), sigma)?)
}

/// Draws a labeled training set: `n1` rows of class 1 (stream 1 of the
/// seed), then `n2` rows of class 2 (stream 2).
pub fn sample_dataset(
    pop: &GaussianPopulation,
    n1: usize,
    n2: usize,
    seed: RngSeed,
) -> Result<LabeledDataset, SimbenchError> {
    let x1 = sample_mvn(pop.mu1().view(), pop.sigma(), n1, seed.stream(1))
        .map_err(ClassifierError::from)?;
    let x2 = sample_mvn(pop.mu2().view(), pop.sigma(), n2, seed.stream(2))
        .map_err(ClassifierError::from)?;
    let p = pop.dim();
    let mut features = Array2::zeros((n1 + n2, p));
    for i in 0..n1 {
        features.row_mut(i).assign(&x1.row(i));
    }
    for i in 0..n2 {
        features.row_mut(n1 + i).assign(&x2.row(i));
    }
    let labels: Vec<ClassLabel> = std::iter::repeat_n(ClassLabel::One, n1)
        .chain(std::iter::repeat_n(ClassLabel::Two, n2))
        .collect();
    Ok(LabeledDataset::new(features, labels)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Tlda,
    Nb,
    LdaFull,
    Oracle,
    TscoreRule,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Tlda => "tlda",
            Method::Nb => "nb",
            Method::LdaFull => "lda_full",
            Method::Oracle => "oracle",
            Method::TscoreRule => "tscore_rule",
        }
    }

    pub const ALL: [Method; 5] = [
        Method::Tlda,
        Method::Nb,
        Method::LdaFull,
        Method::Oracle,
        Method::TscoreRule,
    ];
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Method, String> {
        match s.trim() {
            "tlda" => Ok(Method::Tlda),
            "nb" => Ok(Method::Nb),
            "lda_full" => Ok(Method::LdaFull),
            "oracle" => Ok(Method::Oracle),
            "tscore_rule" => Ok(Method::TscoreRule),
            other => Err(format!(
                "unknown method '{other}'; valid: tlda, nb, lda_full, oracle, tscore_rule"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "test_points")]
pub enum EvalMode {
    /// Closed-form conditional misclassification rate; no test-set noise.
    Analytic,
    /// Empirical error on this many fresh draws per replication.
    Holdout(usize),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub mean_error_pct: f64,
    pub sd_error_pct: f64,
    pub mean_selected: f64,
    pub sd_selected: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub model: ModelId,
    pub p: usize,
    pub n1: usize,
    pub n2: usize,
    pub replications: usize,
    pub base_seed: u64,
    pub seeds: Vec<u64>,
    pub eval: EvalMode,
    pub methods: Vec<MethodSummary>,
    /// Wall-clock seconds; excluded from serialized reports so identical
    /// seeds give byte-identical files (it goes to the run metadata).
    #[serde(skip)]
    pub runtime_seconds: f64,
}

/// Per-feature averages across replications: the TLDA l1 estimate (its
/// selection signal) and the raw mean difference (the t-screening signal).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureTrace {
    pub tlda_signal: Vec<f64>,
    pub t_signal: Vec<f64>,
    pub tlda_reps: usize,
    pub reps: usize,
}

struct RepOutcome {
    per_method: Vec<Result<(f64, usize), String>>,
    beta_hat: Option<Array1<f64>>,
    mean_diff: Array1<f64>,
}

/// Scores a fitted linear rule: exactly (conditional rate) or on fresh
/// draws (streams 5 and 6 of the given seed).
fn evaluate_rule(
    rule: &FittedLda,
    pop: &GaussianPopulation,
    eval: EvalMode,
    seed: RngSeed,
) -> Result<f64, String> {
    match eval {
        EvalMode::Analytic => conditional_rate(rule, pop).map_err(|e| e.to_string()),
        EvalMode::Holdout(m) => {
            let m1 = m.div_ceil(2);
            let m2 = m - m1;
            let x1 = sample_mvn(pop.mu1().view(), pop.sigma(), m1, seed.stream(5))
                .map_err(|e| e.to_string())?;
            let x2 = sample_mvn(pop.mu2().view(), pop.sigma(), m2, seed.stream(6))
                .map_err(|e| e.to_string())?;
            let mut wrong = 0usize;
            for i in 0..m1 {
                if classify_lda(rule, x1.row(i)) != ClassLabel::One {
                    wrong += 1;
                }
            }
            for i in 0..m2 {
                if classify_lda(rule, x2.row(i)) != ClassLabel::Two {
                    wrong += 1;
                }
            }
            Ok(wrong as f64 / m as f64)
        }
    }
}

/// CV over p0 alone for the t-score baseline: rank features by |t| on each
/// fold training set, fit restricted LDA on the top-p0 prefix, pick the p0
/// with the fewest held-out errors (ties to the smaller p0).
fn fit_tscore_rule(
    data: &LabeledDataset,
    p0_grid: &[usize],
    folds: usize,
    seed: RngSeed,
) -> Result<(FittedLda, usize), String> {
    let folds_assign = stratified_folds(data, folds, seed).map_err(|e| e.to_string())?;
    let mut counts = vec![0usize; p0_grid.len()];
    let mut ok = vec![true; p0_grid.len()];
    for fold in 0..folds {
        let train_rows: Vec<usize> = (0..data.n()).filter(|&i| folds_assign[i] != fold).collect();
        let test_rows: Vec<usize> = (0..data.n()).filter(|&i| folds_assign[i] == fold).collect();
        let train = data.subset_rows(&train_rows);
        let mom = moments(&train).map_err(|e| e.to_string())?;
        let t = t_scores(&train).map_err(|e| e.to_string())?;
        let order = rank_by_magnitude(t.values.view());
        for (pi, &p0) in p0_grid.iter().enumerate() {
            if !ok[pi] {
                continue;
            }
            let mut sel: Vec<usize> = order[..p0].to_vec();
            sel.sort_unstable();
            match fit_lda_on_moments(&mom, Some(&sel), true) {
                Ok(rule) => {
                    counts[pi] += test_rows
                        .iter()
                        .filter(|&&i| classify_lda(&rule, data.row(i)) != data.label(i))
                        .count();
                }
                Err(_) => ok[pi] = false,
            }
        }
    }
    let best = p0_grid
        .iter()
        .enumerate()
        .filter(|(pi, _)| ok[*pi])
        .min_by_key(|(pi, &p0)| (counts[*pi], p0))
        .map(|(_, &p0)| p0)
        .ok_or_else(|| "every p0 failed".to_string())?;
    let mom = moments(data).map_err(|e| e.to_string())?;
    let t = t_scores(data).map_err(|e| e.to_string())?;
    let order = rank_by_magnitude(t.values.view());
    let mut sel: Vec<usize> = order[..best].to_vec();
    sel.sort_unstable();
    let rule = fit_lda_on_moments(&mom, Some(&sel), true).map_err(|e| e.to_string())?;
    Ok((rule, best))
}

/// Runs `reps` independent replications of the requested methods on the
/// model. Replication i uses seed `base + i`; the result is a pure function
/// of the arguments. A method failing in more than 5% of replications fails
/// the whole run.
pub fn run_experiment(
    spec: &ModelSpec,
    methods: &[Method],
    reps: usize,
    seed: RngSeed,
    eval: EvalMode,
) -> Result<(ExperimentReport, FeatureTrace), SimbenchError> {
    let started = Instant::now();
    spec.validate()?;
    if reps < 1 {
        return Err(SimbenchError::InvalidRun("reps must be >= 1".into()));
    }
    if methods.is_empty() {
        return Err(SimbenchError::InvalidRun("no methods requested".into()));
    }
    if let EvalMode::Holdout(m) = eval {
        if m < 2 {
            return Err(SimbenchError::InvalidRun(
                "holdout needs at least 2 test points".into(),
            ));
        }
    }
    let pop = build_population(spec)?;
    let delta_p = fisher_delta(&pop, None)?;
    let oracle_rule = FittedLda {
        direction: pop.fisher_direction()?,
        mu_hat_a: pop.mu_a(),
        feature_set: (0..spec.p).collect(),
    };
    let oracle_rate = theoretical_rate(delta_p);

    let outcomes: Vec<Result<RepOutcome, SimbenchError>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let rs = seed.offset(r as u64);
            let data = sample_dataset(&pop, spec.n1, spec.n2, rs)?;
            let stats = classifiers::per_feature_stats(&data);
            let mean_diff = &stats.xbar1 - &stats.xbar2;
            let mut beta_hat = None;
            let mut per_method = Vec::with_capacity(methods.len());
            for method in methods {
                let res: Result<(f64, usize), String> = match method {
                    Method::Oracle => match eval {
                        EvalMode::Analytic => Ok((oracle_rate, spec.p)),
                        EvalMode::Holdout(_) => evaluate_rule(&oracle_rule, &pop, eval, rs)
                            .map(|e| (e, spec.p)),
                    },
                    Method::Nb => fit_naive_bayes(&data)
                        .map_err(|e| e.to_string())
                        .and_then(|rule| evaluate_rule(&rule, &pop, eval, rs))
                        .map(|e| (e, spec.p)),
                    Method::LdaFull => moments(&data)
                        .and_then(|mom| fit_lda_on_moments(&mom, None, false))
                        .map_err(|e| e.to_string())
                        .and_then(|rule| evaluate_rule(&rule, &pop, eval, rs))
                        .map(|e| (e, spec.p)),
                    Method::Tlda => {
                        let cfg = CvConfig::default_for(data.n(), data.p(), rs.stream(3));
                        match fit_tlda_cv(&data, &cfg) {
                            Ok((fit, cv)) => {
                                let err = evaluate_rule(&fit.model.as_lda(), &pop, eval, rs);
                                beta_hat = Some(fit.beta_hat.clone());
                                err.map(|e| (e, cv.p0_hat))
                            }
                            Err(e) => Err(e.to_string()),
                        }
                    }
                    Method::TscoreRule => {
                        let grid = crate::tuning::default_p0_grid(data.n(), data.p());
                        fit_tscore_rule(&data, &grid, 5, rs.stream(4))
                            .and_then(|(rule, p0)| {
                                evaluate_rule(&rule, &pop, eval, rs).map(|e| (e, p0))
                            })
                    }
                };
                per_method.push(res);
            }
            Ok(RepOutcome {
                per_method,
                beta_hat,
                mean_diff,
            })
        })
        .collect();

    let mut rep_outcomes = Vec::with_capacity(reps);
    for o in outcomes {
        rep_outcomes.push(o?);
    }

    // Aggregate in replication order so reductions are deterministic.
    let mut summaries = Vec::with_capacity(methods.len());
    for (mi, method) in methods.iter().enumerate() {
        let mut errors = Vec::new();
        let mut selected = Vec::new();
        let mut failures = 0usize;
        for rep in &rep_outcomes {
            match &rep.per_method[mi] {
                Ok((e, s)) => {
                    errors.push(*e * 100.0);
                    selected.push(*s as f64);
                }
                Err(_) => failures += 1,
            }
        }
        if failures * 20 > reps {
            return Err(SimbenchError::TooManyFailures {
                method: method.name().to_string(),
                failures,
                reps,
            });
        }
        let (mean_error_pct, sd_error_pct) = mean_sd(&errors);
        let (mean_selected, sd_selected) = mean_sd(&selected);
        summaries.push(MethodSummary {
            method: *method,
            mean_error_pct,
            sd_error_pct,
            mean_selected,
            sd_selected,
            failures,
        });
    }

    let p = spec.p;
    let mut tlda_signal = vec![0.0f64; p];
    let mut t_signal = vec![0.0f64; p];
    let mut tlda_reps = 0usize;
    for rep in &rep_outcomes {
        for j in 0..p {
            t_signal[j] += rep.mean_diff[j];
        }
        if let Some(beta) = &rep.beta_hat {
            tlda_reps += 1;
            for j in 0..p {
                tlda_signal[j] += beta[j];
            }
        }
    }
    for j in 0..p {
        t_signal[j] /= reps as f64;
        if tlda_reps > 0 {
            tlda_signal[j] /= tlda_reps as f64;
        }
    }

    let report = ExperimentReport {
        model: spec.model,
        p: spec.p,
        n1: spec.n1,
        n2: spec.n2,
        replications: reps,
        base_seed: seed.0,
        seeds: (0..reps).map(|r| seed.offset(r as u64).0).collect(),
        eval,
        methods: summaries,
        runtime_seconds: started.elapsed().as_secs_f64(),
    };
    let trace = FeatureTrace {
        tlda_signal,
        t_signal,
        tlda_reps,
        reps,
    };
    Ok((report, trace))
}

/// Plain-text table with the paper's two-decimal percent formatting.
pub fn render_table(report: &ExperimentReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "Model {} (p = {}, n1 = {}, n2 = {}), {} replications, seed {}\n",
        report.model.number(),
        report.p,
        report.n1,
        report.n2,
        report.replications,
        report.base_seed
    ));
    out.push_str(&format!(
        "{:<12} {:>9} {:>8} {:>10} {:>9} {:>9}\n",
        "method", "error%", "sd", "features", "sd", "failures"
    ));
    for m in &report.methods {
        out.push_str(&format!(
            "{:<12} {:>9.2} {:>8.2} {:>10.2} {:>9.2} {:>9}\n",
            m.method.name(),
            m.mean_error_pct,
            m.sd_error_pct,
            m.mean_selected,
            m.sd_selected,
            m.failures
        ));
    }
    out
}

/// Trace CSV with 1-based feature positions, consumable by any plotter.
pub fn trace_to_csv(trace: &FeatureTrace) -> String {
    let mut out = String::from("index,tlda_signal,t_signal\n");
    for j in 0..trace.t_signal.len() {
        out.push_str(&format!(
            "{},{},{}\n",
            j + 1,
            trace.tlda_signal[j],
            trace.t_signal[j]
        ));
    }
    out
}
