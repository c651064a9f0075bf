//! Two-stage sparse linear discriminant analysis (TLDA).
//!
//! The pipeline: estimate the pooled covariance `S_n` and class-mean
//! difference `d`, solve the constrained l1 program
//! `min |b|_1  s.t.  |S_n b - d|_inf <= lambda` as a linear program, keep
//! the `p0` coordinates with the largest `|b_j|`, and run classic LDA on
//! that subset. `lambda` and `p0` come from stratified cross-validation with
//! the sqrt((k-1)/k) sample-size adjustment.
//!
//! Modules:
//! - [`linalg`]: dense symmetric factorizations, SPD solves, seeded
//!   multivariate-normal sampling.
//! - [`l1solver`]: the constrained l1 minimization solved by a primal-dual
//!   interior-point method with optimality certificates.
//! - [`classifiers`]: oracle Fisher rule, plug-in LDA, naive Bayes, t-score
//!   statistics, and the two-stage TLDA fit.
//! - [`tuning`]: stratified k-fold cross-validation over (lambda, p0) and
//!   leave-one-out evaluation.
//! - [`simbench`]: the four simulation models, replication experiments, and
//!   report/trace emission.
//! - [`pipeline`]: the real-data path (standardize, screen, tune, fit) with
//!   a persistable fitted model.
//! - [`cli`]: the `sparsa` command-line front end.

pub mod classifiers;
pub mod cli;
pub mod l1solver;
pub mod linalg;
pub mod pipeline;
pub mod simbench;
pub mod tuning;

pub use classifiers::{
    classify_lda, classify_tlda, conditional_rate, fisher_delta, fit_lda, fit_naive_bayes,
    fit_tlda, fit_tlda_detailed, moments, oracle_classify, t_scores, theoretical_rate, ClassLabel,
    ClassifierError, FittedLda, GaussianPopulation, LabeledDataset, SampleMoments, TldaFit,
    TldaModel,
};
pub use l1solver::{
    check_kkt, solve, solve_path, solve_with, L1Problem, L1Solution, SolveStatus, SolverError,
    SolverOptions,
};
pub use linalg::{
    cholesky, quad_form, sample_mvn, spd_solve, spd_solve_or_ridge, LinalgError, NormalStream,
    RngSeed, SymMatrix,
};
pub use simbench::{
    build_population, run_experiment, sample_dataset, screen_by_t, spike_beta0, spike_support,
    standardize_expression, EvalMode, ExperimentReport, FeatureTrace, Method, ModelId, ModelSpec,
    ScalingRecord, ScreenRule, SimbenchError, StandardizeOrder,
};
pub use tuning::{
    cross_validate, fit_tlda_cv, loocv_evaluate, stratified_folds, CvConfig, CvResult, LambdaGrid,
    LoocvReport, Recipe, RecipeOutcome, TuningError,
};
