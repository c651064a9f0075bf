//! Python bindings for the two-stage sparse LDA library.
//!
//! Exposes the main types (populations, datasets, fitted models) and the
//! operations behind them: the constrained l1 solver, the two-stage fit with
//! and without cross-validation, rate formulas, sampling, and the
//! simulation benchmark. Feature matrices cross the boundary as plain lists
//! of lists; selected features are reported as 1-based original positions,
//! matching the CLI's model files.

use ndarray::{Array1, Array2};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use sparsa::{
    classifiers, l1solver, simbench, tuning, ClassLabel, CvConfig, EvalMode, GaussianPopulation,
    L1Problem, LabeledDataset, Method, ModelId, ModelSpec, RngSeed, SymMatrix, TldaModel,
};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn matrix_from_rows(rows: Vec<Vec<f64>>) -> PyResult<Array2<f64>> {
    if rows.is_empty() {
        return Err(value_err("matrix needs at least one row"));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(value_err("matrix rows have inconsistent lengths"));
    }
    let mut out = Array2::zeros((rows.len(), cols));
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            out[[i, j]] = *v;
        }
    }
    Ok(out)
}

/// A two-class Gaussian population (mu1, mu2, Sigma).
#[pyclass(name = "Population", skip_from_py_object)]
#[derive(Clone)]
struct PyPopulation {
    inner: GaussianPopulation,
}

#[pymethods]
impl PyPopulation {
    #[new]
    fn new(mu1: Vec<f64>, mu2: Vec<f64>, sigma: Vec<Vec<f64>>) -> PyResult<Self> {
        let sigma = SymMatrix::from_lower(matrix_from_rows(sigma)?).map_err(value_err)?;
        let inner = GaussianPopulation::new(Array1::from_vec(mu1), Array1::from_vec(mu2), sigma)
            .map_err(value_err)?;
        Ok(PyPopulation { inner })
    }

    #[getter]
    fn p(&self) -> usize {
        self.inner.dim()
    }

    /// Signal strength `Delta = mu_d' Sigma^{-1} mu_d`, optionally on a
    /// feature subset (0-based indices).
    #[pyo3(signature = (subset=None))]
    fn fisher_delta(&self, subset: Option<Vec<usize>>) -> PyResult<f64> {
        classifiers::fisher_delta(&self.inner, subset.as_deref()).map_err(value_err)
    }

    /// True discriminant direction `2 Sigma^{-1} mu_d`.
    fn beta0(&self) -> PyResult<Vec<f64>> {
        Ok(self.inner.beta0().map_err(runtime_err)?.to_vec())
    }

    /// Classifies a point with the oracle Fisher rule; returns 1 or 2.
    fn classify(&self, x: Vec<f64>) -> PyResult<u8> {
        let x = Array1::from_vec(x);
        Ok(classifiers::oracle_classify(&self.inner, x.view())
            .map_err(value_err)?
            .as_u8())
    }
}

/// A labeled dataset: rows of features plus labels in {1, 2}.
#[pyclass(name = "Dataset", skip_from_py_object)]
#[derive(Clone)]
struct PyDataset {
    inner: LabeledDataset,
}

#[pymethods]
impl PyDataset {
    #[new]
    fn new(features: Vec<Vec<f64>>, labels: Vec<u8>) -> PyResult<Self> {
        let features = matrix_from_rows(features)?;
        let labels = labels
            .into_iter()
            .map(|v| ClassLabel::from_u8(v).ok_or_else(|| value_err("labels must be 1 or 2")))
            .collect::<PyResult<Vec<_>>>()?;
        let inner = LabeledDataset::new(features, labels).map_err(value_err)?;
        Ok(PyDataset { inner })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn p(&self) -> usize {
        self.inner.p()
    }

    #[getter]
    fn n1(&self) -> usize {
        self.inner.n1()
    }

    #[getter]
    fn n2(&self) -> usize {
        self.inner.n2()
    }

    /// Per-feature two-sample t statistics (pooled variance).
    fn t_scores(&self) -> PyResult<Vec<f64>> {
        Ok(classifiers::t_scores(&self.inner)
            .map_err(value_err)?
            .values
            .to_vec())
    }
}

/// A fitted two-stage model.
#[pyclass(name = "TldaModel", skip_from_py_object)]
#[derive(Clone)]
struct PyTldaModel {
    inner: TldaModel,
}

#[pymethods]
impl PyTldaModel {
    /// Selected features as 0-based indices into the fit feature space.
    #[getter]
    fn selected(&self) -> Vec<usize> {
        self.inner.selected.clone()
    }

    #[getter]
    fn beta_star(&self) -> Vec<f64> {
        self.inner.beta_star.to_vec()
    }

    #[getter]
    fn lambda_used(&self) -> f64 {
        self.inner.lambda_used
    }

    #[getter]
    fn p0_used(&self) -> usize {
        self.inner.p0_used
    }

    #[getter]
    fn degenerate_selection(&self) -> bool {
        self.inner.degenerate_selection
    }

    /// Classifies a full-dimensional point; returns 1 or 2.
    fn classify(&self, x: Vec<f64>) -> PyResult<u8> {
        let x = Array1::from_vec(x);
        if x.len() <= *self.inner.selected.last().unwrap_or(&0) {
            return Err(value_err("point has too few features for this model"));
        }
        Ok(classifiers::classify_tlda(&self.inner, x.view()).as_u8())
    }

    /// Exact misclassification rate of this model under a population.
    fn conditional_rate(&self, pop: &PyPopulation) -> PyResult<f64> {
        classifiers::conditional_rate(&self.inner.as_lda(), &pop.inner).map_err(value_err)
    }
}

/// Builds the population of simulation model 1, 2, 3, or 4 at dimension p.
#[pyfunction]
fn build_population(model: u8, p: usize) -> PyResult<PyPopulation> {
    let model = ModelId::from_number(model)
        .ok_or_else(|| value_err(format!("model must be one of 1, 2, 3, 4; got {model}")))?;
    let spec = ModelSpec {
        model,
        p,
        n1: 1,
        n2: 1,
    };
    Ok(PyPopulation {
        inner: simbench::build_population(&spec).map_err(value_err)?,
    })
}

/// Draws a labeled dataset (n1 class-1 rows, then n2 class-2 rows).
#[pyfunction]
fn sample_dataset(pop: &PyPopulation, n1: usize, n2: usize, seed: u64) -> PyResult<PyDataset> {
    Ok(PyDataset {
        inner: simbench::sample_dataset(&pop.inner, n1, n2, RngSeed(seed))
            .map_err(runtime_err)?,
    })
}

/// Solves `min |b|_1 s.t. |S b - d|_inf <= lambda`; returns a dict with
/// beta, objective, infeasibility, duality_gap, iterations, and status.
#[pyfunction]
fn solve_l1(
    py: Python<'_>,
    gram: Vec<Vec<f64>>,
    target: Vec<f64>,
    lambda: f64,
) -> PyResult<Py<pyo3::types::PyDict>> {
    let gram = SymMatrix::from_lower(matrix_from_rows(gram)?).map_err(value_err)?;
    let problem =
        L1Problem::new(gram, Array1::from_vec(target), lambda).map_err(value_err)?;
    let sol = l1solver::solve(&problem).map_err(runtime_err)?;
    let dict = pyo3::types::PyDict::new(py);
    dict.set_item("beta", sol.beta.to_vec())?;
    dict.set_item("objective", sol.objective)?;
    dict.set_item("infeasibility", sol.infeasibility)?;
    dict.set_item("duality_gap", sol.duality_gap)?;
    dict.set_item("iterations", sol.iterations)?;
    dict.set_item("status", format!("{:?}", sol.status))?;
    Ok(dict.into())
}

/// Two-stage fit at fixed (lambda, p0).
#[pyfunction]
fn fit_tlda(data: &PyDataset, lambda: f64, p0: usize) -> PyResult<PyTldaModel> {
    Ok(PyTldaModel {
        inner: classifiers::fit_tlda(&data.inner, lambda, p0).map_err(runtime_err)?,
    })
}

/// Cross-validated two-stage fit with the default grids; returns
/// (model, lambda_hat, lambda_adjusted, p0_hat).
#[pyfunction]
#[pyo3(signature = (data, seed, folds=5))]
fn fit_tlda_cv(
    data: &PyDataset,
    seed: u64,
    folds: usize,
) -> PyResult<(PyTldaModel, f64, f64, usize)> {
    let mut cfg = CvConfig::default_for(data.inner.n(), data.inner.p(), RngSeed(seed));
    cfg.folds = folds;
    let (fit, cv) = tuning::fit_tlda_cv(&data.inner, &cfg).map_err(runtime_err)?;
    Ok((
        PyTldaModel { inner: fit.model },
        cv.lambda_hat,
        cv.lambda_adjusted,
        cv.p0_hat,
    ))
}

/// Theoretical misclassification rate `1 - Phi(sqrt(delta))`.
#[pyfunction]
fn theoretical_rate(delta: f64) -> PyResult<f64> {
    if delta < 0.0 {
        return Err(value_err("delta must be nonnegative"));
    }
    Ok(classifiers::theoretical_rate(delta))
}

/// Runs a replication study and returns the report as a JSON string
/// (same schema the CLI writes).
#[pyfunction]
#[pyo3(signature = (model, p, n1, n2, reps, seed, methods, eval="analytic", holdout_size=10_000))]
#[allow(clippy::too_many_arguments)]
fn run_experiment_json(
    model: u8,
    p: usize,
    n1: usize,
    n2: usize,
    reps: usize,
    seed: u64,
    methods: Vec<String>,
    eval: &str,
    holdout_size: usize,
) -> PyResult<String> {
    let model = ModelId::from_number(model)
        .ok_or_else(|| value_err(format!("model must be one of 1, 2, 3, 4; got {model}")))?;
    let spec = ModelSpec { model, p, n1, n2 };
    let methods = methods
        .iter()
        .map(|m| m.parse::<Method>().map_err(value_err))
        .collect::<PyResult<Vec<_>>>()?;
    let eval = match eval {
        "analytic" => EvalMode::Analytic,
        "holdout" => EvalMode::Holdout(holdout_size),
        other => return Err(value_err(format!("eval must be analytic or holdout, got {other}"))),
    };
    let (report, trace) = simbench::run_experiment(&spec, &methods, reps, RngSeed(seed), eval)
        .map_err(runtime_err)?;
    let combined = serde_json::json!({
        "report": report,
        "trace": trace,
    });
    Ok(combined.to_string())
}

#[pymodule]
fn sparsa_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPopulation>()?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyTldaModel>()?;
    m.add_function(wrap_pyfunction!(build_population, m)?)?;
    m.add_function(wrap_pyfunction!(sample_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(solve_l1, m)?)?;
    m.add_function(wrap_pyfunction!(fit_tlda, m)?)?;
    m.add_function(wrap_pyfunction!(fit_tlda_cv, m)?)?;
    m.add_function(wrap_pyfunction!(theoretical_rate, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment_json, m)?)?;
    Ok(())
}
