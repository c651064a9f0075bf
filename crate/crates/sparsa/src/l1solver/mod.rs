//! Constrained l1 minimization solved as a linear program.
//!
//! The problem is `min |beta|_1  subject to  |S beta - d|_inf <= lambda` with
//! `S` symmetric positive semidefinite. It is solved as the standard-form LP
//! obtained from the split `beta = beta+ - beta-` (2p nonnegative variables,
//! 2p inequality rows) by a Mehrotra predictor-corrector primal-dual
//! interior-point method; the dominant per-iteration cost is one SPD solve
//! of size p. A vertex polish step sharpens converged iterates to machine
//! precision when the optimal active set is clean.

mod ipm;

use crate::linalg::{factor_lower, solve_with_factor, LinalgError, SymMatrix};
use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("lambda must be nonnegative, got {0}")]
    NegativeLambda(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("lambda path must be strictly descending and nonnegative")]
    InvalidPath,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    /// Certified: infeasibility <= 1e-8 (1 + |d|_inf) and duality gap
    /// <= 1e-6 (1 + objective) at the returned point.
    Optimal,
    /// Iteration cap hit; the best iterate found is returned as is.
    IterationLimit,
    /// The dual diverged: no beta satisfies the constraint. Only reachable
    /// when the Gram matrix is singular and lambda is too small.
    Infeasible,
}

/// Termination tolerances for [`solve_with`]. Defaults: relative duality gap
/// 1e-6, relative infeasibility 1e-8, 200 iterations, polish on.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_iter: usize,
    pub polish: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            gap_tol: 1e-6,
            feas_tol: 1e-8,
            max_iter: 200,
            polish: true,
        }
    }
}

/// Problem data: Gram matrix `S` (p x p), target `d` (p), and `lambda >= 0`.
///
/// When the Gram matrix came from data as `S = V' V` (pooled covariance with
/// `V` the within-class-centered rows over sqrt(n)), attach `V` via
/// [`L1Problem::with_factor`]; for n well below p the solver then works in
/// the n-dimensional range space instead of forming p x p normal equations.
#[derive(Debug, Clone)]
pub struct L1Problem {
    gram: SymMatrix,
    target: Array1<f64>,
    lambda: f64,
    factor: Option<Array2<f64>>,
}

impl L1Problem {
    pub fn new(gram: SymMatrix, target: Array1<f64>, lambda: f64) -> Result<Self, SolverError> {
        if gram.dim() != target.len() {
            return Err(SolverError::DimensionMismatch(format!(
                "gram is {}x{} but target has length {}",
                gram.dim(),
                gram.dim(),
                target.len()
            )));
        }
        if !(lambda >= 0.0) {
            return Err(SolverError::NegativeLambda(lambda));
        }
        Ok(L1Problem {
            gram,
            target,
            lambda,
            factor: None,
        })
    }

    /// As [`L1Problem::new`], with a factor `V` such that `gram = V' V`.
    pub fn with_factor(
        gram: SymMatrix,
        target: Array1<f64>,
        lambda: f64,
        factor: Array2<f64>,
    ) -> Result<Self, SolverError> {
        if factor.ncols() != gram.dim() {
            return Err(SolverError::DimensionMismatch(format!(
                "factor has {} columns but gram is {}x{}",
                factor.ncols(),
                gram.dim(),
                gram.dim()
            )));
        }
        let mut problem = L1Problem::new(gram, target, lambda)?;
        problem.factor = Some(factor);
        Ok(problem)
    }

    pub fn dim(&self) -> usize {
        self.gram.dim()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gram(&self) -> &SymMatrix {
        &self.gram
    }

    pub fn target(&self) -> &Array1<f64> {
        &self.target
    }

    pub(crate) fn factor(&self) -> Option<&Array2<f64>> {
        self.factor.as_ref()
    }

    pub(crate) fn with_lambda(&self, lambda: f64) -> L1Problem {
        L1Problem {
            lambda,
            ..self.clone()
        }
    }

    /// `S v`, through the factor when one is attached.
    pub(crate) fn apply_gram(&self, v: ArrayView1<f64>) -> Array1<f64> {
        match &self.factor {
            Some(f) if f.nrows() < f.ncols() => f.t().dot(&f.dot(&v)),
            _ => self.gram.apply(v),
        }
    }

    pub(crate) fn target_inf(&self) -> f64 {
        self.target.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Solver output. `status == Optimal` certifies the solution invariants
/// documented on [`SolveStatus::Optimal`]; other statuses return the best
/// iterate with honest diagnostics.
#[derive(Debug, Clone)]
pub struct L1Solution {
    pub beta: Array1<f64>,
    /// `|beta|_1`.
    pub objective: f64,
    /// `max(0, |S beta - d|_inf - lambda)`.
    pub infeasibility: f64,
    /// Certified gap against the feasibility-scaled dual point.
    pub duality_gap: f64,
    pub iterations: usize,
    pub status: SolveStatus,
    /// Dual certificate `nu` with `|S nu|_inf <= 1` after scaling; the dual
    /// objective is `-d' nu - lambda |nu|_1`.
    pub dual: Array1<f64>,
}

/// Solves with the default [`SolverOptions`].
pub fn solve(problem: &L1Problem) -> Result<L1Solution, SolverError> {
    solve_with(problem, &SolverOptions::default())
}

pub fn solve_with(problem: &L1Problem, opts: &SolverOptions) -> Result<L1Solution, SolverError> {
    Ok(ipm::solve_one(problem, opts, None).0)
}

/// Solves along a strictly descending, nonnegative lambda path, warm-starting
/// each solve from the previous interior iterate. Warm starts change
/// iteration counts, never the certified optimality of each element.
pub fn solve_path(
    gram: SymMatrix,
    target: Array1<f64>,
    lambdas: &[f64],
) -> Result<Vec<L1Solution>, SolverError> {
    let base = L1Problem::new(gram, target, 0.0)?;
    solve_path_with(&base, lambdas, &SolverOptions::default())
}

/// Path solve on an existing problem (its own lambda is ignored).
pub fn solve_path_with(
    base: &L1Problem,
    lambdas: &[f64],
    opts: &SolverOptions,
) -> Result<Vec<L1Solution>, SolverError> {
    if lambdas.is_empty() {
        return Ok(Vec::new());
    }
    if lambdas.iter().any(|l| !(*l >= 0.0)) || lambdas.windows(2).any(|w| w[0] <= w[1]) {
        return Err(SolverError::InvalidPath);
    }
    let mut out = Vec::with_capacity(lambdas.len());
    let mut warm = None;
    for &lambda in lambdas {
        let problem = base.with_lambda(lambda);
        let (sol, next_warm) = ipm::solve_one(&problem, opts, warm.as_ref());
        warm = next_warm;
        out.push(sol);
    }
    Ok(out)
}

/// Optimality diagnostics for a candidate `beta`. All three residuals are at
/// tolerance exactly when `beta` is optimal within tolerance.
#[derive(Debug, Clone, Copy)]
pub struct KktDiagnostics {
    /// `max(0, |S beta - d|_inf - lambda)`.
    pub primal_infeasibility: f64,
    /// Multiplier sign violations on singly-active constraints.
    pub complementarity_residual: f64,
    /// Subgradient mismatch: `|(S nu)_j + sign(beta_j)|` on the support and
    /// the excess of `|S nu|_inf` over 1 elsewhere.
    pub stationarity_residual: f64,
}

impl KktDiagnostics {
    pub fn max(&self) -> f64 {
        self.primal_infeasibility
            .max(self.complementarity_residual)
            .max(self.stationarity_residual)
    }
}

/// Active sets of the constraint band at `beta` and least-squares dual
/// multipliers supported on them: minimize `|Q nu_A + g|_2` with
/// `Q = S[supp, active]` and `g_j = sign(beta_j)`. This is how a dual
/// certificate is reconstructed from a primal point alone.
pub(crate) fn reconstruct_dual(
    problem: &L1Problem,
    beta: ArrayView1<f64>,
) -> (Array1<f64>, Vec<usize>, Vec<usize>) {
    let p = problem.dim();
    let lambda = problem.lambda();
    let d = problem.target();
    let s = problem.gram();
    let r = &s.apply(beta) - d;

    let act_tol = 1e-6 * (1.0 + lambda);
    let upper: Vec<usize> = (0..p).filter(|&i| lambda - r[i] <= act_tol).collect();
    let lower: Vec<usize> = (0..p).filter(|&i| lambda + r[i] <= act_tol).collect();
    let mut active: Vec<usize> = upper.iter().chain(lower.iter()).copied().collect();
    active.sort_unstable();
    active.dedup();

    let bsup = beta.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let supp: Vec<usize> = (0..p)
        .filter(|&j| beta[j].abs() > 1e-8 * bsup.max(1e-300))
        .collect();

    let mut nu = Array1::zeros(p);
    if !active.is_empty() && !supp.is_empty() {
        let g: Array1<f64> = supp.iter().map(|&j| beta[j].signum()).collect();
        let q = {
            let mut q = Array2::zeros((supp.len(), active.len()));
            for (a, &j) in supp.iter().enumerate() {
                for (b, &i) in active.iter().enumerate() {
                    q[[a, b]] = s.get(j, i);
                }
            }
            q
        };
        let mut qtq: Array2<f64> = q.t().dot(&q);
        let ridge = 1e-12 * (1.0 + qtq.diag().iter().fold(0.0f64, |m, v| m.max(*v)));
        for i in 0..active.len() {
            qtq[[i, i]] += ridge;
        }
        let rhs = -q.t().dot(&g);
        if let Ok(l) = factor_lower(qtq.view()) {
            let nu_a = solve_with_factor(&l, rhs.view());
            for (b, &i) in active.iter().enumerate() {
                nu[i] = nu_a[b];
            }
        }
    }
    (nu, upper, lower)
}

/// Certifies optimality of `beta` by reconstructing candidate dual
/// multipliers on the active constraints via least squares and measuring the
/// KKT residuals they leave behind.
pub fn check_kkt(problem: &L1Problem, beta: ArrayView1<f64>) -> KktDiagnostics {
    let p = problem.dim();
    assert_eq!(beta.len(), p, "beta dimension mismatch");
    let lambda = problem.lambda();
    let d = problem.target();
    let s = problem.gram();

    let r = &s.apply(beta) - d;
    let rinf = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let primal_infeasibility = (rinf - lambda).max(0.0);

    let bsup = beta.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let supp: Vec<usize> = (0..p)
        .filter(|&j| beta[j].abs() > 1e-8 * bsup.max(1e-300))
        .collect();
    if supp.is_empty() {
        // beta = 0 is optimal iff it is feasible; nu = 0 certifies it.
        return KktDiagnostics {
            primal_infeasibility,
            complementarity_residual: 0.0,
            stationarity_residual: 0.0,
        };
    }

    let (nu, upper, lower) = reconstruct_dual(problem, beta);
    let g: Array1<f64> = supp.iter().map(|&j| beta[j].signum()).collect();
    let snu = s.apply(nu.view());
    let mut stationarity = 0.0f64;
    for (a, &j) in supp.iter().enumerate() {
        stationarity = stationarity.max((snu[j] + g[a]).abs());
    }
    for j in 0..p {
        stationarity = stationarity.max(snu[j].abs() - 1.0);
    }

    // Sign conditions only bind where exactly one side of the band is active.
    let mut complementarity = 0.0f64;
    for &i in &upper {
        if !lower.contains(&i) {
            complementarity = complementarity.max(-nu[i]);
        }
    }
    for &i in &lower {
        if !upper.contains(&i) {
            complementarity = complementarity.max(nu[i]);
        }
    }
    complementarity = complementarity.max(0.0);

    KktDiagnostics {
        primal_infeasibility,
        complementarity_residual: complementarity,
        stationarity_residual: stationarity.max(0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{NormalStream, RngSeed};
    use ndarray::array;

    fn random_problem(p: usize, seed: u64, lambda_frac: f64) -> L1Problem {
        let mut stream = NormalStream::new(RngSeed(seed));
        let mut a = Array2::zeros((p, p));
        for v in a.iter_mut() {
            *v = stream.next_normal();
        }
        let mut gram: Array2<f64> = a.t().dot(&a) / p as f64;
        for i in 0..p {
            gram[[i, i]] += 0.4;
        }
        let gram = SymMatrix::from_lower(gram).unwrap();
        let mut d = Array1::zeros(p);
        for v in d.iter_mut() {
            *v = stream.next_normal();
        }
        let dinf = d.iter().fold(0.0f64, |m, v: &f64| m.max(v.abs()));
        L1Problem::new(gram, d, lambda_frac * dinf).unwrap()
    }

    #[test]
    fn rejects_negative_lambda() {
        let err = L1Problem::new(SymMatrix::identity(2), array![1.0, 2.0], -0.1).unwrap_err();
        assert!(matches!(err, SolverError::NegativeLambda(_)));
    }

    #[test]
    fn zero_is_returned_when_lambda_dominates() {
        let problem = L1Problem::new(SymMatrix::identity(3), array![3.0, -1.0, 0.2], 3.5).unwrap();
        let sol = solve(&problem).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_eq!(sol.objective, 0.0);
        assert!(sol.beta.iter().all(|v| *v == 0.0));
        assert_eq!(sol.iterations, 0);
    }

    #[test]
    fn lambda_zero_with_invertible_gram_is_the_linear_solve() {
        let problem = random_problem(5, 42, 0.0);
        let sol = solve(&problem).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        let x = crate::linalg::spd_solve(problem.gram(), problem.target().view()).unwrap();
        for j in 0..5 {
            assert!((sol.beta[j] - x[j]).abs() < 1e-6, "{:?} vs {:?}", sol.beta, x);
        }
    }

    #[test]
    fn objective_is_monotone_in_lambda() {
        let base = random_problem(6, 7, 0.5);
        let dinf = base.target_inf();
        let hi = solve(&base.with_lambda(0.6 * dinf)).unwrap();
        let lo = solve(&base.with_lambda(0.2 * dinf)).unwrap();
        assert!(hi.objective <= lo.objective + 1e-8);
    }

    #[test]
    fn scaling_equivariance() {
        // Solving (S, c d, c lambda) yields c beta.
        let base = random_problem(5, 11, 0.3);
        let c = 3.7;
        let scaled = L1Problem::new(
            base.gram().clone(),
            base.target() * c,
            base.lambda() * c,
        )
        .unwrap();
        let sol = solve(&base).unwrap();
        let sol_scaled = solve(&scaled).unwrap();
        for j in 0..5 {
            assert!(
                (sol_scaled.beta[j] - c * sol.beta[j]).abs() < 1e-6 * (1.0 + c * sol.objective),
                "{:?} vs {:?}",
                sol_scaled.beta,
                sol.beta
            );
        }
    }

    #[test]
    fn solve_is_deterministic() {
        let problem = random_problem(6, 13, 0.25);
        let a = solve(&problem).unwrap();
        let b = solve(&problem).unwrap();
        assert_eq!(a.beta, b.beta);
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn path_elements_match_cold_starts() {
        let base = random_problem(6, 17, 1.0);
        let dinf = base.target_inf();
        let lambdas: Vec<f64> = (0..10)
            .map(|k| dinf * (1.0 - 0.095 * k as f64))
            .collect();
        let path = solve_path_with(&base, &lambdas, &SolverOptions::default()).unwrap();
        let mut prev_obj = -1.0;
        for (k, sol) in path.iter().enumerate() {
            let cold = solve(&base.with_lambda(lambdas[k])).unwrap();
            assert!(
                (sol.objective - cold.objective).abs() <= 1e-6 * (1.0 + cold.objective),
                "lambda index {k}: warm {} cold {}",
                sol.objective,
                cold.objective
            );
            assert!(sol.objective >= prev_obj - 1e-8, "objectives nondecreasing");
            prev_obj = sol.objective;
        }
    }

    #[test]
    fn path_with_dominating_lambdas_is_zero() {
        let base = random_problem(4, 23, 1.0);
        let dinf = base.target_inf();
        let path =
            solve_path_with(&base, &[2.0 * dinf, 1.5 * dinf], &SolverOptions::default()).unwrap();
        for sol in &path {
            assert_eq!(sol.objective, 0.0);
        }
    }

    #[test]
    fn singleton_path_equals_solve() {
        let base = random_problem(5, 29, 0.4);
        let lambda = base.lambda();
        let path = solve_path_with(&base, &[lambda], &SolverOptions::default()).unwrap();
        let direct = solve(&base).unwrap();
        assert_eq!(path[0].beta, direct.beta);
    }

    #[test]
    fn path_rejects_non_descending() {
        let base = random_problem(3, 31, 0.4);
        assert!(matches!(
            solve_path_with(&base, &[0.1, 0.2], &SolverOptions::default()),
            Err(SolverError::InvalidPath)
        ));
    }

    #[test]
    fn kkt_accepts_solver_output() {
        for seed in [3u64, 5, 8] {
            let problem = random_problem(5, seed, 0.3);
            let sol = solve(&problem).unwrap();
            assert_eq!(sol.status, SolveStatus::Optimal);
            let diag = check_kkt(&problem, sol.beta.view());
            assert!(diag.max() <= 1e-6, "seed {seed}: {diag:?}");
        }
    }

    #[test]
    fn kkt_rejects_perturbed_solution() {
        let problem = random_problem(5, 37, 0.3);
        let sol = solve(&problem).unwrap();
        let mut beta = sol.beta.clone();
        let j = beta
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(j, _)| j)
            .unwrap();
        beta[j] += 0.1;
        let diag = check_kkt(&problem, beta.view());
        assert!(diag.max() > 1e-3, "{diag:?}");
    }

    #[test]
    fn kkt_certifies_zero_when_lambda_dominates() {
        let problem = L1Problem::new(SymMatrix::identity(3), array![0.4, -0.2, 0.1], 0.5).unwrap();
        let diag = check_kkt(&problem, Array1::zeros(3).view());
        assert_eq!(diag.max(), 0.0);
    }

    #[test]
    fn factored_problem_matches_dense_solution() {
        // Low-rank Gram from 6 observations in 12 dimensions.
        let (n, p) = (6usize, 12usize);
        let mut stream = NormalStream::new(RngSeed(71));
        let mut v = Array2::zeros((n, p));
        for x in v.iter_mut() {
            *x = stream.next_normal();
        }
        let gram = SymMatrix::from_lower(v.t().dot(&v)).unwrap();
        let mut d = Array1::zeros(p);
        for x in d.iter_mut() {
            *x = stream.next_normal();
        }
        let dinf = d.iter().fold(0.0f64, |m, v: &f64| m.max(v.abs()));
        let lambda = 0.4 * dinf;
        let dense = solve(&L1Problem::new(gram.clone(), d.clone(), lambda).unwrap()).unwrap();
        let low_rank =
            solve(&L1Problem::with_factor(gram, d, lambda, v).unwrap()).unwrap();
        assert!(
            (dense.objective - low_rank.objective).abs() <= 1e-6 * (1.0 + dense.objective),
            "dense {} vs low-rank {}",
            dense.objective,
            low_rank.objective
        );
    }
}
