//! Dense symmetric linear algebra and Gaussian sampling.
//!
//! Everything here works on plain dense storage: [`SymMatrix`] for symmetric
//! matrices (covariances, Gram matrices) and `ndarray::Array1<f64>` for
//! vectors. Positive definiteness is decided by the Cholesky pivot rule
//! `pivot > 1e-12 * max_diagonal`, which keeps the check scale invariant.

mod rng;

pub use rng::{NormalStream, RngSeed};

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use thiserror::Error;

/// Relative pivot tolerance for declaring a matrix positive definite.
pub const PIVOT_RTOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not positive definite (pivot {pivot:.3e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Dense symmetric matrix with exactly mirrored entries.
///
/// Constructors either mirror the lower triangle or verify symmetry, so
/// `get(i, j) == get(j, i)` holds bit for bit on every instance.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    data: Array2<f64>,
}

impl SymMatrix {
    /// Builds from `f(i, j)` evaluated on the lower triangle (`i >= j`) and
    /// mirrored.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> SymMatrix {
        let mut data = Array2::zeros((dim, dim));
        for i in 0..dim {
            for j in 0..=i {
                let v = f(i, j);
                data[[i, j]] = v;
                data[[j, i]] = v;
            }
        }
        SymMatrix { data }
    }

    /// Wraps a square array, requiring exact symmetry.
    pub fn from_dense(data: Array2<f64>) -> Result<SymMatrix, LinalgError> {
        if data.nrows() != data.ncols() {
            return Err(LinalgError::DimensionMismatch(format!(
                "expected square matrix, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        for i in 0..data.nrows() {
            for j in 0..i {
                if data[[i, j]].to_bits() != data[[j, i]].to_bits() {
                    return Err(LinalgError::DimensionMismatch(format!(
                        "asymmetric entries at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(SymMatrix { data })
    }

    /// Wraps a square array, forcing symmetry by copying the lower triangle
    /// over the upper one. For matrices that are symmetric up to roundoff.
    pub fn from_lower(mut data: Array2<f64>) -> Result<SymMatrix, LinalgError> {
        if data.nrows() != data.ncols() {
            return Err(LinalgError::DimensionMismatch(format!(
                "expected square matrix, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        for i in 0..data.nrows() {
            for j in 0..i {
                data[[j, i]] = data[[i, j]];
            }
        }
        Ok(SymMatrix { data })
    }

    pub fn identity(dim: usize) -> SymMatrix {
        SymMatrix {
            data: Array2::eye(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[[i, j]]
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_array(self) -> Array2<f64> {
        self.data
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.data.view()
    }

    /// Matrix-vector product `S v`.
    pub fn apply(&self, v: ArrayView1<f64>) -> Array1<f64> {
        self.data.dot(&v)
    }

    /// Bilinear form `a' S b`.
    pub fn bilinear(&self, a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
        a.dot(&self.data.dot(&b))
    }

    pub fn trace(&self) -> f64 {
        self.data.diag().sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    /// Principal submatrix on `idx` (indices must be in range; duplicates are
    /// a caller bug).
    pub fn restrict(&self, idx: &[usize]) -> SymMatrix {
        let k = idx.len();
        let mut data = Array2::zeros((k, k));
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                data[[a, b]] = self.data[[i, j]];
            }
        }
        SymMatrix { data }
    }

    /// `S + eps * I`.
    pub fn add_diagonal(&self, eps: f64) -> SymMatrix {
        let mut data = self.data.clone();
        for i in 0..data.nrows() {
            data[[i, i]] += eps;
        }
        SymMatrix { data }
    }
}

/// Lower-triangular Cholesky factor of a symmetric view. Fails with the
/// offending pivot when the matrix is not positive definite under the
/// `pivot > PIVOT_RTOL * max_diagonal` rule.
pub(crate) fn factor_lower(a: ArrayView2<f64>) -> Result<Array2<f64>, LinalgError> {
    factor_lower_impl(a, false).map(|(l, _)| l)
}

/// Like [`factor_lower`] but tolerant of positive semidefinite input: a
/// non-positive pivot zeroes its column instead of failing, producing a
/// factor with `L L' ~= A` for PSD `A`. Returns the numerical rank.
pub(crate) fn factor_lower_psd(a: ArrayView2<f64>) -> (Array2<f64>, usize) {
    factor_lower_impl(a, true).expect("psd factorization is total")
}

fn factor_lower_impl(
    a: ArrayView2<f64>,
    psd: bool,
) -> Result<(Array2<f64>, usize), LinalgError> {
    let p = a.nrows();
    let max_diag = (0..p).map(|i| a[[i, i]]).fold(0.0f64, f64::max);
    let tol = PIVOT_RTOL * max_diag.max(0.0);
    let mut l = vec![0.0f64; p * p];
    let mut rank = 0usize;
    for j in 0..p {
        let mut s = a[[j, j]];
        for k in 0..j {
            s -= l[j * p + k] * l[j * p + k];
        }
        if !(s > tol) || !s.is_finite() {
            if psd && s.is_finite() {
                // Exact PSD input has a zero Schur-complement column here.
                continue;
            }
            return Err(LinalgError::NotPositiveDefinite { index: j, pivot: s });
        }
        rank += 1;
        let ljj = s.sqrt();
        l[j * p + j] = ljj;
        for i in (j + 1)..p {
            let mut v = a[[i, j]];
            let (ri, rj) = (&l[i * p..i * p + j], &l[j * p..j * p + j]);
            for k in 0..j {
                v -= ri[k] * rj[k];
            }
            l[i * p + j] = v / ljj;
        }
    }
    Ok((
        Array2::from_shape_vec((p, p), l).expect("shape matches allocation"),
        rank,
    ))
}

/// Solves `L y = b` (forward substitution, `L` lower triangular).
pub(crate) fn solve_lower(l: &Array2<f64>, b: ArrayView1<f64>) -> Array1<f64> {
    let p = l.nrows();
    let mut y = b.to_owned();
    for i in 0..p {
        let mut v = y[i];
        for k in 0..i {
            v -= l[[i, k]] * y[k];
        }
        y[i] = v / l[[i, i]];
    }
    y
}

/// Solves `L' x = y` (back substitution against the stored lower factor).
pub(crate) fn solve_lower_transpose(l: &Array2<f64>, y: ArrayView1<f64>) -> Array1<f64> {
    let p = l.nrows();
    let mut x = y.to_owned();
    for i in (0..p).rev() {
        let mut v = x[i];
        for k in (i + 1)..p {
            v -= l[[k, i]] * x[k];
        }
        x[i] = v / l[[i, i]];
    }
    x
}

/// Solves an SPD system given a precomputed lower Cholesky factor.
pub(crate) fn solve_with_factor(l: &Array2<f64>, b: ArrayView1<f64>) -> Array1<f64> {
    solve_lower_transpose(l, solve_lower(l, b).view())
}

/// Lower-triangular factor `L` with `m = L L'`.
pub fn cholesky(m: &SymMatrix) -> Result<Array2<f64>, LinalgError> {
    factor_lower(m.view())
}

/// Solves `m x = b` for SPD `m`.
pub fn spd_solve(m: &SymMatrix, b: ArrayView1<f64>) -> Result<Array1<f64>, LinalgError> {
    if m.dim() != b.len() {
        return Err(LinalgError::DimensionMismatch(format!(
            "matrix is {}x{} but vector has length {}",
            m.dim(),
            m.dim(),
            b.len()
        )));
    }
    let l = factor_lower(m.view())?;
    Ok(solve_with_factor(&l, b))
}

/// Solves `m x = b`, retrying once with the ridge `m + eps I`,
/// `eps = 1e-8 * trace(m) / p`, when `m` is singular or indefinite. This is
/// the deterministic stand-in for a generalized inverse; callers opt in.
pub fn spd_solve_or_ridge(m: &SymMatrix, b: ArrayView1<f64>) -> Result<Array1<f64>, LinalgError> {
    match spd_solve(m, b) {
        Ok(x) => Ok(x),
        Err(LinalgError::NotPositiveDefinite { .. }) => {
            let eps = 1e-8 * m.trace() / m.dim().max(1) as f64;
            spd_solve(&m.add_diagonal(eps), b)
        }
        Err(e) => Err(e),
    }
}

/// Quadratic form `v' m^{-1} v` for SPD `m`. Nonnegative by construction.
pub fn quad_form(m: &SymMatrix, v: ArrayView1<f64>) -> Result<f64, LinalgError> {
    if m.dim() != v.len() {
        return Err(LinalgError::DimensionMismatch(format!(
            "matrix is {}x{} but vector has length {}",
            m.dim(),
            m.dim(),
            v.len()
        )));
    }
    // v' m^{-1} v = |L^{-1} v|^2, which cannot go negative from roundoff.
    let l = factor_lower(m.view())?;
    let y = solve_lower(&l, v);
    Ok(y.dot(&y))
}

/// Draws `n` rows from `N_p(mean, cov)`. Row `i` is `mean + L z_i` with `L`
/// the Cholesky factor of `cov` and `z_i` the next `p` values of the seeded
/// normal stream, so output is a pure function of `(mean, cov, n, seed)`.
pub fn sample_mvn(
    mean: ArrayView1<f64>,
    cov: &SymMatrix,
    n: usize,
    seed: RngSeed,
) -> Result<Array2<f64>, LinalgError> {
    let p = cov.dim();
    if mean.len() != p {
        return Err(LinalgError::DimensionMismatch(format!(
            "mean has length {} but covariance is {}x{}",
            mean.len(),
            p,
            p
        )));
    }
    let l = factor_lower(cov.view())?;
    let mut stream = NormalStream::new(seed);
    let mut z = Array2::zeros((n, p));
    for mut row in z.rows_mut() {
        stream.fill_normal(row.as_slice_mut().expect("row-major layout"));
    }
    // X = Z L' + 1 mean'
    let mut x = z.dot(&l.t());
    for mut row in x.rows_mut() {
        row += &mean;
    }
    Ok(x)
}
