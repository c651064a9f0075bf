//! Shared test support: a textbook two-phase simplex used as the reference
//! oracle for the interior-point solver, plus small data helpers.
//!
//! The simplex is deliberately independent of the library's solver: dense
//! tableau, Bland's rule, no shared code paths.

#![allow(dead_code)]

use ndarray::{Array1, Array2};
use sparsa::{NormalStream, RngSeed, SymMatrix};

const TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum SimplexOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

/// Minimizes `c' x` subject to `A x <= b`, `x >= 0` with a dense two-phase
/// tableau simplex under Bland's rule. Only intended for tiny instances.
pub fn simplex_min(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> SimplexOutcome {
    let m = a.len();
    let n = c.len();
    assert_eq!(b.len(), m);
    assert!(a.iter().all(|row| row.len() == n));

    // Columns: n structural | m slack | k artificial | rhs.
    let artificial_rows: Vec<usize> = (0..m).filter(|&i| b[i] < 0.0).collect();
    let k = artificial_rows.len();
    let cols = n + m + k;
    let mut t = vec![vec![0.0f64; cols + 1]; m];
    let mut basis = vec![0usize; m];
    let mut next_art = 0usize;
    for i in 0..m {
        let flip = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i][j] = flip * a[i][j];
        }
        t[i][n + i] = flip; // slack
        t[i][cols] = flip * b[i];
        if flip < 0.0 {
            let aj = n + m + next_art;
            next_art += 1;
            t[i][aj] = 1.0;
            basis[i] = aj;
        } else {
            basis[i] = n + i;
        }
    }

    // Phase 1: minimize the sum of artificials.
    if k > 0 {
        let mut obj = vec![0.0f64; cols + 1];
        for j in n + m..cols {
            obj[j] = 1.0;
        }
        for i in 0..m {
            if basis[i] >= n + m {
                for j in 0..=cols {
                    obj[j] -= t[i][j];
                }
            }
        }
        if !iterate(&mut t, &mut basis, &mut obj, cols, None) {
            return SimplexOutcome::Unbounded; // cannot happen in phase 1
        }
        if -obj[cols] > 1e-7 {
            return SimplexOutcome::Infeasible;
        }
        // Drive any artificial still basic (at zero) out when possible.
        for i in 0..m {
            if basis[i] >= n + m {
                if let Some(j) = (0..n + m).find(|&j| t[i][j].abs() > TOL) {
                    pivot(&mut t, &mut basis, None, i, j, cols);
                }
            }
        }
    }

    // Phase 2: minimize the real objective, artificials barred from entering.
    let mut obj = vec![0.0f64; cols + 1];
    obj[..n].copy_from_slice(c);
    for i in 0..m {
        let cb = if basis[i] < n { c[basis[i]] } else { 0.0 };
        if cb != 0.0 {
            for j in 0..=cols {
                obj[j] -= cb * t[i][j];
            }
        }
    }
    if !iterate(&mut t, &mut basis, &mut obj, cols, Some(n + m)) {
        return SimplexOutcome::Unbounded;
    }

    let mut x = vec![0.0f64; n];
    for i in 0..m {
        if basis[i] < n {
            x[basis[i]] = t[i][cols];
        }
    }
    let objective = x.iter().zip(c.iter()).map(|(xi, ci)| xi * ci).sum();
    SimplexOutcome::Optimal { x, objective }
}

/// Runs simplex pivots until optimal (true) or unbounded (false).
fn iterate(
    t: &mut [Vec<f64>],
    basis: &mut [usize],
    obj: &mut Vec<f64>,
    cols: usize,
    bar_from: Option<usize>,
) -> bool {
    let m = t.len();
    let limit = bar_from.unwrap_or(cols);
    loop {
        // Bland: smallest-index column with negative reduced cost.
        let Some(enter) = (0..limit.min(cols)).find(|&j| obj[j] < -TOL) else {
            return true;
        };
        // Ratio test, ties broken by smallest basis index (Bland).
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            if t[i][enter] > TOL {
                let ratio = t[i][cols] / t[i][enter];
                let better = ratio < best - TOL
                    || (ratio < best + TOL && leave.is_some_and(|l| basis[i] < basis[l]));
                if leave.is_none() || better {
                    best = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(row) = leave else {
            return false;
        };
        pivot(t, basis, Some(obj), row, enter, cols);
    }
}

fn pivot(
    t: &mut [Vec<f64>],
    basis: &mut [usize],
    obj: Option<&mut Vec<f64>>,
    row: usize,
    col: usize,
    cols: usize,
) {
    let piv = t[row][col];
    for j in 0..=cols {
        t[row][j] /= piv;
    }
    for i in 0..t.len() {
        if i != row && t[i][col].abs() > 0.0 {
            let f = t[i][col];
            for j in 0..=cols {
                t[i][j] -= f * t[row][j];
            }
        }
    }
    if let Some(obj) = obj {
        let f = obj[col];
        if f.abs() > 0.0 {
            for j in 0..=cols {
                obj[j] -= f * t[row][j];
            }
        }
    }
    basis[row] = col;
}

/// Reference solution of `min |beta|_1 s.t. |S beta - d|_inf <= lambda` via
/// the split formulation on the simplex above. Returns `(beta, objective)`.
pub fn l1_reference(s: &SymMatrix, d: &[f64], lambda: f64) -> Option<(Vec<f64>, f64)> {
    let p = d.len();
    let c = vec![1.0f64; 2 * p];
    let mut a = Vec::with_capacity(2 * p);
    let mut b = Vec::with_capacity(2 * p);
    for i in 0..p {
        let mut row = vec![0.0f64; 2 * p];
        for j in 0..p {
            row[j] = s.get(i, j);
            row[p + j] = -s.get(i, j);
        }
        a.push(row);
        b.push(lambda + d[i]);
    }
    for i in 0..p {
        let mut row = vec![0.0f64; 2 * p];
        for j in 0..p {
            row[j] = -s.get(i, j);
            row[p + j] = s.get(i, j);
        }
        a.push(row);
        b.push(lambda - d[i]);
    }
    match simplex_min(&c, &a, &b) {
        SimplexOutcome::Optimal { x, objective } => {
            let beta = (0..p).map(|j| x[j] - x[p + j]).collect();
            Some((beta, objective))
        }
        _ => None,
    }
}

/// Random SPD matrix with moderate conditioning: `A'A / p + diag_boost I`.
pub fn random_spd(p: usize, diag_boost: f64, stream: &mut NormalStream) -> SymMatrix {
    let mut a = Array2::zeros((p, p));
    for v in a.iter_mut() {
        *v = stream.next_normal();
    }
    let mut gram: Array2<f64> = a.t().dot(&a) / p as f64;
    for i in 0..p {
        gram[[i, i]] += diag_boost;
    }
    SymMatrix::from_lower(gram).expect("square")
}

pub fn random_vector(p: usize, stream: &mut NormalStream) -> Array1<f64> {
    let mut v = Array1::zeros(p);
    for x in v.iter_mut() {
        *x = stream.next_normal();
    }
    v
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

pub fn seeded_stream(seed: u64) -> NormalStream {
    NormalStream::new(RngSeed(seed))
}
