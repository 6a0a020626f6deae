//! Direct sparse solve with iterative refinement.

use std::time::{Duration, Instant};

use faer::prelude::*;
use faer::sparse::{SparseRowMat, Triplet};
use faer::Mat;

use crate::assembly::{norm2, SparseSystem};
use crate::error::{Error, Result};

/// Required `|A x - F| / |F|`.
pub const RESIDUAL_TOL: f64 = 1e-10;
const MAX_REFINEMENTS: usize = 5;

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: Vec<f64>,
    pub relative_residual: f64,
    pub refinement_steps: usize,
    pub dim: usize,
    pub nnz: usize,
    pub factorization_time: Duration,
    pub solve_time: Duration,
}

/// Sparse LU with partial pivoting, followed by up to five steps of
/// iterative refinement against the stored CSR matrix.
pub fn solve(system: &SparseSystem) -> Result<SolveReport> {
    let n = system.dim();
    if n == 0 {
        return Err(Error::SingularMatrix("empty system".into()));
    }
    let triplets: Vec<Triplet<usize, usize, f64>> = system
        .triplets()
        .map(|(r, c, v)| Triplet::new(r, c, v))
        .collect();
    let matrix = SparseRowMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| Error::SingularMatrix(format!("{e:?}")))?;

    let start = Instant::now();
    let lu = matrix
        .sp_lu()
        .map_err(|e| Error::SingularMatrix(format!("{e:?}")))?;
    let factorization_time = start.elapsed();

    let start = Instant::now();
    let column = |v: &[f64]| Mat::<f64>::from_fn(n, 1, |i, _| v[i]);
    let solved = lu.solve(&column(system.rhs()));
    let mut x: Vec<f64> = (0..n).map(|i| solved[(i, 0)]).collect();
    let rhs_norm = norm2(system.rhs());
    let scale = if rhs_norm > 0.0 { rhs_norm } else { 1.0 };

    let mut residual = system.residual(&x);
    let mut relative = norm2(&residual) / scale;
    let mut steps = 0;
    while steps < MAX_REFINEMENTS && relative > 0.01 * RESIDUAL_TOL {
        let correction = lu.solve(&column(&residual));
        let candidate: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(i, xi)| xi + correction[(i, 0)])
            .collect();
        let candidate_residual = system.residual(&candidate);
        let candidate_relative = norm2(&candidate_residual) / scale;
        steps += 1;
        if !(candidate_relative < relative) {
            break;
        }
        x = candidate;
        residual = candidate_residual;
        relative = candidate_relative;
    }
    let solve_time = start.elapsed();

    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::SingularMatrix("non-finite solution".into()));
    }
    if !(relative <= RESIDUAL_TOL) {
        return Err(Error::SolveFailed { residual: relative });
    }
    Ok(SolveReport {
        solution: x,
        relative_residual: relative,
        refinement_steps: steps,
        dim: n,
        nnz: system.nnz(),
        factorization_time,
        solve_time,
    })
}
