//! Thin wrapper over faer's sparse LU, with symbolic-factorization reuse for
//! Newton iterations whose Jacobian pattern never changes.

use faer::linalg::solvers::Solve;
use faer::prelude::*;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};

/// Square sparse matrix in triplet form. Duplicate entries are summed.
#[derive(Debug, Clone, Default)]
pub struct TripletMatrix {
    pub n: usize,
    entries: Vec<Triplet<usize, usize, f64>>,
}

impl TripletMatrix {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(n: usize, cap: usize) -> Self {
        Self {
            n,
            entries: Vec::with_capacity(cap),
        }
    }

    /// Entries are kept even when `v == 0` so the pattern is value independent.
    #[inline]
    pub fn push(&mut self, row: usize, col: usize, v: f64) {
        self.entries.push(Triplet::new(row, col, v));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for t in &self.entries {
            y[t.row] += t.val * x[t.col];
        }
        y
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>, String> {
        SparseColMat::try_new_from_triplets(self.n, self.n, &self.entries)
            .map_err(|e| format!("{e:?}"))
    }
}

/// Sparse LU solver that caches the symbolic analysis of the first matrix it
/// sees. Later matrices must share that matrix's pattern (same triplet order
/// and positions), which holds for every Jacobian assembled in this crate.
#[derive(Default)]
pub struct SparseLuSolver {
    symbolic: Option<(usize, usize, SymbolicLu<usize>)>,
}

impl std::fmt::Debug for SparseLuSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SparseLuSolver")
            .field("cached", &self.symbolic.is_some())
            .finish()
    }
}

/// Factorized matrix, reusable for several right-hand sides.
pub struct Factorization {
    lu: Lu<usize, f64>,
    n: usize,
}

impl Factorization {
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, String> {
        let b = Col::<f64>::from_fn(self.n, |i| rhs[i]);
        let x = self.lu.solve(&b);
        let out: Vec<f64> = (0..self.n).map(|i| x[i]).collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err("solution contains non-finite values".into());
        }
        Ok(out)
    }
}

impl SparseLuSolver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn factorize(&mut self, a: &TripletMatrix) -> Result<Factorization, String> {
        let mat = a.to_faer()?;
        let reuse = matches!(&self.symbolic, Some((n, nnz, _)) if *n == a.n && *nnz == a.len());
        if !reuse {
            let sym = SymbolicLu::try_new(mat.symbolic()).map_err(|e| format!("{e:?}"))?;
            self.symbolic = Some((a.n, a.len(), sym));
        }
        let sym = self.symbolic.as_ref().map(|(_, _, s)| s.clone()).unwrap();
        let lu = Lu::try_new_with_symbolic(sym, mat.as_ref()).map_err(|e| format!("{e:?}"))?;
        Ok(Factorization { lu, n: a.n })
    }

    /// Solves `A x = b` and rejects results whose residual shows the matrix
    /// was numerically singular.
    pub fn solve(&mut self, a: &TripletMatrix, rhs: &[f64]) -> Result<Vec<f64>, String> {
        let fact = self.factorize(a)?;
        let x = fact.solve(rhs)?;
        let ax = a.mul_vec(&x);
        let bnorm = rhs.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let rnorm = ax
            .iter()
            .zip(rhs)
            .fold(0.0_f64, |m, (p, q)| m.max((p - q).abs()));
        if rnorm > 1e-6 * bnorm.max(f64::MIN_POSITIVE) && rnorm > 1e-12 {
            return Err(format!(
                "linear residual {rnorm:e} against right-hand side {bnorm:e}"
            ));
        }
        Ok(x)
    }
}
