//! Sparse complex matrices in compressed-column form and a direct LU solver.
//!
//! Factorization is delegated to `faer`'s supernodal sparse LU with a
//! fill-reducing column ordering and partial pivoting. It runs sequentially
//! so that results do not depend on the thread count.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::linalg::LuError;
use faer::sparse::{SparseColMat, SymbolicSparseColMat};
use faer::{Mat, Par};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinsolveError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("entry ({row}, {col}) outside a {n} x {n} matrix")]
    IndexOutOfRange { row: usize, col: usize, n: usize },
    #[error("matrix is structurally singular at pivot {index}")]
    StructurallySingular { index: usize },
    #[error("matrix is numerically singular (first non-finite solution component {index})")]
    NumericallySingular { index: usize },
    #[error("matrix flagged symmetric but A[{row}, {col}] != A[{col}, {row}]")]
    NotSymmetric { row: usize, col: usize },
    #[error("sparse factorization failed: {0}")]
    Backend(String),
}

/// Square complex matrix in compressed-column storage without duplicate entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseComplexMatrix {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<Complex64>,
    symmetric: bool,
}

impl SparseComplexMatrix {
    /// Compresses `(row, col, value)` triplets. Duplicates are summed in
    /// input order, so equal input gives bit-identical output.
    pub fn from_triplets(
        n: usize,
        triplets: &[(usize, usize, Complex64)],
    ) -> Result<Self, LinsolveError> {
        if let Some(&(row, col, _)) = triplets.iter().find(|t| t.0 >= n || t.1 >= n) {
            return Err(LinsolveError::IndexOutOfRange { row, col, n });
        }
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_by_key(|&k| (triplets[k].1, triplets[k].0));
        let mut col_ptr = vec![0usize; n + 1];
        let mut row_idx = Vec::new();
        let mut values: Vec<Complex64> = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for k in order {
            let (r, c, v) = triplets[k];
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                row_idx.push(r);
                values.push(v);
                col_ptr[c + 1] += 1;
                last = Some((r, c));
            }
        }
        for c in 0..n {
            col_ptr[c + 1] += col_ptr[c];
        }
        Ok(Self {
            n,
            col_ptr,
            row_idx,
            values,
            symmetric: false,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            col_ptr: (0..=n).collect(),
            row_idx: (0..n).collect(),
            values: vec![Complex64::new(1.0, 0.0); n],
            symmetric: true,
        }
    }

    /// Sets the symmetry flag after checking `A = A^T` exactly.
    pub fn into_symmetric(mut self) -> Result<Self, LinsolveError> {
        if let Some((row, col)) = self.first_asymmetry() {
            return Err(LinsolveError::NotSymmetric { row, col });
        }
        self.symmetric = true;
        Ok(self)
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_idx(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Entry `(row, col)`, zero when not stored.
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        let (lo, hi) = (self.col_ptr[col], self.col_ptr[col + 1]);
        match self.row_idx[lo..hi].binary_search(&row) {
            Ok(k) => self.values[lo + k],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    /// Iterates over stored `(row, col, value)` entries column by column.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.n).flat_map(move |c| {
            (self.col_ptr[c]..self.col_ptr[c + 1])
                .map(move |k| (self.row_idx[k], c, self.values[k]))
        })
    }

    fn first_asymmetry(&self) -> Option<(usize, usize)> {
        self.entries()
            .find(|&(r, c, v)| self.get(c, r) != v)
            .map(|(r, c, _)| (r, c))
    }

    /// `max |A - A^T|` over all entries.
    pub fn max_asymmetry(&self) -> f64 {
        self.entries()
            .map(|(r, c, v)| (v - self.get(c, r)).norm())
            .fold(0.0, f64::max)
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Result<Vec<Complex64>, LinsolveError> {
        if x.len() != self.n {
            return Err(LinsolveError::DimensionMismatch {
                expected: self.n,
                found: x.len(),
            });
        }
        let mut y = vec![Complex64::new(0.0, 0.0); self.n];
        for (r, c, v) in self.entries() {
            y[r] += v * x[c];
        }
        Ok(y)
    }

    fn to_faer(&self) -> SparseColMat<usize, Complex64> {
        let symbolic = SymbolicSparseColMat::new_checked(
            self.n,
            self.n,
            self.col_ptr.clone(),
            None,
            self.row_idx.clone(),
        );
        SparseColMat::new(symbolic, self.values.clone())
    }
}

/// Accumulates triplets for [`SparseComplexMatrix::from_triplets`].
#[derive(Debug, Clone, Default)]
pub struct TripletBuilder {
    n: usize,
    entries: Vec<(usize, usize, Complex64)>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(n: usize, capacity: usize) -> Self {
        Self {
            n,
            entries: Vec::with_capacity(capacity),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: Complex64) {
        self.entries.push((row, col, value));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn build(&self) -> Result<SparseComplexMatrix, LinsolveError> {
        SparseComplexMatrix::from_triplets(self.n, &self.entries)
    }
}

/// A reusable LU factorization.
#[derive(Debug)]
pub struct Factorization {
    n: usize,
    lu: Lu<usize, Complex64>,
}

/// Pins the dense and sparse kernels to one thread so results do not depend
/// on the thread count.
pub fn sequential_kernels() {
    faer::set_global_parallelism(Par::Seq);
}

/// Factors `a` with pivoting.
pub fn factor(a: &SparseComplexMatrix) -> Result<Factorization, LinsolveError> {
    sequential_kernels();
    let n = a.dim();
    let lu = a.to_faer().sp_lu().map_err(|e| match e {
        LuError::SymbolicSingular { index } => LinsolveError::StructurallySingular { index },
        LuError::Generic(g) => LinsolveError::Backend(format!("{g:?}")),
    })?;
    let f = Factorization { n, lu };
    // zero pivots are not reported by the backend; a probe solve exposes them
    if n > 0 {
        let probe = f.solve_raw(&vec![Complex64::new(1.0, 0.0); n]);
        if let Some(index) = probe
            .iter()
            .position(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(LinsolveError::NumericallySingular { index });
        }
    }
    Ok(f)
}

impl Factorization {
    pub fn dim(&self) -> usize {
        self.n
    }

    fn solve_raw(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let mut x = Mat::from_fn(self.n, 1, |i, _| rhs[i]);
        self.lu.solve_in_place(x.as_mut());
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }

    pub fn solve(&self, rhs: &[Complex64]) -> Result<Vec<Complex64>, LinsolveError> {
        if rhs.len() != self.n {
            return Err(LinsolveError::DimensionMismatch {
                expected: self.n,
                found: rhs.len(),
            });
        }
        let x = self.solve_raw(rhs);
        match x
            .iter()
            .position(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            Some(index) => Err(LinsolveError::NumericallySingular { index }),
            None => Ok(x),
        }
    }
}

/// Solves with an existing factorization.
pub fn backsolve(f: &Factorization, rhs: &[Complex64]) -> Result<Vec<Complex64>, LinsolveError> {
    f.solve(rhs)
}

/// Factors and solves in one call.
pub fn solve(a: &SparseComplexMatrix, rhs: &[Complex64]) -> Result<Vec<Complex64>, LinsolveError> {
    factor(a)?.solve(rhs)
}

/// `max_i |(A x - b)_i| / max_i |b_i|`.
pub fn relative_residual(
    a: &SparseComplexMatrix,
    x: &[Complex64],
    b: &[Complex64],
) -> Result<f64, LinsolveError> {
    let ax = a.mul_vec(x)?;
    let num = ax
        .iter()
        .zip(b)
        .map(|(u, v)| (u - v).norm())
        .fold(0.0, f64::max);
    let den = b.iter().map(|v| v.norm()).fold(0.0, f64::max);
    Ok(if den > 0.0 { num / den } else { num })
}
