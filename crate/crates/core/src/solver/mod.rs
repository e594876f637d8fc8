//! Sparse storage and the direct factorization used for the global trace
//! system. The per-step matrix is constant in time, so one LU factorization
//! amortizes over all Crank-Nicolson steps.

mod ndlu;

pub use ndlu::OrderingHints;

use std::hash::{Hash, Hasher};

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::SparseColMat;
use nalgebra::DVector;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("triplet index ({row}, {col}) out of range for {rows}x{cols} matrix")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("matrix must be square for factorization, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("dimension mismatch: matrix is {n}, rhs has length {len}")]
    DimensionMismatch { n: usize, len: usize },
}

/// Compressed-row matrix with sorted, duplicate-free column indices.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Assemble from triplets; duplicates are summed. The result is
    /// deterministic for a given input ordering.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self, SolverError> {
        for &(r, c, _) in triplets {
            if r >= n_rows || c >= n_cols {
                return Err(SolverError::IndexOutOfRange {
                    row: r,
                    col: c,
                    rows: n_rows,
                    cols: n_cols,
                });
            }
        }
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_unstable_by_key(|&i| (triplets[i].0, triplets[i].1));

        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx: Vec<usize> = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut current_row = 0usize;
        for &i in &order {
            let (r, c, v) = triplets[i];
            while current_row < r {
                current_row += 1;
                row_ptr[current_row] = col_idx.len();
            }
            if col_idx.len() > row_ptr[r] && *col_idx.last().unwrap() == c {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
            }
        }
        while current_row < n_rows {
            current_row += 1;
            row_ptr[current_row] = col_idx.len();
        }
        Ok(SparseMatrix {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    pub fn matvec(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.n_cols);
        let mut y = DVector::zeros(self.n_rows);
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            let mut acc = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                acc += v * x[*c];
            }
            y[r] = acc;
        }
        y
    }

    /// Dense reconstruction; intended for tests and small oracles.
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut d = nalgebra::DMatrix::zeros(self.n_rows, self.n_cols);
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                d[(r, *c)] += v;
            }
        }
        d
    }

    fn fingerprint(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.n_rows.hash(&mut h);
        self.n_cols.hash(&mut h);
        self.col_idx.hash(&mut h);
        for v in &self.values {
            v.to_bits().hash(&mut h);
        }
        h.finish()
    }

    /// Consume the matrix into compressed-column arrays (col_ptr, row_idx,
    /// values), freeing the row-major storage as soon as possible.
    fn into_csc(self) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
        let nnz = self.nnz();
        let mut col_ptr = vec![0usize; self.n_cols + 1];
        for &c in &self.col_idx {
            col_ptr[c + 1] += 1;
        }
        for c in 0..self.n_cols {
            col_ptr[c + 1] += col_ptr[c];
        }
        let mut row_idx = vec![0usize; nnz];
        let mut values = vec![0.0f64; nnz];
        let mut cursor = col_ptr.clone();
        for r in 0..self.n_rows {
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[p];
                let dst = cursor[c];
                row_idx[dst] = r;
                values[dst] = self.values[p];
                cursor[c] += 1;
            }
        }
        (col_ptr, row_idx, values)
    }
}

enum Backend {
    /// General-purpose LU with the backend's minimum-degree column ordering.
    Colamd(Lu<usize, f64>),
    /// Static-pattern LU under a geometric nested-dissection ordering; used
    /// for large condensed systems where minimum-degree fill is prohibitive.
    NestedDissection(ndlu::NdLu),
}

/// Reusable LU factors of a [`SparseMatrix`], with a fingerprint of the
/// factored matrix. Solves are single-threaded and deterministic.
pub struct Factorization {
    backend: Backend,
    n: usize,
    pub fingerprint: u64,
}

/// Factorize, consuming the matrix: the compressed storage is converted to
/// column-major form and released before the numeric factorization, which
/// keeps the peak footprint close to the factors themselves.
pub fn factorize(a: SparseMatrix) -> Result<Factorization, SolverError> {
    if a.n_rows != a.n_cols {
        return Err(SolverError::NotSquare {
            rows: a.n_rows,
            cols: a.n_cols,
        });
    }
    faer::set_global_parallelism(faer::Par::Seq);
    let n = a.n_rows;
    let fingerprint = a.fingerprint();
    // Right-hand side for the post-factorization singularity probe.
    let b_probe = if n > 0 {
        Some(a.matvec(&DVector::from_element(n, 1.0)))
    } else {
        None
    };
    let (col_ptr, row_idx, values) = a.into_csc();
    let symbolic_mat =
        faer::sparse::SymbolicSparseColMat::new_checked(n, n, col_ptr, None, row_idx);
    let mat = SparseColMat::new(symbolic_mat, values);
    let symbolic = SymbolicLu::try_new(mat.symbolic())
        .map_err(|e| SolverError::Singular(format!("structural singularity: {e:?}")))?;
    // The backend panics on an exactly singular pivot; surface it as an error.
    let lu = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
        Lu::try_new_with_symbolic(symbolic, mat.as_ref())
    }))
    .map_err(|_| SolverError::Singular("numerically singular pivot during factorization".into()))?
    .map_err(|e| SolverError::Singular(format!("numerical factorization failed: {e:?}")))?;
    drop(mat);
    let fact = Factorization {
        backend: Backend::Colamd(lu),
        n,
        fingerprint,
    };
    verify_recovery(&fact, b_probe)?;
    Ok(fact)
}

/// Factorize with supernode/geometry hints: unknowns grouped per mesh face
/// are ordered by recursive coordinate bisection, which keeps the fill of
/// large two-dimensional trace systems near the nested-dissection optimum.
pub fn factorize_hinted(
    a: SparseMatrix,
    hints: &OrderingHints,
) -> Result<Factorization, SolverError> {
    if a.n_rows != a.n_cols {
        return Err(SolverError::NotSquare {
            rows: a.n_rows,
            cols: a.n_cols,
        });
    }
    let n = a.n_rows;
    let fingerprint = a.fingerprint();
    let b_probe = if n > 0 {
        Some(a.matvec(&DVector::from_element(n, 1.0)))
    } else {
        None
    };
    let lu = ndlu::NdLu::factorize(a, hints)?;
    let fact = Factorization {
        backend: Backend::NestedDissection(lu),
        n,
        fingerprint,
    };
    verify_recovery(&fact, b_probe)?;
    Ok(fact)
}

/// Numerical-singularity probe: recover x = 1 from b = A 1 and report the
/// worst entry if the factors are unusable.
fn verify_recovery(fact: &Factorization, b_probe: Option<DVector<f64>>) -> Result<(), SolverError> {
    let Some(b) = b_probe else {
        return Ok(());
    };
    let x = fact.solve(&b)?;
    let (mut worst, mut at) = (0.0_f64, 0usize);
    for i in 0..fact.n {
        let e = (x[i] - 1.0).abs();
        if !e.is_finite() {
            return Err(SolverError::Singular(format!(
                "non-finite solve result at pivot/unknown {i}"
            )));
        }
        if e > worst {
            worst = e;
            at = i;
        }
    }
    if worst > 1e-3 {
        return Err(SolverError::Singular(format!(
            "numerically singular: unit-vector recovery error {worst:.2e} at unknown {at}"
        )));
    }
    Ok(())
}

/// Return freed heap pages to the operating system (glibc arenas hold on to
/// large factorization workspaces otherwise).
pub fn release_unused_memory() {
    unsafe {
        libc::malloc_trim(0);
    }
}

impl Factorization {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>, SolverError> {
        if b.len() != self.n {
            return Err(SolverError::DimensionMismatch {
                n: self.n,
                len: b.len(),
            });
        }
        match &self.backend {
            Backend::Colamd(lu) => {
                let mut rhs = faer::Mat::zeros(self.n, 1);
                for i in 0..self.n {
                    rhs[(i, 0)] = b[i];
                }
                let x = lu.solve(&rhs);
                Ok(DVector::from_fn(self.n, |i, _| x[(i, 0)]))
            }
            Backend::NestedDissection(lu) => Ok(lu.solve(b)),
        }
    }
}
