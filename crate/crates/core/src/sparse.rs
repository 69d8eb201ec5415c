//! Compressed sparse row matrices with deterministic assembly, and a sparse
//! LU solver backed by `faer`.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::MatMut;

use crate::error::SolverError;

/// Square or rectangular sparse matrix in CSR layout.
///
/// Column indices are sorted and unique within each row. `symmetric` is a
/// declaration by the producer (mass and stiffness operators), not a cached
/// check.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

impl CsrMatrix {
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: diag.to_vec(),
            symmetric: true,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn with_symmetric(mut self, symmetric: bool) -> Self {
        self.symmetric = symmetric;
        self
    }

    /// Iterate the stored entries of row `i` as `(col, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.indptr[i]..self.indptr[i + 1];
        self.indices[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    /// Stored value at `(i, j)`, zero when structurally absent.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.indptr[i]..self.indptr[i + 1];
        match self.indices[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "mul_vec: dimension mismatch");
        (0..self.nrows)
            .map(|i| self.row(i).map(|(j, a)| a * x[j]).sum())
            .collect()
    }

    /// `y = Aᵀ x`
    pub fn mul_vec_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows, "mul_vec_transpose: dimension mismatch");
        let mut y = vec![0.0; self.ncols];
        for (i, &xi) in x.iter().enumerate() {
            for (j, a) in self.row(i) {
                y[j] += a * xi;
            }
        }
        y
    }

    /// `xᵀ A x`
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.row(i).map(|(_, a)| a).sum()).collect()
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut b = TripletBuilder::new(self.ncols, self.nrows);
        for i in 0..self.nrows {
            for (j, a) in self.row(i) {
                b.push(j, i, a);
            }
        }
        b.build().with_symmetric(self.symmetric)
    }

    /// Largest `|A_ij - A_ji|` over all stored entries.
    pub fn max_asymmetry(&self) -> f64 {
        assert_eq!(self.nrows, self.ncols);
        let mut worst: f64 = 0.0;
        for i in 0..self.nrows {
            for (j, a) in self.row(i) {
                worst = worst.max((a - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, a) in self.row(i) {
                row[j] += a;
            }
        }
        d
    }
}

/// Coordinate-format accumulator. Duplicates are summed in insertion order,
/// so the assembled values do not depend on any hashing or thread schedule.
#[derive(Clone, Debug)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            rows: Vec::new(),
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Self {
            nrows,
            ncols,
            rows: Vec::with_capacity(cap),
            cols: Vec::with_capacity(cap),
            vals: Vec::with_capacity(cap),
        }
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    pub fn push(&mut self, row: usize, col: usize, val: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.rows.push(row);
        self.cols.push(col);
        self.vals.push(val);
    }

    pub fn values(&self) -> &[f64] {
        &self.vals
    }

    pub fn build(&self) -> CsrMatrix {
        self.build_with_pattern().0
    }

    /// Assemble and also return the compiled scatter map, which lets later
    /// assemblies with the same triplet sequence skip the sort.
    pub fn build_with_pattern(&self) -> (CsrMatrix, AssemblyPattern) {
        let mut order: Vec<usize> = (0..self.vals.len()).collect();
        // stable: equal (row, col) keep insertion order
        order.sort_by_key(|&k| (self.rows[k], self.cols[k]));

        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::new();
        let mut slot = vec![0usize; self.vals.len()];
        let mut last: Option<(usize, usize)> = None;
        for &k in &order {
            let key = (self.rows[k], self.cols[k]);
            if last != Some(key) {
                indices.push(key.1);
                indptr[key.0 + 1] += 1;
                last = Some(key);
            }
            slot[k] = indices.len() - 1;
        }
        for i in 0..self.nrows {
            indptr[i + 1] += indptr[i];
        }
        let pattern = AssemblyPattern {
            slot,
            nnz: indices.len(),
        };
        let mut m = CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr,
            indices,
            values: vec![0.0; pattern.nnz],
            symmetric: false,
        };
        pattern.scatter(&self.vals, &mut m);
        (m, pattern)
    }
}

/// Map from triplet position to CSR value slot.
#[derive(Clone, Debug, Default)]
pub struct AssemblyPattern {
    slot: Vec<usize>,
    nnz: usize,
}

impl AssemblyPattern {
    pub fn len(&self) -> usize {
        self.slot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slot.is_empty()
    }

    /// Overwrite `m`'s values with the sums of `vals` (triplet order).
    pub fn scatter(&self, vals: &[f64], m: &mut CsrMatrix) {
        assert_eq!(vals.len(), self.slot.len(), "triplet count changed");
        assert_eq!(m.values.len(), self.nnz, "pattern/matrix mismatch");
        m.values.iter_mut().for_each(|v| *v = 0.0);
        // sorted-stable order within a slot is insertion order, which is
        // exactly the order we visit here
        for (k, &v) in vals.iter().enumerate() {
            m.values[self.slot[k]] += v;
        }
    }
}

/// Sparse LU with a cached symbolic factorization.
///
/// The CSR arrays of `A` are handed to faer as the CSC arrays of `Aᵀ`; the
/// factorization of `Aᵀ` is then used through its transpose solve.
#[derive(Default)]
pub struct SparseLu {
    symbolic: Option<(Vec<usize>, Vec<usize>, SymbolicLu<usize>)>,
    numeric: Option<(usize, Lu<usize, f64>)>,
}

impl SparseLu {
    pub fn new() -> Self {
        Self::default()
    }

    /// Numerically factor `a`, reusing the symbolic analysis when the
    /// sparsity pattern is unchanged.
    pub fn factor(&mut self, a: &CsrMatrix) -> Result<(), SolverError> {
        if a.nrows != a.ncols {
            return Err(SolverError::DimensionMismatch {
                expected: a.nrows,
                got: a.ncols,
            });
        }
        let n = a.nrows;
        let reuse = matches!(&self.symbolic, Some((p, i, _)) if *p == a.indptr && *i == a.indices);
        if !reuse {
            let sym = SymbolicSparseColMatRef::new_checked(n, n, &a.indptr, None, &a.indices);
            let symbolic = SymbolicLu::try_new(sym).map_err(|e| SolverError::LinearSolveFailed {
                reason: format!("symbolic LU: {e:?}"),
                residual: f64::NAN,
            })?;
            self.symbolic = Some((a.indptr.clone(), a.indices.clone(), symbolic));
        }
        let (indptr, indices, symbolic) = self.symbolic.as_ref().expect("symbolic set above");
        let sym = SymbolicSparseColMatRef::new_checked(n, n, indptr, None, indices);
        let mat = SparseColMatRef::new(sym, &a.values);
        let lu = Lu::try_new_with_symbolic(symbolic.clone(), mat).map_err(|e| {
            SolverError::LinearSolveFailed {
                reason: format!("numeric LU: {e:?}"),
                residual: f64::NAN,
            }
        })?;
        self.numeric = Some((n, lu));
        Ok(())
    }

    /// Solve `A x = b` with the last factored matrix.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, SolverError> {
        let (n, lu) = self.numeric.as_ref().ok_or_else(|| SolverError::LinearSolveFailed {
            reason: "solve called before factor".into(),
            residual: f64::NAN,
        })?;
        if b.len() != *n {
            return Err(SolverError::DimensionMismatch {
                expected: *n,
                got: b.len(),
            });
        }
        let mut x = b.to_vec();
        let rhs = MatMut::from_column_major_slice_mut(&mut x, *n, 1);
        lu.solve_transpose_in_place(rhs);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::LinearSolveFailed {
                reason: "non-finite solution (singular matrix)".into(),
                residual: f64::NAN,
            });
        }
        Ok(x)
    }
}

/// Factor and solve in one go, checking the relative residual.
pub fn solve(a: &CsrMatrix, b: &[f64], rel_tol: f64) -> Result<Vec<f64>, SolverError> {
    let mut lu = SparseLu::new();
    lu.factor(a)?;
    let x = lu.solve(b)?;
    check_residual(a, &x, b, rel_tol)?;
    Ok(x)
}

/// Relative residual `‖b - A x‖₂ / max(‖b‖₂, tiny)`.
pub fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    let r: f64 = ax.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    r / nb.max(f64::MIN_POSITIVE)
}

pub(crate) fn check_residual(
    a: &CsrMatrix,
    x: &[f64],
    b: &[f64],
    rel_tol: f64,
) -> Result<(), SolverError> {
    let res = relative_residual(a, x, b);
    if res.is_finite() && (res <= rel_tol || b.iter().all(|v| *v == 0.0)) {
        Ok(())
    } else {
        Err(SolverError::LinearSolveFailed {
            reason: format!("relative residual {res:e} above {rel_tol:e}"),
            residual: res,
        })
    }
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_summed_and_sorted() {
        let mut b = TripletBuilder::new(2, 3);
        b.push(1, 2, 1.0);
        b.push(0, 1, 2.0);
        b.push(1, 0, 3.0);
        b.push(0, 1, 0.5);
        let m = b.build();
        assert_eq!(m.indptr(), &[0, 1, 3]);
        assert_eq!(m.indices(), &[1, 0, 2]);
        assert_eq!(m.values(), &[2.5, 3.0, 1.0]);
        assert_eq!(m.get(0, 1), 2.5);
        assert_eq!(m.get(0, 0), 0.0);
    }

    #[test]
    fn pattern_rescatter_matches_fresh_build() {
        let mut b = TripletBuilder::new(3, 3);
        for (i, j, v) in [(0, 0, 1.0), (2, 1, 2.0), (0, 0, 3.0), (1, 2, 4.0), (2, 2, 0.0)] {
            b.push(i, j, v);
        }
        let (mut m, pat) = b.build_with_pattern();
        let vals: Vec<f64> = b.values().iter().map(|v| v * 2.0 + 1.0).collect();
        pat.scatter(&vals, &mut m);
        let mut fresh = TripletBuilder::new(3, 3);
        for (k, (i, j)) in [(0, 0), (2, 1), (0, 0), (1, 2), (2, 2)].into_iter().enumerate() {
            fresh.push(i, j, vals[k]);
        }
        assert_eq!(m, fresh.build());
    }

    #[test]
    fn lu_solves_nonsymmetric_system() {
        // [4 1 0; 2 5 1; 0 3 6] x = b
        let mut b = TripletBuilder::new(3, 3);
        for (i, j, v) in [
            (0, 0, 4.0),
            (0, 1, 1.0),
            (1, 0, 2.0),
            (1, 1, 5.0),
            (1, 2, 1.0),
            (2, 1, 3.0),
            (2, 2, 6.0),
        ] {
            b.push(i, j, v);
        }
        let a = b.build();
        let x_true = [1.0, -2.0, 0.5];
        let rhs = a.mul_vec(&x_true);
        let x = solve(&a, &rhs, 1e-14).unwrap();
        for (p, q) in x.iter().zip(x_true) {
            assert!((p - q).abs() < 1e-14);
        }
    }

    #[test]
    fn lu_reuses_symbolic_factorization() {
        let mut b = TripletBuilder::new(2, 2);
        b.push(0, 0, 2.0);
        b.push(0, 1, 1.0);
        b.push(1, 0, 1.0);
        b.push(1, 1, 3.0);
        let (mut a, pat) = b.build_with_pattern();
        let mut lu = SparseLu::new();
        lu.factor(&a).unwrap();
        assert_eq!(lu.solve(&[3.0, 4.0]).unwrap(), vec![1.0, 1.0]);
        pat.scatter(&[4.0, 0.0, 0.0, 5.0], &mut a);
        lu.factor(&a).unwrap();
        let x = lu.solve(&[8.0, 10.0]).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn transpose_and_symmetry() {
        let mut b = TripletBuilder::new(2, 2);
        b.push(0, 1, 1.0);
        b.push(1, 0, 3.0);
        let a = b.build();
        assert_eq!(a.max_asymmetry(), 2.0);
        assert_eq!(a.transpose().get(0, 1), 3.0);
        assert_eq!(a.mul_vec_transpose(&[1.0, 1.0]), vec![3.0, 1.0]);
    }
}
