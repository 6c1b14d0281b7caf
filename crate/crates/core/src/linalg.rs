//! Compressed sparse row matrices and a conjugate-gradient solver.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::exec::Exec;

/// Entries whose summed magnitude falls below this are dropped on assembly.
const DROP_BELOW: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<CsrMatrix> {
        for &(r, c, _) in triplets {
            if r >= nrows || c >= ncols {
                return Err(Error::IndexOutOfRange {
                    row: r,
                    col: c,
                    nrows,
                    ncols,
                });
            }
        }
        // Counting sort by row keeps the per-row insertion order stable, so the
        // summation order of duplicates is the triplet order.
        let mut counts = vec![0usize; nrows + 1];
        for &(r, _, _) in triplets {
            counts[r + 1] += 1;
        }
        for r in 0..nrows {
            counts[r + 1] += counts[r];
        }
        let mut next = counts.clone();
        let mut by_row = vec![(0usize, 0.0f64); triplets.len()];
        for &(r, c, v) in triplets {
            by_row[next[r]] = (c, v);
            next[r] += 1;
        }

        let mut row_offsets = Vec::with_capacity(nrows + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        let mut row: BTreeMap<usize, f64> = BTreeMap::new();
        for r in 0..nrows {
            row.clear();
            for &(c, v) in &by_row[counts[r]..counts[r + 1]] {
                *row.entry(c).or_insert(0.0) += v;
            }
            for (&c, &v) in &row {
                if v.abs() >= DROP_BELOW {
                    col_indices.push(c);
                    values.push(v);
                }
            }
            row_offsets.push(col_indices.len());
        }
        Ok(CsrMatrix {
            nrows,
            ncols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn identity(n: usize) -> CsrMatrix {
        CsrMatrix {
            nrows: n,
            ncols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
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

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_offsets[r]..self.row_offsets[r + 1];
        self.col_indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.row_offsets[r]..self.row_offsets[r + 1];
        match self.col_indices[span.clone()].binary_search(&c) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn to_triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.nrows)
            .flat_map(|r| self.row(r).map(move |(c, v)| (r, c, v)))
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (r, c, v) in self.to_triplets() {
            d[r][c] = v;
        }
        d
    }

    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.spmv_with(Exec::default(), x)
    }

    pub fn spmv_with(&self, exec: Exec, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ncols {
            return Err(Error::DimensionMismatch {
                expected: self.ncols,
                found: x.len(),
            });
        }
        let mut y = vec![0.0; self.nrows];
        self.spmv_into(exec, x, &mut y);
        Ok(y)
    }

    /// `y = A x`; each row is accumulated left to right.
    pub(crate) fn spmv_into(&self, exec: Exec, x: &[f64], y: &mut [f64]) {
        exec.for_each_chunk_mut(y, |offset, chunk| {
            for (k, yi) in chunk.iter_mut().enumerate() {
                let r = offset + k;
                let mut acc = 0.0;
                for j in self.row_offsets[r]..self.row_offsets[r + 1] {
                    acc += self.values[j] * x[self.col_indices[j]];
                }
                *yi = acc;
            }
        });
    }

    /// `a * self + b * other` for matrices of equal shape.
    pub fn linear_combination(&self, a: f64, other: &CsrMatrix, b: f64) -> Result<CsrMatrix> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::DimensionMismatch {
                expected: self.nrows,
                found: other.nrows,
            });
        }
        let mut t: Vec<(usize, usize, f64)> = self
            .to_triplets()
            .into_iter()
            .map(|(r, c, v)| (r, c, a * v))
            .collect();
        t.extend(other.to_triplets().into_iter().map(|(r, c, v)| (r, c, b * v)));
        CsrMatrix::from_triplets(self.nrows, self.ncols, &t)
    }

    /// Largest `|a_ij - a_ji|` relative to the largest `|a_ij|`.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                let vt = if c < self.nrows { self.get(c, r) } else { 0.0 };
                worst = worst.max((v - vt).abs());
            }
        }
        worst / scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgReport {
    pub iterations: usize,
    pub final_relative_residual: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub jacobi: bool,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions {
            tolerance: 1e-10,
            max_iterations: 10_000,
            jacobi: false,
        }
    }
}

/// Solves `A x = b` for symmetric positive definite `A`.
pub fn cg_solve(a: &CsrMatrix, b: &[f64], opts: &CgOptions) -> Result<(Vec<f64>, CgReport)> {
    let mut x = vec![0.0; b.len()];
    let report = cg_solve_warm(Exec::default(), a, b, &mut x, opts)?;
    Ok((x, report))
}

/// Conjugate gradients starting from the contents of `x`.
///
/// Convergence is declared when `||b - A x|| <= tol * ||b||`. Running out of
/// iterations is reported through [`CgReport::converged`], not as an error.
pub fn cg_solve_warm(
    exec: Exec,
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    opts: &CgOptions,
) -> Result<CgReport> {
    let n = b.len();
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: n,
        });
    }
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x.len(),
        });
    }
    if b.iter().chain(x.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { iteration: 0 });
    }
    let b_norm = exec.dot(b, b).sqrt();
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgReport {
            iterations: 0,
            final_relative_residual: 0.0,
            converged: true,
        });
    }
    let inv_diag: Option<Vec<f64>> = if opts.jacobi {
        Some(
            a.diagonal()
                .into_iter()
                .map(|d| if d != 0.0 { 1.0 / d } else { 1.0 })
                .collect(),
        )
    } else {
        None
    };
    let precondition = |r: &[f64], z: &mut [f64]| match &inv_diag {
        Some(d) => exec.for_each_chunk_mut(z, |off, chunk| {
            for (k, zi) in chunk.iter_mut().enumerate() {
                *zi = d[off + k] * r[off + k];
            }
        }),
        None => z.copy_from_slice(r),
    };

    let mut r = vec![0.0; n];
    a.spmv_into(exec, x, &mut r);
    exec.for_each_chunk_mut(&mut r, |off, chunk| {
        for (k, ri) in chunk.iter_mut().enumerate() {
            *ri = b[off + k] - *ri;
        }
    });
    let mut res = exec.dot(&r, &r).sqrt() / b_norm;
    if res <= opts.tolerance {
        return Ok(CgReport {
            iterations: 0,
            final_relative_residual: res,
            converged: true,
        });
    }
    let mut z = vec![0.0; n];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut rz = exec.dot(&r, &z);
    let mut ap = vec![0.0; n];

    for it in 1..=opts.max_iterations {
        a.spmv_into(exec, &p, &mut ap);
        let pap = exec.dot(&p, &ap);
        let step = rz / pap;
        if !step.is_finite() {
            return Err(Error::NonFinite { iteration: it });
        }
        exec.for_each_chunk_mut(x, |off, chunk| {
            for (k, xi) in chunk.iter_mut().enumerate() {
                *xi += step * p[off + k];
            }
        });
        exec.for_each_chunk_mut(&mut r, |off, chunk| {
            for (k, ri) in chunk.iter_mut().enumerate() {
                *ri -= step * ap[off + k];
            }
        });
        res = exec.dot(&r, &r).sqrt() / b_norm;
        if !res.is_finite() {
            return Err(Error::NonFinite { iteration: it });
        }
        if res <= opts.tolerance {
            return Ok(CgReport {
                iterations: it,
                final_relative_residual: res,
                converged: true,
            });
        }
        precondition(&r, &mut z);
        let rz_next = exec.dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        exec.for_each_chunk_mut(&mut p, |off, chunk| {
            for (k, pi) in chunk.iter_mut().enumerate() {
                *pi = z[off + k] + beta * *pi;
            }
        });
    }
    Ok(CgReport {
        iterations: opts.max_iterations,
        final_relative_residual: res,
        converged: false,
    })
}

/// Strong imposition of `x_j = g_j` on constrained dofs.
#[derive(Debug, Clone)]
pub struct DirichletConstraints {
    values: BTreeMap<usize, f64>,
    n: usize,
}

impl DirichletConstraints {
    pub fn new(n: usize, constrained: &[(usize, f64)]) -> Result<Self> {
        let mut values = BTreeMap::new();
        for &(dof, g) in constrained {
            if dof >= n {
                return Err(Error::IndexOutOfRange {
                    row: dof,
                    col: dof,
                    nrows: n,
                    ncols: n,
                });
            }
            if let Some(&prev) = values.get(&dof) {
                if prev != g {
                    return Err(Error::ConflictingConstraint {
                        dof,
                        first: prev,
                        second: g,
                    });
                }
            }
            values.insert(dof, g);
        }
        Ok(DirichletConstraints { values, n })
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn contains(&self, dof: usize) -> bool {
        self.values.contains_key(&dof)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values.iter().map(|(&d, &g)| (d, g))
    }

    /// Zeroes constrained rows and columns and puts 1 on their diagonal.
    pub fn eliminate_matrix(&self, a: &CsrMatrix) -> Result<CsrMatrix> {
        self.check_dim(a)?;
        if self.values.is_empty() {
            return Ok(a.clone());
        }
        let mut t = Vec::with_capacity(a.nnz());
        for r in 0..a.nrows() {
            if self.contains(r) {
                t.push((r, r, 1.0));
                continue;
            }
            t.extend(a.row(r).filter(|(c, _)| !self.contains(*c)).map(|(c, v)| (r, c, v)));
        }
        CsrMatrix::from_triplets(a.nrows(), a.ncols(), &t)
    }

    /// Moves the known columns of the original matrix `a` to the right-hand
    /// side and sets constrained entries to their prescribed values.
    pub fn eliminate_rhs(&self, a: &CsrMatrix, b: &mut [f64]) -> Result<()> {
        self.check_dim(a)?;
        if b.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: b.len(),
            });
        }
        if self.values.is_empty() {
            return Ok(());
        }
        if self.values.values().any(|&g| g != 0.0) {
            for r in 0..a.nrows() {
                if self.contains(r) {
                    continue;
                }
                for (c, v) in a.row(r) {
                    if let Some(&g) = self.values.get(&c) {
                        b[r] -= v * g;
                    }
                }
            }
        }
        for (&dof, &g) in &self.values {
            b[dof] = g;
        }
        Ok(())
    }

    fn check_dim(&self, a: &CsrMatrix) -> Result<()> {
        if a.nrows() != self.n || a.ncols() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: a.nrows(),
            });
        }
        Ok(())
    }
}

/// Symmetric elimination of Dirichlet constraints from `A x = b`.
pub fn eliminate_dirichlet(
    a: &CsrMatrix,
    b: &[f64],
    constrained: &[(usize, f64)],
) -> Result<(CsrMatrix, Vec<f64>)> {
    let c = DirichletConstraints::new(a.nrows(), constrained)?;
    let reduced = c.eliminate_matrix(a)?;
    let mut rhs = b.to_vec();
    c.eliminate_rhs(a, &mut rhs)?;
    Ok((reduced, rhs))
}
