//! Minimal compressed-sparse-row matrices over complex doubles.
//!
//! Hand-rolled on purpose: the operator algebra here only needs triplet
//! construction, adjoints, products, Kronecker products and fast dense
//! left/right multiplication. Keeping the type local lets the Lindblad
//! right-hand side run allocation-free on the hot path, where a sparse
//! operator repeatedly hits a dense column-major density matrix.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

type C64 = Complex64;

#[derive(Clone, Debug, PartialEq)]
pub struct SpMat {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<C64>,
}

impl SpMat {
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, C64)]) -> Self {
        let mut entries: Vec<(usize, usize, C64)> = triplets
            .iter()
            .copied()
            .filter(|&(_, _, v)| v.re != 0.0 || v.im != 0.0)
            .collect();
        for &(r, c, _) in &entries {
            assert!(r < nrows && c < ncols, "triplet ({r},{c}) out of bounds");
        }
        entries.sort_by_key(|&(r, c, _)| (r, c));

        let mut merged: Vec<(usize, usize, C64)> = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            if let Some(last) = merged.last_mut() {
                if last.0 == r && last.1 == c {
                    last.2 += v;
                    continue;
                }
            }
            merged.push((r, c, v));
        }

        let mut row_ptr = vec![0usize; nrows + 1];
        for &(r, _, _) in &merged {
            row_ptr[r + 1] += 1;
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        SpMat {
            nrows,
            ncols,
            row_ptr,
            col_idx: merged.iter().map(|e| e.1).collect(),
            vals: merged.iter().map(|e| e.2).collect(),
        }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        SpMat {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let triplets: Vec<_> = (0..n).map(|i| (i, i, C64::new(1.0, 0.0))).collect();
        Self::from_triplets(n, n, &triplets)
    }

    pub fn from_dense(m: &DMatrix<C64>, drop_tol: f64) -> Self {
        let mut triplets = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let v = m[(r, c)];
                if v.norm() > drop_tol {
                    triplets.push((r, c, v));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), &triplets)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.iter() {
            out[(r, c)] += v;
        }
        out
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col_idx[k], self.vals[k]))
        })
    }

    pub fn adjoint(&self) -> Self {
        let triplets: Vec<_> = self.iter().map(|(r, c, v)| (c, r, v.conj())).collect();
        Self::from_triplets(self.ncols, self.nrows, &triplets)
    }

    pub fn transpose(&self) -> Self {
        let triplets: Vec<_> = self.iter().map(|(r, c, v)| (c, r, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, &triplets)
    }

    pub fn conjugate(&self) -> Self {
        let triplets: Vec<_> = self.iter().map(|(r, c, v)| (r, c, v.conj())).collect();
        Self::from_triplets(self.nrows, self.ncols, &triplets)
    }

    pub fn scaled(&self, alpha: C64) -> Self {
        let mut out = self.clone();
        for v in &mut out.vals {
            *v *= alpha;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut triplets: Vec<_> = self.iter().collect();
        triplets.extend(other.iter());
        Self::from_triplets(self.nrows, self.ncols, &triplets)
    }

    /// self * other, sparse result.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows, "matmul dimension mismatch");
        let n = other.ncols;
        let mut acc: Vec<C64> = vec![C64::new(0.0, 0.0); n];
        let mut touched: Vec<usize> = Vec::new();
        let mut triplets = Vec::new();
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let mid = self.col_idx[k];
                let v = self.vals[k];
                for k2 in other.row_ptr[mid]..other.row_ptr[mid + 1] {
                    let c = other.col_idx[k2];
                    if acc[c].re == 0.0 && acc[c].im == 0.0 {
                        touched.push(c);
                    }
                    acc[c] += v * other.vals[k2];
                }
            }
            for &c in &touched {
                triplets.push((r, c, acc[c]));
                acc[c] = C64::new(0.0, 0.0);
            }
            touched.clear();
        }
        Self::from_triplets(self.nrows, n, &triplets)
    }

    /// Kronecker product, self ⊗ other (left factor owns the slow index).
    pub fn kron(&self, other: &Self) -> Self {
        let mut triplets = Vec::with_capacity(self.nnz() * other.nnz());
        for (i, j, v) in self.iter() {
            for (p, q, w) in other.iter() {
                triplets.push((i * other.nrows + p, j * other.ncols + q, v * w));
            }
        }
        Self::from_triplets(self.nrows * other.nrows, self.ncols * other.ncols, &triplets)
    }

    pub fn mul_vec(&self, x: &DVector<C64>) -> DVector<C64> {
        assert_eq!(self.ncols, x.len());
        let mut out = DVector::zeros(self.nrows);
        for (r, c, v) in self.iter() {
            out[r] += v * x[c];
        }
        out
    }

    /// out += alpha * self * b (dense b, column-major accumulation).
    pub fn left_mul_into(&self, alpha: C64, b: &DMatrix<C64>, out: &mut DMatrix<C64>) {
        assert_eq!(self.ncols, b.nrows());
        assert_eq!(out.nrows(), self.nrows);
        assert_eq!(out.ncols(), b.ncols());
        let bn = b.nrows();
        let on = self.nrows;
        let bs = b.as_slice();
        let os = out.as_mut_slice();
        for c in 0..b.ncols() {
            let bcol = &bs[c * bn..(c + 1) * bn];
            let ocol = &mut os[c * on..(c + 1) * on];
            for i in 0..on {
                let mut acc = C64::new(0.0, 0.0);
                for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                    acc += self.vals[k] * bcol[self.col_idx[k]];
                }
                ocol[i] += alpha * acc;
            }
        }
    }

    /// out += alpha * b * self (axpy per sparse entry, column-major friendly).
    pub fn right_mul_into(&self, alpha: C64, b: &DMatrix<C64>, out: &mut DMatrix<C64>) {
        assert_eq!(b.ncols(), self.nrows);
        assert_eq!(out.nrows(), b.nrows());
        assert_eq!(out.ncols(), self.ncols);
        let rows = b.nrows();
        let bs = b.as_slice();
        let os = out.as_mut_slice();
        for i in 0..self.nrows {
            let bcol = &bs[i * rows..(i + 1) * rows];
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                let v = alpha * self.vals[k];
                let ocol = &mut os[j * rows..(j + 1) * rows];
                for r in 0..rows {
                    ocol[r] += v * bcol[r];
                }
            }
        }
    }

    /// tr(self * rho) for dense rho.
    pub fn expectation(&self, rho: &DMatrix<C64>) -> C64 {
        assert_eq!(self.ncols, rho.nrows());
        assert_eq!(self.nrows, rho.ncols());
        let mut acc = C64::new(0.0, 0.0);
        for (r, c, v) in self.iter() {
            acc += v * rho[(c, r)];
        }
        acc
    }

    /// <psi| self |psi> for a dense state vector.
    pub fn expectation_pure(&self, psi: &DVector<C64>) -> C64 {
        let y = self.mul_vec(psi);
        psi.dotc(&y)
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}
