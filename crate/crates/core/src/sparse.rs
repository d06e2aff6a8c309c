//! Compressed sparse row matrices over `C64`, with just the operations the
//! operator assembly needs.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::exterior::C64;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct Csr {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<C64>,
}

impl Csr {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Csr {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            data: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![C64::new(1.0, 0.0); n])
    }

    pub fn diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        Csr {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            data: diag.to_vec(),
        }
    }

    /// Duplicates are summed; entries that are exactly zero afterwards are dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, mut trip: Vec<(usize, usize, C64)>) -> Self {
        trip.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(trip.len());
        let mut data: Vec<C64> = Vec::with_capacity(trip.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in trip {
            assert!(r < nrows && c < ncols, "triplet ({r},{c}) outside {nrows}x{ncols}");
            if last == Some((r, c)) {
                *data.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                data.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        Csr { nrows, ncols, indptr, indices, data }.pruned()
    }

    pub fn from_dense(mat: &DMatrix<C64>) -> Self {
        let mut trip = Vec::new();
        for r in 0..mat.nrows() {
            for c in 0..mat.ncols() {
                let v = mat[(r, c)];
                if v != ZERO {
                    trip.push((r, c, v));
                }
            }
        }
        Self::from_triplets(mat.nrows(), mat.ncols(), trip)
    }

    fn pruned(self) -> Self {
        if self.data.iter().all(|v| *v != ZERO) {
            return self;
        }
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::new();
        let mut data = Vec::new();
        for r in 0..self.nrows {
            for p in self.indptr[r]..self.indptr[r + 1] {
                if self.data[p] != ZERO {
                    indices.push(self.indices[p]);
                    data.push(self.data[p]);
                }
            }
            indptr[r + 1] = indices.len();
        }
        Csr { nrows: self.nrows, ncols: self.ncols, indptr, indices, data }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        (self.indptr[r]..self.indptr[r + 1]).map(move |p| (self.indices[p], self.data[p]))
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.nrows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.ncols, "mul_vec: length mismatch");
        let row = |r: usize| self.row(r).map(|(c, v)| v * x[c]).sum::<C64>();
        if self.nnz() > 1 << 16 {
            (0..self.nrows).into_par_iter().map(row).collect()
        } else {
            (0..self.nrows).map(row).collect()
        }
    }

    pub fn mul_dvec(&self, x: &DVector<C64>) -> DVector<C64> {
        DVector::from_vec(self.mul_vec(x.as_slice()))
    }

    /// `self · X` for a dense block of columns.
    pub fn mul_dense(&self, x: &DMatrix<C64>) -> DMatrix<C64> {
        assert_eq!(x.nrows(), self.ncols, "mul_dense: shape mismatch");
        let cols: Vec<Vec<C64>> = (0..x.ncols())
            .into_par_iter()
            .map(|j| self.mul_vec(x.column(j).as_slice()))
            .collect();
        DMatrix::from_fn(self.nrows, x.ncols(), |r, j| cols[j][r])
    }

    pub fn adjoint(&self) -> Self {
        let trip = self.triplets().map(|(r, c, v)| (c, r, v.conj())).collect();
        Self::from_triplets(self.ncols, self.nrows, trip)
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= s);
        out.pruned()
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn add(&self, other: &Csr) -> Self {
        assert_eq!(self.shape(), other.shape(), "add: shape mismatch");
        let trip = self.triplets().chain(other.triplets()).collect();
        Self::from_triplets(self.nrows, self.ncols, trip)
    }

    pub fn sub(&self, other: &Csr) -> Self {
        self.add(&other.scale_re(-1.0))
    }

    pub fn matmul(&self, other: &Csr) -> Self {
        assert_eq!(self.ncols, other.nrows, "matmul: shape mismatch");
        let rows: Vec<Vec<(usize, C64)>> = (0..self.nrows)
            .into_par_iter()
            .map(|r| {
                let mut acc: std::collections::BTreeMap<usize, C64> = Default::default();
                for (k, a) in self.row(r) {
                    for (c, b) in other.row(k) {
                        *acc.entry(c).or_insert(ZERO) += a * b;
                    }
                }
                acc.into_iter().filter(|(_, v)| *v != ZERO).collect()
            })
            .collect();
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::new();
        let mut data = Vec::new();
        for (r, row) in rows.into_iter().enumerate() {
            for (c, v) in row {
                indices.push(c);
                data.push(v);
            }
            indptr[r + 1] = indices.len();
        }
        Csr { nrows: self.nrows, ncols: other.ncols, indptr, indices, data }
    }

    /// `self ⊗ fiber` in the point-major layout `index = point * fiber_dim + component`.
    pub fn kron_fiber(&self, fiber: &DMatrix<C64>) -> Self {
        let (fr, fc) = fiber.shape();
        let nz: Vec<(usize, usize, C64)> = (0..fr)
            .flat_map(|i| (0..fc).map(move |j| (i, j)))
            .filter_map(|(i, j)| {
                let v = fiber[(i, j)];
                (v != ZERO).then_some((i, j, v))
            })
            .collect();
        let mut trip = Vec::with_capacity(self.nnz() * nz.len());
        for (r, c, a) in self.triplets() {
            for &(i, j, b) in &nz {
                trip.push((r * fr + i, c * fc + j, a * b));
            }
        }
        Self::from_triplets(self.nrows * fr, self.ncols * fc, trip)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest absolute row sum, an upper bound for the spectral norm of Hermitian matrices.
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows).map(|r| self.row(r).map(|(_, v)| v.norm()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sample() -> Csr {
        Csr::from_triplets(
            2,
            3,
            vec![(0, 0, c(1.0, 1.0)), (1, 2, c(2.0, 0.0)), (0, 0, c(1.0, 0.0)), (1, 1, c(0.0, 0.0))],
        )
    }

    #[test]
    fn triplets_sum_and_prune() {
        let a = sample();
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.to_dense()[(0, 0)], c(2.0, 1.0));
    }

    #[test]
    fn dense_agreement() {
        let a = sample();
        let b = Csr::from_triplets(3, 2, vec![(0, 1, c(0.0, 1.0)), (2, 0, c(3.0, 0.0)), (1, 1, c(1.0, 0.0))]);
        assert_eq!(a.matmul(&b).to_dense(), a.to_dense() * b.to_dense());
        assert_eq!(a.adjoint().to_dense(), a.to_dense().adjoint());
        let x = vec![c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 2.0)];
        let y = a.mul_vec(&x);
        let yd = a.to_dense() * DVector::from_vec(x);
        assert_eq!(y, yd.as_slice());
    }

    #[test]
    fn kron_layout() {
        let p = Csr::from_triplets(2, 2, vec![(0, 1, c(2.0, 0.0))]);
        let f = DMatrix::from_row_slice(2, 1, &[c(1.0, 0.0), c(0.0, 1.0)]);
        let k = p.kron_fiber(&f).to_dense();
        assert_eq!(k.shape(), (4, 2));
        assert_eq!(k[(0, 1)], c(2.0, 0.0));
        assert_eq!(k[(1, 1)], c(0.0, 2.0));
        assert_eq!(k.iter().filter(|v| **v != ZERO).count(), 2);
    }
}
