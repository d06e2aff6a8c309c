//! Smallest eigenpairs of Hermitian positive semidefinite operators.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exterior::C64;
use crate::linalg;
use crate::sparse::Csr;

/// Largest dimension solved densely under [`Strategy::Auto`].
pub const DENSE_LIMIT: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Strategy {
    /// Dense up to [`DENSE_LIMIT`], block LOBPCG above.
    Auto { seed: u64 },
    Dense,
    Lobpcg { seed: u64, max_iter: usize, tol: f64 },
}

impl Default for Strategy {
    fn default() -> Self {
        Strategy::Auto { seed: 0 }
    }
}

#[derive(Clone, Debug)]
pub struct EigenPair {
    pub lambda: f64,
    /// Unit coefficient vector.
    pub vector: DVector<C64>,
    /// `‖A v − λ v‖`.
    pub residual: f64,
}

impl EigenPair {
    pub fn accepted(&self) -> bool {
        self.residual <= 1e-8 * self.lambda.abs().max(1.0)
    }
}

#[derive(Clone, Debug)]
pub struct Solve {
    pub pairs: Vec<EigenPair>,
    pub converged: bool,
    pub iterations: usize,
}

impl Solve {
    pub fn worst_residual(&self) -> f64 {
        self.pairs.iter().map(|p| p.residual).fold(0.0, f64::max)
    }

    /// Turns a non-converged solve into an error carrying the achieved residual.
    pub fn into_result(self) -> Result<Solve> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NoConvergence { iterations: self.iterations, worst_residual: self.worst_residual() })
        }
    }
}

fn residual_dense(a: &DMatrix<C64>, v: &DVector<C64>, lambda: f64) -> f64 {
    (a * v - v * C64::new(lambda, 0.0)).norm()
}

pub fn eigensolve_dense(a: &DMatrix<C64>, count: usize) -> Solve {
    let (vals, vecs) = linalg::hermitian_eig(a);
    let pairs: Vec<EigenPair> = (0..count.min(vals.len()))
        .map(|i| {
            let v = vecs.column(i).into_owned();
            EigenPair { lambda: vals[i], residual: residual_dense(a, &v, vals[i]), vector: v }
        })
        .collect();
    let converged = pairs.iter().all(EigenPair::accepted);
    Solve { pairs, converged, iterations: 1 }
}

pub fn eigensolve(op: &Csr, count: usize, strategy: Strategy) -> Result<Solve> {
    if op.nrows() != op.ncols() {
        return Err(Error::Dimension(format!("eigensolve needs a square operator, got {:?}", op.shape())));
    }
    if count == 0 {
        return Err(Error::Invalid("eigenpair count must be at least 1".into()));
    }
    let n = op.nrows();
    match strategy {
        Strategy::Dense => Ok(eigensolve_dense(&op.to_dense(), count)),
        Strategy::Auto { .. } if n <= DENSE_LIMIT => Ok(eigensolve_dense(&op.to_dense(), count)),
        Strategy::Auto { seed } => Ok(lobpcg(op, count, seed, 500, 1e-9)),
        Strategy::Lobpcg { seed, max_iter, tol } => Ok(lobpcg(op, count, seed, max_iter, tol)),
    }
}

/// Rayleigh–Ritz on the orthonormal columns `q`: the lowest `b` Ritz pairs.
fn rayleigh_ritz(op: &Csr, q: &DMatrix<C64>, b: usize) -> (Vec<f64>, DMatrix<C64>, DMatrix<C64>) {
    let aq = op.mul_dense(q);
    let (vals, vecs) = linalg::hermitian_eig(&(q.adjoint() * &aq));
    let c = vecs.columns(0, b.min(vals.len())).into_owned();
    (vals[..c.ncols()].to_vec(), q * &c, aq * c)
}

/// Block locally optimal preconditioned CG without preconditioner, with a seeded start.
fn lobpcg(op: &Csr, count: usize, seed: u64, max_iter: usize, tol: f64) -> Solve {
    let n = op.nrows();
    let b = (count + count.div_ceil(2).max(2)).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = DMatrix::from_fn(n, b, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let mut x = linalg::orthonormalize(&start, 1e-10);
    let (mut vals, mut xr, mut ax) = rayleigh_ritz(op, &x, b);
    x = xr.clone();
    let mut p: Option<DMatrix<C64>> = None;
    let mut iterations = 0;
    for it in 0..max_iter {
        iterations = it + 1;
        let lam = DMatrix::from_diagonal(&DVector::from_iterator(vals.len(), vals.iter().map(|&l| C64::new(l, 0.0))));
        let r = &ax - &x * lam;
        let res: Vec<f64> = (0..x.ncols()).map(|j| r.column(j).norm()).collect();
        if (0..count.min(vals.len())).all(|j| res[j] <= tol * vals[j].abs().max(1.0)) {
            break;
        }
        let mut cols: Vec<DVector<C64>> = x.column_iter().map(|c| c.into_owned()).collect();
        cols.extend(r.column_iter().map(|c| c.into_owned()));
        if let Some(pp) = &p {
            cols.extend(pp.column_iter().map(|c| c.into_owned()));
        }
        let basis = linalg::orthonormalize(&DMatrix::from_columns(&cols), 1e-12);
        let (v2, x2, ax2) = rayleigh_ritz(op, &basis, b);
        let overlap = x.adjoint() * &x2;
        p = Some(&x2 - &x * overlap);
        vals = v2;
        xr = x2;
        ax = ax2;
        x = xr.clone();
    }
    let pairs: Vec<EigenPair> = (0..count.min(vals.len()))
        .map(|j| {
            let v = x.column(j).into_owned();
            let av = op.mul_dvec(&v);
            let residual = (av - &v * C64::new(vals[j], 0.0)).norm();
            EigenPair { lambda: vals[j], vector: v, residual }
        })
        .collect();
    let converged = pairs.iter().all(|p| p.residual <= tol.max(1e-8) * p.lambda.abs().max(1.0));
    Solve { pairs, converged, iterations }
}
