//! Rumin's complex on a [`Model`].
//!
//! `R^k = Ω^{k,0} ⊖ Im d^{2,-1}` for `k ≤ m` and `R^k = Ω^{k-1,1} ∩ Ker d^{2,-1}`
//! for `k ≥ m+1`, realised pointwise by an orthonormal fiber basis `F_k`, so the
//! global embedding is `E_k = I ⊗ F_k` and `π = E_k E_k*`. Operators below act
//! on `R^k`-coordinates (`index = point * dim F_k + j`).

use nalgebra::DMatrix;

use crate::complex_ops::EpsilonFamily;
use crate::error::{Error, Result};
use crate::exterior::{ExteriorAlgebra, C64};
use crate::heisenberg::{FormField, ModeGrid, Model};
use crate::linalg::{self, NullTol};
use crate::sparse::Csr;

/// Dimension of `R^k` above which harmonic spaces use the Gram eigensolve.
pub const GRAM_LIMIT: usize = 1024;

/// Columns of the identity on `Λ^k` selecting the monomials of B-degree `q`.
fn bigrade_columns(alg: &ExteriorAlgebra, k: usize, q: usize) -> DMatrix<C64> {
    let idx = alg.bigrade_indices(k, q);
    DMatrix::from_fn(alg.dim(k), idx.len(), |r, c| C64::new(if r == idx[c] { 1.0 } else { 0.0 }, 0.0))
}

/// Orthonormal fiber basis of `R^k` inside `Λ^k` (columns).
pub fn rumin_fiber(alg: &ExteriorAlgebra, k: usize) -> DMatrix<C64> {
    let m = alg.m();
    if k <= m {
        let q0 = bigrade_columns(alg, k, 0);
        if k == 0 {
            return q0;
        }
        // x ∈ span(q0) with (d^{2,-1})* x = 0
        let image = alg.d21_matrix(k - 1);
        let y = linalg::null_space(&(image.adjoint() * &q0), NullTol::INVARIANT);
        &q0 * y
    } else {
        let q1 = bigrade_columns(alg, k, 1);
        let y = linalg::null_space(&(alg.d21_matrix(k) * &q1), NullTol::INVARIANT);
        &q1 * y
    }
}

/// Ranks of the pointwise `d^{2,-1}: Λ^k → Λ^{k+1}` for every `k`.
pub fn d21_ranks(alg: &ExteriorAlgebra) -> Vec<usize> {
    (0..=alg.top()).map(|k| linalg::rank(&alg.d21_matrix(k), NullTol::INVARIANT)).collect()
}

/// Discretised `R^k`: the fiber basis and its embedding into `Ω^k`.
#[derive(Clone, Debug)]
pub struct RuminBasis {
    pub k: usize,
    pub fiber: DMatrix<C64>,
    pub embed: Csr,
    pub npts: usize,
}

impl RuminBasis {
    pub fn new(model: &Model, k: usize) -> Result<Self> {
        if k > model.top() {
            return Err(Error::DegreeOutOfRange(k, model.top()));
        }
        let fiber = rumin_fiber(&model.alg, k);
        let embed = Csr::identity(model.npts).kron_fiber(&fiber);
        Ok(RuminBasis { k, fiber, embed, npts: model.npts })
    }

    pub fn fiber_dim(&self) -> usize {
        self.fiber.ncols()
    }

    pub fn dim(&self) -> usize {
        self.npts * self.fiber_dim()
    }

    /// `π = E E*` on `Ω^k`.
    pub fn projection(&self) -> Csr {
        self.embed.matmul(&self.embed.adjoint())
    }

    pub fn coordinates(&self, f: &FormField) -> Vec<C64> {
        self.embed.adjoint().mul_vec(&f.data)
    }

    pub fn lift(&self, model: &Model, coords: &[C64]) -> Result<FormField> {
        FormField::from_vec(model, self.k, self.embed.mul_vec(coords))
    }

    pub fn project(&self, model: &Model, f: &FormField) -> Result<FormField> {
        self.lift(model, &self.coordinates(f))
    }
}

/// All Rumin spaces and differentials of one model.
#[derive(Clone, Debug)]
pub struct RuminComplex {
    pub family: EpsilonFamily,
    pub bases: Vec<RuminBasis>,
    /// Pointwise inverse of `d^{2,-1}: Ω^{m-1,1} → Ω^{m+1,0}`, as a map `Λ^{m+1} → Λ^m`
    /// that vanishes on the `q = 1` part.
    pub b_inv: DMatrix<C64>,
}

impl RuminComplex {
    pub fn new(family: &EpsilonFamily) -> Result<Self> {
        let model = &family.model;
        let alg = &model.alg;
        let m = model.m();
        let bases = (0..=model.top()).map(|k| RuminBasis::new(model, k)).collect::<Result<Vec<_>>>()?;
        let src = bigrade_columns(alg, m, 1);
        let dst = bigrade_columns(alg, m + 1, 0);
        let block = dst.adjoint() * alg.d21_matrix(m) * &src;
        if block.nrows() != block.ncols() {
            return Err(Error::SingularLefschetz(0.0));
        }
        let sv = linalg::singular_values(&block);
        let smallest = sv.last().copied().unwrap_or(0.0);
        if smallest < 1e-12 {
            return Err(Error::SingularLefschetz(smallest));
        }
        let inv = block.try_inverse().ok_or(Error::SingularLefschetz(smallest))?;
        let b_inv = &src * inv * dst.adjoint();
        Ok(RuminComplex { family: family.clone(), bases, b_inv })
    }

    pub fn model(&self) -> &Model {
        &self.family.model
    }

    pub fn m(&self) -> usize {
        self.model().m()
    }

    pub fn fiber_dims(&self) -> Vec<usize> {
        self.bases.iter().map(RuminBasis::fiber_dim).collect()
    }

    pub fn basis(&self, k: usize) -> Result<&RuminBasis> {
        self.bases.get(k).ok_or(Error::DegreeOutOfRange(k, self.model().top()))
    }

    /// `d_ξ = π d^{1,0}: R^k → R^{k+1}`, `k ≠ m`; empty at the top degree.
    pub fn d_xi(&self, k: usize) -> Result<Csr> {
        if k == self.m() {
            return Err(Error::WrongDegree { degree: k, reason: "d_xi is not defined at k = m; use d_R" });
        }
        let src = self.basis(k)?;
        if k == self.model().top() {
            return Ok(Csr::zeros(0, src.dim()));
        }
        let dst = self.basis(k + 1)?;
        let d10 = &self.family.component(k)?.d10.matrix;
        Ok(dst.embed.adjoint().matmul(&d10.matmul(&src.embed)))
    }

    pub fn d_xi_apply(&self, k: usize, coords: &[C64]) -> Result<Vec<C64>> {
        if k == self.m() {
            return Err(Error::WrongDegree { degree: k, reason: "d_xi is not defined at k = m; use d_R" });
        }
        let src = self.basis(k)?;
        let dst = self.basis(k + 1)?;
        let d10 = &self.family.component(k)?.d10.matrix;
        Ok(dst.embed.adjoint().mul_vec(&d10.mul_vec(&src.embed.mul_vec(coords))))
    }

    fn b_inv_global(&self) -> Csr {
        Csr::identity(self.model().npts).kron_fiber(&self.b_inv)
    }

    /// `d_R = π (d^{0,1} − d^{1,0} (d^{2,-1})^{-1} d^{1,0}): R^m → R^{m+1}`.
    pub fn d_r(&self) -> Result<Csr> {
        let m = self.m();
        let src = self.basis(m)?;
        let dst = self.basis(m + 1)?;
        let cm = self.family.component(m)?;
        let d10e = cm.d10.matrix.matmul(&src.embed);
        let gamma = self.b_inv_global().matmul(&d10e);
        let inner = cm.d01.matrix.matmul(&src.embed).sub(&cm.d10.matrix.matmul(&gamma));
        Ok(dst.embed.adjoint().matmul(&inner))
    }

    pub fn d_r_apply(&self, coords: &[C64]) -> Result<Vec<C64>> {
        let m = self.m();
        let src = self.basis(m)?;
        let dst = self.basis(m + 1)?;
        let cm = self.family.component(m)?;
        let alpha = src.embed.mul_vec(coords);
        let gamma = self.b_inv_global().mul_vec(&cm.d10.matrix.mul_vec(&alpha));
        let a = cm.d01.matrix.mul_vec(&alpha);
        let b = cm.d10.matrix.mul_vec(&gamma);
        let diff: Vec<C64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        Ok(dst.embed.adjoint().mul_vec(&diff))
    }

    /// The out-differential of `R^k` (`d_ξ`, or `d_R` at `k = m`); `None` at the top.
    pub fn out_differential(&self, k: usize) -> Result<Option<Csr>> {
        if k == self.m() {
            Ok(Some(self.d_r()?))
        } else if k >= self.model().top() {
            Ok(None)
        } else {
            Ok(Some(self.d_xi(k)?))
        }
    }

    /// The differential arriving in `R^k`; `None` at `k = 0`.
    pub fn in_differential(&self, k: usize) -> Result<Option<Csr>> {
        if k == 0 {
            Ok(None)
        } else {
            self.out_differential(k - 1)
        }
    }

    /// `α = α₁ + L α₂` with `α₁ ∈ R^m`, `α₂ ∈ Ω^{m-2,0}`; `α₂` is `None` when `m < 2`.
    pub fn lefschetz_split(&self, alpha: &FormField) -> Result<(FormField, Option<FormField>)> {
        let model = self.model();
        let m = self.m();
        if alpha.k != m || alpha.bigrade_part(&model.alg, 1).norm_l2() > 0.0 {
            return Err(Error::WrongBigrade {
                expected: format!("({m},0)"),
                got: format!("degree {}", alpha.k),
            });
        }
        let rm = self.basis(m)?;
        let alpha1 = rm.project(model, alpha)?;
        if m < 2 {
            return Ok((alpha1, None));
        }
        let rest = alpha.sub(&alpha1);
        let alg = &model.alg;
        let src = bigrade_columns(alg, m - 2, 0);
        let l = alg.lefschetz_matrix(m - 2) * &src;
        let pinv = l
            .clone()
            .pseudo_inverse(1e-12)
            .map_err(|e| Error::Invalid(format!("Lefschetz pseudo-inverse: {e}")))?;
        let solve = Csr::identity(model.npts).kron_fiber(&(&src * pinv));
        let alpha2 = FormField::from_vec(model, m - 2, solve.mul_vec(&rest.data))?;
        Ok((alpha1, Some(alpha2)))
    }

    /// `d_R* d_R + (d_ξ d_ξ*)²` on `R^m`, with `d_ξ: R^{m-1} → R^m`.
    pub fn middle_operator(&self) -> Result<DMatrix<C64>> {
        let dr = self.d_r()?.to_dense();
        let din = self.d_xi(self.m() - 1)?.to_dense();
        let dd = &din * din.adjoint();
        Ok(dr.adjoint() * dr + &dd * &dd)
    }

    /// Joint kernel of the out-differential and the adjoint of the in-differential on `R^k`,
    /// as an orthonormal basis of `R^k`-coordinate columns.
    ///
    /// Above [`GRAM_LIMIT`] columns the kernel is read off the eigenvalues of the Gram
    /// operator `out* out + in in*` (singular values `√μ`), which is several times
    /// cheaper than the SVD of the stacked matrix and resolves gaps down to `~1e-8`.
    pub fn harmonic_space(&self, k: usize, tol: NullTol) -> Result<DMatrix<C64>> {
        let n = self.basis(k)?.dim();
        let out = self.out_differential(k)?;
        let inc = self.in_differential(k)?;
        if n > GRAM_LIMIT {
            let mut gram = DMatrix::zeros(n, n);
            if let Some(o) = &out {
                gram += linalg::gram(&o.to_dense());
            }
            if let Some(i) = &inc {
                gram += linalg::gram(&i.adjoint().to_dense());
            }
            let (mu, vecs) = linalg::hermitian_eig(&gram);
            let sv: Vec<f64> = mu.iter().rev().map(|x| x.max(0.0).sqrt()).collect();
            let r = linalg::rank_from_singular(&sv, n, tol);
            return Ok(vecs.columns(0, n - r).into_owned());
        }
        let mut blocks: Vec<DMatrix<C64>> = Vec::new();
        if let Some(o) = out {
            blocks.push(o.to_dense());
        }
        if let Some(i) = inc {
            blocks.push(i.adjoint().to_dense());
        }
        Ok(linalg::null_space(&stack(&blocks, n), tol))
    }

    /// Direct dimension of the discretised spectral-sequence term `Ē^k_l` (`l ≥ 1`).
    pub fn ebar_space(&self, k: usize, l: usize, tol: NullTol) -> Result<DMatrix<C64>> {
        let m = self.m();
        let basis = self.basis(k)?;
        let n = basis.dim();
        if l <= 1 {
            return Ok(DMatrix::identity(n, n));
        }
        if (k != m && k != m + 1) || l >= 3 {
            return self.harmonic_space(k, tol);
        }
        // l = 2 in the middle degrees: the kernel of the unprojected d^{1,0} or its adjoint
        let op = if k == m {
            if k == 0 {
                return Ok(DMatrix::identity(n, n));
            }
            let d = &self.family.component(k - 1)?.d10.matrix;
            d.adjoint().matmul(&basis.embed)
        } else {
            let d = &self.family.component(k)?.d10.matrix;
            d.matmul(&basis.embed)
        };
        Ok(linalg::null_space(&op.to_dense(), tol))
    }
}

fn stack(blocks: &[DMatrix<C64>], ncols: usize) -> DMatrix<C64> {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(rows, ncols);
    let mut r = 0;
    for b in blocks {
        out.view_mut((r, 0), (b.nrows(), ncols)).copy_from(b);
        r += b.nrows();
    }
    out
}

/// Fitted growth exponent of `‖A f_κ‖ / ‖f_κ‖` against the probe frequency `κ`.
pub fn order_fit(freqs: &[f64], ratios: &[f64]) -> Option<(f64, f64)> {
    linalg::loglog_slope(freqs, ratios)
}

/// Width of the twisted wave packets used as symbol probes in `n ≠ 0` sectors.
pub const SYMBOL_SIGMA: f64 = 0.15;

/// Growth exponent (and fit RMS) of the out-differential of `R^k` on probes of
/// frequency `κ` along every `(x_i, y_i)` pair: plane waves in the `n = 0` sector,
/// twisted packets otherwise. `d_ξ` should give 1, `d_R` 2. `None` at the top degree.
pub fn symbol_order(rc: &RuminComplex, grid: &ModeGrid, k: usize, kappas: &[f64]) -> Result<Option<(f64, f64)>> {
    let m = rc.m();
    let model = rc.model();
    if k >= model.top() {
        return Ok(None);
    }
    let fd = rc.basis(k)?.fiber_dim();
    let mut ratios = Vec::with_capacity(kappas.len());
    for &kappa in kappas {
        let g = if grid.n == 0 {
            let kk = vec![kappa.round() as i64; m];
            grid.plane_wave(&kk, &kk)?
        } else {
            grid.probe(&vec![kappa; m], &vec![kappa.round() as i64; m], SYMBOL_SIGMA, 0.5)
        };
        let (mut num, mut den) = (0.0, 0.0);
        for j in 0..fd {
            let mut coords = vec![C64::new(0.0, 0.0); g.len() * fd];
            for (p, v) in g.iter().enumerate() {
                coords[p * fd + j] = *v;
            }
            let out = if k == m { rc.d_r_apply(&coords)? } else { rc.d_xi_apply(k, &coords)? };
            num += out.iter().map(|z| z.norm_sqr()).sum::<f64>();
            den += coords.iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
        ratios.push((num / den).sqrt());
    }
    Ok(order_fit(kappas, &ratios))
}
