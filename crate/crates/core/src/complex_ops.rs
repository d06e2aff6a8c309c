//! Global operators of the bigraded de Rham complex on a [`Model`].
//!
//! With the coframe `e^a, ξ` the exterior derivative splits exactly as
//! `d^{1,0} = Σ_a e^a ∧ D_{e_a}`, `d^{0,1} = ξ ∧ D_v` and
//! `d^{2,-1} = L ∘ i(v)`; the zeroth-order pieces of `d^{1,0}` and `d^{0,1}`
//! vanish on this frame because `de^a = 0` and `dξ` is absorbed in `d^{2,-1}`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::exterior::{CoframeLabel, C64};
use crate::heisenberg::{FormField, Model, ModeGrid};
use crate::sparse::Csr;

/// A sparse map `Ω^domain → Ω^codomain` with its bigrade shift and ε-power.
#[derive(Clone, Debug)]
pub struct OperatorHandle {
    pub matrix: Csr,
    pub domain: usize,
    pub codomain: usize,
    pub shift: (i32, i32),
    pub eps_power: i32,
}

impl OperatorHandle {
    pub fn apply(&self, f: &FormField) -> Result<FormField> {
        if f.k != self.domain || f.data.len() != self.matrix.ncols() {
            return Err(Error::Dimension(format!(
                "operator on degree {} applied to a degree-{} field",
                self.domain, f.k
            )));
        }
        let data = self.matrix.mul_vec(&f.data);
        let fdim = if f.npts == 0 { 0 } else { data.len() / f.npts };
        Ok(FormField { k: self.codomain, npts: f.npts, fdim, weight: f.weight, data })
    }

    /// `L²`-adjoint. The quadrature weight is uniform, so this is the conjugate transpose.
    pub fn adjoint(&self) -> OperatorHandle {
        OperatorHandle {
            matrix: self.matrix.adjoint(),
            domain: self.codomain,
            codomain: self.domain,
            shift: (-self.shift.0, -self.shift.1),
            eps_power: -self.eps_power,
        }
    }
}

/// The three bigraded pieces of `d` on `Ω^k`.
#[derive(Clone, Debug)]
pub struct Components {
    pub k: usize,
    pub d21: OperatorHandle,
    pub d10: OperatorHandle,
    pub d01: OperatorHandle,
}

fn check_degree(model: &Model, k: usize) -> Result<()> {
    if k > model.top() {
        Err(Error::DegreeOutOfRange(k, model.top()))
    } else {
        Ok(())
    }
}

pub fn assemble_components(model: &Model, k: usize) -> Result<Components> {
    check_degree(model, k)?;
    let alg = &model.alg;
    let npts = model.npts;
    let ident = Csr::identity(npts);
    let rows = npts * alg.dim(k + 1);
    let cols = npts * alg.dim(k);
    let mut d10 = Csr::zeros(rows, cols);
    for (a, deriv) in model.derivs.iter().enumerate() {
        d10 = d10.add(&deriv.kron_fiber(&alg.wedge_matrix(CoframeLabel::A(a), k)));
    }
    let d01 = ident.kron_fiber(&(alg.wedge_matrix(CoframeLabel::Xi, k) * model.dv));
    let d21 = ident.kron_fiber(&alg.d21_matrix(k));
    let handle = |matrix, shift, eps_power| OperatorHandle { matrix, domain: k, codomain: k + 1, shift, eps_power };
    Ok(Components {
        k,
        d21: handle(d21, (2, -1), -1),
        d10: handle(d10, (1, 0), 0),
        d01: handle(d01, (0, 1), 1),
    })
}

/// The rescaled differentials in every degree of one model.
#[derive(Clone, Debug)]
pub struct EpsilonFamily {
    pub model: Model,
    pub components: Vec<Components>,
}

impl EpsilonFamily {
    pub fn new(model: &Model) -> Result<Self> {
        let components = (0..=model.top())
            .map(|k| assemble_components(model, k))
            .collect::<Result<Vec<_>>>()?;
        Ok(EpsilonFamily { model: model.clone(), components })
    }

    pub fn component(&self, k: usize) -> Result<&Components> {
        self.components.get(k).ok_or(Error::DegreeOutOfRange(k, self.model.top()))
    }

    /// Plain `d = d^{2,-1} + d^{1,0} + d^{0,1}` on `Ω^k`.
    pub fn d(&self, k: usize) -> Result<Csr> {
        self.d_eps(k, 1.0)
    }

    /// `d_ε = ε^{-1} d^{2,-1} + d^{1,0} + ε d^{0,1}` on `Ω^k`.
    pub fn d_eps(&self, k: usize, eps: f64) -> Result<Csr> {
        check_eps(eps)?;
        let c = self.component(k)?;
        Ok(c.d21
            .matrix
            .scale_re(1.0 / eps)
            .add(&c.d10.matrix)
            .add(&c.d01.matrix.scale_re(eps)))
    }

    /// `Δ_ε = d_ε* d_ε + d_ε d_ε*` on `Ω^k`.
    pub fn laplacian(&self, k: usize, eps: f64) -> Result<Csr> {
        let up = self.d_eps(k, eps)?;
        let mut lap = up.adjoint().matmul(&up);
        if k > 0 {
            let down = self.d_eps(k - 1, eps)?;
            lap = lap.add(&down.matmul(&down.adjoint()));
        }
        Ok(lap)
    }

    pub fn laplacian_dense(&self, k: usize, eps: f64) -> Result<DMatrix<C64>> {
        let up = self.d_eps(k, eps)?.to_dense();
        let mut lap = up.adjoint() * &up;
        if k > 0 {
            let down = self.d_eps(k - 1, eps)?.to_dense();
            lap += &down * down.adjoint();
        }
        Ok(lap)
    }

    /// `d_ε d_ε f` for `f ∈ Ω^k`, `k + 2 ≤ 2m + 1`.
    pub fn d_eps_squared_apply(&self, f: &FormField, eps: f64) -> Result<FormField> {
        let k = f.k;
        let once = self.d_eps(k, eps)?.mul_vec(&f.data);
        let twice = self.d_eps(k + 1, eps)?.mul_vec(&once);
        FormField::from_vec(&self.model, k + 2, twice)
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveEpsilon(eps))
    }
}

/// `Θ_ε` on `Ω^k`: multiplies the `q = 1` components by `ε`.
pub fn theta(model: &Model, k: usize, eps: f64) -> Result<Csr> {
    check_eps(eps)?;
    check_degree(model, k)?;
    let alg = &model.alg;
    let fiber: Vec<C64> = alg
        .basis(k)
        .iter()
        .map(|&mask| C64::new(if mask & alg.xi_mask() != 0 { eps } else { 1.0 }, 0.0))
        .collect();
    let diag: Vec<C64> = (0..model.npts).flat_map(|_| fiber.iter().copied()).collect();
    Ok(Csr::diagonal(&diag))
}

pub fn theta_rescale(model: &Model, f: &FormField, eps: f64) -> Result<FormField> {
    let t = theta(model, f.k, eps)?;
    FormField::from_vec(model, f.k, t.mul_vec(&f.data))
}

/// `Q = (d^{0,1})* d^{1,0} + (d^{1,0})* d^{0,1} + d^{0,1} (d^{1,0})* + d^{1,0} (d^{0,1})*` on `Ω^k`.
pub fn build_q(family: &EpsilonFamily, k: usize) -> Result<Csr> {
    let c = family.component(k)?;
    let n = family.model.field_dim(k);
    let mut q = c.d01.matrix.adjoint().matmul(&c.d10.matrix).add(&c.d10.matrix.adjoint().matmul(&c.d01.matrix));
    if k > 0 {
        let b = family.component(k - 1)?;
        q = q
            .add(&b.d01.matrix.matmul(&b.d10.matrix.adjoint()))
            .add(&b.d10.matrix.matmul(&b.d01.matrix.adjoint()));
    }
    debug_assert_eq!(q.shape(), (n, n));
    Ok(q)
}

/// Worst relative defects over the smooth twisted probe family of a grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeDefects {
    /// `max ‖d_ε d_ε f‖ / ‖f‖` over probes `f = g·e^I` in every degree.
    pub d_eps_squared: f64,
    /// `max ‖([D_{e_i}, D_{e_{m+i}}] − D_v) g‖ / ‖g‖` over scalar probes and `i`.
    pub bracket: f64,
}

/// Wave-packet widths below ~0.08 are under-resolved at `N = 8`.
pub const PROBE_SIGMA: f64 = 0.1;

pub fn probe_defects(grid: &ModeGrid, eps: f64) -> Result<ProbeDefects> {
    let m = grid.m();
    let model = grid.model();
    let family = EpsilonFamily::new(&model)?;
    let mut scalars = Vec::new();
    for kx in [1.0, 2.0] {
        for ky in [0i64, 1] {
            scalars.push(grid.probe(&vec![kx; m], &vec![ky; m], PROBE_SIGMA, 0.5));
        }
    }
    let norm = |v: &[C64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut bracket: f64 = 0.0;
    for g in &scalars {
        for i in 0..m {
            let a = &model.derivs[i];
            let b = &model.derivs[m + i];
            let ab = a.mul_vec(&b.mul_vec(g));
            let ba = b.mul_vec(&a.mul_vec(g));
            let defect: Vec<C64> = ab.iter().zip(&ba).zip(g).map(|((x, y), z)| x - y - model.dv * z).collect();
            bracket = bracket.max(norm(&defect) / norm(g));
        }
    }
    let mut d2: f64 = 0.0;
    for k in 0..model.top().saturating_sub(1) {
        let fd = model.alg.dim(k);
        for c in 0..fd {
            let mut fiber = vec![C64::new(0.0, 0.0); fd];
            fiber[c] = C64::new(1.0, 0.0);
            for g in &scalars {
                let f = FormField::from_scalar(&model, k, g, &fiber);
                let r = family.d_eps_squared_apply(&f, eps)?;
                d2 = d2.max(r.norm_l2() / f.norm_l2());
            }
        }
    }
    Ok(ProbeDefects { d_eps_squared: d2, bracket })
}

/// Norms of a field: `L²`, the horizontal `H^1_c`/`H^2_c` seminorms and the `D_v` seminorm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SobolevNorms {
    pub l2: f64,
    pub h1c_semi: f64,
    /// `sqrt(‖ω‖²_{L²} + |ω|²_{H^1_c})`, the norm used in thresholds.
    pub h1c: f64,
    pub h2c_semi: f64,
    pub dv_semi: f64,
}

pub fn sobolev_norms(model: &Model, f: &FormField) -> SobolevNorms {
    let m2 = 2 * model.m();
    let first: Vec<FormField> = (0..m2).map(|a| model.frame_derivative(a, f)).collect();
    let h1 = first.iter().map(|g| g.norm_l2().powi(2)).sum::<f64>();
    let h2 = first
        .iter()
        .flat_map(|g| (0..m2).map(move |b| model.frame_derivative(b, g).norm_l2().powi(2)))
        .sum::<f64>();
    let l2 = f.norm_l2();
    SobolevNorms {
        l2,
        h1c_semi: h1.sqrt(),
        h1c: (l2 * l2 + h1).sqrt(),
        h2c_semi: h2.sqrt(),
        dv_semi: model.frame_derivative(m2, f).norm_l2(),
    }
}

/// The quantities entering the a-priori estimate for `ω = α + β`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Diagnostics {
    pub eps: f64,
    /// `Re (Δ_ε ω, α)` and `Re (Δ_ε ω, β)`.
    pub lap_alpha: f64,
    pub lap_beta: f64,
    /// `ε^{-2} ‖(d^{2,-1})* α‖²` and `ε^{-2} ‖d^{2,-1} β‖²`.
    pub d21_adj_alpha: f64,
    pub d21_beta: f64,
    /// `ε^{-1} ‖d^{2,-1} β‖`.
    pub d21_beta_scaled: f64,
    pub alpha: SobolevNorms,
    pub beta: SobolevNorms,
    /// `ε² ‖D_v α‖²` and `ε² ‖D_v β‖²`.
    pub dv_alpha: f64,
    pub dv_beta: f64,
}

pub fn estimate_diagnostics(family: &EpsilonFamily, omega: &FormField, eps: f64) -> Result<Diagnostics> {
    check_eps(eps)?;
    let lap = family.laplacian(omega.k, eps)?;
    diagnostics_with_laplacian(family, &lap, omega, eps)
}

/// As [`estimate_diagnostics`] with a prebuilt `Δ_ε` on `Ω^k`.
pub fn diagnostics_with_laplacian(
    family: &EpsilonFamily,
    lap: &Csr,
    omega: &FormField,
    eps: f64,
) -> Result<Diagnostics> {
    check_eps(eps)?;
    let model = &family.model;
    let k = omega.k;
    let alpha = omega.bigrade_part(&model.alg, 0);
    let beta = omega.bigrade_part(&model.alg, 1);
    let lw = FormField::from_vec(model, k, lap.mul_vec(&omega.data))?;
    let c = family.component(k)?;
    let d21_beta = c.d21.apply(&beta)?.norm_l2();
    let d21_adj_alpha = if k == 0 {
        0.0
    } else {
        family.component(k - 1)?.d21.adjoint().apply(&alpha)?.norm_l2()
    };
    let a = sobolev_norms(model, &alpha);
    let b = sobolev_norms(model, &beta);
    Ok(Diagnostics {
        eps,
        lap_alpha: lw.inner(&alpha).re,
        lap_beta: lw.inner(&beta).re,
        d21_adj_alpha: (d21_adj_alpha / eps).powi(2),
        d21_beta: (d21_beta / eps).powi(2),
        d21_beta_scaled: d21_beta / eps,
        dv_alpha: (eps * a.dv_semi).powi(2),
        dv_beta: (eps * b.dv_semi).powi(2),
        alpha: a,
        beta: b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::PointForm;
    use crate::heisenberg::{InvariantModel, ModeGrid};
    use std::f64::consts::PI;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn invariant_components_on_xi() {
        let model = InvariantModel::new(1).model();
        let fam = EpsilonFamily::new(&model).unwrap();
        let xi = PointForm::label(&model.alg, CoframeLabel::Xi);
        let f = FormField::from_vec(&model, 1, xi.coeffs).unwrap();
        let comp = fam.component(1).unwrap();
        assert_eq!(comp.d21.apply(&f).unwrap().data, model.alg.dxi().coeffs);
        assert_eq!(comp.d10.apply(&f).unwrap().norm_l2(), 0.0);
        assert_eq!(comp.d01.apply(&f).unwrap().norm_l2(), 0.0);
        let c0 = fam.component(0).unwrap();
        assert_eq!(c0.d10.matrix.nnz() + c0.d01.matrix.nnz(), 0);
    }

    #[test]
    fn d21_adjoint_example() {
        let model = InvariantModel::new(1).model();
        let fam = EpsilonFamily::new(&model).unwrap();
        let e12 = PointForm::monomial(&model.alg, &[CoframeLabel::A(0), CoframeLabel::A(1)]);
        let f = FormField::from_vec(&model, 2, e12.coeffs).unwrap();
        let r = fam.component(1).unwrap().d21.adjoint().apply(&f).unwrap();
        let xi = PointForm::label(&model.alg, CoframeLabel::Xi).scale(c(-1.0));
        assert_eq!(r.data, xi.coeffs);
    }

    #[test]
    fn grid_constant_function() {
        let grid = ModeGrid::new(1, 1.0, 8).unwrap();
        let model = grid.model();
        let fam = EpsilonFamily::new(&model).unwrap();
        let f = FormField::from_scalar(&model, 0, &vec![c(1.0); model.npts], &[c(1.0)]);
        let comp = fam.component(0).unwrap();
        let d01 = comp.d01.apply(&f).unwrap();
        let xi_idx = model.alg.index_of(model.alg.xi_mask());
        for p in 0..model.npts {
            assert!((d01.data[p * 3 + xi_idx] - C64::new(0.0, 2.0 * PI)).norm() < 1e-12);
        }
    }

    #[test]
    fn epsilon_one_is_plain_d() {
        let inv = InvariantModel::new(2);
        let model = inv.model();
        let fam = EpsilonFamily::new(&model).unwrap();
        for k in 0..=model.top() {
            let d = fam.d(k).unwrap().to_dense();
            assert_eq!((d - inv.d(k)).norm(), 0.0, "k={k}");
        }
    }

    #[test]
    fn q_vanishes() {
        let model = ModeGrid::new(1, 1.0, 8).unwrap().model();
        let fam = EpsilonFamily::new(&model).unwrap();
        for k in 0..=model.top() {
            assert!(build_q(&fam, k).unwrap().max_abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let model = InvariantModel::new(1).model();
        let fam = EpsilonFamily::new(&model).unwrap();
        assert!(matches!(fam.d_eps(1, 0.0), Err(Error::NonPositiveEpsilon(_))));
        assert!(matches!(fam.d_eps(1, -1.0), Err(Error::NonPositiveEpsilon(_))));
        assert!(matches!(assemble_components(&model, 4), Err(Error::DegreeOutOfRange(4, 3))));
    }

    #[test]
    fn sobolev_examples() {
        let g0 = ModeGrid::new(1, 0.0, 8).unwrap();
        let model = g0.model();
        let one = FormField::from_scalar(&model, 0, &vec![c(1.0); model.npts], &[c(1.0)]);
        assert!(sobolev_norms(&model, &one).h1c_semi < 1e-12);
        let w = g0.plane_wave(&[1], &[0]).unwrap();
        let f = FormField::from_scalar(&model, 0, &w, &[c(1.0)]);
        let s = sobolev_norms(&model, &f);
        assert!((s.h1c_semi - 2.0 * PI * s.l2).abs() < 1e-10);
        let model1 = ModeGrid::new(1, 1.0, 8).unwrap().model();
        let one1 = FormField::from_scalar(&model1, 0, &vec![c(1.0); model1.npts], &[c(1.0)]);
        let s1 = sobolev_norms(&model1, &one1);
        assert!((s1.dv_semi - 2.0 * PI * s1.l2).abs() < 1e-12);
    }
}
