//! Models of the Heisenberg nilmanifold `Γ \ H_{2m+1}`.
//!
//! Coordinates `(x, y, z) ∈ R^m × R^m × R` with frame
//! `e_i = ∂_{x_i}`, `e_{m+i} = ∂_{y_i} + x_i ∂_z`, `v = ∂_z`, so that
//! `[e_i, e_{m+i}] = v` and `ξ = dz − Σ x_i dy_i`. The lattice acts by
//! `(x, y, z) ↦ (x + a, y + b, z + c + a·y)`.
//!
//! A Reeb mode `f = g(x, y) e^{2πinz}` is a section over the base torus with
//! `g(x + e_i, y) = e^{−2πi n y_i} g(x, y)` and `g(x, y + e_i) = g(x, y)`;
//! on it `D_{e_i} = ∂_{x_i}`, `D_{e_{m+i}} = ∂_{y_i} + 2πin x_i`, `D_v = 2πin`.
//! The x-derivatives are Bloch-spectral along grid lines, the y-derivatives
//! are periodic spectral derivatives.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::exterior::{merge_sign, ExteriorAlgebra, PointForm, C64};
use crate::sparse::Csr;

/// Structure constants of the Heisenberg frame `e_1..e_{2m}, v` (index `2m` is `v`).
#[derive(Clone, Debug)]
pub struct FrameSpec {
    m: usize,
    /// `c[a][b][c]` with `[X_a, X_b] = Σ_c c[a][b][c] X_c`.
    c: Vec<Vec<Vec<f64>>>,
}

impl FrameSpec {
    pub fn heisenberg(m: usize) -> Self {
        assert!(m >= 1);
        let n = 2 * m + 1;
        let mut c = vec![vec![vec![0.0; n]; n]; n];
        for i in 0..m {
            c[i][m + i][2 * m] = 1.0;
            c[m + i][i][2 * m] = -1.0;
        }
        FrameSpec { m, c }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        2 * self.m + 1
    }

    pub fn bracket(&self, a: usize, b: usize) -> &[f64] {
        &self.c[a][b]
    }

    /// Orthonormal frame metric on `A`; `g_A(a, b) = dξ(a, Jb)` holds for it.
    pub fn g_a(&self, a: usize, b: usize) -> f64 {
        if a == b {
            1.0
        } else {
            0.0
        }
    }

    /// `dθ^c = −Σ_{a<b} c^c_{ab} θ^a ∧ θ^b` as a coefficient vector in `Λ^2`.
    fn d_coframe(&self, alg: &ExteriorAlgebra, c: usize) -> PointForm {
        let mut out = PointForm::zero(alg, 2);
        let n = self.dim();
        for a in 0..n {
            for b in a + 1..n {
                let s = self.c[a][b][c];
                if s != 0.0 {
                    out.coeffs[alg.index_of((1 << a) | (1 << b))] -= C64::new(s, 0.0);
                }
            }
        }
        out
    }

    /// The Chevalley–Eilenberg differential `Λ^k g* → Λ^{k+1} g*`, extended from
    /// the coframe by the graded Leibniz rule.
    pub fn ce_differential(&self, alg: &ExteriorAlgebra, k: usize) -> DMatrix<C64> {
        let mut mat = DMatrix::zeros(alg.dim(k + 1), alg.dim(k));
        let dco: Vec<PointForm> = (0..self.dim()).map(|c| self.d_coframe(alg, c)).collect();
        for (j, &mask) in alg.basis(k).iter().enumerate() {
            // d(θ^{i_1} ∧ … ∧ θ^{i_k}) = Σ_r (−1)^r θ^{i_1..i_{r-1}} ∧ dθ^{i_r} ∧ θ^{i_{r+1}..}
            let labels: Vec<usize> = (0..self.dim()).filter(|b| mask & (1 << b) != 0).collect();
            for (r, &ir) in labels.iter().enumerate() {
                let before = labels[..r].iter().fold(0u32, |acc, b| acc | (1 << b));
                let after = labels[r + 1..].iter().fold(0u32, |acc, b| acc | (1 << b));
                let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
                for (&m2, c2) in alg.basis(2).iter().zip(&dco[ir].coeffs) {
                    if *c2 == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let s1 = merge_sign(before, m2);
                    if s1 == 0 {
                        continue;
                    }
                    let s2 = merge_sign(before | m2, after);
                    if s2 == 0 {
                        continue;
                    }
                    let target = alg.index_of(before | m2 | after);
                    mat[(target, j)] += c2 * (sign * (s1 * s2) as f64);
                }
            }
        }
        mat
    }
}

/// Which discretisation a [`Model`] came from.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelKind {
    Invariant,
    Mode { n: i64, grid: usize, twist_shift: usize },
}

/// A discretised sector: `npts` quadrature points of weight `weight`, the
/// horizontal frame derivatives as `npts × npts` matrices, and the scalar `D_v`.
#[derive(Clone, Debug)]
pub struct Model {
    pub kind: ModelKind,
    pub frame: FrameSpec,
    pub alg: ExteriorAlgebra,
    pub npts: usize,
    pub weight: f64,
    pub derivs: Vec<Csr>,
    pub dv: C64,
}

impl Model {
    pub fn m(&self) -> usize {
        self.frame.m()
    }

    pub fn top(&self) -> usize {
        self.alg.top()
    }

    pub fn field_dim(&self, k: usize) -> usize {
        self.npts * self.alg.dim(k)
    }

    pub fn label(&self) -> String {
        match &self.kind {
            ModelKind::Invariant => "invariant".into(),
            ModelKind::Mode { n, .. } => format!("n={n}"),
        }
    }

    /// Frame derivative along `e_{a+1}` (`a < 2m`) or along `v` (`a == 2m`).
    pub fn frame_derivative(&self, a: usize, f: &FormField) -> FormField {
        assert!(a <= 2 * self.m());
        let fdim = f.fdim;
        let mut out = FormField { data: vec![C64::new(0.0, 0.0); f.data.len()], ..f.clone() };
        if a == 2 * self.m() {
            out.data.iter_mut().zip(&f.data).for_each(|(o, x)| *o = self.dv * x);
            return out;
        }
        let d = &self.derivs[a];
        for comp in 0..fdim {
            let col: Vec<C64> = (0..self.npts).map(|p| f.data[p * fdim + comp]).collect();
            for (p, v) in d.mul_vec(&col).into_iter().enumerate() {
                out.data[p * fdim + comp] = v;
            }
        }
        out
    }
}

/// The exact finite-dimensional model on left-invariant forms.
#[derive(Clone, Debug)]
pub struct InvariantModel {
    pub frame: FrameSpec,
    pub alg: ExteriorAlgebra,
}

impl InvariantModel {
    pub fn new(m: usize) -> Self {
        InvariantModel { frame: FrameSpec::heisenberg(m), alg: ExteriorAlgebra::new(m) }
    }

    pub fn dims(&self) -> Vec<usize> {
        (0..=self.alg.top()).map(|k| self.alg.dim(k)).collect()
    }

    /// Chevalley–Eilenberg `d` on `Λ^k`.
    pub fn d(&self, k: usize) -> DMatrix<C64> {
        self.frame.ce_differential(&self.alg, k)
    }

    pub fn model(&self) -> Model {
        let m = self.frame.m();
        Model {
            kind: ModelKind::Invariant,
            frame: self.frame.clone(),
            alg: self.alg.clone(),
            npts: 1,
            weight: 1.0,
            derivs: vec![Csr::zeros(1, 1); 2 * m],
            dv: C64::new(0.0, 0.0),
        }
    }
}

/// One Reeb Fourier sector on an `N^{2m}` grid of the base torus.
#[derive(Clone, Debug)]
pub struct ModeGrid {
    pub frame: FrameSpec,
    pub n: i64,
    pub grid: usize,
    /// Grid index of the twisted x-face; x-coordinates are `(s − shift)·h`.
    pub twist_shift: usize,
}

/// Minimal residual below which the boundary twists are accepted as commuting.
pub const FLUX_TOL: f64 = 1e-12;

impl ModeGrid {
    pub fn new(m: usize, n: f64, grid: usize) -> Result<Self> {
        Self::with_twist_shift(m, n, grid, 0)
    }

    /// Same sector with the x-face of the twist moved to grid index `shift` (gauge change).
    pub fn with_twist_shift(m: usize, n: f64, grid: usize, shift: usize) -> Result<Self> {
        if grid < 4 || grid % 2 != 0 {
            return Err(Error::InvalidGrid(format!("N must be even and >= 4, got {grid}")));
        }
        if !n.is_finite() {
            return Err(Error::FluxQuantization(n));
        }
        if shift >= grid {
            return Err(Error::InvalidGrid(format!("twist shift {shift} outside 0..{grid}")));
        }
        if boundary_commutator_residual(n, grid, shift) > FLUX_TOL {
            return Err(Error::FluxQuantization(n));
        }
        Ok(ModeGrid { frame: FrameSpec::heisenberg(m), n: n.round() as i64, grid, twist_shift: shift })
    }

    pub fn m(&self) -> usize {
        self.frame.m()
    }

    pub fn h(&self) -> f64 {
        1.0 / self.grid as f64
    }

    pub fn npts(&self) -> usize {
        self.grid.pow(2 * self.m() as u32)
    }

    /// Grid index along each of the `2m` axes (x axes first, then y axes).
    pub fn coords(&self, pt: usize) -> Vec<usize> {
        let mut rest = pt;
        (0..2 * self.m())
            .map(|_| {
                let c = rest % self.grid;
                rest /= self.grid;
                c
            })
            .collect()
    }

    pub fn point(&self, coords: &[usize]) -> usize {
        coords.iter().rev().fold(0, |acc, &c| acc * self.grid + c)
    }

    pub fn x(&self, s: usize) -> f64 {
        (s as f64 - self.twist_shift as f64) * self.h()
    }

    pub fn y(&self, t: usize) -> f64 {
        t as f64 * self.h()
    }

    pub fn dv(&self) -> C64 {
        C64::new(0.0, 2.0 * PI * self.n as f64)
    }

    fn window(&self) -> impl Iterator<Item = f64> {
        let half = (self.grid / 2) as i64;
        (-half..half).map(|j| j as f64)
    }

    /// Bloch-spectral `∂_x` on one x-line at height `y`: wavenumbers `j − n y`.
    fn bloch_line(&self, y: f64) -> DMatrix<C64> {
        let nn = self.grid;
        let h = self.h();
        let kappas: Vec<f64> = self.window().map(|j| j - self.n as f64 * y).collect();
        DMatrix::from_fn(nn, nn, |s, sp| {
            let dx = (s as f64 - sp as f64) * h;
            kappas
                .iter()
                .map(|&k| C64::new(0.0, 2.0 * PI * k) * C64::from_polar(1.0, 2.0 * PI * k * dx))
                .sum::<C64>()
                / nn as f64
        })
    }

    /// Periodic spectral `∂_y`; the Nyquist wavenumber is `−N/2`.
    fn periodic_line(&self) -> DMatrix<C64> {
        let nn = self.grid;
        let ks: Vec<f64> = self.window().collect();
        DMatrix::from_fn(nn, nn, |t, tp| {
            let dy = (t as f64 - tp as f64) / nn as f64;
            ks.iter()
                .map(|&k| C64::new(0.0, 2.0 * PI * k) * C64::from_polar(1.0, 2.0 * PI * k * dy))
                .sum::<C64>()
                / nn as f64
        })
    }

    /// `D_{e_{a+1}}` on scalar grid functions.
    pub fn derivative_matrix(&self, a: usize) -> Csr {
        let m = self.m();
        assert!(a < 2 * m);
        let npts = self.npts();
        let nn = self.grid;
        let mut trip = Vec::new();
        if a < m {
            let lines: Vec<DMatrix<C64>> = (0..nn).map(|t| self.bloch_line(self.y(t))).collect();
            for pt in 0..npts {
                let mut c = self.coords(pt);
                let line = &lines[c[m + a]];
                let s = c[a];
                for sp in 0..nn {
                    c[a] = sp;
                    trip.push((pt, self.point(&c), line[(s, sp)]));
                }
            }
        } else {
            let i = a - m;
            let line = self.periodic_line();
            for pt in 0..npts {
                let mut c = self.coords(pt);
                let xi = self.x(c[i]);
                trip.push((pt, pt, C64::new(0.0, 2.0 * PI * self.n as f64 * xi)));
                let t = c[a];
                for tp in 0..nn {
                    c[a] = tp;
                    trip.push((pt, self.point(&c), line[(t, tp)]));
                }
            }
        }
        Csr::from_triplets(npts, npts, trip)
    }

    pub fn model(&self) -> Model {
        let m = self.m();
        Model {
            kind: ModelKind::Mode { n: self.n, grid: self.grid, twist_shift: self.twist_shift },
            frame: self.frame.clone(),
            alg: ExteriorAlgebra::new(m),
            npts: self.npts(),
            weight: self.h().powi(2 * m as i32),
            derivs: (0..2 * m).map(|a| self.derivative_matrix(a)).collect(),
            dv: self.dv(),
        }
    }

    /// Scalar probe: a product over twisted pairs of periodised wave packets
    /// `Σ_l G(x + l) e^{2πi kx (x + l)} e^{2πi (ky + l n) y}` with Gaussian `G`
    /// of width `sigma` centred at `centre`. Satisfies the boundary twist exactly.
    pub fn probe(&self, kx: &[f64], ky: &[i64], sigma: f64, centre: f64) -> Vec<C64> {
        let m = self.m();
        assert_eq!(kx.len(), m);
        assert_eq!(ky.len(), m);
        let n = self.n as f64;
        (0..self.npts())
            .map(|pt| {
                let c = self.coords(pt);
                (0..m)
                    .map(|i| {
                        let x = self.x(c[i]);
                        let y = self.y(c[m + i]);
                        (-4i64..=4)
                            .map(|l| {
                                let xl = x + l as f64;
                                let g = (-(xl - centre).powi(2) / (2.0 * sigma * sigma)).exp();
                                let phase = 2.0 * PI * (kx[i] * xl + (ky[i] as f64 + l as f64 * n) * y);
                                C64::from_polar(g, phase)
                            })
                            .sum::<C64>()
                    })
                    .product()
            })
            .collect()
    }

    /// Plane wave `e^{2πi (kx·x + ky·y)}`; a twist-compatible section only when `n = 0`.
    pub fn plane_wave(&self, kx: &[i64], ky: &[i64]) -> Result<Vec<C64>> {
        if self.n != 0 {
            return Err(Error::Invalid("plane waves live in the n = 0 sector only".into()));
        }
        let m = self.m();
        Ok((0..self.npts())
            .map(|pt| {
                let c = self.coords(pt);
                let phase: f64 = (0..m)
                    .map(|i| kx[i] as f64 * self.x(c[i]) + ky[i] as f64 * self.y(c[m + i]))
                    .sum();
                C64::from_polar(1.0, 2.0 * PI * phase)
            })
            .collect())
    }

    /// Samples of `g(x, y) e^{2πinz}` on `nz` Reeb points over the base grid.
    pub fn embed_sector(&self, g: &[C64], nz: usize) -> Vec<C64> {
        let mut out = Vec::with_capacity(g.len() * nz);
        for r in 0..nz {
            let z = r as f64 / nz as f64;
            let ph = C64::from_polar(1.0, 2.0 * PI * self.n as f64 * z);
            out.extend(g.iter().map(|v| v * ph));
        }
        out
    }
}

/// Translating by a full x-period then a full y-period versus the other order.
/// Each boundary translation is a diagonal phase on the fundamental-domain
/// samples (`e^{−2πi n y}` for x, `1` for y); the two compositions differ by
/// `e^{−2πin}`, so the twists commute exactly when `n` is an integer.
pub fn boundary_commutator_residual(n: f64, grid: usize, shift: usize) -> f64 {
    let h = 1.0 / grid as f64;
    let phase_x = |y: f64| C64::from_polar(1.0, -2.0 * PI * n * y);
    let phase_y = |_x: f64| C64::new(1.0, 0.0);
    let mut worst: f64 = 0.0;
    for s in 0..grid {
        let x = (s as f64 - shift as f64) * h;
        for t in 0..grid {
            let y = t as f64 * h;
            // x then y: g(x+1, y+1) = φ_x(y+1) g(x, y+1) = φ_x(y+1) φ_y(x) g(x, y)
            let xy = phase_x(y + 1.0) * phase_y(x);
            // y then x: g(x+1, y+1) = φ_y(x+1) g(x+1, y) = φ_y(x+1) φ_x(y) g(x, y)
            let yx = phase_y(x + 1.0) * phase_x(y);
            worst = worst.max((xy - yx).norm());
        }
    }
    worst
}

/// A section of `Λ^k` over a model: `data[point * fdim + component]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FormField {
    pub k: usize,
    pub npts: usize,
    pub fdim: usize,
    pub weight: f64,
    pub data: Vec<C64>,
}

impl FormField {
    pub fn zeros(model: &Model, k: usize) -> Self {
        FormField {
            k,
            npts: model.npts,
            fdim: model.alg.dim(k),
            weight: model.weight,
            data: vec![C64::new(0.0, 0.0); model.field_dim(k)],
        }
    }

    pub fn from_vec(model: &Model, k: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != model.field_dim(k) {
            return Err(Error::Dimension(format!(
                "field of degree {k} needs {} coefficients, got {}",
                model.field_dim(k),
                data.len()
            )));
        }
        Ok(FormField { data, ..Self::zeros(model, k) })
    }

    /// `scalar ⊗ fiber`: the same fiber vector at every point, weighted by `scalar`.
    pub fn from_scalar(model: &Model, k: usize, scalar: &[C64], fiber: &[C64]) -> Self {
        assert_eq!(scalar.len(), model.npts);
        assert_eq!(fiber.len(), model.alg.dim(k));
        let data = scalar.iter().flat_map(|s| fiber.iter().map(move |f| s * f)).collect();
        FormField { data, ..Self::zeros(model, k) }
    }

    pub fn inner(&self, other: &FormField) -> C64 {
        assert_eq!(self.data.len(), other.data.len());
        self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum::<C64>() * self.weight
    }

    pub fn norm_l2(&self) -> f64 {
        (self.data.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.weight).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// The part of bigrade `(k − q, q)`.
    pub fn bigrade_part(&self, alg: &ExteriorAlgebra, q: usize) -> FormField {
        let keep: Vec<bool> = alg
            .basis(self.k)
            .iter()
            .map(|&mask| usize::from(mask & alg.xi_mask() != 0) == q)
            .collect();
        let mut out = self.clone();
        for (i, v) in out.data.iter_mut().enumerate() {
            if !keep[i % self.fdim] {
                *v = C64::new(0.0, 0.0);
            }
        }
        out
    }

    pub fn scale(&self, s: C64) -> FormField {
        FormField { data: self.data.iter().map(|v| v * s).collect(), ..self.clone() }
    }

    pub fn add(&self, other: &FormField) -> FormField {
        assert_eq!(self.data.len(), other.data.len());
        FormField { data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(), ..self.clone() }
    }

    pub fn sub(&self, other: &FormField) -> FormField {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn normalized(&self) -> FormField {
        let n = self.norm_l2();
        assert!(n > 0.0, "cannot normalise the zero field");
        self.scale(C64::new(1.0 / n, 0.0))
    }
}
