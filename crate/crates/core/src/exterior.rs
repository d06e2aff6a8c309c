//! Pointwise exterior algebra over the Heisenberg coframe `e^1..e^{2m}, ξ`.
//!
//! Basis monomials are bitmasks over `2m + 1` labels: bit `i < 2m` is `e^{i+1}`,
//! bit `2m` is `ξ`. Within a degree the monomials are ordered lexicographically
//! by their sorted label tuples, so `ξ` (the largest label) always sorts last.
//! The fiber metric is the orthonormal one (`g₁`), the orientation is
//! `e^1 ∧ … ∧ e^{2m} ∧ ξ`, and the contact form satisfies
//! `dξ = -Σ_{i≤m} e^i ∧ e^{m+i}`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// `(A-degree, B-degree)` of a pure form; `q ∈ {0, 1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BiDegree {
    pub p: usize,
    pub q: usize,
}

impl BiDegree {
    pub fn new(p: usize, q: usize) -> Self {
        assert!(q <= 1, "B is a line bundle: q must be 0 or 1");
        BiDegree { p, q }
    }

    pub fn total(self) -> usize {
        self.p + self.q
    }
}

impl std::fmt::Display for BiDegree {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.p, self.q)
    }
}

/// A coframe element: `A(i)` is `e^{i+1}` (0-based), `Xi` is the contact form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CoframeLabel {
    A(usize),
    Xi,
}

impl CoframeLabel {
    pub fn bit(self, m: usize) -> usize {
        match self {
            CoframeLabel::A(i) => {
                assert!(i < 2 * m, "A-label {i} out of range for m = {m}");
                i
            }
            CoframeLabel::Xi => 2 * m,
        }
    }

    /// The J-partner with its sign: `J e^i = e^{m+i}`, `J e^{m+i} = -e^i`.
    pub fn j_partner(self, m: usize) -> Option<(CoframeLabel, f64)> {
        match self {
            CoframeLabel::A(i) if i < m => Some((CoframeLabel::A(i + m), 1.0)),
            CoframeLabel::A(i) => Some((CoframeLabel::A(i - m), -1.0)),
            CoframeLabel::Xi => None,
        }
    }

    pub fn all(m: usize) -> Vec<CoframeLabel> {
        (0..2 * m)
            .map(CoframeLabel::A)
            .chain(std::iter::once(CoframeLabel::Xi))
            .collect()
    }
}

/// Sign of `e^a ∧ e^b` relative to the sorted monomial `e^{a ∪ b}`; zero if they overlap.
pub fn merge_sign(a: u32, b: u32) -> i32 {
    if a & b != 0 {
        return 0;
    }
    let mut swaps = 0u32;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        // elements of a above j must pass over e^j
        swaps += (a >> (j + 1)).count_ones();
        rest &= rest - 1;
    }
    if swaps % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Basis tables for `Λ^• (A* ⊕ B*)` of a `(2m+1)`-dimensional Heisenberg frame.
#[derive(Clone, Debug)]
pub struct ExteriorAlgebra {
    m: usize,
    bases: Vec<Vec<u32>>,
    position: Vec<usize>,
}

impl ExteriorAlgebra {
    pub fn new(m: usize) -> Self {
        assert!(m >= 1, "m must be positive");
        let n = 2 * m + 1;
        assert!(n <= 31, "frame too large");
        let mut bases = vec![Vec::new(); n + 1];
        let mut tuple = Vec::new();
        fn rec(start: usize, n: usize, tuple: &mut Vec<usize>, bases: &mut [Vec<u32>]) {
            let mask = tuple.iter().fold(0u32, |acc, &i| acc | (1 << i));
            bases[tuple.len()].push(mask);
            for i in start..n {
                tuple.push(i);
                rec(i + 1, n, tuple, bases);
                tuple.pop();
            }
        }
        rec(0, n, &mut tuple, &mut bases);
        let mut position = vec![usize::MAX; 1 << n];
        for basis in &bases {
            for (i, &mask) in basis.iter().enumerate() {
                position[mask as usize] = i;
            }
        }
        ExteriorAlgebra { m, bases, position }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn top(&self) -> usize {
        2 * self.m + 1
    }

    pub fn xi_mask(&self) -> u32 {
        1 << (2 * self.m)
    }

    pub fn dim(&self, k: usize) -> usize {
        self.bases.get(k).map_or(0, Vec::len)
    }

    pub fn basis(&self, k: usize) -> &[u32] {
        self.bases.get(k).map_or(&[], Vec::as_slice)
    }

    pub fn index_of(&self, mask: u32) -> usize {
        self.position[mask as usize]
    }

    pub fn bidegree_of(&self, mask: u32) -> BiDegree {
        let q = usize::from(mask & self.xi_mask() != 0);
        BiDegree::new(mask.count_ones() as usize - q, q)
    }

    /// Indices (within `Λ^k`) of the monomials of bigrade `(k - q, q)`.
    pub fn bigrade_indices(&self, k: usize, q: usize) -> Vec<usize> {
        self.basis(k)
            .iter()
            .enumerate()
            .filter(|(_, &mask)| usize::from(mask & self.xi_mask() != 0) == q)
            .map(|(i, _)| i)
            .collect()
    }

    /// Matrix of `x ∧ ·` from `Λ^k` to `Λ^{k+1}`.
    pub fn wedge_matrix(&self, label: CoframeLabel, k: usize) -> DMatrix<C64> {
        let bit = 1u32 << label.bit(self.m);
        let mut mat = DMatrix::zeros(self.dim(k + 1), self.dim(k));
        for (j, &mask) in self.basis(k).iter().enumerate() {
            let s = merge_sign(bit, mask);
            if s != 0 {
                mat[(self.index_of(bit | mask), j)] = C64::new(s as f64, 0.0);
            }
        }
        mat
    }

    /// Matrix of `i(u) ·` from `Λ^k` to `Λ^{k-1}`, `u` the frame vector dual to `label`.
    pub fn interior_matrix(&self, label: CoframeLabel, k: usize) -> DMatrix<C64> {
        if k == 0 {
            return DMatrix::zeros(0, self.dim(0));
        }
        let bit = 1u32 << label.bit(self.m);
        let mut mat = DMatrix::zeros(self.dim(k - 1), self.dim(k));
        for (j, &mask) in self.basis(k).iter().enumerate() {
            if mask & bit != 0 {
                let below = (mask & (bit - 1)).count_ones();
                let s = if below % 2 == 0 { 1.0 } else { -1.0 };
                mat[(self.index_of(mask & !bit), j)] = C64::new(s, 0.0);
            }
        }
        mat
    }

    /// `dξ = -Σ e^i ∧ e^{m+i}` as a coefficient vector in `Λ^2`.
    pub fn dxi(&self) -> PointForm {
        let mut form = PointForm::zero(self, 2);
        for i in 0..self.m {
            let mask = (1u32 << i) | (1u32 << (self.m + i));
            form.coeffs[self.index_of(mask)] -= C64::new(1.0, 0.0);
        }
        form
    }

    /// Matrix of `L = · ∧ dξ` from `Λ^k` to `Λ^{k+2}`.
    pub fn lefschetz_matrix(&self, k: usize) -> DMatrix<C64> {
        let mut mat = DMatrix::zeros(self.dim(k + 2), self.dim(k));
        for i in 0..self.m {
            let pair = (1u32 << i) | (1u32 << (self.m + i));
            for (j, &mask) in self.basis(k).iter().enumerate() {
                // α ∧ e^i ∧ e^{m+i}, even degree so the side does not matter
                let s = merge_sign(mask, pair);
                if s != 0 {
                    mat[(self.index_of(mask | pair), j)] -= C64::new(s as f64, 0.0);
                }
            }
        }
        mat
    }

    /// Matrix of the algebraic part `d^{2,-1} = L ∘ i(v)` from `Λ^k` to `Λ^{k+1}`.
    pub fn d21_matrix(&self, k: usize) -> DMatrix<C64> {
        if k == 0 {
            return DMatrix::zeros(self.dim(1), 1);
        }
        self.lefschetz_matrix(k - 1) * self.interior_matrix(CoframeLabel::Xi, k)
    }

    /// Matrix of the Hodge star `Λ^k → Λ^{2m+1-k}`.
    pub fn hodge_star_matrix(&self, k: usize) -> DMatrix<C64> {
        let full = (1u32 << self.top()) - 1;
        let kk = self.top() - k;
        let mut mat = DMatrix::zeros(self.dim(kk), self.dim(k));
        for (j, &mask) in self.basis(k).iter().enumerate() {
            let comp = full & !mask;
            let s = merge_sign(mask, comp);
            mat[(self.index_of(comp), j)] = C64::new(s as f64, 0.0);
        }
        mat
    }

    /// Diagonal 0/1 matrix selecting the `(k-q, q)` part of `Λ^k`.
    pub fn bigrade_projector(&self, k: usize, q: usize) -> DMatrix<C64> {
        let mut mat = DMatrix::zeros(self.dim(k), self.dim(k));
        for i in self.bigrade_indices(k, q) {
            mat[(i, i)] = C64::new(1.0, 0.0);
        }
        mat
    }

    pub fn label_name(&self, mask: u32) -> String {
        if mask == 0 {
            return "1".into();
        }
        let mut parts = Vec::new();
        for b in 0..self.top() {
            if mask & (1 << b) != 0 {
                parts.push(if b == 2 * self.m {
                    "xi".to_string()
                } else {
                    format!("e{}", b + 1)
                });
            }
        }
        parts.join("^")
    }
}

/// An element of `Λ^k` at a single point, coefficients in the basis order above.
#[derive(Clone, Debug, PartialEq)]
pub struct PointForm {
    pub k: usize,
    pub coeffs: Vec<C64>,
}

impl PointForm {
    pub fn zero(alg: &ExteriorAlgebra, k: usize) -> Self {
        PointForm {
            k,
            coeffs: vec![C64::new(0.0, 0.0); alg.dim(k)],
        }
    }

    pub fn one(alg: &ExteriorAlgebra) -> Self {
        let mut f = Self::zero(alg, 0);
        f.coeffs[0] = C64::new(1.0, 0.0);
        f
    }

    /// The monomial `x_1 ∧ … ∧ x_r` (any order; the sign is absorbed).
    pub fn monomial(alg: &ExteriorAlgebra, labels: &[CoframeLabel]) -> Self {
        let mut form = Self::one(alg);
        for &l in labels {
            form = wedge(alg, &form, &Self::label(alg, l)).expect("monomial within top degree");
        }
        form
    }

    pub fn label(alg: &ExteriorAlgebra, label: CoframeLabel) -> Self {
        let mut f = Self::zero(alg, 1);
        f.coeffs[alg.index_of(1 << label.bit(alg.m()))] = C64::new(1.0, 0.0);
        f
    }

    pub fn coeff(&self, alg: &ExteriorAlgebra, labels: &[CoframeLabel]) -> C64 {
        let mask = labels.iter().fold(0u32, |acc, l| acc | (1 << l.bit(alg.m())));
        assert_eq!(mask.count_ones() as usize, self.k);
        let m = PointForm::monomial(alg, labels);
        // monomial carries the reordering sign; pair against it
        let idx = alg.index_of(mask);
        self.coeffs[idx] * m.coeffs[idx]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &PointForm) -> C64 {
        assert_eq!(self.k, other.k);
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// The bigrade if at most one B-degree carries nonzero coefficients.
    pub fn pure_bidegree(&self, alg: &ExteriorAlgebra) -> Option<BiDegree> {
        let mut seen: Option<usize> = None;
        for (&mask, c) in alg.basis(self.k).iter().zip(&self.coeffs) {
            if c.norm_sqr() > 0.0 {
                let q = alg.bidegree_of(mask).q;
                match seen {
                    None => seen = Some(q),
                    Some(s) if s != q => return None,
                    _ => {}
                }
            }
        }
        let q = seen.unwrap_or(usize::from(self.k > 2 * alg.m()));
        (self.k >= q).then(|| BiDegree::new(self.k - q, q))
    }

    fn apply(&self, mat: &DMatrix<C64>, k: usize) -> PointForm {
        let v = nalgebra::DVector::from_column_slice(&self.coeffs);
        PointForm {
            k,
            coeffs: (mat * v).as_slice().to_vec(),
        }
    }

    pub fn add(&self, other: &PointForm) -> PointForm {
        assert_eq!(self.k, other.k);
        PointForm {
            k: self.k,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> PointForm {
        PointForm {
            k: self.k,
            coeffs: self.coeffs.iter().map(|a| a * s).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &PointForm) -> f64 {
        assert_eq!(self.k, other.k);
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

pub fn wedge(alg: &ExteriorAlgebra, a: &PointForm, b: &PointForm) -> Result<PointForm> {
    let k = a.k + b.k;
    if k > alg.top() {
        return Err(Error::DegreeOverflow(k, alg.top()));
    }
    let mut out = PointForm::zero(alg, k);
    for (&ma, ca) in alg.basis(a.k).iter().zip(&a.coeffs) {
        if ca.norm_sqr() == 0.0 {
            continue;
        }
        for (&mb, cb) in alg.basis(b.k).iter().zip(&b.coeffs) {
            let s = merge_sign(ma, mb);
            if s != 0 {
                out.coeffs[alg.index_of(ma | mb)] += ca * cb * s as f64;
            }
        }
    }
    Ok(out)
}

pub fn interior(alg: &ExteriorAlgebra, label: CoframeLabel, a: &PointForm) -> PointForm {
    if a.k == 0 {
        return PointForm { k: 0, coeffs: vec![C64::new(0.0, 0.0); 1] };
    }
    a.apply(&alg.interior_matrix(label, a.k), a.k - 1)
}

pub fn hodge_star(alg: &ExteriorAlgebra, a: &PointForm) -> PointForm {
    a.apply(&alg.hodge_star_matrix(a.k), alg.top() - a.k)
}

fn require_bigrade(alg: &ExteriorAlgebra, a: &PointForm, q: usize) -> Result<()> {
    let has_other = alg
        .basis(a.k)
        .iter()
        .zip(&a.coeffs)
        .any(|(&mask, c)| c.norm_sqr() > 0.0 && alg.bidegree_of(mask).q != q);
    if has_other || a.k < q {
        return Err(Error::WrongBigrade {
            expected: format!("(p,{q})"),
            got: format!("{:?}", a.pure_bidegree(alg)),
        });
    }
    Ok(())
}

/// `L(a) = a ∧ dξ` on forms of bigrade `(p, 0)`.
pub fn lefschetz_l(alg: &ExteriorAlgebra, a: &PointForm) -> Result<PointForm> {
    require_bigrade(alg, a, 0)?;
    if a.k + 2 > alg.top() {
        return Err(Error::DegreeOverflow(a.k + 2, alg.top()));
    }
    Ok(a.apply(&alg.lefschetz_matrix(a.k), a.k + 2))
}

/// `d^{2,-1}` on forms of bigrade `(p, 1)`.
pub fn d21_pointwise(alg: &ExteriorAlgebra, a: &PointForm) -> Result<PointForm> {
    require_bigrade(alg, a, 1)?;
    Ok(a.apply(&alg.d21_matrix(a.k), a.k + 1))
}
