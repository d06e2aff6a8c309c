//! Dense helpers: Hermitian eigensolves, nullspaces with a gap-based cut,
//! principal angles and log-log slope fits.

use nalgebra::{DMatrix, DVector};

use crate::exterior::C64;

/// How small a singular value must be to count as zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NullTol {
    /// `σ ≤ rel · σ_max`.
    Relative(f64),
    /// Cut at the largest ratio `σ_{j-1}/σ_j` among normalised values below
    /// `ceiling`; if no ratio reaches `min_ratio` there is no numerical kernel.
    Gap { ceiling: f64, min_ratio: f64 },
}

impl NullTol {
    pub const INVARIANT: NullTol = NullTol::Relative(1e-8);
    pub const GRID: NullTol = NullTol::Gap { ceiling: 1e-3, min_ratio: 100.0 };
}

fn to_faer(mat: &DMatrix<C64>) -> faer::Mat<C64> {
    faer::Mat::from_fn(mat.nrows(), mat.ncols(), |i, j| mat[(i, j)])
}

fn from_faer(mat: faer::MatRef<'_, C64>) -> DMatrix<C64> {
    DMatrix::from_fn(mat.nrows(), mat.ncols(), |i, j| mat[(i, j)])
}

/// Eigenvalues ascending with matching eigenvector columns.
pub fn hermitian_eig(mat: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = mat.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let sym = (mat + mat.adjoint()) * C64::new(0.5, 0.0);
    let eig = to_faer(&sym).self_adjoint_eigen(faer::Side::Lower).expect("Hermitian eigensolve failed");
    let vals: Vec<f64> = eig.S().column_vector().iter().map(|z| z.re).collect();
    (vals, from_faer(eig.U()))
}

/// `a* a`, through faer's blocked product (sparse products of nearly dense operators are far slower).
pub fn gram(a: &DMatrix<C64>) -> DMatrix<C64> {
    let fa = to_faer(a);
    from_faer((fa.adjoint() * &fa).as_ref())
}

/// Singular values (descending) and the full set of right singular vectors.
fn full_svd(mat: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let svd = to_faer(mat).svd().expect("SVD failed");
    let s = svd.S().column_vector().iter().map(|z| z.re).collect();
    (s, from_faer(svd.V()))
}

pub fn singular_values(mat: &DMatrix<C64>) -> Vec<f64> {
    if mat.nrows() == 0 || mat.ncols() == 0 {
        return Vec::new();
    }
    to_faer(mat).singular_values().expect("SVD failed")
}

/// Numerical rank of a list of `n` descending singular values (missing ones are zero).
pub fn rank_from_singular(sv: &[f64], n: usize, tol: NullTol) -> usize {
    let top = sv.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    let t: Vec<f64> = (0..n).map(|i| sv.get(i).copied().unwrap_or(0.0) / top).collect();
    match tol {
        NullTol::Relative(rel) => t.iter().filter(|&&x| x > rel).count(),
        NullTol::Gap { ceiling, min_ratio } => {
            let Some(first_small) = t.iter().position(|&x| x < ceiling) else {
                return n;
            };
            let mut best = (first_small, 0.0f64);
            for j in first_small.max(1)..n {
                let ratio = t[j - 1] / t[j].max(1e-300);
                if ratio > best.1 {
                    best = (j, ratio);
                }
            }
            if best.1 >= min_ratio {
                best.0
            } else {
                n
            }
        }
    }
}

pub fn rank(mat: &DMatrix<C64>, tol: NullTol) -> usize {
    rank_from_singular(&singular_values(mat), mat.ncols().min(mat.nrows()), tol)
}

pub fn nullity(mat: &DMatrix<C64>, tol: NullTol) -> usize {
    mat.ncols() - rank(mat, tol)
}

/// Orthonormal basis (columns) of the numerical kernel.
pub fn null_space(mat: &DMatrix<C64>, tol: NullTol) -> DMatrix<C64> {
    let c = mat.ncols();
    if c == 0 {
        return DMatrix::zeros(0, 0);
    }
    if mat.nrows() == 0 {
        return DMatrix::identity(c, c);
    }
    let (s, v) = full_svd(mat);
    let r = rank_from_singular(&s, c, tol);
    v.columns(r, c - r).into_owned()
}

/// Orthonormal basis of the column span.
pub fn range_space(mat: &DMatrix<C64>, tol: NullTol) -> DMatrix<C64> {
    if mat.ncols() == 0 || mat.nrows() == 0 {
        return DMatrix::zeros(mat.nrows(), 0);
    }
    let svd = to_faer(mat).thin_svd().expect("SVD failed");
    let s: Vec<f64> = svd.S().column_vector().iter().map(|z| z.re).collect();
    let r = rank_from_singular(&s, s.len(), tol);
    from_faer(svd.U()).columns(0, r).into_owned()
}

/// Principal angles (radians, ascending) between the spans of two orthonormal column sets.
pub fn principal_angles(a: &DMatrix<C64>, b: &DMatrix<C64>) -> Vec<f64> {
    if a.ncols() == 0 || b.ncols() == 0 {
        return Vec::new();
    }
    let mut s = singular_values(&(a.adjoint() * b));
    s.iter_mut().for_each(|x| *x = x.clamp(0.0, 1.0).acos());
    s.sort_by(f64::total_cmp);
    s
}

/// Largest angle between a vector of `span(s)` and `span(space)`; `π/2` if `span(s)`
/// does not fit in `span(space)`.
pub fn containment_angle(s: &DMatrix<C64>, space: &DMatrix<C64>) -> f64 {
    if s.ncols() == 0 {
        return 0.0;
    }
    if space.ncols() < s.ncols() {
        return std::f64::consts::FRAC_PI_2;
    }
    let proj = space.adjoint() * s;
    let sv = singular_values(&proj);
    let smallest = sv.get(s.ncols() - 1).copied().unwrap_or(0.0);
    smallest.clamp(0.0, 1.0).acos()
}

/// Gram–Schmidt twice, dropping columns whose residual falls below `drop`.
pub fn orthonormalize(mat: &DMatrix<C64>, drop: f64) -> DMatrix<C64> {
    let mut cols: Vec<DVector<C64>> = Vec::new();
    for j in 0..mat.ncols() {
        let mut v = mat.column(j).into_owned();
        let scale = v.norm();
        for _ in 0..2 {
            for q in &cols {
                let c = q.dotc(&v);
                v -= q * c;
            }
        }
        let n = v.norm();
        if n > drop * scale.max(f64::MIN_POSITIVE) && n > 0.0 {
            cols.push(v / C64::new(n, 0.0));
        }
    }
    if cols.is_empty() {
        return DMatrix::zeros(mat.nrows(), 0);
    }
    DMatrix::from_columns(&cols)
}

/// Least-squares slope of `log y` against `log x` and the RMS residual of the fit.
/// Points with `y ≤ 0` are excluded; `None` if fewer than two remain.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let rms = (pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum::<f64>() / n).sqrt();
    Some((slope, rms))
}

/// Observed convergence order from errors at successively doubled resolutions.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn eig_sorted() {
        let m = DMatrix::from_row_slice(2, 2, &[c(2.0), C64::new(0.0, 1.0), C64::new(0.0, -1.0), c(2.0)]);
        let (vals, vecs) = hermitian_eig(&m);
        assert!((vals[0] - 1.0).abs() < 1e-12 && (vals[1] - 3.0).abs() < 1e-12);
        let r = &m * vecs.column(0) - vecs.column(0) * c(vals[0]);
        assert!(r.norm() < 1e-12);
    }

    #[test]
    fn gap_rule() {
        let tol = NullTol::GRID;
        assert_eq!(rank_from_singular(&[1.0, 0.5, 1e-4, 1e-13], 4, tol), 3);
        assert_eq!(rank_from_singular(&[1.0, 0.5, 1e-9, 1e-10], 4, tol), 2);
        assert_eq!(rank_from_singular(&[1.0, 0.5], 4, tol), 2);
        assert_eq!(rank_from_singular(&[1.0, 0.5, 0.2], 3, tol), 3);
        assert_eq!(rank_from_singular(&[0.0, 0.0], 2, tol), 0);
    }

    #[test]
    fn null_space_of_wide_matrix() {
        let a = DMatrix::from_row_slice(1, 3, &[c(1.0), c(1.0), c(0.0)]);
        let n = null_space(&a, NullTol::INVARIANT);
        assert_eq!(n.ncols(), 2);
        assert!((&a * &n).norm() < 1e-12);
        assert!((n.adjoint() * &n - DMatrix::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn angles() {
        let e1 = DMatrix::from_column_slice(2, 1, &[c(1.0), c(0.0)]);
        let d = DMatrix::from_column_slice(2, 1, &[c(0.5f64.sqrt()), c(0.5f64.sqrt())]);
        let a = principal_angles(&e1, &d);
        assert!((a[0] - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
        assert!(containment_angle(&e1, &DMatrix::identity(2, 2)) < 1e-7);
    }

    #[test]
    fn slopes() {
        let x = [1.0, 0.5, 0.25];
        let (p, r) = loglog_slope(&x, &[1.0, 0.25, 0.0625]).unwrap();
        assert!((p - 2.0).abs() < 1e-12 && r < 1e-12);
        assert!(loglog_slope(&x, &[0.0, 0.0, 1.0]).is_none());
    }
}
