//! Comparison of swept eigenfamilies with the Rumin side: distance to `R^k`,
//! principal angles to limit eigenspaces, and the spectral-sequence counts.

use nalgebra::DMatrix;

use crate::complex_ops::sobolev_norms;
use crate::error::Result;
use crate::exterior::C64;
use crate::heisenberg::FormField;
use crate::linalg::{self, NullTol};
use crate::rumin::RuminComplex;

use super::rates::{RateClass, RateFit};
use super::tracking::clusters;
use super::SweepRecord;

#[derive(Clone, Debug)]
pub struct TrackReport {
    pub track_id: usize,
    pub degree: usize,
    pub fit: RateFit,
    pub eps: Vec<f64>,
    /// `‖(I − Π_{R^k}) ω_ε‖`.
    pub off_rumin: Vec<f64>,
    /// Norm of the bigrade component that vanishes on `R^k`: `β` (`q = 1`) for
    /// `k ≤ m`, `α` (`q = 0`) for `k ≥ m + 1`.
    pub small_part: Vec<f64>,
    /// `ε^{-1} ‖d^{2,-1} β_ε‖`.
    pub d21_beta_scaled: Vec<f64>,
    /// `H^1_c` norm (with the `L²` term) of `α_ε`.
    pub alpha_h1c: Vec<f64>,
    /// Angle (radians) between the final tracked cluster and the limit eigenspace.
    pub final_angle: Option<f64>,
}

/// Values below this are rounding noise for unit-normalised eigenvectors.
pub const NOISE_FLOOR: f64 = 1e-10;

impl TrackReport {
    pub fn final_small_part(&self) -> Option<f64> {
        self.small_part.last().copied()
    }

    pub fn final_off_rumin(&self) -> Option<f64> {
        self.off_rumin.last().copied()
    }

    /// Non-increasing over the second half of the track (the asymptotic part of the
    /// schedule), ignoring fluctuations below [`NOISE_FLOOR`].
    pub fn small_part_monotone(&self) -> bool {
        let tail = &self.small_part[self.small_part.len() / 2..];
        tail.windows(2).all(|w| w[1].max(NOISE_FLOOR) <= w[0].max(NOISE_FLOOR) * (1.0 + 1e-6))
    }

    /// Max over the track `≤ ratio ×` median. The median is floored at the noise level
    /// of `ε^{-1} β`, i.e. [`NOISE_FLOOR`] over the smallest ε.
    pub fn d21_beta_bounded(&self, ratio: f64) -> bool {
        let eps_min = self.eps.iter().copied().fold(f64::INFINITY, f64::min);
        bounded(&self.d21_beta_scaled, ratio, NOISE_FLOOR / eps_min)
    }

    pub fn alpha_h1c_bounded(&self, ratio: f64) -> bool {
        bounded(&self.alpha_h1c, ratio, NOISE_FLOOR)
    }
}

pub fn bounded(series: &[f64], ratio: f64, floor: f64) -> bool {
    if series.is_empty() {
        return true;
    }
    let mut s = series.to_vec();
    s.sort_by(f64::total_cmp);
    let median = if s.len() % 2 == 1 { s[s.len() / 2] } else { 0.5 * (s[s.len() / 2 - 1] + s[s.len() / 2]) };
    s[s.len() - 1] <= ratio * median.max(floor)
}

/// The limit operator whose eigenspaces class-`l` tracks in degree `k` approach, as
/// `(basis of its domain in R^k-coordinates, operator on that domain)`.
fn limit_operator(rc: &RuminComplex, k: usize, class: RateClass, tol: NullTol) -> Result<Option<(DMatrix<C64>, DMatrix<C64>)>> {
    let m = rc.m();
    let n = rc.basis(k)?.dim();
    let dense = |o: Option<crate::sparse::Csr>| o.map(|c| c.to_dense());
    let out = dense(rc.out_differential(k)?);
    let inc = dense(rc.in_differential(k)?);
    let ident = DMatrix::<C64>::identity(n, n);
    let zero = DMatrix::<C64>::zeros(n, n);
    let gram_out = |o: &Option<DMatrix<C64>>| o.as_ref().map_or(zero.clone(), |d| d.adjoint() * d);
    let gram_in = |i: &Option<DMatrix<C64>>| i.as_ref().map_or(zero.clone(), |d| d * d.adjoint());
    Ok(match class {
        RateClass::Kernel => {
            let h = rc.harmonic_space(k, tol)?;
            let z = DMatrix::zeros(h.ncols(), h.ncols());
            Some((h, z))
        }
        RateClass::Class(1) => {
            let op = if k == m {
                gram_in(&inc)
            } else if k == m + 1 {
                gram_out(&out)
            } else {
                gram_out(&out) + gram_in(&inc)
            };
            Some((ident, op))
        }
        RateClass::Class(2) if k == m => {
            let din = inc.expect("k = m ≥ 1 has an in-differential");
            let z = linalg::null_space(&din.adjoint(), tol);
            let dr = out.expect("d_R exists");
            let op = z.adjoint() * dr.adjoint() * &dr * &z;
            Some((z, op))
        }
        RateClass::Class(2) if k == m + 1 => {
            let w = match &out {
                Some(o) => linalg::null_space(o, tol),
                None => ident,
            };
            let dr = inc.expect("d_R exists");
            let op = w.adjoint() * &dr * dr.adjoint() * &w;
            Some((w, op))
        }
        _ => None,
    })
}

fn to_field(rc: &RuminComplex, k: usize, v: &nalgebra::DVector<C64>) -> Result<FormField> {
    Ok(FormField::from_vec(rc.model(), k, v.as_slice().to_vec())?.normalized())
}

/// Per-track convergence report against the Rumin spaces of the same model.
pub fn limit_vs_rumin(record: &SweepRecord, fits: &[RateFit], rc: &RuminComplex, tol: NullTol) -> Result<Vec<TrackReport>> {
    let k = record.degree;
    let model = rc.model();
    let m = rc.m();
    let basis = rc.basis(k)?;
    let proj = basis.projection();
    let small_q = usize::from(k <= m);
    let comp = rc.family.component(k)?;
    let last = record.eps.len() - 1;
    let window = record.final_window();
    let final_vals: Vec<f64> = record.points[last].pairs.iter().map(|p| p.lambda).collect();
    let scale = final_vals.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let final_clusters = clusters(&final_vals, 1e-6, 1e-12 * scale.max(1.0));
    let embed_dense = basis.embed.to_dense();

    let mut reports = Vec::with_capacity(record.tracks.len());
    for (ti, track) in record.tracks.iter().enumerate() {
        let mut r = TrackReport {
            track_id: track.id,
            degree: k,
            fit: fits[ti],
            eps: Vec::new(),
            off_rumin: Vec::new(),
            small_part: Vec::new(),
            d21_beta_scaled: Vec::new(),
            alpha_h1c: Vec::new(),
            final_angle: None,
        };
        for (j, mem) in track.members.iter().enumerate() {
            let Some(i) = mem else { continue };
            let eps = record.eps[j];
            let w = to_field(rc, k, &record.points[j].pairs[*i].vector)?;
            let off = w.sub(&FormField::from_vec(model, k, proj.mul_vec(&w.data))?);
            let alpha = w.bigrade_part(&model.alg, 0);
            let beta = w.bigrade_part(&model.alg, 1);
            r.eps.push(eps);
            r.off_rumin.push(off.norm_l2());
            r.small_part.push(if small_q == 1 { beta.norm_l2() } else { alpha.norm_l2() });
            r.d21_beta_scaled.push(comp.d21.apply(&beta)?.norm_l2() / eps);
            r.alpha_h1c.push(sobolev_norms(model, &alpha).h1c);
        }
        reports.push(r);
    }

    // final angles, cluster by cluster inside each class
    let mut classes: Vec<RateClass> = window.iter().map(|&ti| fits[ti].class).collect();
    classes.sort();
    classes.dedup();
    for class in classes.into_iter().filter(|c| c.is_near_harmonic()) {
        let members: Vec<(usize, usize)> = window
            .iter()
            .filter(|&&ti| fits[ti].class == class)
            .map(|&ti| (ti, record.tracks[ti].alive_at(last).unwrap()))
            .collect();
        let Some((dom, op)) = limit_operator(rc, k, class, tol)? else { continue };
        let (mu, vecs) = linalg::hermitian_eig(&op);
        let offset = if class == RateClass::Kernel {
            0
        } else {
            let mut desc = mu.clone();
            desc.reverse();
            mu.len() - linalg::rank_from_singular(&desc.iter().map(|x| x.max(0.0)).collect::<Vec<_>>(), mu.len(), tol)
        };
        for &(ti, idx) in &members {
            // all window members sharing this eigenvalue cluster and class
            let cl = final_clusters.iter().find(|c| c.contains(&idx)).unwrap();
            let cluster_pos: Vec<usize> = members
                .iter()
                .enumerate()
                .filter(|(_, (_, i))| cl.contains(i))
                .map(|(p, _)| p)
                .collect();
            let s = DMatrix::from_columns(
                &cluster_pos.iter().map(|&p| record.points[last].pairs[members[p].1].vector.clone()).collect::<Vec<_>>(),
            );
            let space = if class == RateClass::Kernel {
                &embed_dense * &dom
            } else {
                let lo = offset + cluster_pos.iter().min().unwrap();
                let hi = offset + cluster_pos.iter().max().unwrap();
                if hi >= mu.len() {
                    continue;
                }
                let near = |a: f64, b: f64| (a - b).abs() <= 1e-3 * a.abs().max(b.abs());
                let mut a = lo;
                while a > offset && near(mu[a - 1], mu[lo]) {
                    a -= 1;
                }
                let mut b = hi;
                while b + 1 < mu.len() && near(mu[b + 1], mu[hi]) {
                    b += 1;
                }
                &embed_dense * &dom * vecs.columns(a, b - a + 1)
            };
            reports[ti].final_angle = Some(linalg::containment_angle(&s, &space));
        }
    }
    Ok(reports)
}

/// One row of the spectral-sequence comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct SsRow {
    pub degree: usize,
    pub l: u32,
    /// Tracks of class `≥ l` in the final window; `None` if any window track is unclassified.
    pub scale_count: Option<usize>,
    pub direct_dim: usize,
    /// Near-harmonic tracks in the final window.
    pub window: usize,
    pub matched: bool,
}

impl SsRow {
    /// The count the eigenvalue scales must reproduce: the window truncates the direct space.
    pub fn expected(&self) -> usize {
        self.direct_dim.min(self.window)
    }
}

/// For `k ∉ {m, m+1}`: which label of the joint-kernel space agrees with the counts.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelCheck {
    pub degree: usize,
    pub harmonic_dim: usize,
    /// The space read as `Ē^k_1` (in place of `R^k`) reproduces the class `≥ 1` count.
    pub as_l1: bool,
    /// The space read as `Ē^k_2` reproduces the class `≥ 2` count.
    pub as_l2: bool,
}

pub fn spectral_sequence_report(
    record: &SweepRecord,
    fits: &[RateFit],
    rc: &RuminComplex,
    tol: NullTol,
    levels: &[u32],
) -> Result<(Vec<SsRow>, Option<LabelCheck>)> {
    let k = record.degree;
    let m = rc.m();
    let window: Vec<RateClass> = record
        .final_window()
        .into_iter()
        .map(|ti| fits[ti].class)
        .filter(|c| *c != RateClass::Divergent)
        .collect();
    let indeterminate = window.iter().any(|c| !c.is_near_harmonic());
    let wsize = window.len();
    let count = |l: u32| (!indeterminate).then(|| window.iter().filter(|c| c.at_least(l)).count());
    let mut rows = Vec::new();
    for &l in levels {
        let direct_dim = rc.ebar_space(k, l as usize, tol)?.ncols();
        let scale_count = count(l);
        let mut row = SsRow { degree: k, l, scale_count, direct_dim, window: wsize, matched: false };
        row.matched = scale_count == Some(row.expected());
        rows.push(row);
    }
    let label = if k != m && k != m + 1 {
        let h = rc.harmonic_space(k, tol)?.ncols();
        Some(LabelCheck {
            degree: k,
            harmonic_dim: h,
            as_l1: count(1) == Some(h.min(wsize)),
            as_l2: count(2) == Some(h.min(wsize)),
        })
    } else {
        None
    };
    Ok((rows, label))
}
