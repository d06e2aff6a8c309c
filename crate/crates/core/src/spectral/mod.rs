//! ε-sweeps of `Δ_ε`: eigensolves, tracking, decay rates and the comparison
//! with Rumin-side spaces.

pub mod eigen;
pub mod rates;
pub mod report;
pub mod tracking;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::complex_ops::EpsilonFamily;
use crate::error::{Error, Result};
use crate::exterior::C64;

pub use eigen::{eigensolve, EigenPair, Solve, Strategy};
pub use rates::{fit_rate, RateClass, RateFit, RatePolicy};
pub use report::{limit_vs_rumin, spectral_sequence_report, LabelCheck, SsRow, TrackReport};
pub use tracking::Track;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepOptions {
    /// Eigenpairs per ε (the window size `K`).
    pub count: usize,
    pub strategy: Strategy,
    /// Minimum overlap for continuing a track.
    pub tol_tracking: f64,
    /// Relative width of a degenerate cluster.
    pub cluster_rel: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { count: 8, strategy: Strategy::default(), tol_tracking: 0.5, cluster_rel: 1e-6 }
    }
}

#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub eps: f64,
    pub pairs: Vec<EigenPair>,
    pub converged: bool,
    /// `‖Δ_ε‖_∞`, the scale for kernel detection.
    pub op_scale: f64,
}

#[derive(Clone, Debug)]
pub struct SweepRecord {
    pub model: String,
    pub degree: usize,
    pub eps: Vec<f64>,
    pub points: Vec<SweepPoint>,
    pub tracks: Vec<Track>,
}

impl SweepRecord {
    pub fn lambdas(&self, track: &Track) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut e = Vec::new();
        let mut l = Vec::new();
        let mut s = Vec::new();
        for (j, m) in track.members.iter().enumerate() {
            if let Some(i) = m {
                e.push(self.eps[j]);
                l.push(self.points[j].pairs[*i].lambda);
                s.push(self.points[j].op_scale);
            }
        }
        (e, l, s)
    }

    /// Rate fit per track; tracks that do not reach the last step are unclassified.
    pub fn fit_rates(&self, policy: &RatePolicy) -> Vec<RateFit> {
        let last = self.eps.len().saturating_sub(1);
        self.tracks
            .iter()
            .map(|t| {
                if t.alive_at(last).is_none() || t.len() < policy.tail_length {
                    return RateFit { exponent: None, residual: None, class: RateClass::Unclassified };
                }
                let (e, l, s) = self.lambdas(t);
                fit_rate(&e, &l, &s, policy)
            })
            .collect()
    }

    /// Indices into `tracks` of the tracks alive at the final ε, ordered by eigenvalue.
    pub fn final_window(&self) -> Vec<usize> {
        let Some(last) = self.eps.len().checked_sub(1) else { return Vec::new() };
        let mut w: Vec<(usize, usize)> = self
            .tracks
            .iter()
            .enumerate()
            .filter_map(|(ti, t)| t.alive_at(last).map(|i| (i, ti)))
            .collect();
        w.sort();
        w.into_iter().map(|(_, ti)| ti).collect()
    }

    pub fn unconverged(&self) -> usize {
        self.points.iter().filter(|p| !p.converged).count()
    }
}

/// `ε_j = start · ratio^j`, `j = 0..count`, strictly decreasing.
pub fn geometric_schedule(start: f64, ratio: f64, count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::Invalid("empty ε schedule".into()));
    }
    if !(start > 0.0 && start.is_finite()) {
        return Err(Error::NonPositiveEpsilon(start));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Invalid(format!("schedule ratio must lie in (0, 1), got {ratio}")));
    }
    Ok((0..count).map(|j| start * ratio.powi(j as i32)).collect())
}

fn solve_at(family: &EpsilonFamily, k: usize, eps: f64, opts: &SweepOptions) -> Result<SweepPoint> {
    let n = family.model.field_dim(k);
    let dense = match opts.strategy {
        Strategy::Dense => true,
        Strategy::Auto { .. } => n <= eigen::DENSE_LIMIT,
        Strategy::Lobpcg { .. } => false,
    };
    let (solve, op_scale) = if dense {
        let lap = family.laplacian_dense(k, eps)?;
        let scale = lap.row_iter().map(|r| r.iter().map(|v| v.norm()).sum::<f64>()).fold(0.0, f64::max);
        (eigen::eigensolve_dense(&lap, opts.count), scale)
    } else {
        let lap = family.laplacian(k, eps)?;
        (eigensolve(&lap, opts.count, opts.strategy)?, lap.norm_inf())
    };
    Ok(SweepPoint { eps, converged: solve.converged, pairs: solve.pairs, op_scale })
}

/// Lowest `opts.count` eigenpairs of `Δ_ε` on `Ω^k` along `schedule`, tracked across ε.
pub fn sweep(
    family: &EpsilonFamily,
    k: usize,
    schedule: &[f64],
    opts: &SweepOptions,
    first_id: usize,
) -> Result<SweepRecord> {
    if schedule.is_empty() {
        return Err(Error::Invalid("empty ε schedule".into()));
    }
    if schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Invalid("ε schedule must be strictly decreasing".into()));
    }
    family.component(k)?;
    let points: Vec<SweepPoint> = schedule
        .par_iter()
        .map(|&eps| solve_at(family, k, eps, opts))
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<Vec<f64>> = points.iter().map(|p| p.pairs.iter().map(|e| e.lambda).collect()).collect();
    let vectors: Vec<Vec<DVector<C64>>> =
        points.iter().map(|p| p.pairs.iter().map(|e| e.vector.clone()).collect()).collect();
    let tracks = tracking::track(k, &values, &vectors, opts.tol_tracking, opts.cluster_rel, first_id);
    Ok(SweepRecord {
        model: family.model.label(),
        degree: k,
        eps: schedule.to_vec(),
        points,
        tracks,
    })
}
