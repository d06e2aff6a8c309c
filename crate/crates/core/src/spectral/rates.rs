//! Eigenvalue decay exponents `λ(ε) ≈ c ε^p` and their classes `p = 2(l − 1)`.

use crate::linalg;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RateClass {
    /// Numerically zero at every tail point.
    Kernel,
    /// `p ≈ 2(l − 1)`, `l ≥ 1`.
    Class(u32),
    /// A negative even exponent: the eigenvalue blows up, not a near-harmonic family.
    Divergent,
    /// Exponent off every band, bad fit, or too few points.
    Unclassified,
}

impl RateClass {
    /// True for classes that count in the spectral-sequence window.
    pub fn is_near_harmonic(self) -> bool {
        matches!(self, RateClass::Kernel | RateClass::Class(_))
    }

    /// `class ≥ l`, with kernel tracks in every class.
    pub fn at_least(self, l: u32) -> bool {
        match self {
            RateClass::Kernel => true,
            RateClass::Class(c) => c >= l,
            _ => false,
        }
    }

    pub fn label(self) -> String {
        match self {
            RateClass::Kernel => "kernel".into(),
            RateClass::Class(l) => l.to_string(),
            RateClass::Divergent | RateClass::Unclassified => "unclassified".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatePolicy {
    pub tail_length: usize,
    /// Half-width of the classification band around even integers.
    pub band: f64,
    /// Largest RMS residual (natural-log units) of an acceptable fit.
    pub max_fit_residual: f64,
    /// Kernel threshold relative to `max(1, ‖Δ_ε‖)`.
    pub kernel_rel: f64,
}

impl Default for RatePolicy {
    fn default() -> Self {
        RatePolicy { tail_length: 3, band: 0.3, max_fit_residual: 0.1, kernel_rel: 1e-12 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateFit {
    pub exponent: Option<f64>,
    pub residual: Option<f64>,
    pub class: RateClass,
}

/// Fits the last `policy.tail_length` points of `(ε, λ)`; `scales[i]` is `‖Δ_ε‖` there.
pub fn fit_rate(eps: &[f64], lambda: &[f64], scales: &[f64], policy: &RatePolicy) -> RateFit {
    let none = RateFit { exponent: None, residual: None, class: RateClass::Unclassified };
    let tail = policy.tail_length;
    if tail < 3 || eps.len() < tail || lambda.len() != eps.len() {
        return none;
    }
    let s = eps.len() - tail;
    let (e, l, sc) = (&eps[s..], &lambda[s..], &scales[s..]);
    let kernel = l.iter().zip(sc).all(|(v, n)| v.abs() <= policy.kernel_rel * n.max(1.0));
    if kernel {
        return RateFit { exponent: None, residual: None, class: RateClass::Kernel };
    }
    let Some((p, res)) = linalg::loglog_slope(e, l) else { return none };
    let nearest = 2.0 * (p / 2.0).round();
    let class = if res > policy.max_fit_residual || (p - nearest).abs() > policy.band {
        RateClass::Unclassified
    } else if nearest < 0.0 {
        RateClass::Divergent
    } else {
        RateClass::Class((nearest / 2.0) as u32 + 1)
    };
    RateFit { exponent: Some(p), residual: Some(res), class }
}
