use heisenberg_adiabatic::complex_ops::EpsilonFamily;
use heisenberg_adiabatic::config::{DegreeChoice, ModelChoice, RunConfig};
use heisenberg_adiabatic::exterior::{hodge_star, interior, wedge};
use heisenberg_adiabatic::heisenberg::InvariantModel;
use heisenberg_adiabatic::sparse::Csr;
use heisenberg_adiabatic::spectral::{fit_rate, RateClass, RatePolicy};
use heisenberg_adiabatic::{CoframeLabel, ExteriorAlgebra, PointForm, C64};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn form(m: usize, k: usize) -> impl Strategy<Value = PointForm> {
    let dim = ExteriorAlgebra::new(m).dim(k);
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), dim)
        .prop_map(move |c| PointForm { k, coeffs: c.into_iter().map(|(a, b)| C64::new(a, b)).collect() })
}

fn sign(p: usize) -> C64 {
    C64::new(if p % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wedge_graded_commutative(a in form(2, 2), b in form(2, 1)) {
        let alg = ExteriorAlgebra::new(2);
        let ab = wedge(&alg, &a, &b).unwrap();
        let ba = wedge(&alg, &b, &a).unwrap().scale(sign(a.k * b.k));
        prop_assert!(ab.max_abs_diff(&ba) < 1e-12);
    }

    #[test]
    fn wedge_associative(a in form(2, 1), b in form(2, 2), c in form(2, 1)) {
        let alg = ExteriorAlgebra::new(2);
        let l = wedge(&alg, &wedge(&alg, &a, &b).unwrap(), &c).unwrap();
        let r = wedge(&alg, &a, &wedge(&alg, &b, &c).unwrap()).unwrap();
        prop_assert!(l.max_abs_diff(&r) < 1e-12);
    }

    #[test]
    fn interior_is_a_graded_derivation(a in form(1, 1), b in form(1, 2), idx in 0usize..3) {
        let alg = ExteriorAlgebra::new(1);
        let label = CoframeLabel::all(1)[idx];
        let lhs = interior(&alg, label, &wedge(&alg, &a, &b).unwrap());
        let rhs = wedge(&alg, &interior(&alg, label, &a), &b)
            .unwrap()
            .add(&wedge(&alg, &a, &interior(&alg, label, &b)).unwrap().scale(sign(a.k)));
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn hodge_star_is_isometric_involution(k in 0usize..=5, seed in any::<u64>()) {
        let alg = ExteriorAlgebra::new(2);
        let coeffs = (0..alg.dim(k)).map(|i| C64::new(((seed >> (i % 60)) & 7) as f64 - 3.5, i as f64)).collect();
        let a = PointForm { k, coeffs };
        let ss = hodge_star(&alg, &hodge_star(&alg, &a));
        prop_assert!(ss.max_abs_diff(&a) < 1e-12);
        prop_assert!((hodge_star(&alg, &a).norm_sqr() - a.norm_sqr()).abs() < 1e-9 * (1.0 + a.norm_sqr()));
    }

    #[test]
    fn rate_class_is_scale_invariant(p in prop::sample::select(vec![0.0, 2.0, 4.0]), c in 1e-3..1e3f64) {
        let eps: Vec<f64> = (0..9).map(|j| 0.5f64.powi(j)).collect();
        let lam: Vec<f64> = eps.iter().map(|e| c * e.powf(p)).collect();
        let scales = vec![1e6; eps.len()];
        let fit = fit_rate(&eps, &lam, &scales, &RatePolicy::default());
        prop_assert_eq!(fit.class, RateClass::Class((p / 2.0) as u32 + 1));
        prop_assert!((fit.exponent.unwrap() - p).abs() < 1e-9);
    }

    #[test]
    fn sparse_matches_dense(entries in prop::collection::vec((0usize..6, 0usize..5, -2.0..2.0f64), 0..30)) {
        let trip: Vec<_> = entries.iter().map(|&(r, c, v)| (r, c, C64::new(v, -v))).collect();
        let mut dense = DMatrix::<C64>::zeros(6, 5);
        for &(r, c, v) in &trip {
            dense[(r, c)] += v;
        }
        let s = Csr::from_triplets(6, 5, trip);
        prop_assert!((s.to_dense() - &dense).iter().all(|z| z.norm() < 1e-12));
        prop_assert!((s.adjoint().to_dense() - dense.adjoint()).iter().all(|z| z.norm() < 1e-12));
        let prod = s.adjoint().matmul(&s).to_dense();
        prop_assert!((prod - dense.adjoint() * &dense).iter().all(|z| z.norm() < 1e-10));
    }

    #[test]
    fn config_round_trips(
        m in 1usize..=3,
        mode in any::<bool>(),
        lo in -3i64..3,
        span in 0i64..3,
        half in 2usize..20,
        ratio in 0.1..0.9f64,
        count in 1usize..20,
        seed in any::<u64>(),
    ) {
        let cfg = RunConfig {
            m,
            model: if mode { ModelChoice::Mode } else { ModelChoice::Invariant },
            n: (lo, lo + span),
            grid: 2 * half,
            degree: if seed % 2 == 0 { DegreeChoice::All } else { DegreeChoice::One((seed as usize) % (2 * m + 2)) },
            eps_ratio: ratio,
            count,
            seed,
            ..RunConfig::default()
        };
        prop_assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }
}

#[test]
fn invariant_d_eps_squares_to_zero_for_any_eps() {
    let fam = EpsilonFamily::new(&InvariantModel::new(2).model()).unwrap();
    proptest!(ProptestConfig::with_cases(32), |(eps in 1e-3..10.0f64)| {
        for k in 0..4 {
            let sq = fam.d_eps(k + 1, eps).unwrap().matmul(&fam.d_eps(k, eps).unwrap());
            prop_assert!(sq.max_abs() < 1e-12 * (1.0 + 1.0 / (eps * eps)));
        }
    });
}
