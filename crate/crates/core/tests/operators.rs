use std::f64::consts::PI;

use heisenberg_adiabatic::complex_ops::EpsilonFamily;
use heisenberg_adiabatic::heisenberg::{InvariantModel, ModeGrid};
use heisenberg_adiabatic::linalg;
use heisenberg_adiabatic::spectral::{geometric_schedule, sweep, RateClass, RatePolicy, SweepOptions};

#[test]
fn invariant_one_forms_split_into_kernel_and_reeb_mode() {
    let fam = EpsilonFamily::new(&InvariantModel::new(1).model()).unwrap();
    let c = linalg::hermitian_eig(&fam.laplacian_dense(1, 1.0).unwrap()).0[2];
    assert!(c > 0.1);
    for eps in [1.0, 0.25, 1.0 / 64.0] {
        let vals = linalg::hermitian_eig(&fam.laplacian_dense(1, eps).unwrap()).0;
        assert!(vals[0].abs() < 1e-12 && vals[1].abs() < 1e-12, "{vals:?}");
        assert!((vals[2] * eps * eps - c).abs() < 1e-10 * c, "{vals:?}");
    }
}

#[test]
fn zero_mode_functions_see_the_flat_torus() {
    let grid = ModeGrid::new(1, 0.0, 8).unwrap();
    let fam = EpsilonFamily::new(&grid.model()).unwrap();
    let vals = linalg::hermitian_eig(&fam.laplacian_dense(0, 1.0).unwrap()).0;
    assert!(vals[0].abs() < 1e-10);
    let first = 4.0 * PI * PI;
    assert!((vals[1] - first).abs() < 1e-8 * first, "{:?}", &vals[..5]);
}

#[test]
fn single_point_schedule_yields_no_classes() {
    let eps = geometric_schedule(1.0, 0.5, 1).unwrap();
    assert_eq!(eps, vec![1.0]);
    assert!(geometric_schedule(1.0, 0.5, 0).is_err());
    let fam = EpsilonFamily::new(&InvariantModel::new(1).model()).unwrap();
    let rec = sweep(&fam, 1, &eps, &SweepOptions::default(), 0).unwrap();
    assert_eq!(rec.tracks.len(), 3);
    assert!(rec.fit_rates(&RatePolicy::default()).iter().all(|f| f.class == RateClass::Unclassified));
}

#[test]
fn invariant_sweep_classes() {
    let fam = EpsilonFamily::new(&InvariantModel::new(1).model()).unwrap();
    let eps = geometric_schedule(1.0, 0.5, 9).unwrap();
    let rec = sweep(&fam, 1, &eps, &SweepOptions::default(), 0).unwrap();
    let mut classes: Vec<RateClass> = rec.fit_rates(&RatePolicy::default()).iter().map(|f| f.class).collect();
    classes.sort();
    assert_eq!(classes, [RateClass::Kernel, RateClass::Kernel, RateClass::Divergent]);
}
