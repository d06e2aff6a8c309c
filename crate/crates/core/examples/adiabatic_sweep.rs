//! ε-sweep of one Laplacian: tracks, exponents and distance to the Rumin limit.

use heisenberg_adiabatic::complex_ops::EpsilonFamily;
use heisenberg_adiabatic::heisenberg::ModeGrid;
use heisenberg_adiabatic::linalg::NullTol;
use heisenberg_adiabatic::rumin::RuminComplex;
use heisenberg_adiabatic::spectral::{geometric_schedule, limit_vs_rumin, sweep, RatePolicy, SweepOptions};

fn main() -> heisenberg_adiabatic::Result<()> {
    let k: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let grid = ModeGrid::new(1, 1.0, 16)?;
    let fam = EpsilonFamily::new(&grid.model())?;
    let rc = RuminComplex::new(&fam)?;
    let eps = geometric_schedule(1.0, 0.5, 9)?;
    let rec = sweep(&fam, k, &eps, &SweepOptions { count: 8, ..SweepOptions::default() }, 0)?;
    let fits = rec.fit_rates(&RatePolicy::default());
    let reports = limit_vs_rumin(&rec, &fits, &rc, NullTol::GRID)?;
    println!("{} degree {k}, {} tracks", rec.model, rec.tracks.len());
    println!("{:>5} {:>12} {:>8} {:>12} {:>10} {:>8}", "track", "class", "p", "λ(ε_min)", "β final", "angle°");
    for ((t, fit), r) in rec.tracks.iter().zip(&fits).zip(&reports) {
        let (_, lam, _) = rec.lambdas(t);
        let p = fit.exponent.map_or("-".into(), |p| format!("{p:.3}"));
        let beta = r.final_small_part().map_or("-".into(), |b| format!("{b:.2e}"));
        let angle = r.final_angle.map_or("-".into(), |a| format!("{:.2}", a.to_degrees()));
        println!("{:>5} {:>12} {p:>8} {:>12.4e} {beta:>10} {angle:>8}", t.id, fit.class.label(), lam.last().unwrap_or(&f64::NAN));
    }
    Ok(())
}
