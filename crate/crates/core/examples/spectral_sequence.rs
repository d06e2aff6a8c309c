//! Counts of eigenvalues decaying like ε^{2(l-1)} against dim Ē_l, per degree.

use heisenberg_adiabatic::complex_ops::EpsilonFamily;
use heisenberg_adiabatic::heisenberg::InvariantModel;
use heisenberg_adiabatic::linalg::NullTol;
use heisenberg_adiabatic::rumin::RuminComplex;
use heisenberg_adiabatic::spectral::{geometric_schedule, spectral_sequence_report, sweep, RatePolicy, SweepOptions};

fn main() -> heisenberg_adiabatic::Result<()> {
    let m = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let fam = EpsilonFamily::new(&InvariantModel::new(m).model())?;
    let rc = RuminComplex::new(&fam)?;
    let eps = geometric_schedule(1.0, 0.5, 9)?;
    println!("{:>2} {:>2} {:>8} {:>8} {:>7}", "k", "l", "tracks", "dim E_l", "match");
    for k in 0..=2 * m + 1 {
        let rec = sweep(&fam, k, &eps, &SweepOptions { count: 16, ..SweepOptions::default() }, 0)?;
        let fits = rec.fit_rates(&RatePolicy::default());
        let (rows, label) = spectral_sequence_report(&rec, &fits, &rc, NullTol::INVARIANT, &[1, 2, 3])?;
        for r in rows {
            let count = r.scale_count.map_or("?".into(), |c| c.to_string());
            println!("{k:>2} {:>2} {count:>8} {:>8} {:>7}", r.l, r.direct_dim, r.matched);
        }
        if let Some(l) = label {
            println!("   harmonic dim {} (as Ē_1: {}, as Ē_2: {})", l.harmonic_dim, l.as_l1, l.as_l2);
        }
    }
    Ok(())
}
