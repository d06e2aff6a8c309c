//! Rumin fiber dimensions, harmonic spaces and operator orders.

use heisenberg_adiabatic::complex_ops::EpsilonFamily;
use heisenberg_adiabatic::heisenberg::{InvariantModel, ModeGrid};
use heisenberg_adiabatic::linalg::NullTol;
use heisenberg_adiabatic::rumin::{symbol_order, RuminComplex};

fn main() -> heisenberg_adiabatic::Result<()> {
    for m in [1, 2] {
        let fam = EpsilonFamily::new(&InvariantModel::new(m).model())?;
        let rc = RuminComplex::new(&fam)?;
        let harm: Vec<usize> = (0..=2 * m + 1).map(|k| rc.harmonic_space(k, NullTol::INVARIANT).map(|h| h.ncols())).collect::<Result<_, _>>()?;
        println!("invariant m={m}: fiber dims {:?}, harmonic dims {harm:?}", rc.fiber_dims());
    }

    // operator orders from plane waves in the zero mode
    let grid = ModeGrid::new(1, 0.0, 16)?;
    let fam = EpsilonFamily::new(&grid.model())?;
    let rc = RuminComplex::new(&fam)?;
    for k in 0..3 {
        let (p, resid) = symbol_order(&rc, &grid, k, &[1.0, 2.0, 3.0])?.expect("below top degree");
        let op = if k == 1 { "d_R" } else { "d_ξ" };
        println!("k={k} {op}: order {p:.3} (residual {resid:.1e})");
    }
    Ok(())
}
